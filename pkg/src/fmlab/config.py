"""Run configuration: JSON file plus flag overrides, hashed for replay.

The canonical scenario is n = 1, p = 4/3, s = 1/4, r = 2 with K from 4 to
12 in steps of 2, 64 Monte Carlo draws, master seed 1.  Every output file
cites the configuration hash so any table or figure can be traced to the
exact inputs that produced it.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace

from .errors import InvalidRangeError
from .operator import ScenarioParams


@dataclass(frozen=True)
class RunConfig:
    n: int = 1
    p: float = 4.0 / 3.0
    s: float = 0.25
    r: float = 2.0
    K_list: tuple = (4, 6, 8, 10, 12)
    master_seed: int = 1
    M: int = 64
    L_norm: float = 16.0
    points_budget: int = 2**26
    mc_boundary_level: float = 5e-7
    apply_boundary_level: float = 1e-12
    annulus_A: float = 0.5  # frozen from the dyadic scan; re-derived by `verify`
    fit_k_min: int = 6
    slope_tol: float = 0.05
    supnorm_slope_tol: float = 0.05
    stability_tol: float = 1.3
    threads: int = 0  # 0 = all available cores
    output_dir: str = "out"

    def __post_init__(self):
        ks = tuple(int(k) for k in self.K_list)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidRangeError("K_list must be nonempty and ascending")
        if self.M < 1:
            raise InvalidRangeError(f"M must be >= 1, got {self.M}")
        object.__setattr__(self, "K_list", ks)
        self.scenario()  # validates the exponent quadruple

    def scenario(self) -> ScenarioParams:
        return ScenarioParams(n=self.n, p=self.p, s=self.s, r=self.r)

    def effective_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    def canonical_json(self) -> str:
        """Canonical form of everything that determines the numbers.

        The output directory and the thread count affect where results land
        and how fast they arrive, never their values, so they stay outside
        the hash: replays into a different directory remain byte-identical.
        """
        payload = asdict(self)
        payload.pop("output_dir")
        payload.pop("threads")
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


def load_config(path: str | None, **overrides) -> RunConfig:
    """Config from a JSON file (all keys optional) plus flag overrides."""
    base = {}
    if path is not None:
        with open(path) as f:
            base = json.load(f)
        unknown = set(base) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise InvalidRangeError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**base)
    return cfg.with_overrides(**overrides)


def write_manifest(cfg: RunConfig, outdir: str, extra: dict | None = None) -> str:
    """Write or extend the run manifest (hash, config echo, versions, timestamps).

    Successive commands into the same directory accumulate under ``runs`` so
    that, e.g., the sweep's seed list survives a later ``report``.
    """
    import platform
    import time

    import numpy
    import scipy

    from . import __version__

    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "manifest.json")
    manifest = {"runs": {}}
    if os.path.exists(path):
        with open(path) as f:
            previous = json.load(f)
        if previous.get("config_hash") == cfg.config_hash():
            manifest["runs"] = previous.get("runs", {})
    manifest.update({
        "config_hash": cfg.config_hash(),
        "config": json.loads(cfg.canonical_json()),
        "versions": {
            "fmlab": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    })
    entry = {"timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    if extra:
        entry.update(extra)
    command = entry.pop("command", "run")
    manifest["runs"][command] = entry
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path
