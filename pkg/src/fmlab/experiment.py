"""K-sweeps, log-log exponent fits, and the divergence report.

Every asymptotic statement is tested as a fitted slope or a stability-of-
ratio statement, never as an absolute constant: the sweep records, for each
top scale K, the sup-over-dilations multiplier norm (expected flat), the
test-function norm (exact power law), the Monte Carlo mean of
``||T_m f||_p^p`` (expected growth), the sign-free square functional, and
the exact partial sum it tracks.  The report fits the normalized operator
ratio ``R(K) / sup_D norm`` and declares PASS when its slope meets the
predicted ``1/p - 1/2`` within tolerance while the multiplier-norm column
stays flat: the numerical form of "no such constant exists".

A negative control replaces the construction with a single K-dilated bump
whose multiplier norm and operator ratio are both flat, which must drive
the report to FAIL.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .bumps import psi_radial, psi_table, radial_lp_norm
from .counterexample import CounterexampleMultiplier, MultiplierSpec
from .errors import InvalidDataError, InvalidRangeError
from .norms import SmoothnessParams, hormander_multiplier_norm
from .operator import (
    ScenarioParams,
    derive_seed,
    f_lp_norm,
    khintchine_mc,
    lower_bound_partial_sum,
    plan_khintchine_grid,
    square_functional,
)

DEFAULT_MC_BOUNDARY_LEVEL = 5e-7  # sweep-path space-box envelope level; see README
DEFAULT_FIT_K_MIN = 6
DEFAULT_SLOPE_TOL = 0.05
DEFAULT_STABILITY_TOL = 1.3


@dataclass(frozen=True)
class SweepRecord:
    """One row of the K-sweep."""

    K: int
    sup_d_norm: float
    sup_d_argmax: int | None
    f_norm: float
    mc_mean: float
    mc_stderr: float
    square_functional: float
    partial_sum: float
    ratio_R: float
    x_points: int
    x_half_width: float
    norm_points_max: int
    wall_clock_s: float | None = None


# wall clock deliberately excluded: CSV replays must be byte-identical
CSV_COLUMNS = (
    "K", "sup_d_norm", "sup_d_argmax", "f_norm", "mc_mean", "mc_stderr",
    "square_functional", "partial_sum", "ratio_R", "x_points", "x_half_width",
    "norm_points_max",
)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_residual: float
    k_min: int
    k_max: int
    n_points: int


def fit_exponent(points) -> FitResult:
    """Least-squares line through (log K, log value).

    Requires at least 4 points with positive values.
    """
    pts = sorted((int(k), float(v)) for k, v in points)
    if len(pts) < 4:
        raise InvalidRangeError(f"need >= 4 points for an exponent fit, got {len(pts)}")
    ks = np.array([k for k, _ in pts], dtype=float)
    vs = np.array([v for _, v in pts])
    if np.any(vs <= 0):
        raise InvalidDataError("exponent fit requires strictly positive values")
    logk, logv = np.log(ks), np.log(vs)
    slope, intercept = np.polyfit(logk, logv, 1)
    resid = logv - (slope * logk + intercept)
    return FitResult(float(slope), float(intercept), float(np.max(np.abs(resid))),
                     int(ks[0]), int(ks[-1]), len(pts))


def run_sweep(scenario: ScenarioParams, K_list, master_seed: int, M: int, *,
              mc_boundary_level: float = DEFAULT_MC_BOUNDARY_LEVEL,
              L_norm: float = 16.0,
              points_budget: int = 2**26,
              threads: int = 1,
              on_record=None) -> list[SweepRecord]:
    """One record per K: multiplier norm, test-function norm, MC mean, proxies.

    The multiplier-norm column uses the first counter-derived seed so that it
    matches the first Monte Carlo draw; K_list must be ascending with K >= 2
    (in one dimension the N = 1 index set is empty and K = 1 gives the zero
    multiplier).
    """
    k_list = [int(k) for k in K_list]
    if not k_list or any(b <= a for a, b in zip(k_list, k_list[1:])) or k_list[0] < 2:
        raise InvalidRangeError("K_list must be ascending with every K >= 2")
    params = SmoothnessParams(scenario.s, scenario.r)
    records = []
    for K in k_list:
        t0 = time.perf_counter()
        spec = MultiplierSpec(scenario.n, scenario.s, K, master_seed)
        x_grid = plan_khintchine_grid(spec, mc_boundary_level)
        kh = khintchine_mc(spec, scenario.p, M, x_grid=x_grid,
                           boundary_level=mc_boundary_level, threads=threads)
        norm_spec = MultiplierSpec(scenario.n, scenario.s, K, derive_seed(master_seed, 0))
        norm_res = hormander_multiplier_norm(
            CounterexampleMultiplier(norm_spec), params,
            L_norm=L_norm, points_budget=points_budget,
        )
        f_norm = f_lp_norm(K, scenario.p, scenario.n)
        sqf = square_functional(spec, scenario.p, x_grid)
        partial = lower_bound_partial_sum(K, scenario)
        record = SweepRecord(
            K=K,
            sup_d_norm=norm_res.value,
            sup_d_argmax=norm_res.argmax_D,
            f_norm=f_norm,
            mc_mean=kh.mean,
            mc_stderr=kh.stderr,
            square_functional=sqf,
            partial_sum=partial,
            ratio_R=kh.mean ** (1.0 / scenario.p) / f_norm,
            x_points=x_grid.size,
            x_half_width=x_grid.L,
            norm_points_max=max(e[2] for e in norm_res.table),
            wall_clock_s=time.perf_counter() - t0,
        )
        records.append(record)
        if on_record is not None:
            on_record(record)
    return records


def mc_box_doubling_check(scenario: ScenarioParams, K: int, master_seed: int, *,
                          M: int = 8,
                          mc_boundary_level: float = DEFAULT_MC_BOUNDARY_LEVEL) -> float:
    """Relative change of the MC mean under a strictly deeper quadrature.

    The reference run tightens the boundary envelope level by 2^8 (which at
    least doubles the space box *and* pushes the per-scale truncation
    further out) so the difference reflects the true tail left behind by the
    configured level.  Run once per scenario; recorded in the sweep manifest.
    """
    spec = MultiplierSpec(scenario.n, scenario.s, K, master_seed)
    base = khintchine_mc(spec, scenario.p, M,
                         boundary_level=mc_boundary_level)
    deep = khintchine_mc(spec, scenario.p, M,
                         boundary_level=mc_boundary_level / 256.0)
    return abs(deep.mean - base.mean) / deep.mean


# ---------------------------------------------------------------------------
# Negative control: a single dilated bump of constant multiplier norm
# ---------------------------------------------------------------------------

class ControlMultiplier:
    """m_K(xi) = psi(xi / (2K)): one bump, K-dilated, constant multiplier norm.

    Its operator quantities scale exactly like the test function's, so the
    normalized ratio R(K)/sup_D norm is flat and the divergence report must
    emit FAIL on the control family.
    """

    def __init__(self, K: int):
        self.K = K

    def __call__(self, *coords):
        if len(coords) == 1:
            r = np.abs(np.asarray(coords[0], dtype=float))
        else:
            r = np.hypot(np.asarray(coords[0], float), np.asarray(coords[1], float))
        return psi_radial(r / (2.0 * self.K))

    def d_range(self) -> range:
        return range(-2, int(math.ceil(math.log2(4.0 * self.K))) + 2)


def run_negative_control(scenario: ScenarioParams, K_list, *,
                         L_norm: float = 16.0,
                         points_budget: int = 2**26) -> list[SweepRecord]:
    """Sweep records for the control family (deterministic, zero MC error).

    ``T_{m_K} f`` is the inverse transform of the single bump, evaluated in
    exact scaling form; the square-functional and partial-sum columns carry
    the deterministic norm and a neutral 1.0 since no multi-scale structure
    exists.
    """
    params = SmoothnessParams(scenario.s, scenario.r)
    table = psi_table(scenario.n)
    base_norm_p = radial_lp_norm(table, scenario.p)
    records = []
    for K in (int(k) for k in K_list):
        t0 = time.perf_counter()
        control = ControlMultiplier(K)
        norm_res = hormander_multiplier_norm(
            control, params, control.d_range(), scenario.n,
            L_norm=L_norm, points_budget=points_budget,
        )
        # ||F^-1 m_K||_p = (2K)^{n - n/p} ||F^-1 psi||_p exactly
        tf_norm = (2.0 * K) ** (scenario.n - scenario.n / scenario.p) * base_norm_p
        mc_mean = tf_norm**scenario.p
        f_norm = f_lp_norm(K, scenario.p, scenario.n)
        records.append(SweepRecord(
            K=K,
            sup_d_norm=norm_res.value,
            sup_d_argmax=norm_res.argmax_D,
            f_norm=f_norm,
            mc_mean=mc_mean,
            mc_stderr=0.0,
            square_functional=mc_mean,
            partial_sum=1.0,
            ratio_R=tf_norm / f_norm,
            x_points=0,
            x_half_width=0.0,
            norm_points_max=max(e[2] for e in norm_res.table),
            wall_clock_s=time.perf_counter() - t0,
        ))
    return records


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def contradiction_report(records, scenario: ScenarioParams, *,
                         fit_k_min: int = DEFAULT_FIT_K_MIN,
                         slope_tol: float = DEFAULT_SLOPE_TOL,
                         supnorm_slope_tol: float = DEFAULT_SLOPE_TOL,
                         stability_tol: float = DEFAULT_STABILITY_TOL) -> dict:
    """Fit the normalized operator ratio and decide PASS/FAIL.

    PASS requires the fitted slope of ``R(K) / sup_D norm`` to reach the
    predicted ``1/p - 1/2`` minus ``slope_tol`` while the multiplier-norm
    column stays flat (|slope| <= ``supnorm_slope_tol``): bounded multiplier
    norms with unbounded operator ratios rule out any uniform constant.
    """
    records = sorted(records, key=lambda r: r.K)
    if len(records) < 4:
        raise InvalidRangeError(f"need >= 4 records, got {len(records)}")
    theory = 1.0 / scenario.p - 0.5
    fit_records = [r for r in records if r.K >= fit_k_min]
    if len(fit_records) < 4:
        fit_records = records

    norm_ratio_fit = fit_exponent(
        [(r.K, r.ratio_R / r.sup_d_norm) for r in fit_records]
    )
    supnorm_fit = fit_exponent([(r.K, r.sup_d_norm) for r in fit_records])
    f_fit = fit_exponent([(r.K, r.f_norm**scenario.p) for r in records])
    mc_fit = fit_exponent([(r.K, r.mc_mean) for r in fit_records])

    stab_values = {r.K: r.square_functional / r.partial_sum for r in records
                   if r.K >= fit_k_min}
    if not stab_values:
        stab_values = {r.K: r.square_functional / r.partial_sum for r in records}
    stab_list = list(stab_values.values())
    stability = max(stab_list) / min(stab_list)

    ratio_slope_ok = norm_ratio_fit.slope >= theory - slope_tol
    supnorm_flat = abs(supnorm_fit.slope) <= supnorm_slope_tol
    verdict = "PASS" if (ratio_slope_ok and supnorm_flat) else "FAIL"

    return {
        "scenario": asdict(scenario),
        "theoretical_ratio_exponent": theory,
        "fit_k_min": fit_k_min,
        "tolerances": {
            "slope": slope_tol,
            "supnorm_slope": supnorm_slope_tol,
            "stability": stability_tol,
        },
        "fits": {
            "normalized_ratio": asdict(norm_ratio_fit),
            "sup_multiplier_norm": asdict(supnorm_fit),
            "f_norm_pth_power": asdict(f_fit),
            "mc_mean": asdict(mc_fit),
        },
        "stability": {
            "square_functional_over_partial_sum": {str(k): v for k, v in stab_values.items()},
            "max_over_min": stability,
            "within_tolerance": stability <= stability_tol,
        },
        "checks": {
            "ratio_slope_reaches_theory": ratio_slope_ok,
            "sup_norm_flat": supnorm_flat,
        },
        "verdict": verdict,
        "table": [
            {c: getattr(r, c) for c in CSV_COLUMNS} for r in records
        ],
    }


# ---------------------------------------------------------------------------
# Delimited output
# ---------------------------------------------------------------------------

def records_to_csv(records, config_hash: str = "") -> str:
    lines = []
    if config_hash:
        lines.append(f"# config_hash={config_hash}")
    lines.append(",".join(CSV_COLUMNS))
    for r in sorted(records, key=lambda r: r.K):
        row = []
        for c in CSV_COLUMNS:
            v = getattr(r, c)
            if v is None:
                row.append("")
            elif isinstance(v, (float, np.floating)):
                row.append(repr(float(v)))
            else:
                row.append(str(v))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list[SweepRecord]:
    rows = [ln for ln in text.strip().splitlines() if ln and not ln.startswith("#")]
    header = rows[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise InvalidDataError(f"unexpected sweep CSV columns: {header}")
    out = []
    for ln in rows[1:]:
        vals = ln.split(",")
        kw = {}
        for c, v in zip(CSV_COLUMNS, vals):
            if c in ("K", "x_points", "norm_points_max"):
                kw[c] = int(v)
            elif c == "sup_d_argmax":
                kw[c] = None if v in ("", "None") else int(v)
            else:
                kw[c] = float(v)
        out.append(SweepRecord(wall_clock_s=None, **kw))
    return out


def fit_series_dat(records, column: str, config_hash: str = "") -> str:
    """Two-column (K, value) text file, ready for external plotting."""
    lines = [f"# config_hash={config_hash}", f"# K {column}"]
    for r in sorted(records, key=lambda r: r.K):
        lines.append(f"{r.K} {float(getattr(r, column))!r}")
    return "\n".join(lines) + "\n"
