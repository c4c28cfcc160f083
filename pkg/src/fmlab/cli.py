"""Command-line driver.

Subcommands: ``gen-multiplier``, ``norm``, ``apply``, ``khintchine``,
``verify``, ``sweep``, ``report``.  Configuration comes from an optional
JSON file (``--config``) with individual flag overrides; every output
directory receives a manifest citing the configuration hash, and all
CSV/JSON outputs repeat that hash so runs are replayable.

Exit codes: 0 success, 1 usage error, 2 construction-invariant violation,
3 resolution/budget error.  Errors are also emitted as structured JSON on
standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bumps import find_annulus, phi_lp, psi_table
from .config import RunConfig, load_config, write_manifest
from .counterexample import (
    CounterexampleMultiplier,
    MultiplierSpec,
    index_set,
    sample_multiplier,
    support_disjointness_check,
)
from .errors import ConstructionError, FmlabError, ResolutionError
from .experiment import (
    contradiction_report,
    fit_series_dat,
    mc_box_doubling_check,
    records_from_csv,
    records_to_csv,
    run_negative_control,
    run_sweep,
)
from .fields import Grid, SampledField, save_field
from .norms import SmoothnessParams, hormander_multiplier_norm, lorentz_norm
from .operator import (
    ClosedFormPlan,
    apply_spectral,
    derive_seed,
    khintchine_mc,
    plan_operator_grids,
    shell_table,
)
from .transforms import fourier_forward, fourier_inverse, lp_norm


def _emit_error(kind: str, message: str, exit_code: int) -> None:
    print(json.dumps({"error": kind, "message": message, "exit_code": exit_code}),
          file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("usage", message, 1)
        raise SystemExit(1)


def _write_json(obj, outdir: str, name: str, config_hash: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    payload = {"config_hash": config_hash, **obj}
    path = os.path.join(outdir, name)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    return path


def _multiplier_grid(cfg: RunConfig, K: int) -> Grid:
    L = 1 << max(3, int(np.ceil(np.log2(K + 1))))
    M = int(2 * L * 2 ** (K + 3))
    if M > cfg.points_budget:
        raise ResolutionError(f"multiplier grid would need {M} points per axis")
    return Grid(cfg.n, float(L), M)


def _cmd_gen_multiplier(cfg: RunConfig, args) -> int:
    K = args.K or cfg.K_list[-1]
    seed = cfg.master_seed if args.seed is None else args.seed
    spec = MultiplierSpec(cfg.n, cfg.s, K, seed)
    grid = _multiplier_grid(cfg, K)
    fld = sample_multiplier(spec, grid)
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    save_field(fld, os.path.join(outdir, "multiplier.fmf"))
    _write_json({
        "spec": {"n": spec.n, "s": spec.s, "K": spec.K, "seed": spec.seed},
        "grid": {"L": grid.L, "points_per_axis": grid.points_per_axis, "h": grid.h},
        "sup_norm": float(np.max(np.abs(fld.values))),
        "sup_bound": spec.sup_bound,
        "support": [spec.support_inner, spec.support_outer],
    }, outdir, "multiplier.json", cfg.config_hash())
    write_manifest(cfg, outdir, {"command": "gen-multiplier"})
    return 0


def _cmd_norm(cfg: RunConfig, args) -> int:
    K = args.K or cfg.K_list[-1]
    seed = cfg.master_seed if args.seed is None else args.seed
    spec = MultiplierSpec(cfg.n, cfg.s, K, seed)
    params = SmoothnessParams(cfg.s, cfg.r)
    res = hormander_multiplier_norm(
        CounterexampleMultiplier(spec), params,
        L_norm=cfg.L_norm, points_budget=cfg.points_budget,
    )
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "norm_table.csv"), "w") as f:
        f.write(f"# config_hash={cfg.config_hash()}\nD,value\n")
        for d, v, _ in res.table:
            f.write(f"{d},{float(v)!r}\n")
    _write_json({
        "sup": res.value,
        "argmax_D": res.argmax_D,
        "L_norm": res.L_norm,
        "smoothness": {"s": cfg.s, "r": cfg.r},
        "grid_points_per_axis": {str(d): m for d, _, m in res.table},
        "spec": {"n": spec.n, "s": spec.s, "K": spec.K, "seed": spec.seed},
    }, outdir, "norm_summary.json", cfg.config_hash())
    from .plots import render_norm_table_figure

    render_norm_table_figure(res.table, outdir)
    write_manifest(cfg, outdir, {"command": "norm"})
    return 0


def _cmd_apply(cfg: RunConfig, args) -> int:
    K = args.K or cfg.K_list[-1]
    seed = cfg.master_seed if args.seed is None else args.seed
    spec = MultiplierSpec(cfg.n, cfg.s, K, seed)
    freq_grid, x_grid = plan_operator_grids(spec, cfg.apply_boundary_level)
    m_field = sample_multiplier(spec, freq_grid)
    tf_spectral = apply_spectral(m_field, K)
    plan = ClosedFormPlan(spec, x_grid, cfg.apply_boundary_level)
    tf_closed = plan.evaluate(seed)
    diff = np.sqrt(np.sum(np.abs(tf_spectral.values - tf_closed.values) ** 2))
    scale = np.sqrt(np.sum(np.abs(tf_spectral.values) ** 2))
    scenario = cfg.scenario()
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    save_field(tf_spectral, os.path.join(outdir, "tf_spectral.fmf"))
    save_field(tf_closed, os.path.join(outdir, "tf_closed_form.fmf"))
    A = psi_table(cfg.n).annulus_A or cfg.annulus_A
    shells = shell_table(spec, scenario, A)
    with open(os.path.join(outdir, "shells.csv"), "w") as f:
        f.write(f"# config_hash={cfg.config_hash()}\nN,shell_integral,theory,ratio\n")
        for row in shells:
            f.write(f"{row['N']},{float(row['shell_integral'])!r},"
                    f"{float(row['theory'])!r},{float(row['ratio'])!r}\n")
    _write_json({
        "spec": {"n": spec.n, "s": spec.s, "K": spec.K, "seed": spec.seed},
        "grids": {
            "frequency": {"L": freq_grid.L, "points_per_axis": freq_grid.points_per_axis},
            "space": {"L": x_grid.L, "points_per_axis": x_grid.points_per_axis},
        },
        "two_route_l2_relative_difference": float(diff / scale),
        "lp_norms": {
            "p": scenario.p,
            "spectral": lp_norm(tf_spectral, scenario.p),
            "closed_form": lp_norm(tf_closed, scenario.p),
        },
        "annulus_A": A,
    }, outdir, "apply_summary.json", cfg.config_hash())
    write_manifest(cfg, outdir, {"command": "apply"})
    return 0


def _cmd_khintchine(cfg: RunConfig, args) -> int:
    K = args.K or cfg.K_list[-1]
    M = args.M or cfg.M
    spec = MultiplierSpec(cfg.n, cfg.s, K, cfg.master_seed)
    res = khintchine_mc(spec, cfg.p, M, boundary_level=cfg.mc_boundary_level,
                        threads=cfg.effective_threads())
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "khintchine_draws.csv"), "w") as f:
        f.write(f"# config_hash={cfg.config_hash()}\ndraw,seed,norm_p_pth_power\n")
        for i, (s, v) in enumerate(zip(res.seeds, res.per_seed)):
            f.write(f"{i},{s},{float(v)!r}\n")
    _write_json({
        "K": K, "M": M, "p": cfg.p,
        "mean": res.mean, "stderr": res.stderr,
        "master_seed": cfg.master_seed,
        "grid": {"points": res.grid_points, "half_width": res.grid_half_width},
    }, outdir, "khintchine.json", cfg.config_hash())
    write_manifest(cfg, outdir, {"command": "khintchine",
                                 "seeds": [int(s) for s in res.seeds]})
    return 0


def _cmd_verify(cfg: RunConfig, args) -> int:
    checks = {}
    rng = np.random.default_rng(cfg.master_seed)

    grid = Grid(1, 8.0, 256)
    fld = SampledField(grid, rng.standard_normal(256) + 1j * rng.standard_normal(256), "space")
    spec_f = fourier_forward(fld)
    back = fourier_inverse(spec_f)
    rt = float(np.max(np.abs(back.values - fld.values)) / np.max(np.abs(fld.values)))
    checks["fourier_round_trip"] = {"value": rt, "pass": rt < 1e-12}

    pl = abs(lp_norm(fld, 2) - lp_norm(spec_f, 2)) / lp_norm(fld, 2)
    checks["plancherel"] = {"value": pl, "pass": pl < 1e-10}

    xi = np.exp(rng.uniform(np.log(1e-5), np.log(1e5), 100))
    worst = 0.0
    for x in xi:
        ds = np.arange(np.floor(np.log2(0.5 / x)) - 1, np.ceil(np.log2(2.0 / x)) + 2)
        worst = max(worst, abs(sum(float(phi_lp(x * 2.0**d)) for d in ds) - 1.0))
    checks["partition_of_unity"] = {"value": worst, "pass": worst < 1e-12}

    counts_ok = all(index_set(N, 1).count == 2 ** (N - 1) - 1 for N in range(1, 15))
    n2 = {tuple(k) for k in index_set(1, 2).ks}
    counts_ok = counts_ok and n2 == {(1, 2), (2, 1), (2, 2)}
    checks["index_set_counts"] = {"pass": bool(counts_ok)}

    disj = support_disjointness_check(MultiplierSpec(cfg.n, cfg.s, min(6, max(cfg.K_list)), cfg.master_seed))
    checks["support_disjointness"] = {"value": disj, "pass": disj["overlap_count"] == 0}

    A, amin = find_annulus(psi_table(cfg.n))
    checks["annulus"] = {"A": A, "min_on_annulus": amin,
                         "pass": abs(A - cfg.annulus_A) < 1e-12}

    small = SampledField(Grid(1, 4.0, 64), rng.standard_normal(64).astype(complex), "space")
    lz = lorentz_norm(small, cfg.r, cfg.r)
    lp = lp_norm(small, cfg.r)
    checks["lorentz_equals_lp"] = {"value": abs(lz - lp) / lp, "pass": abs(lz - lp) <= 1e-14 * lp}

    all_pass = all(c["pass"] for c in checks.values())
    outdir = cfg.output_dir
    _write_json({"checks": checks, "all_pass": all_pass}, outdir,
                "verify.json", cfg.config_hash())
    write_manifest(cfg, outdir, {"command": "verify"})
    if not all_pass:
        raise ConstructionError("structural verification failed; see verify.json")
    print("verify: all structural checks passed")
    return 0


def _cmd_sweep(cfg: RunConfig, args) -> int:
    scenario = cfg.scenario()
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, "sweep.csv")
    records = []
    t0 = time.perf_counter()

    def flush(_record):
        with open(csv_path, "w") as f:
            f.write(records_to_csv(records, cfg.config_hash()))

    def on_record(record):
        records.append(record)
        flush(record)  # partial results saved even if a later K fails

    try:
        run_sweep(scenario, cfg.K_list, cfg.master_seed, cfg.M,
                  mc_boundary_level=cfg.mc_boundary_level, L_norm=cfg.L_norm,
                  points_budget=cfg.points_budget, threads=cfg.effective_threads(),
                  on_record=on_record)
    finally:
        if records:
            flush(None)
    doubling = mc_box_doubling_check(scenario, cfg.K_list[0], cfg.master_seed,
                                     mc_boundary_level=cfg.mc_boundary_level)
    for column in ("sup_d_norm", "f_norm", "mc_mean", "square_functional", "ratio_R"):
        with open(os.path.join(outdir, f"{column}.dat"), "w") as f:
            f.write(fit_series_dat(records, column, cfg.config_hash()))
    write_manifest(cfg, outdir, {
        "command": "sweep",
        "seeds": [int(derive_seed(cfg.master_seed, i)) for i in range(cfg.M)],
        "box_doubling_relative_change": doubling,
        "wall_clock_s": {str(r.K): r.wall_clock_s for r in records},
        "total_wall_clock_s": time.perf_counter() - t0,
    })
    print(f"sweep: {len(records)} records -> {csv_path}")
    return 0


def _cmd_report(cfg: RunConfig, args) -> int:
    outdir = cfg.output_dir
    csv_path = os.path.join(args.sweep_dir or outdir, "sweep.csv")
    with open(csv_path) as f:
        records = records_from_csv(f.read())
    scenario = cfg.scenario()
    report = contradiction_report(
        records, scenario, fit_k_min=cfg.fit_k_min, slope_tol=cfg.slope_tol,
        supnorm_slope_tol=cfg.supnorm_slope_tol, stability_tol=cfg.stability_tol,
    )
    _write_json(report, outdir, "report.json", cfg.config_hash())
    from .plots import render_sweep_figures

    figures = render_sweep_figures(records, report, outdir)
    if args.with_control:
        control = run_negative_control(scenario, cfg.K_list, L_norm=cfg.L_norm,
                                       points_budget=cfg.points_budget)
        control_report = contradiction_report(
            control, scenario, fit_k_min=cfg.fit_k_min, slope_tol=cfg.slope_tol,
            supnorm_slope_tol=cfg.supnorm_slope_tol, stability_tol=cfg.stability_tol,
        )
        _write_json(control_report, outdir, "control_report.json", cfg.config_hash())
        with open(os.path.join(outdir, "control_sweep.csv"), "w") as f:
            f.write(records_to_csv(control, cfg.config_hash()))
    write_manifest(cfg, outdir, {"command": "report", "figures": figures})
    print(f"report: verdict {report['verdict']} "
          f"(ratio slope {report['fits']['normalized_ratio']['slope']:+.4f}, "
          f"theory {report['theoretical_ratio_exponent']:+.4f})")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="fmlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fmlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", dest="output_dir", help="output directory")
        sp.add_argument("--seed", dest="master_seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)

    for name, fn in [("gen-multiplier", _cmd_gen_multiplier), ("norm", _cmd_norm),
                     ("apply", _cmd_apply), ("khintchine", _cmd_khintchine),
                     ("verify", _cmd_verify), ("sweep", _cmd_sweep),
                     ("report", _cmd_report)]:
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(fn=fn)
        if name in ("gen-multiplier", "norm", "apply", "khintchine"):
            sp.add_argument("--K", type=int, default=None)
        if name in ("gen-multiplier", "norm", "apply"):
            sp.add_argument("--seed-multiplier", dest="seed", type=int, default=None)
        if name == "khintchine":
            sp.add_argument("--M", type=int, default=None)
        if name == "report":
            sp.add_argument("--sweep-dir", default=None)
            sp.add_argument("--with-control", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        _emit_error("usage", "a subcommand is required", 1)
        return 1
    try:
        cfg = load_config(args.config, output_dir=args.output_dir,
                          master_seed=args.master_seed, threads=args.threads)
        return args.fn(cfg, args)
    except ConstructionError as exc:
        _emit_error("construction-invariant", str(exc), 2)
        return 2
    except ResolutionError as exc:
        _emit_error("resolution", str(exc), 3)
        return 3
    except (FmlabError, FileNotFoundError, json.JSONDecodeError) as exc:
        _emit_error(type(exc).__name__, str(exc), 1)
        return 1


if __name__ == "__main__":
    sys.exit(main())
