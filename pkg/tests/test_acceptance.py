"""Acceptance suite for the default scenario.

Scenario: n = 1, p = 4/3, s = 1/4 (critical line), r = 2, K in {4, 6, 8,
10, 12}, M = 64 Monte Carlo draws, master seed 1.  Exponent fits use the
window K >= 6.  One PASS/FAIL line is printed per criterion (run with
``pytest tests/test_acceptance.py -v -s``).

Criterion 1's slope bound is known to fail at this desk scale: the
sup-over-dilations norm is still climbing toward its uniform bound while
the last dilation window fills (the K = 12 value sits ~7% above K = 10),
which exceeds |slope| <= 0.05 even though the max/min bound holds with
room.  The assertion is kept exactly as specified and the failure is
deliberate; see the stability data printed by the test.
"""

import dataclasses

import numpy as np
import pytest

from fmlab.bumps import phi_lp_radial
from fmlab.counterexample import (
    CounterexampleMultiplier,
    MultiplierSpec,
    index_set,
    sample_multiplier,
    support_disjointness_check,
)
from fmlab.experiment import (
    contradiction_report,
    fit_exponent,
    run_negative_control,
    run_sweep,
)
from fmlab.fields import Grid, SampledField
from fmlab.norms import SmoothnessParams, besov_norm, hormander_multiplier_norm_profile, lorentz_norm, sobolev_norm
from fmlab.operator import (
    ClosedFormPlan,
    ScenarioParams,
    apply_spectral,
    exhaustive_khintchine,
    f_lp_norm,
    khintchine_mc,
    plan_khintchine_grid,
    plan_operator_grids,
    square_function_radial,
)
from fmlab.transforms import fourier_forward, fourier_inverse, lp_norm

SCENARIO = ScenarioParams.from_p(1, 4.0 / 3.0, 2.0)
K_LIST = (4, 6, 8, 10, 12)
MASTER_SEED = 1
M_DRAWS = 64
FIT_K_MIN = 6


def announce(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def sweep_records():
    return run_sweep(SCENARIO, K_LIST, MASTER_SEED, M_DRAWS, threads=2)


@pytest.fixture(scope="session")
def norm_profiles():
    """sup-D norm column for three multiplier seeds at r = 2 and r = 4."""
    out = {}
    for seed in (1, 2, 3):
        for K in K_LIST:
            m = CounterexampleMultiplier(MultiplierSpec(1, SCENARIO.s, K, seed))
            prof = hormander_multiplier_norm_profile(m, SCENARIO.s, (2.0, 4.0))
            for r in (2.0, 4.0):
                out.setdefault((seed, r), {})[K] = prof[r].value
    return out


def test_criterion_1_lemma_boundedness(norm_profiles):
    slopes, spreads, residuals = {}, {}, {}
    for (seed, r), col in sorted(norm_profiles.items()):
        fit = fit_exponent([(K, v) for K, v in col.items() if K >= FIT_K_MIN])
        values = list(col.values())
        slopes[(seed, r)] = fit.slope
        spreads[(seed, r)] = max(values) / min(values)
        residuals[(seed, r)] = fit.max_residual
    worst_slope = max(abs(s) for s in slopes.values())
    worst_spread = max(spreads.values())
    ok = worst_slope <= 0.05 and worst_spread <= 1.5
    announce(1, ok, f"sup-D norm: worst |slope| {worst_slope:.4f} (<= 0.05), "
                    f"worst max/min {worst_spread:.3f} (<= 1.5) over seeds 1-3, r in {{2, 4}}")
    for key in sorted(slopes):
        print(f"    seed {key[0]}, r = {key[1]:g}: slope {slopes[key]:+.4f}, "
              f"max/min {spreads[key]:.3f}, column "
              + " ".join(f"{v:.4f}" for v in norm_profiles[key].values()))
    assert worst_spread <= 1.5
    assert max(residuals.values()) <= 0.1  # log-scale flatness residual
    assert worst_slope <= 0.05, (
        "desk-scale approach to the uniform bound exceeds the slope tolerance; "
        "deliberate failure, see module docstring and decisions ledger"
    )


def test_criterion_2_test_function_scaling():
    fit = fit_exponent([(K, f_lp_norm(K, SCENARIO.p, 1) ** SCENARIO.p) for K in K_LIST])
    target = SCENARIO.n * SCENARIO.p - SCENARIO.n
    scaling = f_lp_norm(4, SCENARIO.p, 1, "scaling")
    quadrature = f_lp_norm(4, SCENARIO.p, 1, "quadrature")
    mode_rel = abs(scaling - quadrature) / scaling
    ok = (abs(fit.slope - target) < 1e-9 and fit.max_residual <= 1e-6
          and mode_rel <= 1e-6)
    announce(2, ok, f"||f||_p^p slope {fit.slope:.12f} (exact {target:.12f}), "
                    f"residual {fit.max_residual:.2e} (<= 1e-6), "
                    f"mode agreement {mode_rel:.2e} (<= 1e-6)")
    assert abs(fit.slope - target) < 1e-9
    assert fit.max_residual <= 1e-6
    assert mode_rel <= 1e-6


def test_criterion_3_lower_bound_growth(sweep_records):
    stab = [r.square_functional / r.partial_sum for r in sweep_records if r.K >= FIT_K_MIN]
    stability = max(stab) / min(stab)
    mc_fit = fit_exponent([(r.K, r.mc_mean) for r in sweep_records if r.K >= FIT_K_MIN])
    target = SCENARIO.e1 + 1.0 - 0.1
    ok = stability <= 1.3 and mc_fit.slope >= target
    announce(3, ok, f"square-functional/partial-sum stability {stability:.4f} (<= 1.3), "
                    f"MC mean slope {mc_fit.slope:.4f} (>= {target:.4f})")
    assert stability <= 1.3
    assert mc_fit.slope >= target


def test_criterion_4_contradiction_divergence(sweep_records):
    ratio_fit = fit_exponent(
        [(r.K, r.ratio_R / r.sup_d_norm) for r in sweep_records if r.K >= FIT_K_MIN]
    )
    threshold = (1.0 / SCENARIO.p - 0.5) - 0.05
    control = run_negative_control(SCENARIO, K_LIST)
    control_report = contradiction_report(control, SCENARIO, fit_k_min=FIT_K_MIN)
    control_slope = control_report["fits"]["normalized_ratio"]["slope"]
    ok = (ratio_fit.slope >= threshold and abs(control_slope) <= 0.05
          and control_report["verdict"] == "FAIL")
    announce(4, ok, f"normalized ratio slope {ratio_fit.slope:.4f} (>= {threshold:.2f}); "
                    f"control slope {control_slope:+.4f} (within +-0.05), "
                    f"control verdict {control_report['verdict']} (FAIL required)")
    assert ratio_fit.slope >= threshold
    assert abs(control_slope) <= 0.05
    assert control_report["verdict"] == "FAIL"


def test_criterion_5_two_route_oracle():
    worst = 0.0
    for seed in (1, 2, 3, 4, 5):
        spec = MultiplierSpec(1, SCENARIO.s, 6, seed)
        freq_grid, x_grid = plan_operator_grids(spec)
        spectral = apply_spectral(sample_multiplier(spec, freq_grid), spec.K)
        closed = ClosedFormPlan(spec, x_grid).evaluate(seed)
        num = np.sqrt(np.sum(np.abs(spectral.values - closed.values) ** 2))
        den = np.sqrt(np.sum(np.abs(spectral.values) ** 2))
        worst = max(worst, num / den)
    ok = worst <= 1e-6
    announce(5, ok, f"spectral vs closed form at K = 6, 5 seeds: worst relative "
                    f"L2 difference {worst:.3e} (<= 1e-6)")
    assert worst <= 1e-6


def test_criterion_6_exhaustive_khintchine():
    spec = MultiplierSpec(1, SCENARIO.s, 4, MASTER_SEED)
    grid = plan_khintchine_grid(spec, 1e-9)
    ex = exhaustive_khintchine(spec, SCENARIO.p, x_grid=grid, boundary_level=1e-9)
    g2 = square_function_radial(spec, grid.radii()) ** 2
    mask = g2 > 0
    pointwise = float(np.max(np.abs(ex.mean_sq_pointwise[mask] - g2[mask]) / g2[mask]))
    mc = khintchine_mc(spec, SCENARIO.p, 256, x_grid=grid, boundary_level=1e-9)
    z = abs(mc.mean - ex.mean_norm_p) / mc.stderr
    ok = pointwise <= 1e-10 and z <= 4.0 and ex.pattern_count == 2048
    announce(6, ok, f"exhaustive (2048 patterns, 11 signs): pointwise |Tf|^2 vs G^2 "
                    f"{pointwise:.2e} (<= 1e-10); MC (M = 256) z-score {z:.2f} (<= 4)")
    assert ex.pattern_count == 2048 and ex.bump_count == 11
    assert pointwise <= 1e-10
    assert z <= 4.0


def test_criterion_7_structural_invariants(rng):
    report = support_disjointness_check(MultiplierSpec(1, SCENARIO.s, 6, MASTER_SEED))
    overlaps = report["overlap_count"]

    xi = np.exp(rng.uniform(np.log(1e-5), np.log(1e5), 100))
    partition_worst = 0.0
    for x in xi:
        ds = np.arange(np.floor(np.log2(0.5 / x)) - 1, np.ceil(np.log2(2.0 / x)) + 2)
        total = sum(float(phi_lp_radial(np.asarray(x * 2.0**d))) for d in ds)
        partition_worst = max(partition_worst, abs(total - 1.0))

    grid = Grid(1, 8.0, 512)
    fld = SampledField(grid, rng.standard_normal(512) + 1j * rng.standard_normal(512), "space")
    back = fourier_inverse(fourier_forward(fld))
    rt = float(np.max(np.abs(back.values - fld.values)) / np.max(np.abs(fld.values)))

    counts_ok = all(index_set(N, 1).count == 2 ** (N - 1) - 1 for N in range(1, 15))
    n2_ok = {tuple(k) for k in index_set(1, 2).ks} == {(1, 2), (2, 1), (2, 2)}

    ok = (overlaps == 0 and partition_worst < 1e-12 and rt < 1e-12
          and counts_ok and n2_ok)
    announce(7, ok, f"overlaps {overlaps} (= 0); partition residual "
                    f"{partition_worst:.2e} (< 1e-12); round trip {rt:.2e} (< 1e-12); "
                    f"index counts OK = {counts_ok and n2_ok}")
    assert overlaps == 0
    assert partition_worst < 1e-12
    assert rt < 1e-12
    assert counts_ok and n2_ok


def test_criterion_8_norm_sanity(rng):
    grid = Grid(1, 8.0, 256)
    fld = SampledField(grid, rng.standard_normal(256) + 1j * rng.standard_normal(256), "space")
    lz = lorentz_norm(fld, SCENARIO.r, SCENARIO.r)
    lp = lp_norm(fld, SCENARIO.r)
    lorentz_rel = abs(lz - lp) / lp

    params = SmoothnessParams(SCENARIO.s, SCENARIO.r)
    mins = []
    for points in (256, 512):
        g = Grid(1, 8.0, points)
        ratios = []
        spectral_rng = np.random.default_rng(99)
        for _ in range(20):
            spec_vals = np.zeros(points, dtype=complex)
            center = points // 2
            block = spectral_rng.standard_normal(32) + 1j * spectral_rng.standard_normal(32)
            spec_vals[center - 16 : center + 16] = block
            hat = SampledField(g.dual(), spec_vals, "frequency")
            f = fourier_inverse(hat)
            ratios.append(besov_norm(f, params) / sobolev_norm(f, params))
        mins.append(min(ratios))
    drift = abs(mins[1] - mins[0]) / mins[0]
    ok = lorentz_rel <= 1e-14 and mins[0] > 0 and drift <= 0.10
    announce(8, ok, f"Lorentz(r, r) vs L^r relative gap {lorentz_rel:.2e} "
                    f"(machine level); Besov/Sobolev family min ratio {mins[0]:.3f} > 0, "
                    f"grid-doubling drift {drift:.2%} (<= 10%)")
    assert lorentz_rel <= 1e-14
    assert mins[0] > 0
    assert drift <= 0.10


# ---------------------------------------------------------------------------
# Scale-dependent invariants that ride on the session sweep
# ---------------------------------------------------------------------------

def test_khintchine_equivalence_stability(sweep_records):
    ratios = [(r.K, r.mc_mean / r.square_functional) for r in sweep_records]
    fit = fit_exponent(ratios)
    print(f"    MC/square-functional ratios: "
          + " ".join(f"K{K}:{v:.4f}" for K, v in ratios) + f"; slope {fit.slope:+.4f}")
    assert abs(fit.slope) <= 0.05


def test_monotone_divergence(sweep_records):
    inversions = 0
    for a, b in zip(sweep_records, sweep_records[1:]):
        if b.ratio_R < a.ratio_R:
            slack = 2.0 * (a.mc_stderr + b.mc_stderr)
            assert a.ratio_R - b.ratio_R <= slack
            inversions += 1
    assert inversions <= 1


def test_sweep_determinism(sweep_records):
    repeat = run_sweep(SCENARIO, (4, 6), MASTER_SEED, M_DRAWS, threads=2)
    by_k = {r.K: r for r in sweep_records}
    for rec in repeat:
        assert dataclasses.replace(rec, wall_clock_s=None) == \
            dataclasses.replace(by_k[rec.K], wall_clock_s=None)
