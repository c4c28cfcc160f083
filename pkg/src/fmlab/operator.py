"""The operator pipeline: test function, two routes for T_m f, and sign averaging.

The test function is defined through its transform ``fhat(xi) =
phi_test(xi/K)``, which equals 1 on ``{|xi| <= 2K}`` and hence on the whole
support of the construction multiplier, so ``T_m f`` is simply the inverse
transform of ``m``.  Two independent routes compute it:

* ``apply_spectral``: sample m and fhat on a frequency grid, multiply,
  inverse transform.  By Poisson summation this equals the exact ``T_m f``
  periodized with the dual box period, so its only error is the tail of
  ``T_m f`` outside the space box.
* ``apply_closed_form``: per scale N, the bump sum collapses to an envelope
  ``c_N 2^{-nN} (F^-1 psi)(x / 2^N)`` times the lattice trigonometric
  polynomial ``S_N(x) = sum_k a_{N,k} exp(2 pi i x.k / 2^N)``.  S_N is
  periodic with period ``2^N`` per axis, so it is evaluated on one period by
  a zero-padded inverse FFT of its coefficient array and tiled across the
  grid.  This makes large-K sign averaging affordable.

Sign averages over seeds (Monte Carlo) or over all sign patterns
(exhaustive, small K) are compared against the sign-free square function
``G(x)^2 = sum_N c_N^2 #I_N 2^{-2nN} |F^-1 psi(x/2^N)|^2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bumps import phi_test_radial, phi_test_table, psi_table, radial_lp_norm
from .counterexample import MultiplierSpec, index_set, sign_values
from .errors import GridMismatchError, InvalidRangeError, ResolutionError
from .fields import TAG_FREQUENCY, TAG_SPACE, Grid, SampledField
from .transforms import fourier_inverse, lp_norm

DEFAULT_BOUNDARY_LEVEL = 1e-12


@dataclass(frozen=True)
class ScenarioParams:
    """Exponent quadruple (n, p, s, r) on the critical line |1/p - 1/2| = s/n."""

    n: int
    p: float
    s: float
    r: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n}")
        if not (1.0 < self.p < 2.0):
            raise ValueError(f"p must lie in (1, 2), got {self.p}")
        if abs(abs(1.0 / self.p - 0.5) - self.s / self.n) > 1e-12:
            raise ValueError(
                f"(p, s, n) = ({self.p}, {self.s}, {self.n}) is off the critical line "
                f"|1/p - 1/2| = s/n"
            )
        if not (self.r > 1):
            raise ValueError(f"r must exceed 1, got {self.r}")
        if not (self.e1 > -1.0):
            raise ValueError(f"derived exponent e1 = {self.e1} must exceed -1")

    @property
    def e1(self) -> float:
        """Growth exponent n p - n - p/2 of the per-scale lower bound."""
        return self.n * self.p - self.n - self.p / 2.0

    @classmethod
    def from_p(cls, n: int, p: float, r: float) -> "ScenarioParams":
        return cls(n=n, p=p, s=n * abs(1.0 / p - 0.5), r=r)


def _next_pow2(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1.0))))


def derive_seed(master_seed: int, index: int) -> int:
    """Counter-derived 64-bit seed stream for Monte Carlo draws."""
    golden = 0x9E3779B97F4A7C15
    mask = (1 << 64) - 1

    def fin(z: int) -> int:
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        return z ^ (z >> 31)

    h = fin((master_seed + golden) & mask)
    return fin((h ^ ((index + golden) & mask)) & mask)


def test_function_hat(*coords, K: int):
    """Transform of the test function: phi_test(xi / K); 1 on |xi| <= 2K."""
    if len(coords) == 1:
        r = np.abs(np.asarray(coords[0], dtype=float))
    else:
        r = np.hypot(np.asarray(coords[0], dtype=float), np.asarray(coords[1], dtype=float))
    return phi_test_radial(r / K)


def f_lp_norm(K: int, p: float, dim: int = 1, mode: str = "scaling") -> float:
    """|| f ||_{L^p} for the K-dilated test function.

    ``scaling`` mode uses the exact identity f(x) = K^n (F^-1 phi_test)(K x),
    so the norm is K^{(np-n)/p} times a K-independent radial quadrature.
    ``quadrature`` mode runs the full sample/inverse-transform/norm pipeline
    as an independent cross-check.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if mode == "scaling":
        base = radial_lp_norm(phi_test_table(dim), p)
        return float(K ** ((dim * p - dim) / p) * base)
    if mode != "quadrature":
        raise ValueError(f"unknown mode {mode!r}")
    table = phi_test_table(dim)
    # the space spacing 1/(2 L_freq) controls the |f|^p quadrature error at the
    # zeros of f, where the integrand is only C^1; 1/2048 keeps it below 1e-7
    L_freq = max(2048 if dim == 1 else 16, _next_pow2(4.0 * K))
    L_x = _next_pow2(table.radius_max / K)
    M = int(2 * L_freq * 2 * L_x)
    grid = Grid(dim, float(L_freq), M)
    fhat = SampledField.from_function(grid, lambda *cs: test_function_hat(*cs, K=K), TAG_FREQUENCY)
    return lp_norm(fourier_inverse(fhat), p)


# ---------------------------------------------------------------------------
# Spectral route
# ---------------------------------------------------------------------------

def closed_form_envelope(spec: MultiplierSpec, radius: float) -> float:
    """Certified upper bound for |T_m f| at distance ``radius`` from the origin."""
    table = psi_table(spec.n)
    total = 0.0
    for N in range(1, spec.K + 1):
        count = index_set(N, spec.n).count
        if count == 0:
            continue
        coef = _scale_coef(spec, N) * count
        total += coef * table.envelope_at(radius / 2.0**N)
    return total


def _scale_coef(spec: MultiplierSpec, N: int) -> float:
    return float(2.0 ** (-N * spec.s) * N ** (-spec.s) * 2.0 ** (-spec.n * N))


def plan_operator_grids(spec: MultiplierSpec,
                        boundary_level: float = DEFAULT_BOUNDARY_LEVEL) -> tuple[Grid, Grid]:
    """Frequency grid for the spectral route and its dual space grid.

    The frequency half-width is the smallest power of two >= 2(K+1), which
    both contains the multiplier support and makes the dual spacing at most
    1/(4(K+1)).  The space half-width grows until the certified closed-form
    envelope at the boundary is below ``boundary_level``; the frequency
    spacing is its reciprocal, which automatically resolves the finest bump.
    """
    L_freq = _next_pow2(2.0 * (spec.K + 1))
    L_x = float(2 ** (spec.K + 2))
    while closed_form_envelope(spec, L_x) >= boundary_level:
        L_x *= 2.0
        if L_x > 2.0**40:
            raise ResolutionError("space box for the requested boundary level is impractical")
    M = int(round(2 * L_freq * 2 * L_x))
    freq_grid = Grid(spec.n, float(L_freq), M)
    return freq_grid, freq_grid.dual()


def apply_spectral(m_field: SampledField, K: int,
                   fhat_field: SampledField | None = None) -> SampledField:
    """T_m f as the inverse transform of m * fhat on the sampled grid."""
    if m_field.tag != TAG_FREQUENCY:
        raise ValueError("m_field must be frequency-tagged")
    grid = m_field.grid
    if grid.h > 2.0 ** (-(K + 3)):
        raise ResolutionError(
            f"frequency spacing {grid.h:g} does not resolve scale K={K}"
        )
    if grid.L < K + 1:
        raise ResolutionError(f"frequency half-width {grid.L:g} < K + 1 = {K + 1}")
    if fhat_field is None:
        fhat_field = SampledField.from_function(
            grid, lambda *cs: test_function_hat(*cs, K=K), TAG_FREQUENCY
        )
    else:
        m_field.same_grid(fhat_field)
    product = SampledField(grid, m_field.values * fhat_field.values, TAG_FREQUENCY)
    return fourier_inverse(product)


# ---------------------------------------------------------------------------
# Closed-form route
# ---------------------------------------------------------------------------

class ClosedFormPlan:
    """Precomputed envelopes and tiling indices for repeated sign draws.

    The plan depends on (n, s, K) and the space grid only; evaluating a seed
    costs one small FFT per scale plus one fused multiply-add over each
    scale's support block.  Per-scale terms are truncated where their
    certified envelope falls below ``term_level`` (the plan keeps the block
    of the grid where the term can exceed it).
    """

    def __init__(self, spec: MultiplierSpec, x_grid: Grid,
                 boundary_level: float = DEFAULT_BOUNDARY_LEVEL,
                 term_level: float | None = None):
        if x_grid.n != spec.n:
            raise GridMismatchError("x_grid dimension does not match the multiplier spec")
        if x_grid.h > 1.0 / (4.0 * (spec.K + 1)):
            raise ResolutionError(
                f"space spacing {x_grid.h:g} does not resolve frequencies up to K+1"
            )
        env_at_edge = closed_form_envelope(spec, x_grid.L)
        if env_at_edge >= boundary_level:
            raise ResolutionError(
                f"space half-width {x_grid.L:g} leaves envelope {env_at_edge:.3e} "
                f">= {boundary_level:g} at the boundary"
            )
        self.spec = spec
        self.grid = x_grid
        self.boundary_level = boundary_level
        self.term_level = boundary_level / max(spec.K, 1) if term_level is None else term_level

        table = psi_table(spec.n)
        # inverse power of two: x = -L + j h with h = 2^-a
        self._scales = []
        M = x_grid.points_per_axis
        half = M // 2
        ax = x_grid.axis_coords()
        for N in range(1, spec.K + 1):
            iset = index_set(N, spec.n)
            if iset.count == 0:
                continue
            coef = _scale_coef(spec, N)
            worst = coef * iset.count
            y_cut = table.radius_for_envelope(self.term_level / worst)
            r_cut = min(x_grid.L, (2.0**N) * y_cut)
            j0 = max(0, int(math.floor((x_grid.L - r_cut) / x_grid.h)))
            j1 = min(M, int(math.ceil((x_grid.L + r_cut) / x_grid.h)) + 1)
            if j0 >= j1:
                continue
            period = 2.0**N / x_grid.h
            if abs(period - round(period)) > 1e-9 or round(period) < 1:
                raise ResolutionError(
                    "space spacing must be an inverse power of two dividing the scale periods"
                )
            P = int(round(period))
            idx = (np.arange(j0, j1) - half) % P
            sl = slice(j0, j1)
            if spec.n == 1:
                env = coef * table.eval(np.abs(ax[sl]) / 2.0**N)
            else:
                rr = np.hypot(ax[sl][:, None], ax[sl][None, :])
                env = coef * table.eval(rr / 2.0**N)
            self._scales.append(
                {"N": N, "ks": iset.ks, "count": iset.count, "P": P,
                 "slice": sl, "idx": idx, "env": env}
            )

    def evaluate(self, seed: int) -> SampledField:
        """T_m f for the sign assignment of ``seed`` on the plan's grid."""
        n = self.spec.n
        acc = np.zeros(self.grid.shape, dtype=np.complex128)
        for sc in self._scales:
            signs = sign_values(seed, sc["N"], sc["ks"])
            P = sc["P"]
            if n == 1:
                coeffs = np.zeros(P, dtype=np.complex128)
                coeffs[(sc["ks"][:, 0] % P)] = signs
                S = np.fft.ifft(coeffs) * P
                acc[sc["slice"]] += sc["env"] * S[sc["idx"]]
            else:
                coeffs = np.zeros((P, P), dtype=np.complex128)
                coeffs[sc["ks"][:, 0] % P, sc["ks"][:, 1] % P] = signs
                S = np.fft.ifft2(coeffs) * P * P
                block = S[np.ix_(sc["idx"], sc["idx"])]
                acc[sc["slice"], sc["slice"]] += sc["env"] * block
        return SampledField(self.grid, acc, TAG_SPACE)

    def square_function_squared(self) -> np.ndarray:
        """Sign-free G(x)^2 = sum_N #I_N (c_N 2^{-nN} F^-1 psi(x/2^N))^2 on the grid."""
        out = np.zeros(self.grid.shape, dtype=float)
        for sc in self._scales:
            if self.spec.n == 1:
                out[sc["slice"]] += sc["count"] * sc["env"] ** 2
            else:
                out[sc["slice"], sc["slice"]] += sc["count"] * sc["env"] ** 2
        return out


def plan_khintchine_grid(spec: MultiplierSpec,
                         boundary_level: float = DEFAULT_BOUNDARY_LEVEL) -> Grid:
    """Space grid for sign averaging: spacing 2^-ceil(log2(4(K+1))), box by envelope."""
    a = math.ceil(math.log2(4.0 * (spec.K + 1)))
    h = 2.0**-a
    L_x = float(2 ** max(spec.K + 2, 3))
    while closed_form_envelope(spec, L_x) >= boundary_level:
        L_x *= 2.0
        if L_x > 2.0**40:
            raise ResolutionError("space box for the requested boundary level is impractical")
    return Grid(spec.n, L_x, int(round(2 * L_x / h)))


def apply_closed_form(spec: MultiplierSpec, x_grid: Grid | None = None,
                      boundary_level: float = DEFAULT_BOUNDARY_LEVEL) -> SampledField:
    """One-shot closed-form T_m f for the spec's own seed."""
    if x_grid is None:
        x_grid = plan_khintchine_grid(spec, boundary_level)
    plan = ClosedFormPlan(spec, x_grid, boundary_level)
    return plan.evaluate(spec.seed)


# ---------------------------------------------------------------------------
# Square function and sign averaging
# ---------------------------------------------------------------------------

def square_function_radial(spec: MultiplierSpec, radii) -> np.ndarray:
    """G at the given radii (G is radial: no signs enter)."""
    table = psi_table(spec.n)
    radii = np.asarray(radii, dtype=float)
    total = np.zeros_like(radii)
    for N in range(1, spec.K + 1):
        count = index_set(N, spec.n).count
        if count == 0:
            continue
        term = _scale_coef(spec, N) * table.eval(radii / 2.0**N)
        total += count * term**2
    return np.sqrt(total)


def square_function(spec: MultiplierSpec, *coords) -> np.ndarray | float:
    """G(x); accepts one coordinate array per axis."""
    if len(coords) == 1:
        r = np.abs(np.asarray(coords[0], dtype=float))
    else:
        r = np.hypot(np.asarray(coords[0], dtype=float), np.asarray(coords[1], dtype=float))
    out = square_function_radial(spec, np.atleast_1d(r))
    return float(out[0]) if np.ndim(r) == 0 else out


def norm_p_pth_power(values: np.ndarray, cell_measure: float, p: float) -> float:
    """|| . ||_p^p quadrature computed from |v|^2 to avoid a square root pass."""
    sq = values.real**2 + values.imag**2
    if p == 2:
        return float(np.sum(sq) * cell_measure)
    return float(np.sum(sq ** (p / 2.0)) * cell_measure)


def square_functional(spec: MultiplierSpec, p: float, x_grid: Grid | None = None,
                      boundary_level: float = DEFAULT_BOUNDARY_LEVEL) -> float:
    """int G(x)^p dx on the sign-averaging grid."""
    if x_grid is None:
        x_grid = plan_khintchine_grid(spec, boundary_level)
    g = square_function_radial(spec, x_grid.radii())
    return float(np.sum(g**p) * x_grid.cell_measure)


@dataclass(frozen=True)
class KhintchineResult:
    mean: float
    stderr: float
    per_seed: tuple
    seeds: tuple
    grid_points: int
    grid_half_width: float


def khintchine_mc(spec: MultiplierSpec, p: float, M: int, *,
                  x_grid: Grid | None = None,
                  boundary_level: float = DEFAULT_BOUNDARY_LEVEL,
                  threads: int = 1) -> KhintchineResult:
    """Monte Carlo mean of || T_m f ||_p^p over M counter-derived seeds.

    ``spec.seed`` acts as the master seed; draw i uses
    ``derive_seed(spec.seed, i)``.  The reported standard error is the
    sample standard deviation over seeds divided by sqrt(M).
    """
    if M < 2:
        raise InvalidRangeError(f"M must be >= 2, got {M}")
    if x_grid is None:
        x_grid = plan_khintchine_grid(spec, boundary_level)
    plan = ClosedFormPlan(spec, x_grid, boundary_level)
    seeds = tuple(derive_seed(spec.seed, i) for i in range(M))

    def one(seed: int) -> float:
        fld = plan.evaluate(seed)
        return norm_p_pth_power(fld.values, x_grid.cell_measure, p)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, seeds))
    else:
        values = [one(s) for s in seeds]
    arr = np.array(values)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(M))
    return KhintchineResult(mean, stderr, tuple(values), seeds,
                            x_grid.size, x_grid.L)


@dataclass(frozen=True)
class ExhaustiveResult:
    mean_sq_pointwise: np.ndarray
    mean_norm_p: float
    pattern_count: int
    bump_count: int


def exhaustive_khintchine(spec: MultiplierSpec, p: float, x_grid: Grid | None = None,
                          boundary_level: float = DEFAULT_BOUNDARY_LEVEL,
                          max_bumps: int = 16, chunk: int = 4096) -> ExhaustiveResult:
    """Average over ALL sign patterns (2^bumps of them) of |T_m f|^2 and ||T_m f||_p^p.

    Only feasible when the total bump count is small (K = 4 in one dimension
    has 11 bumps, hence 2048 patterns).  The pointwise average of |T_m f|^2
    over all patterns equals G^2 exactly by sign orthonormality, which makes
    this an oracle for the square function and for Monte Carlo means.
    """
    if x_grid is None:
        x_grid = plan_khintchine_grid(spec, boundary_level)
    bumps_list = []
    table = psi_table(spec.n)
    coords = [c.ravel() for c in x_grid.coords()]
    radii = x_grid.radii().ravel()
    for N in range(1, spec.K + 1):
        iset = index_set(N, spec.n)
        if iset.count == 0:
            continue
        env = _scale_coef(spec, N) * table.eval(radii / 2.0**N)
        for k in iset.ks:
            phase = coords[0] * (k[0] / 2.0**N)
            if spec.n == 2:
                phase = phase + coords[1] * (k[1] / 2.0**N)
            bumps_list.append(env * np.exp(2j * np.pi * phase))
    S = len(bumps_list)
    if S > max_bumps:
        raise InvalidRangeError(
            f"{S} bumps would need 2^{S} sign patterns; exhaustive averaging is "
            f"limited to {max_bumps}"
        )
    B = np.array(bumps_list)  # (S, npoints)
    n_pat = 1 << S
    patterns = ((np.arange(n_pat)[:, None] >> np.arange(S)[None, :]) & 1) * 2.0 - 1.0
    npoints = B.shape[1]
    mean_sq = np.empty(npoints)
    acc_p = np.zeros(n_pat)
    for start in range(0, npoints, chunk):
        sl = slice(start, min(start + chunk, npoints))
        tre = patterns @ B.real[:, sl]
        tim = patterns @ B.imag[:, sl]
        sq = tre**2 + tim**2
        mean_sq[sl] = sq.mean(axis=0)
        acc_p += np.sum(sq ** (p / 2.0), axis=1)
    mean_norm_p = float(np.mean(acc_p) * x_grid.cell_measure)
    return ExhaustiveResult(mean_sq.reshape(x_grid.shape), mean_norm_p, n_pat, S)


def lower_bound_partial_sum(K: int, scenario: ScenarioParams) -> float:
    """Exact partial sum sum_{N=1}^{K} N^{e1} with e1 = np - n - p/2."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    ns = np.arange(1, K + 1, dtype=float)
    return float(np.sum(ns**scenario.e1))


def shell_table(spec: MultiplierSpec, scenario: ScenarioParams, A: float,
                n_quad: int = 8192) -> list[dict]:
    """Per-scale comparison of int_{A 2^N <= |x| < 2A 2^N} G^p dx with the
    predicted c_N^p N^{(n-1)p/2} 2^{nN(1-p/2)} growth.

    Returns one row per scale with the measured shell integral, the
    prediction, and their ratio (a single construction-wide constant up to
    cross-scale contamination).
    """
    p = scenario.p
    rows = []
    for N in range(1, spec.K + 1):
        count = index_set(N, spec.n).count
        if count == 0:
            continue
        lo, hi = A * 2.0**N, 2.0 * A * 2.0**N
        r = np.linspace(lo, hi, n_quad, endpoint=False) + (hi - lo) / (2 * n_quad)
        g = square_function_radial(spec, r) ** p
        dr = (hi - lo) / n_quad
        if spec.n == 1:
            integral = 2.0 * float(np.sum(g) * dr)
        else:
            integral = 2.0 * np.pi * float(np.sum(g * r) * dr)
        c_n = 2.0 ** (-N * spec.s) * N ** (-spec.s)
        theory = c_n**p * N ** ((spec.n - 1) * p / 2.0) * 2.0 ** (spec.n * N * (1 - p / 2.0))
        rows.append({"N": N, "shell_integral": integral, "theory": theory,
                     "ratio": integral / theory})
    return rows
