"""Smoothness norms and multiplier-condition diagnostics.

Fractional operators are spectral: the Bessel potential multiplies the
transform by ``(1 + 4 pi^2 |w|^2)^{s/2}``, the Riesz potential by
``(2 pi |w|)^s`` (zero frequency annihilated).  The fractional Sobolev norm
is the L^r norm of the Bessel image.  The dilation-invariant multiplier
norm takes, for each integer dilation D, the Sobolev norm of the localized
piece ``phi_lp(xi) m(2^D xi)`` sampled on a dedicated norm grid, and then
the sup over D.

The Mikhlin and 1960-style annulus checkers are diagnostics built on
central finite differences; large values are findings, not failures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product as _iterprod

import numpy as np

from . import bumps
from .counterexample import CounterexampleMultiplier
from .errors import (
    InvalidExponentError,
    InvalidRangeError,
    ResolutionError,
    UnsupportedDimensionError,
)
from .fields import Grid, SampledField
from .transforms import forward_values, fourier_forward, fourier_inverse, inverse_values, lp_norm, rearrangement

DEFAULT_L_NORM = 16.0
DEFAULT_POINTS_BUDGET = 2**26
_GENERIC_SPACING = 2.0**-6


@dataclass(frozen=True)
class SmoothnessParams:
    """Smoothness order s > 0, integrability r > 1, optional Lorentz r2."""

    s: float
    r: float
    r2: float | None = None

    def __post_init__(self):
        if not (self.s > 0):
            raise InvalidExponentError(f"s must be positive, got {self.s}")
        if not (self.r > 1):
            raise InvalidExponentError(f"r must exceed 1, got {self.r}")
        if self.r2 is not None and not (self.r2 >= 1):
            raise InvalidExponentError(f"r2 must be >= 1 or inf, got {self.r2}")


def _apply_symbol(fld: SampledField, symbol_fn) -> SampledField:
    """Transform, multiply by symbol(|w|) on the dual grid, transform back."""
    dual = fld.grid.dual()
    spec = forward_values(fld.values, fld.grid)
    spec *= symbol_fn(dual.radii())
    return fld.with_values(inverse_values(spec, fld.grid))


def bessel_potential(fld: SampledField, s: float) -> SampledField:
    """(I - Laplacian)^{s/2}: symbol (1 + 4 pi^2 |w|^2)^{s/2}.

    Acts in whatever variable the field is sampled in; negative s smooths.
    """
    return _apply_symbol(fld, lambda w: (1.0 + 4.0 * np.pi**2 * w**2) ** (s / 2.0))


def riesz_potential(fld: SampledField, s: float) -> SampledField:
    """(-Laplacian)^{s/2}: homogeneous symbol (2 pi |w|)^s, zero bin killed."""
    if not (s > 0):
        raise InvalidExponentError(f"riesz_potential requires s > 0, got {s}")
    return _apply_symbol(fld, lambda w: (2.0 * np.pi * w) ** s)


def sobolev_norm(fld: SampledField, params: SmoothnessParams) -> float:
    """Fractional Sobolev norm: L^r norm of the Bessel potential image."""
    return lp_norm(bessel_potential(fld, params.s), params.r)


# ---------------------------------------------------------------------------
# Dilation-invariant multiplier norm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierNormResult:
    value: float
    argmax_D: int | None
    table: tuple  # (D, value, points_per_axis) triples, D ascending
    L_norm: float
    params: SmoothnessParams

    def per_d(self) -> dict[int, float]:
        return {d: v for d, v, _ in self.table}


def _norm_grid(dim: int, L_norm: float, spacing: float, points_budget: int) -> Grid:
    m = 1 << max(3, int(np.ceil(np.log2(2.0 * L_norm / spacing))))
    if m**dim > points_budget:
        raise ResolutionError(
            f"norm grid needs {m}^{dim} points for spacing {spacing:g}, "
            f"exceeding the budget {points_budget}"
        )
    return Grid(dim, L_norm, m)


def _localized_piece(m_eval, D: int, grid: Grid) -> SampledField:
    coords = grid.coords()
    vals = bumps.phi_lp(*coords) * np.asarray(m_eval(*(c * 2.0**D for c in coords)), dtype=float)
    return SampledField(grid, vals.astype(np.complex128), "frequency")


def hormander_multiplier_norm(
    m,
    params: SmoothnessParams,
    D_range=None,
    dim: int | None = None,
    *,
    L_norm: float = DEFAULT_L_NORM,
    spacing: float | None = None,
    points_budget: int = DEFAULT_POINTS_BUDGET,
) -> MultiplierNormResult:
    """sup over dilations D of || phi_lp(xi) m(2^D xi) ||_{L^r_s}.

    ``m`` is either a plain vectorized evaluator ``m(x0[, x1])`` (then
    ``D_range`` and ``dim`` are required, spacing defaults to 2^-6) or a
    :class:`CounterexampleMultiplier` (dilation window, spacing, and D range
    are derived from the construction: the scale-N piece of m(2^D .) has
    features of size 2^-(N+D), and only scales in [max(1, 2^(D-1)),
    min(K, 2^(D+1))] can meet the support of phi_lp).
    """
    is_counterexample = isinstance(m, CounterexampleMultiplier)
    if is_counterexample:
        dim = m.spec.n
        if D_range is None:
            D_range = m.d_range()
    else:
        if D_range is None:
            raise InvalidRangeError("D_range is required for a generic multiplier evaluator")
        if dim is None:
            raise UnsupportedDimensionError("dim is required for a generic multiplier evaluator")
    D_list = sorted(set(int(d) for d in D_range))
    if not D_list:
        raise InvalidRangeError("empty dilation range")

    entries = []
    for D in D_list:
        if is_counterexample:
            window = m.dilation_window(D)
            if window is None:
                entries.append((D, 0.0, 0))
                continue
            d_spacing = spacing if spacing is not None else min(
                2.0 ** (-(window[1] + D + 3)), _GENERIC_SPACING
            )
        else:
            d_spacing = spacing if spacing is not None else _GENERIC_SPACING
        try:
            grid = _norm_grid(dim, L_norm, d_spacing, points_budget)
        except ResolutionError as exc:
            raise ResolutionError(f"D={D}: {exc}") from None
        piece = _localized_piece(m, D, grid)
        entries.append((D, sobolev_norm(piece, params), grid.points_per_axis))

    best = max(entries, key=lambda e: e[1])
    return MultiplierNormResult(
        value=best[1],
        argmax_D=best[0] if best[1] > 0 else None,
        table=tuple(entries),
        L_norm=L_norm,
        params=params,
    )


def hormander_multiplier_norm_profile(
    m,
    s: float,
    r_values,
    D_range=None,
    dim: int | None = None,
    *,
    L_norm: float = DEFAULT_L_NORM,
    spacing: float | None = None,
    points_budget: int = DEFAULT_POINTS_BUDGET,
) -> dict[float, MultiplierNormResult]:
    """Multiplier norms for several integrability exponents in one pass.

    The Bessel image of each dilation piece is computed once and measured in
    every requested L^r; used where the same multiplier is certified at
    multiple r.
    """
    is_counterexample = isinstance(m, CounterexampleMultiplier)
    if is_counterexample:
        dim = m.spec.n
        if D_range is None:
            D_range = m.d_range()
    elif D_range is None or dim is None:
        raise InvalidRangeError("D_range and dim are required for a generic evaluator")
    r_values = tuple(float(r) for r in r_values)
    entries: dict[float, list] = {r: [] for r in r_values}
    for D in sorted(set(int(d) for d in D_range)):
        window = m.dilation_window(D) if is_counterexample else True
        if window is None:
            for r in r_values:
                entries[r].append((D, 0.0, 0))
            continue
        if is_counterexample and spacing is None:
            d_spacing = min(2.0 ** (-(window[1] + D + 3)), _GENERIC_SPACING)
        else:
            d_spacing = spacing if spacing is not None else _GENERIC_SPACING
        grid = _norm_grid(dim, L_norm, d_spacing, points_budget)
        image = bessel_potential(_localized_piece(m, D, grid), s)
        for r in r_values:
            entries[r].append((D, lp_norm(image, r), grid.points_per_axis))
    out = {}
    for r in r_values:
        best = max(entries[r], key=lambda e: e[1])
        out[r] = MultiplierNormResult(
            value=best[1],
            argmax_D=best[0] if best[1] > 0 else None,
            table=tuple(entries[r]),
            L_norm=L_norm,
            params=SmoothnessParams(s, r),
        )
    return out


# ---------------------------------------------------------------------------
# Pointwise (Mikhlin-type) and annulus-integral diagnostics
# ---------------------------------------------------------------------------

_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
}


def _fd_derivative(m_eval, points: np.ndarray, alpha: tuple[int, ...], step: float) -> np.ndarray:
    """Central finite-difference estimate of d^alpha m at each point (rows)."""
    dim = points.shape[1]
    offsets_per_axis = []
    for a in alpha:
        if a not in _STENCILS:
            raise InvalidRangeError(f"finite differences implemented for orders 0..3, got {a}")
        offsets_per_axis.append(_STENCILS[a])
    total = np.zeros(points.shape[0])
    for combo in _iterprod(*[range(len(off[0])) for off in offsets_per_axis]):
        shifted = points.copy()
        coeff = 1.0
        for axis, idx in enumerate(combo):
            offs, cfs = offsets_per_axis[axis]
            shifted[:, axis] += offs[idx] * step
            coeff *= cfs[idx]
        vals = np.asarray(m_eval(*(shifted[:, i] for i in range(dim))), dtype=float)
        total += coeff * vals
    order = sum(alpha)
    return total / step**order


def _multi_indices(dim: int, max_order: int):
    if dim == 1:
        return [(a,) for a in range(max_order + 1)]
    return [
        (a, b)
        for a in range(max_order + 1)
        for b in range(max_order + 1 - a)
    ]


def _sample_points(dim: int, xi_min: float, xi_max: float, budget: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    radii = np.exp(rng.uniform(np.log(xi_min), np.log(xi_max), budget))
    if dim == 1:
        signs = rng.choice([-1.0, 1.0], budget)
        return (radii * signs)[:, None]
    theta = rng.uniform(0, 2 * np.pi, budget)
    return np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)


def mikhlin_check(
    m,
    dim: int | None = None,
    max_order: int | None = None,
    *,
    budget: int = 400,
    xi_min: float = 1e-3,
    xi_max: float = 64.0,
    step: float | None = None,
    sample_seed: int = 11,
) -> dict[tuple[int, ...], float]:
    """Empirical sup of |xi|^{|alpha|} |d^alpha m(xi)| over a log-uniform sample.

    Diagnostic only.  The default derivative step is an eighth of the finest
    feature for a construction multiplier and 2^-6 otherwise; a stencil that
    straddles a jump of m reports the divided difference of the jump, which is
    the intended finding for discontinuous symbols.
    """
    if isinstance(m, CounterexampleMultiplier):
        dim = m.spec.n
        if step is None:
            step = 2.0 ** (-(m.spec.K + 3)) / 8.0
    else:
        if dim is None:
            raise UnsupportedDimensionError("dim is required for a generic evaluator")
        if step is None:
            step = _GENERIC_SPACING / 8.0
    if max_order is None:
        max_order = dim // 2 + 1
    points = _sample_points(dim, xi_min, xi_max, budget, sample_seed)
    radii = np.sqrt(np.sum(points**2, axis=1))
    table = {}
    for alpha in _multi_indices(dim, max_order):
        deriv = _fd_derivative(m, points, alpha, step)
        table[alpha] = float(np.max(radii ** sum(alpha) * np.abs(deriv)))
    return table


def hormander1960_check(
    m,
    dim: int | None = None,
    max_order: int | None = None,
    R_set=None,
    *,
    step: float | None = None,
    samples_per_annulus: int = 4096,
) -> dict[tuple[int, ...], dict[float, float]]:
    """Annulus-integral condition table: R^{-n+2|alpha|} int_{R<|xi|<2R} |d^alpha m|^2.

    Quadrature over dyadic annuli of finite-difference derivatives; in two
    dimensions the annulus is integrated in polar coordinates.
    """
    if isinstance(m, CounterexampleMultiplier):
        dim = m.spec.n
        if step is None:
            step = 2.0 ** (-(m.spec.K + 3)) / 8.0
    else:
        if dim is None:
            raise UnsupportedDimensionError("dim is required for a generic evaluator")
        if step is None:
            step = _GENERIC_SPACING / 8.0
    if max_order is None:
        max_order = dim // 2 + 1
    if R_set is None:
        R_set = [2.0**j for j in range(-2, 5)]

    table: dict[tuple[int, ...], dict[float, float]] = {a: {} for a in _multi_indices(dim, max_order)}
    for R in R_set:
        if dim == 1:
            radii = np.linspace(R, 2 * R, samples_per_annulus, endpoint=False)
            dr = R / samples_per_annulus
            pts = np.concatenate([radii, -radii])[:, None]
            weights = np.full(pts.shape[0], dr)
        else:
            n_r = max(int(np.sqrt(samples_per_annulus)), 8)
            n_t = max(samples_per_annulus // n_r, 8)
            radii = np.linspace(R, 2 * R, n_r, endpoint=False)
            dr = R / n_r
            theta = np.linspace(0, 2 * np.pi, n_t, endpoint=False)
            dt = 2 * np.pi / n_t
            rr, tt = np.meshgrid(radii, theta, indexing="ij")
            pts = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=1)
            weights = (rr * dr * dt).ravel()
        for alpha in table:
            deriv = _fd_derivative(m, pts, alpha, step)
            integral = float(np.sum(weights * deriv**2))
            table[alpha][R] = R ** (-dim + 2 * sum(alpha)) * integral
    return table


# ---------------------------------------------------------------------------
# Besov and Lorentz scales
# ---------------------------------------------------------------------------

def besov_norm(fld: SampledField, params: SmoothnessParams, k_max: int | None = None) -> float:
    """Inhomogeneous Besov norm: sum_k 2^{ks} || (besov_cutoff_k fhat)^inv ||_{L^r}.

    ``k_max`` defaults to the smallest k whose dyadic block reaches the grid
    bandwidth.  A truncation warning is emitted when the top block still
    carries more than 1e-10 of the spectral L^2 mass.
    """
    spec_field = fourier_forward(fld)
    dual = spec_field.grid
    radii = dual.radii()
    if k_max is None:
        k_max = max(int(np.ceil(np.log2(dual.L))) + 1, 1)
    total = 0.0
    for k in range(k_max + 1):
        cut = bumps.besov_cutoff_radial(k, radii)
        piece = SampledField(dual, spec_field.values * cut, "frequency")
        total += 2.0 ** (k * params.s) * lp_norm(fourier_inverse(piece), params.r)
    # blocks 0..k_max telescope to the plateau at radius 2^k_max; anything
    # beyond it is spectral mass the truncated sum cannot see
    coverage = bumps.besov_cutoff_radial(0, radii / 2.0**k_max)
    leftover = SampledField(dual, spec_field.values * (1.0 - coverage), "frequency")
    mass_total = lp_norm(spec_field, 2)
    mass_missed = lp_norm(leftover, 2)
    if mass_total > 0 and (mass_missed / mass_total) ** 2 > 1e-10:
        warnings.warn(
            f"besov_norm truncated at k_max={k_max}: spectral mass fraction "
            f"{(mass_missed / mass_total)**2:.3e} lies beyond the covered blocks",
            RuntimeWarning,
        )
    return float(total)


def lorentz_norm(fld: SampledField, r1: float, r2: float) -> float:
    """Lorentz norm via exact per-step integration of the rearrangement.

    For finite r2: ( int t^{r2/r1 - 1} g*(t)^{r2} dt )^{1/r2}; for r2 = inf:
    sup t^{1/r1} g*(t).
    """
    if not (1 < r1 < np.inf):
        raise InvalidExponentError(f"r1 must lie in (1, inf), got {r1}")
    if r2 != np.inf and not (r2 >= 1):
        raise InvalidExponentError(f"r2 must be >= 1 or inf, got {r2}")
    rearr = rearrangement(fld)
    levels = rearr.levels
    mu = rearr.cell_measure
    edges = mu * np.arange(len(levels) + 1)
    if r2 == np.inf:
        # on each step g* is constant and t^{1/r1} increases: sup at the right edge
        return float(np.max(levels * edges[1:] ** (1.0 / r1))) if len(levels) else 0.0
    q = r2 / r1
    increments = (edges[1:] ** q - edges[:-1] ** q) / q
    return float(np.sum(levels**r2 * increments) ** (1.0 / r2))


def lorentz_sobolev_norm(fld: SampledField, s: float, r1: float, r2: float) -> float:
    """Lorentz norm of the Bessel potential image."""
    return lorentz_norm(bessel_potential(fld, s), r1, r2)
