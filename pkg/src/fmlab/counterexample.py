"""Randomized multi-scale multiplier construction.

The multiplier is a sum of disjointly supported bumps

    m(xi) = sum_{N=1}^{K} c_N sum_{k} a_{N,k} psi(2^N xi - k),

where k runs over lattice points in N^n (positive integers) with
``N 2^N < |k| < (N + 1/2) 2^N``, the signs ``a_{N,k}`` are deterministic
+-1 values derived from a 64-bit seed, and ``c_N = 2^{-Ns} N^{-s}``.

Each scale-N piece lives in the annulus ``N - 1/4 < |xi| < N + 3/4`` and
distinct bumps never overlap, so pointwise evaluation is O(1): round
``|xi|`` to the candidate scale, round ``2^N xi`` to the candidate lattice
point, then check membership exactly in integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

from .bumps import psi_radial
from .errors import ConstructionError, ResolutionError, UnsupportedDimensionError
from .fields import TAG_FREQUENCY, Grid, SampledField

_U64 = np.uint64
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class MultiplierSpec:
    """Parameters of one realization: dimension, smoothness, top scale, seed."""

    n: int
    s: float
    K: int
    seed: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise UnsupportedDimensionError(f"n must be 1 or 2, got {self.n}")
        if not (self.s > 0):
            raise ValueError(f"s must be positive, got {self.s}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def support_outer(self) -> float:
        """The multiplier vanishes for |xi| >= K + 3/4."""
        return self.K + 0.75

    @property
    def support_inner(self) -> float:
        """The multiplier vanishes for |xi| <= 3/4."""
        return 0.75

    @property
    def sup_bound(self) -> float:
        """Pointwise bound sup |m| <= c_1 = 2^{-s} (disjoint supports, psi <= 1)."""
        return 2.0 ** (-self.s)


@dataclass(frozen=True)
class IndexSet:
    """Lattice points of one scale, sorted lexicographically."""

    N: int
    ks: np.ndarray  # shape (count, n), int64

    @property
    def count(self) -> int:
        return self.ks.shape[0]


def index_bounds_squared(N: int) -> tuple[int, int]:
    """Exact integer squares of the index-shell bounds N*2^N and (N+1/2)*2^N."""
    lo = N << N
    hi = (2 * N + 1) << (N - 1)
    return lo * lo, hi * hi


@lru_cache(maxsize=None)
def _index_set_cached(N: int, n: int) -> tuple:
    lo2, hi2 = index_bounds_squared(N)
    if n == 1:
        lo = N << N
        hi = (2 * N + 1) << (N - 1)
        ks = [(k,) for k in range(lo + 1, hi)]
    else:
        hi = (2 * N + 1) << (N - 1)
        ks = []
        for k1 in range(1, hi):
            k1sq = k1 * k1
            if k1sq >= hi2 - 1:
                break
            # smallest k2 with k1^2 + k2^2 > lo2, largest with < hi2
            rem_lo = lo2 - k1sq
            k2_min = 1 if rem_lo < 1 else isqrt(rem_lo) + 1
            k2_max = isqrt(hi2 - k1sq - 1)
            for k2 in range(k2_min, k2_max + 1):
                ks.append((k1, k2))
        ks.sort()
    return tuple(ks)


def index_set(N: int, n: int) -> IndexSet:
    """Enumerate {k in N^n : N 2^N < |k| < (N+1/2) 2^N} exactly (strict bounds)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if n not in (1, 2):
        raise UnsupportedDimensionError(f"n must be 1 or 2, got {n}")
    ks = np.array(_index_set_cached(N, n), dtype=np.int64).reshape(-1, n)
    return IndexSet(N, ks)


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def sign_values(seed: int, N: int, ks: np.ndarray) -> np.ndarray:
    """Deterministic +-1 for each row of ``ks`` (shape (count, n)).

    A splittable 64-bit mixing hash of (seed, N, k): independent of
    evaluation order and of K, so extending a multiplier to a larger K
    never changes existing signs.
    """
    with np.errstate(over="ignore"):
        h = _finalize(_U64(seed) + _GOLDEN)
        h = _finalize(h ^ (_U64(N) + _GOLDEN))
        ks = np.asarray(ks, dtype=np.int64).reshape(-1, ks.shape[-1] if ks.ndim > 1 else 1)
        hv = np.full(ks.shape[0], h, dtype=np.uint64)
        for axis in range(ks.shape[1]):
            hv = _finalize(hv ^ (ks[:, axis].astype(np.uint64) + _GOLDEN))
    return 1.0 - 2.0 * (hv & _U64(1)).astype(np.float64)


def sign(seed: int, N: int, k) -> int:
    """Sign a_{N,k} in {-1, +1} for a single lattice point."""
    k_arr = np.atleast_2d(np.asarray(k, dtype=np.int64))
    return int(sign_values(seed, N, k_arr)[0])


def c_coeff(N: int, s: float) -> float:
    """Scale coefficient c_N = 2^{-N s} N^{-s}, in (0, 1] and decreasing in N."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not (s > 0):
        raise ValueError(f"s must be positive, got {s}")
    return float(2.0 ** (-N * s) * float(N) ** (-s))


# ---------------------------------------------------------------------------
# O(1) locality: annulus -> scale, nearest lattice point -> bump
# ---------------------------------------------------------------------------

def _locate_batch(coords: tuple[np.ndarray, ...], spec: MultiplierSpec):
    """Vectorized locate. Returns (valid, N, k, dist) over flat input arrays."""
    flat = [np.asarray(c, dtype=float).ravel() for c in coords]
    if len(flat) != spec.n:
        raise UnsupportedDimensionError(
            f"expected {spec.n} coordinate arrays, got {len(flat)}"
        )
    r = np.abs(flat[0]) if spec.n == 1 else np.hypot(flat[0], flat[1])
    ncand = np.floor(r + 0.25).astype(np.int64)
    valid = (ncand >= 1) & (ncand <= spec.K) & (r > ncand - 0.25)

    nn = np.where(valid, ncand, 1)
    scale = np.ldexp(1.0, nn.astype(np.int32))
    ks = []
    dist2 = np.zeros_like(r)
    for c in flat:
        scaled = c * scale
        k = np.rint(scaled).astype(np.int64)
        dist2 += (scaled - k) ** 2
        valid &= k >= 1
        ks.append(k)
    norm2 = sum(k * k for k in ks)
    lo = nn << nn
    hi = (2 * nn + 1) << (nn - 1)
    valid &= (norm2 > lo * lo) & (norm2 < hi * hi)
    valid &= dist2 < 0.25
    return valid, nn, np.stack(ks, axis=-1), np.sqrt(dist2)


def locate(xi, spec: MultiplierSpec):
    """The unique (N, k) whose bump covers the point xi, or None.

    O(1): the candidate scale is the integer nearest |xi| (annuli are
    disjoint), the candidate k is the nearest lattice point to 2^N xi, and
    membership is checked exactly on |k|^2 in integer arithmetic.
    """
    pt = np.atleast_1d(np.asarray(xi, dtype=float))
    coords = tuple(pt[i : i + 1] for i in range(spec.n))
    valid, nn, ks, _ = _locate_batch(coords, spec)
    if not valid[0]:
        return None
    k = tuple(int(v) for v in ks[0])
    return int(nn[0]), (k[0] if spec.n == 1 else k)


def eval_multiplier_batch(coords: tuple[np.ndarray, ...], spec: MultiplierSpec) -> np.ndarray:
    """Vectorized multiplier values on arbitrary points (any common shape)."""
    shape = np.broadcast(*[np.asarray(c, dtype=float) for c in coords]).shape
    valid, nn, ks, dist = _locate_batch(coords, spec)
    out = np.zeros(valid.shape, dtype=float)
    if np.any(valid):
        nv = nn[valid]
        cn = np.power(2.0, -nv * spec.s) * np.power(nv.astype(float), -spec.s)
        # signs are hashed per scale, so group the valid points by N
        sg = np.empty(nv.shape[0], dtype=float)
        for N in np.unique(nv):
            m = nv == N
            sg[m] = sign_values(spec.seed, int(N), ks[valid][m])
        out[valid] = cn * sg * psi_radial(dist[valid])
    return out.reshape(shape)


def eval_multiplier(xi, spec: MultiplierSpec) -> float:
    """Multiplier value at a single point."""
    pt = np.atleast_1d(np.asarray(xi, dtype=float))
    coords = tuple(pt[i : i + 1] for i in range(spec.n))
    return float(eval_multiplier_batch(coords, spec)[0])


class CounterexampleMultiplier:
    """Callable wrapper exposing the multiplier to the norm machinery.

    ``mult(x0[, x1])`` evaluates vectorized.  The dilation window and the
    finest feature scale per dilation are derived from the support analysis:
    the scale-N piece of ``m(2^D xi)`` can meet the annulus ``1/2 < |xi| < 2``
    only for ``max(1, 2^(D-1)) <= N <= min(K, 2^(D+1))``.
    """

    def __init__(self, spec: MultiplierSpec):
        self.spec = spec

    def __call__(self, *coords):
        return eval_multiplier_batch(coords, self.spec)

    def dilation_window(self, D: int) -> tuple[int, int] | None:
        n_lo = max(1, 2 ** (D - 1)) if D >= 1 else 1
        n_hi = min(self.spec.K, 2 ** (D + 1)) if D >= -1 else 0
        if n_lo > n_hi:
            return None
        return n_lo, n_hi

    def d_range(self) -> range:
        """Dilations for which phi * m(2^D .) is not identically zero."""
        d_max = int(np.ceil(np.log2(self.spec.K + 0.75))) + 1
        return range(-2, d_max + 1)

    def finest_scale(self, D: int) -> float | None:
        window = self.dilation_window(D)
        if window is None:
            return None
        return 2.0 ** (-(window[1] + D))


def support_disjointness_check(spec: MultiplierSpec, n_points: int = 10**4,
                               sample_seed: int = 7) -> dict:
    """Verify the structural disjointness facts; raise ConstructionError on failure.

    (a) scale annuli (N - 1/4, N + 3/4) are pairwise disjoint open intervals;
    (b) same-scale bump centers are >= 2^-N apart while supports have radius
        < 2^-N-1;
    (c) brute force: at every sampled point at most one (N, k) bump is nonzero.
    """
    for N in range(1, spec.K):
        if N + 0.75 > (N + 1) - 0.25 + 1e-15:
            raise ConstructionError(f"annuli of scales {N} and {N+1} overlap")

    for N in range(1, spec.K + 1):
        iset = index_set(N, spec.n)
        if iset.count > 1:
            # centers k/2^N for distinct integer k differ by >= 2^-N
            min_gap = 2.0 ** (-N)
            support_diam = 2.0 ** (-N)  # two bump radii
            if not support_diam <= min_gap:
                raise ConstructionError(f"same-scale bumps at N={N} could overlap")

    rng = np.random.default_rng(sample_seed)
    pts = rng.uniform(-(spec.K + 1.0), spec.K + 1.0, size=(n_points, spec.n))
    max_cover = 0
    cover = np.zeros(n_points, dtype=np.int64)
    for N in range(1, spec.K + 1):
        iset = index_set(N, spec.n)
        if iset.count == 0:
            continue
        scaled = pts * 2.0**N  # (n_points, n)
        d2 = np.sum((scaled[:, None, :] - iset.ks[None, :, :].astype(float)) ** 2, axis=2)
        cover += np.sum(d2 < 0.25, axis=1)
    max_cover = int(cover.max()) if n_points else 0
    overlaps = int(np.sum(cover > 1))
    if overlaps:
        raise ConstructionError(f"support overlap detected at {overlaps} sample points")
    return {
        "K": spec.K,
        "n": spec.n,
        "points_sampled": n_points,
        "max_bumps_per_point": max_cover,
        "overlap_count": 0,
    }


def sample_multiplier(spec: MultiplierSpec, grid: Grid) -> SampledField:
    """Materialize the multiplier on a frequency grid.

    The grid must resolve the finest bump (spacing <= 2^-(K+3)) and contain
    the support (half-width >= K + 1).
    """
    if grid.n != spec.n:
        raise UnsupportedDimensionError(f"grid dimension {grid.n} != spec dimension {spec.n}")
    if grid.h > 2.0 ** (-(spec.K + 3)):
        raise ResolutionError(
            f"grid spacing {grid.h:g} does not resolve scale K={spec.K} "
            f"(need <= {2.0**(-(spec.K+3)):g})"
        )
    if grid.L < spec.K + 1:
        raise ResolutionError(
            f"grid half-width {grid.L:g} does not contain the support (need >= {spec.K + 1})"
        )
    coords = grid.coords()
    vals = eval_multiplier_batch(coords, spec)
    return SampledField(grid, vals.astype(np.complex128), TAG_FREQUENCY)
