"""Deterministic numeric kernels used by all statistical modules.

Linear algebra (QR, normal-equation inverses, PSD Cholesky), seeded
sampling with a platform-independent normal transform, log-space binomial
tail sums, and the tie-grouped cumulative sums that power the
linearithmic indicator-matrix products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .errors import NonFinite, NotPSD, RankDeficient

FloatArray = NDArray[np.float64]
# Dense row-major real matrix; plain 2-D float64 arrays throughout.
DenseMatrix = FloatArray

_LN2 = math.log(2.0)
# Relative tolerance on |R| diagonal ratios below which a design is
# declared collinear.
_RANK_TOL = 1e-10
# Eigenvalues above -_PSD_CLIP * max(eig) are treated as zero.
_PSD_CLIP = 1e-8
# Largest s for which the binomial tail is summed in exact integer
# arithmetic; the direct form stays in float range far beyond this, the
# log-space path exists for the truly large s.
_EXACT_TAIL_MAX_S = 500
# exact big-integer anchor stays under ~1 ms up to here; beyond it the
# single anchor term falls back to gammaln
_LOG_ANCHOR_MAX_S = 1 << 12
_TAIL_CHUNK = 1 << 20


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{what} contains NaN or infinite entries")


@dataclass(frozen=True, eq=False)
class QRFactorization:
    """Thin QR factorization of a full-column-rank matrix Z = QR.

    q has orthonormal columns (n x k), r is upper-triangular (k x k).
    R'R reconstructs Z'Z, i.e. R is a Cholesky factor of the normal
    equations up to row signs.
    """

    q: FloatArray
    r: FloatArray

    @property
    def cols(self) -> int:
        return self.r.shape[1]


def qr_decompose(z: DenseMatrix) -> QRFactorization:
    """Reduced QR of z with a collinearity check.

    Raises RankDeficient when the smallest |R| diagonal entry falls below
    1e-10 times the largest (or when z has more columns than rows).
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("z must be a 2-D matrix")
    _require_finite(z, "design matrix")
    n, k = z.shape
    if k == 0:
        raise ValueError("z must have at least one column")
    if n < k:
        raise RankDeficient(f"design has more columns ({k}) than rows ({n})")
    q, r = np.linalg.qr(z, mode="reduced")
    d = np.abs(np.diag(r))
    if d.min() <= _RANK_TOL * d.max() or d.max() == 0.0:
        raise RankDeficient("design matrix is numerically rank-deficient")
    return QRFactorization(q=q, r=r)


def inverse_from_qr(f: QRFactorization) -> DenseMatrix:
    """(Z'Z)^-1 from the QR factors: R^-1 R^-T, symmetrized."""
    rinv = solve_triangular(f.r, np.eye(f.cols), lower=False)
    out = rinv @ rinv.T
    return (out + out.T) / 2.0


def cholesky_psd(s: DenseMatrix, tol: float = 1e-8) -> DenseMatrix:
    """Lower-triangular L with LL' = s, accepting semidefinite input.

    Strictly positive definite matrices go through the plain Cholesky
    routine. Singular-but-PSD matrices fall back to a symmetric
    eigendecomposition: eigenvalues in [-1e-8 * max_eig, 0) are clipped
    to zero, anything lower raises NotPSD.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("s must be a square matrix")
    _require_finite(s, "matrix")
    scale = max(1.0, float(np.abs(s).max()))
    if float(np.abs(s - s.T).max()) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh((s + s.T) / 2.0)
    w_max = max(float(w.max()), 0.0)
    if float(w.min()) < -_PSD_CLIP * w_max:
        raise NotPSD(
            f"matrix has eigenvalue {w.min():.3e} below the PSD tolerance "
            f"{-_PSD_CLIP * w_max:.3e}"
        )
    a = v * np.sqrt(np.clip(w, 0.0, None))
    # QR of A' turns A A' = S into R'R with L = R' lower-triangular.
    _, r = np.linalg.qr(a.T, mode="reduced")
    sign = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return r.T * sign


# Rational approximation coefficients for the inverse standard normal
# CDF (Acklam), max relative error about 1.2e-9. Pure arithmetic plus
# sqrt/log keeps the transform bit-stable across platforms.
_ND_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ND_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
_ND_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ND_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
_ND_P_LOW = 0.02425


def _tail_quantile(q: FloatArray) -> FloatArray:
    # q = sqrt(-2 log p) for tail probability p.
    c0, c1, c2, c3, c4, c5 = _ND_C
    d0, d1, d2, d3 = _ND_D
    num = ((((c0 * q + c1) * q + c2) * q + c3) * q + c4) * q + c5
    den = (((d0 * q + d1) * q + d2) * q + d3) * q + 1.0
    return num / den


def inverse_normal_cdf(u: FloatArray) -> FloatArray:
    """Standard normal quantile of u in (0, 1), elementwise."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    lo = u < _ND_P_LOW
    hi = u > 1.0 - _ND_P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        q = u[mid] - 0.5
        r = q * q
        a0, a1, a2, a3, a4, a5 = _ND_A
        b0, b1, b2, b3, b4 = _ND_B
        num = ((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5
        den = ((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0
        out[mid] = q * num / den
    if np.any(lo):
        out[lo] = _tail_quantile(np.sqrt(-2.0 * np.log(u[lo])))
    if np.any(hi):
        out[hi] = -_tail_quantile(np.sqrt(-2.0 * np.log(1.0 - u[hi])))
    return out


class SeededRng:
    """Deterministic random stream: same (seed, stream) means bit-exact
    identical draws on every platform.

    Substreams for parallel work are derived by seed-splitting: stream
    index i uses SeedSequence(entropy=seed, spawn_key=(i,)).
    """

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= int(seed) < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if stream < 0:
            raise ValueError("stream index must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "SeededRng":
        return SeededRng(self.seed, stream=index)

    def uniforms(self, n: int) -> FloatArray:
        """n doubles uniform on the open interval (0, 1)."""
        k = self._gen.integers(0, 1 << 53, size=n, dtype=np.uint64)
        return (k.astype(np.float64) + 0.5) * 2.0**-53

    def standard_normals(self, shape: int | tuple[int, ...]) -> FloatArray:
        """Standard normal draws via inversion of the uniform stream."""
        if isinstance(shape, int):
            shape = (shape,)
        count = 1
        for dim in shape:
            count *= int(dim)
        return inverse_normal_cdf(self.uniforms(count)).reshape(shape)


def mvn_sample(l: DenseMatrix, rng: SeededRng, m: int) -> DenseMatrix:
    """m draws from N(0, LL'): each row is L @ xi with xi iid standard
    normal from rng. Returns an m x p matrix."""
    l = np.asarray(l, dtype=np.float64)
    if l.ndim != 2 or l.shape[0] != l.shape[1]:
        raise ValueError("l must be a square matrix")
    if not np.array_equal(l, np.tril(l)):
        raise ValueError("l must be lower-triangular")
    if m <= 0:
        raise ValueError("m must be positive")
    xi = rng.standard_normals((m, l.shape[0]))
    return xi @ l.T


def log_binom_tail(x: int, s: int) -> float:
    """log of 2**-s * sum_{i=x..s} C(s, i).

    Exact integer accumulation for small s. Above that the tail is
    anchored at its largest term and the rest enter through cumulative
    products of the exact term ratios, so the shape of the tail never
    goes through gammaln; only the single anchor log does, and below
    _LOG_ANCHOR_MAX_S not even that. Terms decay monotonically away
    from the anchor, so a carry that underflows to zero ends the scan.
    The result is clamped to <= 0 since it is a log probability.
    """
    x = int(x)
    s = int(s)
    if not 0 <= x <= s:
        raise ValueError("requires 0 <= x <= s")
    if x == 0:
        return 0.0
    if s <= _EXACT_TAIL_MAX_S:
        tail = sum(math.comb(s, i) for i in range(x, s + 1))
        return min(0.0, math.log(tail) - s * _LN2)
    peak = max(x, s // 2)
    rel = 1.0
    carry = 1.0
    k = peak + 1
    while k <= s and carry > 0.0:
        hi = min(s, k + _TAIL_CHUNK - 1)
        j = np.arange(k, hi + 1, dtype=np.float64)
        ratios = (s + 1.0 - j) / j
        np.cumprod(ratios, out=ratios)
        if carry != 1.0:
            ratios *= carry
        rel += float(ratios.sum())
        carry = float(ratios[-1])
        k = hi + 1
    carry = 1.0
    k = peak - 1
    while k >= x and carry > 0.0:
        lo = max(x, k - _TAIL_CHUNK + 1)
        j = np.arange(k, lo - 1, -1, dtype=np.float64)
        ratios = (j + 1.0) / (s - j)
        np.cumprod(ratios, out=ratios)
        if carry != 1.0:
            ratios *= carry
        rel += float(ratios.sum())
        carry = float(ratios[-1])
        k = lo - 1
    if s <= _LOG_ANCHOR_MAX_S:
        anchor = (math.log2(math.comb(s, peak)) - s) * _LN2
    else:
        anchor = float(
            gammaln(s + 1.0) - gammaln(peak + 1.0) - gammaln(s - peak + 1.0)
        ) - s * _LN2
    return min(0.0, anchor + math.log(rel))


def grouped_cumsum(v: FloatArray, group_ids: np.ndarray, placement: str) -> FloatArray:
    """Cumulative sum after collapsing each contiguous run of equal
    group_ids onto its first or last position.

    Within each run the run-sum is placed at the chosen end (zeros
    elsewhere) and a global cumulative sum of the result is returned.
    group_ids must be constant on contiguous runs.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    g = np.asarray(group_ids)
    if v.ndim != 1 or g.shape != v.shape:
        raise ValueError("v and group_ids must be 1-D of equal length")
    if placement not in ("first", "last"):
        raise ValueError("placement must be 'first' or 'last'")
    if v.size == 0:
        return v.copy()
    is_start = np.empty(v.size, dtype=bool)
    is_start[0] = True
    is_start[1:] = g[1:] != g[:-1]
    starts = np.flatnonzero(is_start)
    sums = np.add.reduceat(v, starts)
    out = np.zeros_like(v)
    if placement == "first":
        out[starts] = sums
    else:
        ends = np.append(starts[1:] - 1, v.size - 1)
        out[ends] = sums
    return np.cumsum(out)
