"""Parallelepipeds, pivoted orthogonalization, and bounding boxes.

A parallelepiped is origin + {sum_i t_i alpha_i : t in [0,1]^d} with the
alpha_i stored as matrix columns.  The pivoted Gram-Schmidt here picks, at
every step, the remaining column with the largest residual against the
span already built.  That ordering is what makes the resulting orthogonal
frame useful: the norms come out non-increasing, the change-of-basis
matrix U (columns-after-permutation = gammas @ U) stays unit upper
triangular with controlled entries, and the hyperrectangle spanned by
2^d * |gamma_i| along each frame axis is guaranteed to contain the
parallelepiped.

Two routes are provided.  `pivoted_orthogonalize` works on plain float
columns and recomputes residuals from the original columns at each pivot
scan (classical, not modified, Gram-Schmidt).  `pivoted_orthogonalize_scaled`
represents every column as a unit direction plus a log2 scale, so columns
whose magnitudes differ by hundreds of binary orders (images under n-fold
contraction) never underflow.  The scaled route replaces the last residual
norm by a determinant identity whenever cancellation would poison it:
prod_k |gamma_k| equals |det| of the column matrix, so

    log2|gamma_d| = sum_j L_j + log2|det(units)| - sum_{k<d} log2|gamma_k|

with L_j the column log2 norms.  For d = 2 the rescue is always applied;
the two routes are asserted to agree whenever the residual is healthy.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConsistencyError,
    DegenerateInputError,
    DomainError,
    ScaleRangeError,
)

__all__ = [
    "DEGENERACY_RTOL",
    "BetaSystem",
    "Parallelepiped",
    "OrthoFrame",
    "ScaledOrthoFrame",
    "Hyperrectangle",
    "rotation_matrix",
    "pivoted_orthogonalize",
    "pivoted_orthogonalize_scaled",
    "bounding_hyperrectangle",
    "volume",
    "scale_by_f",
    "rotate2d",
]

# residual below this times the pivot column norm means dependent columns
DEGENERACY_RTOL = 1e-12

# trig values this close to zero are snapped exactly (cos(pi/2) ~ 6.1e-17)
_TRIG_SNAP = 1e-15

# |w| thresholds for the scaled route's determinant rescue of the last norm
_RESCUE_BELOW = 1e-8
_AGREE_ABOVE = 1e-6

# pivot keys within this relative band count as ties (smaller index wins);
# absorbs normalization fuzz so both routes break exact ties the same way
_PIVOT_TIE_TOL = 1e-12

# log2 scale magnitude beyond which float64 work is refused
_MAX_LOG2_SCALE = 900.0

_MODULE = "parallelepiped_geometry"


def _as_matrix(columns) -> np.ndarray:
    m = np.asarray(columns, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square column matrix, got shape {m.shape}",
                          module=_MODULE)
    if m.shape[0] < 1:
        raise DomainError("need at least one column", module=_MODULE)
    if not np.all(np.isfinite(m)):
        raise DomainError("columns must be finite", module=_MODULE)
    return m


@dataclasses.dataclass(frozen=True)
class BetaSystem:
    """Tuple of bases (beta_1, ..., beta_d), each > 1."""

    betas: Tuple[float, ...]

    def __init__(self, betas: Sequence[float]):
        bs = tuple(float(b) for b in betas)
        if len(bs) < 1:
            raise DomainError("need at least one base", module=_MODULE)
        for b in bs:
            if not math.isfinite(b) or b <= 1.0:
                raise DomainError(f"every base must exceed 1, got {b}",
                                  module=_MODULE)
        object.__setattr__(self, "betas", bs)

    @property
    def dimension(self) -> int:
        return len(self.betas)

    @property
    def log2_betas(self) -> Tuple[float, ...]:
        return tuple(math.log2(b) for b in self.betas)


@dataclasses.dataclass(frozen=True)
class Parallelepiped:
    """origin + {columns @ t : t in [0,1]^d}, columns as an (d, d) matrix."""

    origin: np.ndarray
    columns: np.ndarray

    def __init__(self, origin, columns):
        cols = _as_matrix(columns)
        d = cols.shape[0]
        org = np.asarray(origin, dtype=float)
        if org.shape != (d,):
            raise DomainError(
                f"origin shape {org.shape} does not match dimension {d}",
                module=_MODULE)
        if not np.all(np.isfinite(org)):
            raise DomainError("origin must be finite", module=_MODULE)
        norms = np.linalg.norm(cols, axis=0)
        if np.any(norms == 0.0):
            raise DegenerateInputError("zero column", module=_MODULE)
        det = np.linalg.det(cols)
        if abs(det) < DEGENERACY_RTOL * float(np.prod(norms)):
            raise DegenerateInputError(
                f"columns nearly dependent: |det|={abs(det):.3e} against "
                f"norm product {float(np.prod(norms)):.3e}", module=_MODULE)
        org.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "origin", org)
        object.__setattr__(self, "columns", cols)

    @property
    def dimension(self) -> int:
        return self.columns.shape[0]

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.columns, axis=0)

    def vertices(self) -> np.ndarray:
        """All 2^d corner points, origin first, as a (2^d, d) array."""
        d = self.dimension
        if d > 20:
            raise DomainError("vertex enumeration capped at dimension 20",
                              module=_MODULE)
        eps = ((np.arange(2 ** d)[:, None] >> np.arange(d)[None, :]) & 1)
        return self.origin[None, :] + eps.astype(float) @ self.columns.T

    def translate(self, offset) -> "Parallelepiped":
        off = np.asarray(offset, dtype=float)
        return Parallelepiped(self.origin + off, self.columns)


@dataclasses.dataclass(frozen=True)
class OrthoFrame:
    """Result of pivoted orthogonalization on plain float columns.

    permutation is 1-based: permutation[k] is the original index of the
    column whose residual became gammas[:, k].  U is unit upper triangular
    and satisfies columns[:, permutation-1] == gammas @ U up to rounding.
    """

    permutation: Tuple[int, ...]
    gammas: np.ndarray
    U: np.ndarray

    @property
    def dimension(self) -> int:
        return self.gammas.shape[0]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.gammas, axis=0)


@dataclasses.dataclass(frozen=True)
class ScaledOrthoFrame:
    """Scaled-route frame: unit directions plus log2 norms.

    units[:, k] * 2**log2_norms[k] reconstructs gamma_k; the product may
    under- or overflow float64, which is exactly why the parts are kept
    separate.
    """

    permutation: Tuple[int, ...]
    log2_norms: np.ndarray
    units: np.ndarray
    U: np.ndarray

    @property
    def dimension(self) -> int:
        return self.units.shape[0]

    def gammas(self) -> np.ndarray:
        """Materialized gamma columns; may flush to 0/inf out of range."""
        return self.units * np.exp2(self.log2_norms)[None, :]


@dataclasses.dataclass(frozen=True)
class Hyperrectangle:
    """center + {axes @ x : |x_i| <= half_extents_i}, axes orthonormal."""

    center: np.ndarray
    axes: np.ndarray
    half_extents: np.ndarray

    def __init__(self, center, axes, half_extents):
        ax = _as_matrix(axes)
        d = ax.shape[0]
        ctr = np.asarray(center, dtype=float)
        he = np.asarray(half_extents, dtype=float)
        if ctr.shape != (d,) or he.shape != (d,):
            raise DomainError("center/half_extents shape mismatch",
                              module=_MODULE)
        if np.any(he <= 0.0) or not np.all(np.isfinite(he)):
            raise DomainError("half extents must be positive and finite",
                              module=_MODULE)
        gram = ax.T @ ax
        if not np.allclose(gram, np.eye(d), atol=1e-9):
            raise DomainError("axes must be orthonormal", module=_MODULE)
        for a in (ctr, ax, he):
            a.setflags(write=False)
        object.__setattr__(self, "center", ctr)
        object.__setattr__(self, "axes", ax)
        object.__setattr__(self, "half_extents", he)

    @property
    def dimension(self) -> int:
        return self.axes.shape[0]

    @property
    def side_lengths(self) -> np.ndarray:
        return 2.0 * self.half_extents

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    def contains_point(self, point, rtol: float = 1e-9) -> bool:
        x = np.asarray(point, dtype=float)
        coords = self.axes.T @ (x - self.center)
        return bool(np.all(np.abs(coords) <= self.half_extents * (1.0 + rtol)))


def rotation_matrix(theta: float) -> np.ndarray:
    """2-D rotation by theta, with near-zero trig snapped exactly to 0."""
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < _TRIG_SNAP:
        c = 0.0
    if abs(s) < _TRIG_SNAP:
        s = 0.0
    return np.array([[c, -s], [s, c]])


def _residual(col: np.ndarray, basis: list) -> np.ndarray:
    w = col.copy()
    for q in basis:
        w -= (col @ q) * q
    return w


def pivoted_orthogonalize(columns) -> OrthoFrame:
    """Pivoted classical Gram-Schmidt on float columns.

    At step k the remaining column with the largest residual norm against
    span(gamma_1..gamma_{k-1}) is chosen (ties break to the smallest
    original index); its residual becomes gamma_k.  Residuals are always
    recomputed from the original columns.  For d > 4 a second projection
    sweep is applied to the winning residual, folding the correction back
    into U.  A residual below DEGENERACY_RTOL times its column's norm
    raises DegenerateInputError.
    """
    if isinstance(columns, Parallelepiped):
        cols = columns.columns
    else:
        cols = _as_matrix(columns)
    d = cols.shape[0]
    remaining = list(range(d))
    basis: list = []  # orthonormal directions q_1..q_k
    gammas = np.zeros((d, d))
    U = np.eye(d)
    perm = []
    norms = []
    for k in range(d):
        best_l, best_norm = remaining[0], float(
            np.linalg.norm(_residual(cols[:, remaining[0]], basis)))
        for l in remaining[1:]:
            nl = float(np.linalg.norm(_residual(cols[:, l], basis)))
            if nl > best_norm * (1.0 + _PIVOT_TIE_TOL):
                best_l, best_norm = l, nl
        i_k = best_l
        remaining.remove(i_k)
        perm.append(i_k)
        a = cols[:, i_k]
        coeffs = np.array([a @ q for q in basis])
        w = a - sum(c * q for c, q in zip(coeffs, basis)) if basis else a.copy()
        if d > 4 and basis:
            extra = np.array([w @ q for q in basis])
            w = w - sum(c * q for c, q in zip(extra, basis))
            coeffs = coeffs + extra
        nw = float(np.linalg.norm(w))
        if nw < DEGENERACY_RTOL * float(np.linalg.norm(a)):
            raise DegenerateInputError(
                f"residual collapsed at step {k + 1}: column {i_k + 1} lies "
                "in the span of the pivots before it", module=_MODULE)
        gammas[:, k] = w
        for j in range(k):
            U[j, k] = coeffs[j] / norms[j]
        basis.append(w / nw)
        norms.append(nw)
    return OrthoFrame(tuple(i + 1 for i in perm), gammas, U)


def _scaled_column_form(signs: np.ndarray, log2_magnitudes: np.ndarray):
    """Per-column log2 norm L_j and unit direction via shifted exponents."""
    d = signs.shape[0]
    L = np.empty(d)
    units = np.zeros((d, d))
    for j in range(d):
        lm = log2_magnitudes[:, j]
        m = float(np.max(lm))
        if m == -np.inf:
            raise DegenerateInputError(f"column {j + 1} is zero",
                                       module=_MODULE)
        r = np.exp2(2.0 * (lm - m))  # exp2(-inf) -> 0
        L[j] = m + 0.5 * math.log2(float(np.sum(r)))
        units[:, j] = signs[:, j] * np.exp2(lm - L[j])
    return L, units


def pivoted_orthogonalize_scaled(signs, log2_magnitudes) -> ScaledOrthoFrame:
    """Pivoted Gram-Schmidt on columns given as signs and log2 magnitudes.

    Entry (i, j) of the implied matrix is signs[i, j] * 2**log2_magnitudes[i, j]
    (use sign 0 with magnitude -inf for exact zeros).  Pivoting compares
    log2 of the actual residual norms, L_l + log2|w_l| with w_l the residual
    of the unit direction, so scale differences of hundreds of binary orders
    are handled exactly.  The last norm is replaced by the determinant
    identity when the residual is lost to cancellation (always for d = 2);
    when the residual is healthy the two values are asserted to agree.
    """
    sg = np.asarray(signs, dtype=float)
    lm = np.asarray(log2_magnitudes, dtype=float)
    if sg.shape != lm.shape or sg.ndim != 2 or sg.shape[0] != sg.shape[1]:
        raise DomainError("signs and log2_magnitudes must be equal square "
                          "matrices", module=_MODULE)
    if np.any(np.isnan(lm)) or np.any(lm == np.inf):
        raise DomainError("log2 magnitudes must be < inf and not NaN",
                          module=_MODULE)
    d = sg.shape[0]
    L, units = _scaled_column_form(sg, lm)

    sign_det, logabs = np.linalg.slogdet(units)
    if sign_det == 0.0:
        raise DegenerateInputError("unit directions are linearly dependent",
                                   module=_MODULE)
    log2_det_units = float(logabs) / math.log(2.0)

    remaining = list(range(d))
    basis: list = []
    qmat = np.zeros((d, d))
    G = np.empty(d)
    U = np.eye(d)
    perm = []
    for k in range(d):
        def pivot_key(l):
            nl = float(np.linalg.norm(_residual(units[:, l], basis)))
            return L[l] + (math.log2(nl) if nl > 0.0 else -np.inf)

        best_l = remaining[0]
        best_key = pivot_key(best_l)
        for l in remaining[1:]:
            key = pivot_key(l)
            if best_key == -np.inf:
                better = key > best_key
            else:
                better = key > best_key + _PIVOT_TIE_TOL * max(
                    1.0, abs(best_key))
            if better:
                best_l, best_key = l, key
        i_k = best_l
        remaining.remove(i_k)
        perm.append(i_k)
        u = units[:, i_k]
        coeffs = np.array([u @ q for q in basis])
        w = u - sum(c * q for c, q in zip(coeffs, basis)) if basis else u.copy()
        if d > 4 and basis:
            extra = np.array([w @ q for q in basis])
            w = w - sum(c * q for c, q in zip(extra, basis))
            coeffs = coeffs + extra
        nw = float(np.linalg.norm(w))
        last = (k == d - 1)
        if not last:
            if nw < DEGENERACY_RTOL:
                raise DegenerateInputError(
                    f"residual collapsed at step {k + 1}", module=_MODULE)
            G[k] = L[i_k] + math.log2(nw)
            q = w / nw
        else:
            g_det = float(np.sum(L)) + log2_det_units - float(np.sum(G[:k]))
            if d == 2 or nw < _RESCUE_BELOW:
                G[k] = g_det
            else:
                G[k] = L[i_k] + math.log2(nw)
            if nw > _AGREE_ABOVE:
                g_gs = L[i_k] + math.log2(nw)
                if abs(g_gs - g_det) > 1e-6:
                    raise ConsistencyError(
                        "Gram-Schmidt and determinant routes disagree on the "
                        f"last norm: {g_gs} vs {g_det} (log2)", module=_MODULE)
            q = _orthonormal_complement(qmat[:, :k], w, nw)
        for j in range(k):
            dotv = float(coeffs[j])
            if dotv == 0.0:
                U[j, k] = 0.0
            else:
                le = (L[i_k] - G[j]) + math.log2(abs(dotv))
                if le > 512.0:
                    raise ConsistencyError(
                        "change-of-basis entry out of range; pivoting should "
                        "keep U bounded", module=_MODULE)
                U[j, k] = math.copysign(2.0 ** le, dotv)
        qmat[:, k] = q
        basis.append(q)
    return ScaledOrthoFrame(tuple(i + 1 for i in perm), G, qmat, U)


def _orthonormal_complement(prev: np.ndarray, w: np.ndarray,
                            nw: float) -> np.ndarray:
    """Unit vector orthogonal to the columns of prev, aligned with w."""
    d = w.shape[0]
    if prev.shape[1] == 0:
        return w / nw if nw > 0.0 else np.eye(d)[:, 0]
    if nw >= _RESCUE_BELOW:
        return w / nw
    # residual direction is unreliable: take the QR completion instead
    q_full, _ = np.linalg.qr(prev, mode="complete")
    cand = q_full[:, prev.shape[1]]
    if nw > 0.0 and (w @ cand) < 0.0:
        cand = -cand
    return cand


def bounding_hyperrectangle(p: Parallelepiped,
                            frame: Optional[OrthoFrame] = None
                            ) -> Hyperrectangle:
    """Hyperrectangle centered at the origin vertex with half extents
    2^d * |gamma_i| along the orthogonal frame axes.

    Containment of the parallelepiped is verified directly: along each
    frame axis the extreme vertex coordinate (max of the positive and
    negative parts of the column projections) must stay within the half
    extent.  Violation raises ConsistencyError.
    """
    if frame is None:
        frame = pivoted_orthogonalize(p.columns)
    d = p.dimension
    norms = frame.norms
    axes = frame.gammas / norms[None, :]
    half = (2.0 ** d) * norms
    proj = axes.T @ p.columns  # proj[j, i] = axis_j . alpha_i
    pos = np.sum(np.clip(proj, 0.0, None), axis=1)
    neg = np.sum(np.clip(-proj, 0.0, None), axis=1)
    reach = np.maximum(pos, neg)
    if np.any(reach > half * (1.0 + 1e-9)):
        j = int(np.argmax(reach / half))
        raise ConsistencyError(
            f"parallelepiped escapes its bounding box along axis {j + 1}: "
            f"reach {reach[j]:.6e} vs half extent {half[j]:.6e}",
            module=_MODULE)
    return Hyperrectangle(p.origin, axes, half)


def volume(p: Parallelepiped) -> float:
    """|det| of the columns, cross-checked against the orthogonal frame.

    Asserts the two identities vol(P) = prod |gamma_i| and
    vol(P) = 2^(-d(d+1)) vol(R) for the bounding hyperrectangle R, both to
    relative 1e-9; disagreement raises ConsistencyError.
    """
    v = float(abs(np.linalg.det(p.columns)))
    frame = pivoted_orthogonalize(p.columns)
    v_frame = float(np.prod(frame.norms))
    d = p.dimension
    box = bounding_hyperrectangle(p, frame)
    v_box = (2.0 ** (-d * (d + 1))) * box.volume
    for label, other in (("frame product", v_frame), ("box scaling", v_box)):
        if abs(other - v) > 1e-9 * max(v, other):
            raise ConsistencyError(
                f"volume via determinant ({v!r}) disagrees with {label} "
                f"({other!r})", module=_MODULE)
    return v


def scale_by_f(p: Parallelepiped, system: BetaSystem, n: int) -> Parallelepiped:
    """Image of the parallelepiped under n applications of
    x |-> (beta_1^-1 x_1, ..., beta_d^-1 x_d)."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise DomainError(f"n must be a non-negative integer, got {n!r}",
                          module=_MODULE)
    if system.dimension != p.dimension:
        raise DomainError("system dimension does not match parallelepiped",
                          module=_MODULE)
    lg = np.array(system.log2_betas)
    if float(np.max(n * lg)) > _MAX_LOG2_SCALE:
        raise ScaleRangeError(
            f"contraction by 2^{float(np.max(n * lg)):.1f} leaves float64 "
            "range; use the scaled orthogonalization route instead",
            module=_MODULE)
    scales = np.exp2(-float(n) * lg)
    return Parallelepiped(scales * p.origin, scales[:, None] * p.columns)


def rotate2d(p: Parallelepiped, theta: float) -> Parallelepiped:
    """Rotate the shape about its origin vertex (2-D only)."""
    if p.dimension != 2:
        raise DomainError("rotate2d needs a 2-D parallelepiped",
                          module=_MODULE)
    return Parallelepiped(p.origin, rotation_matrix(theta) @ p.columns)
