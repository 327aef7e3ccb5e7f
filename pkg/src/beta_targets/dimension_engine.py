"""Dimension formula for shrinking parallelepiped targets.

For a sequence of targets P_n and the product map contracting coordinate
i by beta_i per step, the candidate set at level n is

    A_n = {beta_1^-n, ..., beta_d^-n} u {|gamma_1|, ..., |gamma_d|}

with gamma_i the pivoted-orthogonalization norms of the contracted target
f^n P_n, and

    s_n = min over tau in A_n of
          #{i : beta_i^-n <= tau}
          + sum over the rest of n log beta_i / (-log tau)
          + sum over {i : |gamma_i| >= tau} of (1 - log|gamma_i|/log tau).

The dimension of the limsup set is the limsup of s_n; this module reports
a windowed max with an explicit convergence flag, never an extrapolation.

Everything runs in the log domain: the objective consumes only logarithms
and the gamma norms come from the scaled orthogonalization route, so
levels far beyond float range (beta_i^-n underflowing) cost nothing.

Two evaluation modes.  "exact" uses the finite-n magnitudes as defined
above.  "limit" replaces each log magnitude by its leading growth rate
per level (so constants like log cos(theta) drop out); for families whose
shape is constant in n this reproduces the limiting closed forms at
every n, where the exact finite-n value only approaches them as n grows.
Rate extraction needs an analytic family (axis or rotated-2D); explicit
target lists have no asymptotic rates and raise a domain error.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConsistencyError, DomainError
from .parallelepiped_geometry import (
    BetaSystem,
    Parallelepiped,
    pivoted_orthogonalize_scaled,
    rotation_matrix,
)

__all__ = [
    "AxisFamily",
    "Rotated2DFamily",
    "ExplicitTargets",
    "TargetSpec",
    "LevelData",
    "DimensionReport",
    "generate_target",
    "log_columns",
    "gamma_magnitudes",
    "s_n",
    "s_star",
    "closed_form_example",
]

_MODULE = "dimension_engine"

# relative dedup tolerance for the candidate set
_DEDUP_RTOL = 1e-12

# trig factors below this are treated as exact zeros (cos(pi/2) fuzz)
_TRIG_SNAP = 1e-15


@dataclasses.dataclass(frozen=True)
class AxisFamily:
    """P_n = origin + prod_i [0, beta_i^(-n t_i)] (no rotation)."""

    exponents: Tuple[float, ...]
    origin: Tuple[float, ...] = ()

    def __init__(self, exponents: Sequence[float],
                 origin: Optional[Sequence[float]] = None):
        ex = tuple(float(t) for t in exponents)
        if not ex or any(not math.isfinite(t) or t <= 0.0 for t in ex):
            raise DomainError("axis exponents must be positive and finite",
                              module=_MODULE)
        org = tuple(float(x) for x in origin) if origin is not None \
            else (0.0,) * len(ex)
        if len(org) != len(ex):
            raise DomainError("origin length must match exponents",
                              module=_MODULE)
        object.__setattr__(self, "exponents", ex)
        object.__setattr__(self, "origin", org)


@dataclasses.dataclass(frozen=True)
class Rotated2DFamily:
    """P_n = R(theta_n) (prod_i [0, beta_i^(-n t_i)]) + (1/2, 1/2).

    theta rule is either "const" (theta_value radians) or "arccos_pow2"
    (cos theta_n = 2^(-a n), so the rotation straightens as n grows when
    a > 0; a = 0 degenerates to no rotation).
    """

    theta: str
    theta_value: float = 0.0
    a: float = 0.0
    exponents: Tuple[float, float] = (1.0, 1.0)

    def __init__(self, theta: str, theta_value: float = 0.0, a: float = 0.0,
                 exponents: Sequence[float] = (1.0, 1.0)):
        if theta not in ("const", "arccos_pow2"):
            raise DomainError(
                f"theta rule must be 'const' or 'arccos_pow2', got {theta!r}",
                module=_MODULE)
        ex = tuple(float(t) for t in exponents)
        if len(ex) != 2 or any(t <= 0.0 or not math.isfinite(t) for t in ex):
            raise DomainError("need two positive exponents", module=_MODULE)
        if theta == "arccos_pow2" and (not math.isfinite(a) or a < 0.0):
            raise DomainError(f"decay parameter must be >= 0, got {a}",
                              module=_MODULE)
        if theta == "const" and not math.isfinite(theta_value):
            raise DomainError("theta_value must be finite", module=_MODULE)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta_value", float(theta_value))
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "exponents", ex)


@dataclasses.dataclass(frozen=True)
class ExplicitTargets:
    """P_n given outright; shapes[n-1] is the level-n target."""

    shapes: Tuple[Parallelepiped, ...]

    def __init__(self, shapes: Sequence[Parallelepiped]):
        sh = tuple(shapes)
        if not sh:
            raise DomainError("need at least one target", module=_MODULE)
        d = sh[0].dimension
        for p in sh:
            if not isinstance(p, Parallelepiped):
                raise DomainError("explicit targets must be parallelepipeds",
                                  module=_MODULE)
            if p.dimension != d:
                raise DomainError("all targets must share one dimension",
                                  module=_MODULE)
        object.__setattr__(self, "shapes", sh)


Family = Union[AxisFamily, Rotated2DFamily, ExplicitTargets]


@dataclasses.dataclass(frozen=True)
class TargetSpec:
    system: BetaSystem
    family: Family

    def __post_init__(self):
        d = self.system.dimension
        fam = self.family
        if isinstance(fam, AxisFamily) and len(fam.exponents) != d:
            raise DomainError("axis family dimension mismatch",
                              module=_MODULE)
        if isinstance(fam, Rotated2DFamily) and d != 2:
            raise DomainError("rotated family needs a 2-D system",
                              module=_MODULE)
        if isinstance(fam, ExplicitTargets) and \
                fam.shapes[0].dimension != d:
            raise DomainError("explicit targets dimension mismatch",
                              module=_MODULE)

    @property
    def dimension(self) -> int:
        return self.system.dimension


@dataclasses.dataclass(frozen=True)
class LevelData:
    """One level of the dimension computation, all magnitudes as log2.

    gamma_log2 is sorted non-increasing; candidates_log2_tau is the
    deduplicated A_n, ascending; argmin_tau_log2 is the minimizer.
    Positivity and ordering of the gamma norms are enforced on the log
    values, which stay finite long after the raw magnitudes underflow.
    """

    n: int
    gamma_log2: Tuple[float, ...]
    candidates_log2_tau: Tuple[float, ...]
    s_n: float
    argmin_tau_log2: float
    mode: str

    def __post_init__(self):
        d = len(self.gamma_log2)
        if any(not math.isfinite(g) for g in self.gamma_log2):
            raise ConsistencyError("gamma norms must be positive and finite",
                                   module=_MODULE)
        if any(self.gamma_log2[i] < self.gamma_log2[i + 1]
               for i in range(d - 1)):
            raise ConsistencyError("gamma norms must be sorted",
                                   module=_MODULE)
        if not (0.0 < self.s_n <= d + 1e-12):
            raise ConsistencyError(f"s_n out of range: {self.s_n}",
                                   module=_MODULE)

    @property
    def gamma_norms(self) -> Tuple[float, ...]:
        return tuple(float(np.exp2(g)) for g in self.gamma_log2)

    @property
    def candidates(self) -> Tuple[float, ...]:
        return tuple(float(np.exp2(c)) for c in self.candidates_log2_tau)

    @property
    def argmin_tau(self) -> float:
        return float(np.exp2(self.argmin_tau_log2))


@dataclasses.dataclass(frozen=True)
class DimensionReport:
    levels: Tuple[LevelData, ...]
    s_star: float
    converged: bool
    window: int
    tail_min: float
    tail_max: float
    tolerance: float
    # Reported, not computed: the limsup set lies in Falconer's large
    # intersection class G^s of the unit cube with s = s_star, so
    # countable bi-Lipschitz intersections keep dimension.
    large_intersection_class: str = ""

    def __post_init__(self):
        if self.large_intersection_class == "":
            object.__setattr__(
                self, "large_intersection_class",
                f"G^{{{self.s_star:.6g}}}([0,1]^d)")


def _theta_parts(fam: Rotated2DFamily, n: int):
    """(sign, log2 magnitude) for cos and sin of theta_n, exact zeros
    snapped."""
    if fam.theta == "const":
        c = math.cos(fam.theta_value)
        s = math.sin(fam.theta_value)
        if abs(c) < _TRIG_SNAP:
            c = 0.0
        if abs(s) < _TRIG_SNAP:
            s = 0.0
        lc = math.log2(abs(c)) if c != 0.0 else -math.inf
        ls = math.log2(abs(s)) if s != 0.0 else -math.inf
        return (math.copysign(1.0, c) if c else 0.0, lc), \
            (math.copysign(1.0, s) if s else 0.0, ls)
    # cos theta_n = 2^(-a n): exact in log2; sin from log1p for accuracy
    a = fam.a
    if a == 0.0:
        return (1.0, 0.0), (0.0, -math.inf)
    lc = -a * n
    # sin^2 = 1 - 2^(-2an)
    x = 2.0 ** (-2.0 * a * n) if 2.0 * a * n < 1074 else 0.0
    ls = 0.5 * math.log1p(-x) / math.log(2.0) if x < 1.0 else -math.inf
    return (1.0, lc), (1.0, ls)


def log_columns(spec: TargetSpec, n: int):
    """Columns of f^n P_n as (signs, log2 magnitudes), computed without
    ever materializing the underflowing values."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"level must be a positive integer, got {n!r}",
                          module=_MODULE)
    d = spec.dimension
    lg = np.array(spec.system.log2_betas)
    fam = spec.family
    signs = np.zeros((d, d))
    mags = np.full((d, d), -np.inf)
    if isinstance(fam, AxisFamily):
        for i, t in enumerate(fam.exponents):
            signs[i, i] = 1.0
            mags[i, i] = -n * (1.0 + t) * lg[i]
        return signs, mags
    if isinstance(fam, Rotated2DFamily):
        (sc, lc), (ss, ls) = _theta_parts(fam, n)
        t1, t2 = fam.exponents
        # column j = f^n R(theta) e_j * beta_j^(-n t_j)
        signs[0, 0], mags[0, 0] = sc, lc - n * (1.0 + t1) * lg[0]
        signs[1, 0], mags[1, 0] = ss, ls - n * (t1 * lg[0] + lg[1])
        signs[0, 1], mags[0, 1] = -ss, ls - n * (t2 * lg[1] + lg[0])
        signs[1, 1], mags[1, 1] = sc, lc - n * (1.0 + t2) * lg[1]
        return signs, mags
    shapes = fam.shapes
    if n > len(shapes):
        raise DomainError(
            f"explicit target list has {len(shapes)} levels, asked for {n}",
            module=_MODULE)
    cols = shapes[n - 1].columns
    with np.errstate(divide="ignore"):
        base = np.log2(np.abs(cols))
    return np.sign(cols), base - n * lg[:, None]


def generate_target(spec: TargetSpec, n: int) -> Parallelepiped:
    """Materialize P_n itself (not its contraction) in plain floats.

    Warns when the target pokes outside [0,1)^d; degenerate targets fail
    in the Parallelepiped constructor.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"level must be a positive integer, got {n!r}",
                          module=_MODULE)
    fam = spec.family
    if isinstance(fam, AxisFamily):
        sides = [b ** (-n * t) for b, t in
                 zip(spec.system.betas, fam.exponents)]
        p = Parallelepiped(fam.origin, np.diag(sides))
    elif isinstance(fam, Rotated2DFamily):
        if fam.theta == "const":
            rot = rotation_matrix(fam.theta_value)
        else:
            c = 2.0 ** (-fam.a * n)
            rot = np.array([[c, -math.sqrt(1.0 - c * c)],
                            [math.sqrt(1.0 - c * c), c]])
        b1, b2 = spec.system.betas
        t1, t2 = fam.exponents
        cols = rot @ np.diag([b1 ** (-n * t1), b2 ** (-n * t2)])
        p = Parallelepiped((0.5, 0.5), cols)
    else:
        if n > len(fam.shapes):
            raise DomainError(
                f"explicit target list has {len(fam.shapes)} levels, "
                f"asked for {n}", module=_MODULE)
        p = fam.shapes[n - 1]
    v = p.vertices()
    if np.any(v < 0.0) or np.any(v >= 1.0):
        warnings.warn(f"target P_{n} is not contained in [0,1)^d",
                      RuntimeWarning, stacklevel=2)
    return p


def _rates(spec: TargetSpec) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Leading decay rates per level, log2 units: (w_rates, g_rates) with
    w_i the contraction rate and g_i the gamma-norm decay rate."""
    lg = spec.system.log2_betas
    fam = spec.family
    if isinstance(fam, AxisFamily):
        g = sorted((1.0 + t) * l for t, l in zip(fam.exponents, lg))
        return tuple(lg), tuple(g)
    if isinstance(fam, Rotated2DFamily):
        t1, t2 = fam.exponents
        if fam.theta == "const":
            c = math.cos(fam.theta_value)
            s = math.sin(fam.theta_value)
            cos_rate = 0.0 if abs(c) >= _TRIG_SNAP else None
            sin_rate = 0.0 if abs(s) >= _TRIG_SNAP else None
        elif fam.a == 0.0:
            cos_rate, sin_rate = 0.0, None
        else:
            cos_rate, sin_rate = fam.a, 0.0
        col1 = []
        col2 = []
        if cos_rate is not None:
            col1.append((1.0 + t1) * lg[0] + cos_rate)
            col2.append((1.0 + t2) * lg[1] + cos_rate)
        if sin_rate is not None:
            col1.append(t1 * lg[0] + lg[1] + sin_rate)
            col2.append(t2 * lg[1] + lg[0] + sin_rate)
        vol_rate = (1.0 + t1) * lg[0] + (1.0 + t2) * lg[1]
        g1 = min(min(col1), min(col2))
        return tuple(lg), (g1, vol_rate - g1)
    raise DomainError(
        "explicit target lists have no asymptotic rates; use exact mode",
        module=_MODULE)


def _minimize_objective(w: Sequence[float], g: Sequence[float]):
    """Discrete minimization of the s_n objective over A_n.

    Arguments are -log2 of the contraction scales and gamma norms (any
    consistent positive unit).  As a function of 1/Lambda the objective
    is piecewise affine with breakpoints exactly at the candidates, so
    the minimum over candidates is the true minimum over (0, 1).  Ties
    resolve to the largest Lambda, i.e. the smallest tau.
    """
    cands: List[float] = []
    for v in list(w) + list(g):
        if not (v > 0.0) or not math.isfinite(v):
            raise DomainError(
                "every candidate scale must be strictly below 1; "
                "the target or a gamma norm is too large", module=_MODULE)
        if not any(abs(v - c) <= _DEDUP_RTOL * max(abs(v), abs(c))
                   for c in cands):
            cands.append(v)
    cands.sort()
    best_val, best_lam = math.inf, cands[0]
    for lam in cands:
        val = 0.0
        for wi in w:
            val += 1.0 if wi >= lam else wi / lam
        for gi in g:
            if gi <= lam:
                val += 1.0 - gi / lam
        if val <= best_val + 1e-15:
            best_val, best_lam = min(val, best_val), lam
    return best_val, best_lam, cands


def gamma_magnitudes(spec: TargetSpec, n: int,
                     as_log2: bool = False) -> Tuple[float, ...]:
    """Sorted norms of the orthogonal frame of f^n P_n.

    Always computed through the scaled orthogonalization, so the result
    is exact in the log domain at any level; as_log2 returns the log2
    values directly (the raw magnitudes flush to zero once they leave
    float range).
    """
    frame = pivoted_orthogonalize_scaled(*log_columns(spec, n))
    logs = tuple(float(x) for x in frame.log2_norms)
    _check_volume_identity(spec, n, logs)
    if as_log2:
        return logs
    return tuple(float(np.exp2(x)) for x in logs)


def _check_volume_identity(spec: TargetSpec, n: int,
                           gamma_log2: Sequence[float]) -> None:
    """prod |gamma_i| must equal vol(f^n P_n), checked in log2."""
    lg = spec.system.log2_betas
    fam = spec.family
    if isinstance(fam, AxisFamily):
        vol = -n * sum((1.0 + t) * l for t, l in zip(fam.exponents, lg))
    elif isinstance(fam, Rotated2DFamily):
        t1, t2 = fam.exponents
        vol = -n * ((1.0 + t1) * lg[0] + (1.0 + t2) * lg[1])
    else:
        cols = fam.shapes[n - 1].columns
        sign, logabs = np.linalg.slogdet(cols)
        vol = float(logabs) / math.log(2.0) - n * sum(lg)
    total = float(sum(gamma_log2))
    if abs(total - vol) > 1e-9 * max(1.0, abs(vol)):
        raise ConsistencyError(
            f"gamma norm product (2^{total:.6f}) disagrees with the "
            f"volume of the contracted target (2^{vol:.6f}) at level {n}",
            module=_MODULE)


def s_n(spec: TargetSpec, n: int, mode: str = "exact") -> LevelData:
    """Level-n value of the dimension formula.

    mode "exact" evaluates the definition at finite n; mode "limit"
    substitutes leading rates (see module docstring), reproducing the
    closed forms of constant-shape families at every n.
    """
    if mode not in ("exact", "limit"):
        raise DomainError(f"mode must be 'exact' or 'limit', got {mode!r}",
                          module=_MODULE)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"level must be a positive integer, got {n!r}",
                          module=_MODULE)
    lg = spec.system.log2_betas
    if mode == "limit":
        w_rates, g_rates = _rates(spec)
        w = [r * n for r in w_rates]
        g = [r * n for r in g_rates]
        gamma_log2 = tuple(-x for x in g)
    else:
        gamma_log2 = gamma_magnitudes(spec, n, as_log2=True)
        w = [n * l for l in lg]
        g = [-x for x in gamma_log2]
    value, lam, cands = _minimize_objective(w, g)
    return LevelData(
        n=n,
        gamma_log2=gamma_log2,
        candidates_log2_tau=tuple(-c for c in reversed(cands)),
        s_n=float(value),
        argmin_tau_log2=-lam,
        mode=mode,
    )


def s_star(spec: TargetSpec, n_min: int, n_max: int, window: int = 20,
           tolerance: float = 1e-3, mode: str = "exact") -> DimensionReport:
    """Windowed limsup estimate: s* = max of s_n over the last `window`
    levels of [n_min, n_max], with converged set when that window's
    spread is below the tolerance.  No extrapolation is attempted."""
    if not (1 <= n_min <= n_max):
        raise DomainError(f"need 1 <= n_min <= n_max, got [{n_min}, {n_max}]",
                          module=_MODULE)
    count = n_max - n_min + 1
    if not (1 <= window <= count):
        raise DomainError(
            f"window must lie in [1, {count}], got {window}", module=_MODULE)
    if tolerance <= 0.0:
        raise DomainError("tolerance must be positive", module=_MODULE)
    levels = tuple(s_n(spec, n, mode=mode) for n in range(n_min, n_max + 1))
    tail = levels[-window:]
    tail_vals = [lv.s_n for lv in tail]
    tail_min, tail_max = min(tail_vals), max(tail_vals)
    return DimensionReport(
        levels=levels,
        s_star=tail_max,
        converged=bool(tail_max - tail_min < tolerance),
        window=window,
        tail_min=tail_min,
        tail_max=tail_max,
        tolerance=tolerance,
    )


def closed_form_example(which: int, param: float) -> float:
    """Known closed-form dimensions for the two worked 2-D families
    (bases 2 and 4, unit exponents); used as a test oracle.

    which=1: constant rotation by theta in [0, pi/2]; 5/4 except at the
    right angle, where the value drops to 1.
    which=2: cos theta_n = 2^(-a n) with a >= 0; 1 + (1-a)/(4-a) up to
    a = 1, then 1.
    """
    if which == 1:
        theta = float(param)
        if not (0.0 <= theta <= math.pi / 2.0):
            raise DomainError(f"theta must lie in [0, pi/2], got {theta}",
                              module=_MODULE)
        return 1.0 if theta == math.pi / 2.0 else 1.25
    if which == 2:
        a = float(param)
        if not (a >= 0.0 and math.isfinite(a)):
            raise DomainError(f"decay parameter must be >= 0, got {a}",
                              module=_MODULE)
        return 1.0 + (1.0 - a) / (4.0 - a) if a <= 1.0 else 1.0
    raise DomainError(f"example must be 1 or 2, got {which!r}",
                      module=_MODULE)
