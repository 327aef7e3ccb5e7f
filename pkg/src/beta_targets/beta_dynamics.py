"""Single-transformation machinery: digits, cylinders, fullness, counting.

Everything here is built on one recursion.  A cylinder of level n is the
half-open interval [left, left + t * beta**-n) described by its digit word
together with the parameter t in (0, 1], the length of the cylinder's image
under the n-fold map.  A node with image length t has a child for every
digit k with k/beta < t, and the child's image length is min(beta*t - k, 1).
Fullness is exactly t == 1, i.e. maximal length beta**-n.

Floating point: t is snapped to 1 whenever it lands within FULLNESS_TOL of
1, so fullness tests are exact equalities afterwards.  A child whose image
length would fall below the spurious-child tolerance is treated as a
rounding ghost and dropped.  For beta near 1 or deep levels, construct
BetaParam with dps set; the same recursion then runs under mpmath with
tolerance 10**(5 - dps).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

from .errors import ConsistencyError, DomainError, ResourceLimitError

log = logging.getLogger(__name__)

FULLNESS_TOL = 1e-9
SPURIOUS_CHILD_TOL = 1e-12
DEFAULT_NODE_CAP = 10**8

Word = tuple  # digit tuples; level == len(word)


@dataclass(frozen=True)
class BetaParam:
    """Transformation parameter.

    ``beta`` may be a float or an mpmath number; it must exceed 1.  Setting
    ``dps`` routes every operation through mpmath at that many decimal
    digits, which is the escape hatch for beta near 1 or deep levels where
    double-precision drift in the image-length recursion matters.
    """

    beta: object
    dps: Optional[int] = None

    def __post_init__(self):
        if not float(self.beta) > 1:
            raise DomainError(f"beta must exceed 1, got {self.beta!r}",
                              module="beta_dynamics")

    @property
    def max_digit(self) -> int:
        return math.ceil(float(self.beta) - 1)


BetaLike = Union[float, int, BetaParam]


def as_beta_param(beta: BetaLike) -> BetaParam:
    return beta if isinstance(beta, BetaParam) else BetaParam(beta)


@dataclass(frozen=True)
class Interval:
    """Half-open interval [left, right); membership ties resolve right-open."""

    left: float
    right: float

    def __post_init__(self):
        if not self.left < self.right:
            raise DomainError(f"empty interval [{self.left}, {self.right})",
                              module="beta_dynamics")

    @property
    def length(self) -> float:
        return self.right - self.left

    def contains_point(self, x) -> bool:
        return self.left <= x < self.right

    def contains_interval(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def intersects(self, other: "Interval") -> bool:
        return self.left < other.right and other.left < self.right


@dataclass(frozen=True)
class CylinderNode:
    """An admissible word with its interval data.

    ``image_length`` is the t parameter of the recursion; the interval is
    [left, left + length) with length == image_length * beta**-level, and
    the node is full exactly when image_length == 1.
    """

    word: Word
    left: float
    image_length: float
    length: float

    @property
    def level(self) -> int:
        return len(self.word)

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def full(self) -> bool:
        return self.image_length == 1

    @property
    def interval(self) -> Interval:
        return Interval(self.left, self.right)


class _Ctx:
    """Arithmetic context: plain doubles, or mpmath at a fixed dps."""

    def __init__(self, param: BetaParam):
        self.dps = param.dps
        if self.dps is None:
            self.mp = None
            self.beta = float(param.beta)
            self.one = 1.0
            self.zero = 0.0
            self.full_tol = FULLNESS_TOL
            self.spur_tol = SPURIOUS_CHILD_TOL
        else:
            import mpmath

            self.mp = mpmath
            with mpmath.workdps(self.dps):
                self.beta = mpmath.mpf(param.beta)
                self.one = mpmath.mpf(1)
                self.zero = mpmath.mpf(0)
                self.full_tol = mpmath.mpf(10) ** (5 - self.dps)
                self.spur_tol = self.full_tol

    def _ceil(self, x) -> int:
        return math.ceil(x) if self.mp is None else int(self.mp.ceil(x))

    def _floor(self, x) -> int:
        return math.floor(x) if self.mp is None else int(self.mp.floor(x))

    def children(self, t):
        """(digit, child image length) pairs for a node with image length t.

        The spur_tol shave on beta*t keeps a rounded-up product from
        manufacturing a phantom last child; the snap keeps fullness exact.
        """
        kmax = self._ceil(self.beta * t - self.spur_tol) - 1
        out = []
        for k in range(kmax + 1):
            tc = self.beta * t - k
            if tc >= self.one - self.full_tol:
                tc = self.one
            out.append((k, tc))
        return out

    def step(self, x):
        """One application of the map: x -> (digit, beta*x mod 1)."""
        y = self.beta * x
        k = self._floor(y)
        return k, y - k


def _run(param: BetaParam, fn: Callable):
    """Run fn() under the param's precision regime."""
    if param.dps is None:
        return fn()
    import mpmath

    with mpmath.workdps(param.dps):
        return fn()


def _check_unit_point(x, module="beta_dynamics"):
    if not (0 <= x < 1):
        raise DomainError(f"point {x!r} outside [0, 1)", module=module)


def transform(beta: BetaLike, x):
    """One step of the map x -> beta*x mod 1 on [0, 1)."""
    param = as_beta_param(beta)
    _check_unit_point(x)
    ctx = _Ctx(param)
    return _run(param, lambda: ctx.step(x)[1])


def digits(beta: BetaLike, x, n: int) -> Word:
    """First n digits of the expansion of x in base beta."""
    param = as_beta_param(beta)
    _check_unit_point(x)
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}", module="beta_dynamics")
    ctx = _Ctx(param)

    def walk():
        out = []
        y = x
        for _ in range(n):
            k, y = ctx.step(y)
            out.append(k)
        return tuple(out)

    return _run(param, walk)


def _projected_node_count(beta: float, n: int, within: Optional[Interval]):
    """Worst-case node count of a level-n walk, before doing it.

    Unfiltered: the loose alphabet bound ceil(beta)**n.  With an interval
    filter the walk only visits nodes meeting the interval, roughly
    |I| * beta**(k+1) / (beta - 1) + 2 of them at level k.
    """
    if within is None:
        return math.ceil(beta) ** n
    length = min(within.length, 1.0)
    try:
        return length * beta ** (n + 1) / (beta - 1) + 2.0 * (n + 1)
    except OverflowError:
        return math.inf


def enumerate_cylinders(
    beta: BetaLike,
    n: int,
    *,
    only_full: bool = False,
    within: Optional[Interval] = None,
    predicate: Optional[Callable[[CylinderNode], bool]] = None,
    node_cap: float = DEFAULT_NODE_CAP,
) -> Iterator[CylinderNode]:
    """Every admissible word of length n, in lexicographic digit order.

    ``within`` restricts the output to nodes whose interval is contained in
    it (the walk also prunes subtrees that miss it, so narrow intervals are
    cheap).  ``only_full`` keeps full nodes only; ``predicate`` is a final
    per-node filter.  Refuses upfront when the projected node count exceeds
    node_cap, and again mid-walk should the projection prove optimistic.
    """
    param = as_beta_param(beta)
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}", module="beta_dynamics")
    if within is not None and not (0 <= within.left and within.right <= 1):
        raise DomainError(f"search interval {within} not inside [0, 1]",
                          module="beta_dynamics")
    projected = _projected_node_count(float(param.beta), n, within)
    if projected > node_cap:
        raise ResourceLimitError(
            f"projected node count {float(projected):.3g} exceeds cap "
            f"{node_cap:.3g}; lower n, restrict the interval, or raise node_cap",
            module="beta_dynamics")
    ctx = _Ctx(param)
    if param.dps is None:
        return _walk(ctx, n, only_full, within, predicate, node_cap)
    # mpmath precision is process-global state, so materialize eagerly
    # while our working precision is active.
    import mpmath

    with mpmath.workdps(param.dps):
        nodes = list(_walk(ctx, n, only_full, within, predicate, node_cap))
    return iter(nodes)


def _walk(ctx, n, only_full, within, predicate, node_cap):
    lo = within.left if within is not None else None
    hi = within.right if within is not None else None
    visited = 0
    # stack entries: (word, left, t, beta**-level); children pushed in
    # reverse digit order so the smallest digit pops first (lex order)
    stack = [((), ctx.zero, ctx.one, ctx.one)]
    while stack:
        word, left, t, scale = stack.pop()
        visited += 1
        if visited > node_cap:
            raise ResourceLimitError(
                f"node walk exceeded cap {node_cap:.3g}",
                module="beta_dynamics")
        if len(word) == n:
            if only_full and t != ctx.one:
                continue
            length = t * scale
            if within is not None and not (left >= lo and left + length <= hi):
                continue
            node = CylinderNode(word, left, t, length)
            if predicate is not None and not predicate(node):
                continue
            yield node
            continue
        child_scale = scale / ctx.beta
        for k, tc in reversed(ctx.children(t)):
            cleft = left + k * child_scale
            if within is not None:
                # prune on overlap; containment is rechecked at the leaves
                if not (cleft < hi and lo < cleft + tc * child_scale):
                    continue
            stack.append((word + (k,), cleft, tc, child_scale))


def cylinder_of_word(beta: BetaLike, word: Word) -> Optional[CylinderNode]:
    """The cylinder of a digit word, or None if the word is inadmissible."""
    param = as_beta_param(beta)
    if len(word) == 0:
        raise DomainError("empty word has no cylinder", module="beta_dynamics")
    ctx = _Ctx(param)

    def walk():
        left, t, scale = ctx.zero, ctx.one, ctx.one
        for k in word:
            if not isinstance(k, int) or k < 0:
                raise DomainError(f"bad digit {k!r}", module="beta_dynamics")
            kids = ctx.children(t)
            if k > len(kids) - 1:
                return None
            scale = scale / ctx.beta
            left = left + k * scale
            t = kids[k][1]
        return CylinderNode(tuple(word), left, t, t * scale)

    return _run(param, walk)


def _level_distribution(param: BetaParam, n: int, node_cap: float) -> dict:
    """Map image-length -> number of admissible words of length n carrying it.

    Distinct image lengths at level k number at most k+1 (the snap folds
    every full branch onto exactly 1), so this is polynomial in n.  Rounding
    can split one mathematical t across neighbouring float keys; totals are
    unaffected since counts are per-word.
    """
    if (n + 1) ** 2 * (param.max_digit + 1) > node_cap:
        raise ResourceLimitError(
            f"level distribution at n={n} exceeds cap {node_cap:.3g}",
            module="beta_dynamics")
    ctx = _Ctx(param)

    def walk():
        dist = {ctx.one: 1}
        for _ in range(n):
            nxt: dict = {}
            for t, cnt in dist.items():
                for _, tc in ctx.children(t):
                    nxt[tc] = nxt.get(tc, 0) + cnt
            dist = nxt
        return dist

    return _run(param, walk)


def count_admissible(beta: BetaLike, n: int,
                     node_cap: float = DEFAULT_NODE_CAP) -> int:
    """Exact number of admissible words of length n.

    The result is asserted against Renyi's sandwich
    beta**n <= count <= beta**(n+1)/(beta-1) before being returned.
    """
    param = as_beta_param(beta)
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}", module="beta_dynamics")
    count = sum(_level_distribution(param, n, node_cap).values())
    b = float(param.beta)
    logc = math.log(count)
    if logc < n * math.log(b) - 1e-9 or \
       logc > (n + 1) * math.log(b) - math.log(b - 1) + 1e-9:
        raise ConsistencyError(
            f"admissible count {count} escapes the Renyi sandwich for "
            f"beta={b}, n={n}", module="beta_dynamics")
    log.debug("count_admissible(beta=%s, n=%d) = %d within [%.6g, %.6g]",
              b, n, count, b ** n, b ** (n + 1) / (b - 1))
    return count


def admissible_count_bounds(beta: BetaLike, n: int) -> tuple:
    """The Renyi sandwich (beta**n, beta**(n+1)/(beta-1)) as floats."""
    b = float(as_beta_param(beta).beta)
    try:
        return b ** n, b ** (n + 1) / (b - 1)
    except OverflowError:
        return math.inf, math.inf


def full_count_constant(beta: BetaLike) -> float:
    """The constant c with #(full words of length n) >= c * beta**n.

    Integer beta gives equality with c = 1; beta > 2 gives
    (beta-2)/(beta-1); for 1 < beta < 2 the constant is the convergent
    product prod_i (1 - beta**-i), truncated once the tail factor
    beta**-i/(beta-1) drops below 1e-12.
    """
    b = float(as_beta_param(beta).beta)
    if b.is_integer():
        return 1.0
    if b > 2:
        return (b - 2) / (b - 1)
    prod = 1.0
    i = 1
    while b ** (-i) / (b - 1) >= 1e-12:
        prod *= 1 - b ** (-i)
        i += 1
    return prod


def count_full(beta: BetaLike, n: int,
               node_cap: float = DEFAULT_NODE_CAP) -> int:
    """Exact number of full words of length n, asserted against the
    applicable lower bound (exact equality beta**n for integer beta)."""
    param = as_beta_param(beta)
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}", module="beta_dynamics")
    dist = _level_distribution(param, n, node_cap)
    ctx_one = 1.0 if param.dps is None else _Ctx(param).one
    count = dist.get(ctx_one, 0)
    b = float(param.beta)
    if b.is_integer():
        if count != int(b) ** n:
            raise ConsistencyError(
                f"integer beta={b} must have exactly beta**n full words, "
                f"got {count} at n={n}", module="beta_dynamics")
        return count
    c = full_count_constant(param)
    if count <= 0 or math.log(count) < math.log(c) + n * math.log(b) - 1e-9:
        raise ConsistencyError(
            f"full count {count} below c*beta**n = {c * b ** n:.6g} for "
            f"beta={b}, n={n}", module="beta_dynamics")
    return count


@dataclass(frozen=True)
class FullSearchParams:
    """Window parameters (delta, n0) for locating a full cylinder inside an
    interval.  The existence guarantee needs (beta*n0)**(1+delta) <
    beta**(n0*delta) and |I| < n0 * beta**-n0; both are checked per call and
    warned about, not raised, since the literal scan window is still well
    defined."""

    delta: float
    n0: int

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}",
                              module="beta_dynamics")
        if not (isinstance(self.n0, int) and self.n0 >= 3):
            raise DomainError(f"n0 must be an integer >= 3, got {self.n0!r}",
                              module="beta_dynamics")

    def window_hypothesis_holds(self, beta: float) -> bool:
        lhs = (1 + self.delta) * (math.log(beta) + math.log(self.n0))
        return lhs < self.n0 * self.delta * math.log(beta)


def _check_unit_interval(I: Interval, module="beta_dynamics"):
    if not (0 <= I.left and I.right <= 1):
        raise DomainError(f"interval {I} not inside [0, 1]", module=module)


def _full_search_levels(b: float, length: float, delta: float):
    """Levels m with length**(1+delta) < beta**-m <= length.

    The upper side admits equality so an exact dyadic fit is found at its
    own level.  Computed with direct powers plus while-loop nudges, so the
    boundaries are decided by the same arithmetic the walk uses.
    """
    if (1 + delta) * math.log10(length) < -290:
        raise DomainError(
            "interval too short for double-precision level search; "
            "use extended precision", module="beta_dynamics")
    logb = math.log(b)
    m_lo = max(1, math.floor(-math.log(length) / logb))
    while b ** (-m_lo) > length * (1 + 1e-12):
        m_lo += 1
    m_hi = math.ceil(-(1 + delta) * math.log(length) / logb)
    floor_len = length ** (1 + delta)
    while m_hi >= m_lo and b ** (-m_hi) <= floor_len:
        m_hi -= 1
    return m_lo, m_hi


def find_full_in_interval(beta: BetaLike, I: Interval,
                          params: FullSearchParams,
                          node_cap: float = DEFAULT_NODE_CAP) -> CylinderNode:
    """First full cylinder contained in I with length in the search window
    (length**(1+delta), |I|], scanning levels in increasing order.

    Exhausting the window contradicts the existence guarantee whenever the
    params preconditions hold, so that outcome raises a consistency error.
    """
    param = as_beta_param(beta)
    _check_unit_interval(I)
    b = float(param.beta)
    preconds = True
    if not params.window_hypothesis_holds(b):
        preconds = False
        warnings.warn(
            f"(beta*n0)**(1+delta) < beta**(n0*delta) fails for beta={b}, "
            f"n0={params.n0}, delta={params.delta}; the existence guarantee "
            "is void but the scan window is still searched", RuntimeWarning)
    if not I.length < params.n0 * b ** (-params.n0):
        preconds = False
        warnings.warn(
            f"|I|={I.length:.6g} is not below n0*beta**-n0="
            f"{params.n0 * b ** (-params.n0):.6g}; the existence guarantee "
            "is void but the scan window is still searched", RuntimeWarning)
    m_lo, m_hi = _full_search_levels(b, I.length, params.delta)
    for m in range(m_lo, m_hi + 1):
        for node in enumerate_cylinders(param, m, only_full=True, within=I,
                                        node_cap=node_cap):
            return node
    raise ConsistencyError(
        f"no full cylinder of level {m_lo}..{m_hi} fits inside "
        f"[{I.left}, {I.right}) for beta={b} "
        f"(preconditions held: {preconds})", module="beta_dynamics")


def count_full_in_interval(beta: BetaLike, I: Interval, n: int, delta: float,
                           *, strict: bool = False,
                           node_cap: float = DEFAULT_NODE_CAP) -> int:
    """Exact number of full level-n cylinders contained in I.

    When the (delta, n0) preconditions can be verified (some n0 in 3..400
    makes the window hypothesis and the length bound hold, and n is at
    least -(1+delta)*log_beta |I|), the result is asserted to be at least
    c_beta * |I|**(1+delta) * beta**n.  With strict=True a precondition
    failure raises instead of merely skipping that assertion; the exact
    count itself is always computed by enumeration.
    """
    param = as_beta_param(beta)
    _check_unit_interval(I)
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}", module="beta_dynamics")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}",
                          module="beta_dynamics")
    b = float(param.beta)
    n0_found = None
    for n0 in range(3, 401):
        cand = FullSearchParams(delta, n0)
        if cand.window_hypothesis_holds(b) and I.length < n0 * b ** (-n0):
            n0_found = n0
            break
    n_large_enough = n >= -(1 + delta) * math.log(I.length) / math.log(b)
    preconds = n0_found is not None and n_large_enough
    if strict and not preconds:
        raise DomainError(
            f"count preconditions fail for beta={b}, |I|={I.length:.6g}, "
            f"n={n}, delta={delta} (valid n0 found: {n0_found}, "
            f"n large enough: {n_large_enough})", module="beta_dynamics")
    count = sum(1 for _ in enumerate_cylinders(param, n, only_full=True,
                                               within=I, node_cap=node_cap))
    if preconds:
        c = full_count_constant(param)
        lower_log = math.log(c) + (1 + delta) * math.log(I.length) \
            + n * math.log(b)
        if count <= 0 or math.log(count) < lower_log - 1e-9:
            raise ConsistencyError(
                f"full-in-interval count {count} below the guaranteed "
                f"c*|I|**(1+delta)*beta**n = {math.exp(lower_log):.6g}",
                module="beta_dynamics")
        log.debug("count_full_in_interval: count=%d >= %.6g (n0=%s)",
                  count, math.exp(lower_log), n0_found)
    return count
