"""Exact-arithmetic stage lattices.

The base stage is the lattice of eventually constant rational sequences with
norm ``max(sup/3, |limit|)``; a successor stage keeps the vectors and renorms
by ``max(old/7, |limit functional|)``; a limit stage is a sup-normed sum of
its child stages, with elements represented as finitely many explicit child
components plus a symbolic tail expression that can materialize any deeper
component on demand.

All scalars are ``fractions.Fraction``; every operation is pure and every
value immutable, so elements are safe to share between threads.  Symbolic
tail materialization is memoized idempotently by the handles that own it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Protocol, runtime_checkable

from .ordinals import (
    Comparison,
    Ordinal,
    OrdinalKind,
    compare,
    fundamental_sequence,
    successor,
)

Frac = Fraction


class SpaceMismatch(ValueError):
    """Operands live in different stage spaces."""


class UncertifiableNorm(ValueError):
    """No exact certificate for a limit-stage supremum; use norm_bounds."""


# ---------------------------------------------------------------------------
# space descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceDescriptor:
    """Stage space, identified by its ordinal stage (>= 1)."""

    stage: Ordinal

    @property
    def kind(self) -> OrdinalKind:
        # stage 1 is the base; stage a+1 renorms stage a; limits sum children
        if self.stage == Ordinal.from_int(1):
            return OrdinalKind.ZERO  # sentinel: base space
        return self.stage.kind()

    @property
    def is_base(self) -> bool:
        return self.stage == Ordinal.from_int(1)

    @property
    def is_limit(self) -> bool:
        return (not self.is_base) and self.stage.kind() is OrdinalKind.LIMIT

    def inner(self) -> "SpaceDescriptor":
        if self.is_base or self.stage.kind() is not OrdinalKind.SUCCESSOR:
            raise SpaceMismatch(f"stage {self.stage} has no inner space")
        return space_for(self.stage.predecessor())

    def child(self, n: int) -> "SpaceDescriptor":
        if not self.is_limit:
            raise SpaceMismatch(f"stage {self.stage} has no child spaces")
        return space_for(fundamental_sequence(self.stage, n))

    def __str__(self) -> str:
        return f"X[{self.stage}]"


_SPACES: dict[Ordinal, SpaceDescriptor] = {}


def space_for(stage: Ordinal) -> SpaceDescriptor:
    if stage.is_zero:
        raise SpaceMismatch("stages start at 1")
    if stage not in _SPACES:
        _SPACES[stage] = SpaceDescriptor(stage)
    return _SPACES[stage]


BASE_SPACE = space_for(Ordinal.from_int(1))


# ---------------------------------------------------------------------------
# payloads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseSeq:
    """Eventually constant sequence (prefix entries, then the tail forever)."""

    prefix: tuple[Frac, ...]
    tail: Frac

    def entry(self, j: int) -> Frac:
        return self.prefix[j - 1] if j <= len(self.prefix) else self.tail

    def sup_abs(self) -> Frac:
        return max([abs(self.tail)] + [abs(v) for v in self.prefix], default=abs(self.tail))


def _normalize_base(prefix: Iterable, tail) -> BaseSeq:
    tail = Frac(tail)
    entries = [Frac(v) for v in prefix]
    while entries and entries[-1] == tail:
        entries.pop()
    return BaseSeq(tuple(entries), tail)


@runtime_checkable
class BranchHandle(Protocol):
    """Resolves witness-branch tail components of a limit-stage element.

    ``component_label(m, i)`` is the i-th label of the m-th component branch,
    or the zero element below ``start`` (the branch's start offset).  Labels
    are unit-sphere members by construction, which the norm calculus uses as
    a stored fact.
    """

    stage: Ordinal
    family: int

    @property
    def start(self) -> int: ...

    def component_label(self, m: int, i: int) -> "Element": ...

    def key(self) -> tuple: ...


# tail expressions --------------------------------------------------------


@dataclass(frozen=True)
class ZeroTail:
    pass


@dataclass(frozen=True)
class ZSeqTail:
    k: int


@dataclass(frozen=True)
class BranchTail:
    handle: BranchHandle
    i: int

    def __hash__(self):
        return hash((self.handle.key(), self.i))

    def __eq__(self, other):
        return (
            isinstance(other, BranchTail)
            and self.handle.key() == other.handle.key()
            and self.i == other.i
        )


@dataclass(frozen=True)
class ScaleTail:
    c: Frac
    t: "TailExpr"


@dataclass(frozen=True)
class SumTail:
    a: "TailExpr"
    b: "TailExpr"


@dataclass(frozen=True)
class JoinTail:
    a: "TailExpr"
    b: "TailExpr"


@dataclass(frozen=True)
class MeetTail:
    a: "TailExpr"
    b: "TailExpr"


@dataclass(frozen=True)
class PosTail:
    t: "TailExpr"


@dataclass(frozen=True)
class AbsTail:
    t: "TailExpr"


TailExpr = (
    ZeroTail | ZSeqTail | BranchTail | ScaleTail | SumTail | JoinTail | MeetTail | PosTail | AbsTail
)

ZERO_TAIL = ZeroTail()


@dataclass(frozen=True)
class LimitSeq:
    """Explicit child components 1..K plus a symbolic tail for m > K."""

    explicit: tuple["Element", ...]
    tail: TailExpr


@dataclass(frozen=True)
class Element:
    space: SpaceDescriptor
    payload: object  # BaseSeq | Element (inner stage) | LimitSeq

    def digest(self) -> str:
        return canonical_repr(self)

    def __repr__(self) -> str:
        return f"Element<{self.space}:{canonical_repr(self)}>"


def canonical_repr(x: "Element") -> str:
    return f"{x.space.stage}|{_payload_repr(x.payload)}"


def _payload_repr(p) -> str:
    if isinstance(p, BaseSeq):
        inside = ",".join(str(v) for v in p.prefix)
        return f"[{inside};{p.tail}]"
    if isinstance(p, Element):
        return f"^{_payload_repr(p.payload)}"
    if isinstance(p, LimitSeq):
        parts = ",".join(_payload_repr(e.payload) for e in p.explicit)
        return f"L({parts}|{_tail_repr(p.tail)})"
    raise TypeError(f"bad payload {p!r}")


def _tail_repr(t: TailExpr) -> str:
    if isinstance(t, ZeroTail):
        return "0"
    if isinstance(t, ZSeqTail):
        return f"z{t.k}"
    if isinstance(t, BranchTail):
        return f"br{t.handle.key()}#{t.i}"
    if isinstance(t, ScaleTail):
        return f"({t.c})*{_tail_repr(t.t)}"
    if isinstance(t, SumTail):
        return f"({_tail_repr(t.a)}+{_tail_repr(t.b)})"
    if isinstance(t, JoinTail):
        return f"({_tail_repr(t.a)}v{_tail_repr(t.b)})"
    if isinstance(t, MeetTail):
        return f"({_tail_repr(t.a)}^{_tail_repr(t.b)})"
    if isinstance(t, PosTail):
        return f"pos({_tail_repr(t.t)})"
    return f"abs({_tail_repr(t.t)})"


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def base_element(prefix: Iterable, tail) -> Element:
    return Element(BASE_SPACE, _normalize_base(prefix, tail))


def wrap(x: Element) -> Element:
    """The same vector viewed in the successor stage of its space."""
    return Element(space_for(successor(x.space.stage)), x)


def wrap_to(x: Element, space: SpaceDescriptor) -> Element:
    """Lift through successor stages until ``space`` is reached."""
    steps = 0
    t = space.stage
    while t != x.space.stage:
        if t.kind() is not OrdinalKind.SUCCESSOR:
            raise SpaceMismatch(f"cannot lift {x.space} to {space}")
        t = t.predecessor()
        steps += 1
    out = x
    for _ in range(steps):
        out = wrap(out)
    return out


def limit_element(space: SpaceDescriptor, explicit: Iterable[Element], tail: TailExpr) -> Element:
    if not space.is_limit:
        raise SpaceMismatch(f"{space} is not a limit space")
    explicit = tuple(explicit)
    for m, comp in enumerate(explicit, start=1):
        if comp.space != space.child(m):
            raise SpaceMismatch(f"component {m} lives in {comp.space}, expected {space.child(m)}")
    return Element(space, LimitSeq(explicit, tail))


def zero(space: SpaceDescriptor) -> Element:
    if space.is_base:
        return Element(space, _normalize_base((), 0))
    if space.is_limit:
        return Element(space, LimitSeq((), ZERO_TAIL))
    return Element(space, zero(space.inner()))


def is_zero_element(x: Element) -> bool:
    p = x.payload
    if isinstance(p, BaseSeq):
        return not p.prefix and p.tail == 0
    if isinstance(p, Element):
        return is_zero_element(p)
    return not p.explicit and isinstance(p.tail, ZeroTail)


def base_payload(x: Element) -> BaseSeq:
    """Unwrap successor stages down to the base vector."""
    p = x.payload
    while isinstance(p, Element):
        p = p.payload
    if not isinstance(p, BaseSeq):
        raise SpaceMismatch(f"{x.space} is not built over the base space")
    return p


# ---------------------------------------------------------------------------
# tail semantics
# ---------------------------------------------------------------------------


def materialize_tail(tail: TailExpr, space: SpaceDescriptor, m: int) -> Element:
    child = space.child(m)
    if isinstance(tail, ZeroTail):
        return zero(child)
    if isinstance(tail, ZSeqTail):
        return z_seq(child, tail.k)
    if isinstance(tail, BranchTail):
        return tail.handle.component_label(m, tail.i)
    if isinstance(tail, ScaleTail):
        return scale(tail.c, materialize_tail(tail.t, space, m))
    if isinstance(tail, SumTail):
        return add(materialize_tail(tail.a, space, m), materialize_tail(tail.b, space, m))
    if isinstance(tail, JoinTail):
        return join(materialize_tail(tail.a, space, m), materialize_tail(tail.b, space, m))
    if isinstance(tail, MeetTail):
        return meet(materialize_tail(tail.a, space, m), materialize_tail(tail.b, space, m))
    if isinstance(tail, PosTail):
        return pos_part(materialize_tail(tail.t, space, m))
    return abs_(materialize_tail(tail.t, space, m))


def component(x: Element, m: int) -> Element:
    """m-th child component of a limit-stage element."""
    p = x.payload
    if not isinstance(p, LimitSeq):
        raise SpaceMismatch(f"{x.space} is not a limit space")
    if m <= len(p.explicit):
        return p.explicit[m - 1]
    return materialize_tail(p.tail, x.space, m)


def tail_phi(tail: TailExpr) -> Frac:
    """Eventual value of the limit functional along the tail components."""
    if isinstance(tail, ZeroTail):
        return Frac(0)
    if isinstance(tail, (ZSeqTail, BranchTail)):
        return Frac(1)
    if isinstance(tail, ScaleTail):
        return tail.c * tail_phi(tail.t)
    if isinstance(tail, SumTail):
        return tail_phi(tail.a) + tail_phi(tail.b)
    if isinstance(tail, JoinTail):
        return max(tail_phi(tail.a), tail_phi(tail.b))
    if isinstance(tail, MeetTail):
        return min(tail_phi(tail.a), tail_phi(tail.b))
    if isinstance(tail, PosTail):
        return max(tail_phi(tail.t), Frac(0))
    return abs(tail_phi(tail.t))


def tail_nonneg(tail: TailExpr) -> bool:
    """Sound (not complete) syntactic positivity."""
    if isinstance(tail, (ZeroTail, ZSeqTail, BranchTail, PosTail, AbsTail)):
        return True
    if isinstance(tail, ScaleTail):
        return tail.c >= 0 and tail_nonneg(tail.t)
    if isinstance(tail, (SumTail, JoinTail, MeetTail)):
        return tail_nonneg(tail.a) and tail_nonneg(tail.b)
    return False


def tail_upper_norm(tail: TailExpr) -> Frac:
    """Certified uniform bound on component norms, from stored family facts
    (canonical sequences and witness labels are unit vectors) plus the
    triangle and lattice inequalities.  Never tighter than those facts allow.
    """
    if isinstance(tail, ZeroTail):
        return Frac(0)
    if isinstance(tail, (ZSeqTail, BranchTail)):
        return Frac(1)
    if isinstance(tail, ScaleTail):
        return abs(tail.c) * tail_upper_norm(tail.t)
    if isinstance(tail, SumTail):
        return tail_upper_norm(tail.a) + tail_upper_norm(tail.b)
    if isinstance(tail, JoinTail):
        if tail_nonneg(tail.a) and tail_nonneg(tail.b):
            # join of positives: componentwise sup norm is the max of norms
            return max(tail_upper_norm(tail.a), tail_upper_norm(tail.b))
        return tail_upper_norm(tail.a) + tail_upper_norm(tail.b)
    if isinstance(tail, MeetTail):
        if tail_nonneg(tail.a) and tail_nonneg(tail.b):
            # 0 <= a^b <= a, so the lattice norm axiom bounds it by either side
            return min(tail_upper_norm(tail.a), tail_upper_norm(tail.b))
        return tail_upper_norm(tail.a) + tail_upper_norm(tail.b)
    if isinstance(tail, PosTail):
        inner = tail.t
        # (a - b)^+ <= a for positive a, b, so the lattice norm axiom bounds
        # the positive part of a difference by its positive side alone
        if isinstance(inner, SumTail):
            a, b = inner.a, inner.b
            if tail_nonneg(a) and isinstance(b, ScaleTail) and b.c < 0 and tail_nonneg(b.t):
                return tail_upper_norm(a)
            if tail_nonneg(b) and isinstance(a, ScaleTail) and a.c < 0 and tail_nonneg(a.t):
                return tail_upper_norm(b)
        return tail_upper_norm(inner)
    return tail_upper_norm(tail.t)


# ---------------------------------------------------------------------------
# lattice and vector operations
# ---------------------------------------------------------------------------


def _base_zip(f: Callable[[Frac, Frac], Frac], a: BaseSeq, b: BaseSeq) -> BaseSeq:
    width = max(len(a.prefix), len(b.prefix))
    prefix = [f(a.entry(j), b.entry(j)) for j in range(1, width + 1)]
    return _normalize_base(prefix, f(a.tail, b.tail))


def _base_map(f: Callable[[Frac], Frac], a: BaseSeq) -> BaseSeq:
    return _normalize_base([f(v) for v in a.prefix], f(a.tail))


def _binop(x: Element, y: Element, scalar: Callable[[Frac, Frac], Frac], tail_ctor) -> Element:
    if x.space != y.space:
        raise SpaceMismatch(f"{x.space} vs {y.space}")
    if isinstance(x.payload, BaseSeq):
        return Element(x.space, _base_zip(scalar, x.payload, y.payload))
    if isinstance(x.payload, Element):
        return Element(x.space, _binop(x.payload, y.payload, scalar, tail_ctor))
    px, py = x.payload, y.payload
    width = max(len(px.explicit), len(py.explicit))
    explicit = tuple(
        _binop(component(x, m), component(y, m), scalar, tail_ctor) for m in range(1, width + 1)
    )
    return Element(x.space, LimitSeq(explicit, _mk_tail(tail_ctor, px.tail, py.tail)))


def _mk_tail(ctor, a: TailExpr, b: TailExpr) -> TailExpr:
    # safe simplifications only; semantics per materialize_tail is unchanged
    if ctor is SumTail:
        if isinstance(a, ZeroTail):
            return b
        if isinstance(b, ZeroTail):
            return a
    if ctor is JoinTail:
        if a == b:
            return a
        if isinstance(b, ZeroTail) and tail_nonneg(a):
            return a
        if isinstance(a, ZeroTail) and tail_nonneg(b):
            return b
    if ctor is MeetTail:
        if a == b:
            return a
        if isinstance(b, ZeroTail) and tail_nonneg(a):
            return ZERO_TAIL
        if isinstance(a, ZeroTail) and tail_nonneg(b):
            return ZERO_TAIL
    return ctor(a, b)


def add(x: Element, y: Element) -> Element:
    return _binop(x, y, lambda p, q: p + q, SumTail)


def join(x: Element, y: Element) -> Element:
    return _binop(x, y, max, JoinTail)


def meet(x: Element, y: Element) -> Element:
    return _binop(x, y, min, MeetTail)


def scale(c, x: Element) -> Element:
    c = Frac(c)
    if isinstance(x.payload, BaseSeq):
        return Element(x.space, _base_map(lambda v: c * v, x.payload))
    if isinstance(x.payload, Element):
        return Element(x.space, scale(c, x.payload))
    p = x.payload
    explicit = tuple(scale(c, e) for e in p.explicit)
    tail = ZERO_TAIL if (c == 0 or isinstance(p.tail, ZeroTail)) else ScaleTail(c, p.tail)
    return Element(x.space, LimitSeq(explicit, tail))


def sub(x: Element, y: Element) -> Element:
    return add(x, scale(-1, y))


def neg(x: Element) -> Element:
    return scale(-1, x)


def pos_part(x: Element) -> Element:
    if isinstance(x.payload, BaseSeq):
        return Element(x.space, _base_map(lambda v: max(v, Frac(0)), x.payload))
    if isinstance(x.payload, Element):
        return Element(x.space, pos_part(x.payload))
    p = x.payload
    explicit = tuple(pos_part(e) for e in p.explicit)
    tail = p.tail if tail_nonneg(p.tail) else PosTail(p.tail)
    return Element(x.space, LimitSeq(explicit, tail))


def abs_(x: Element) -> Element:
    if isinstance(x.payload, BaseSeq):
        return Element(x.space, _base_map(abs, x.payload))
    if isinstance(x.payload, Element):
        return Element(x.space, abs_(x.payload))
    p = x.payload
    explicit = tuple(abs_(e) for e in p.explicit)
    tail = p.tail if tail_nonneg(p.tail) else AbsTail(p.tail)
    return Element(x.space, LimitSeq(explicit, tail))


# ---------------------------------------------------------------------------
# the limit functional, norms, order
# ---------------------------------------------------------------------------


def phi(x: Element) -> Frac:
    """Norm-one lattice homomorphism to the scalars.

    On the base stage it is the sequence limit; successor stages reuse it;
    on a limit stage it is the eventual value along components, computed
    symbolically from the tail grammar (every generator has a known eventual
    value and the operations preserve eventual stability).
    """
    p = x.payload
    if isinstance(p, BaseSeq):
        return p.tail
    if isinstance(p, Element):
        return phi(p)
    return tail_phi(p.tail)


@dataclass(frozen=True)
class NormBound:
    lower: Frac
    upper: Frac

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise UncertifiableNorm(f"bound [{self.lower}, {self.upper}] is empty")

    @property
    def exact(self) -> Frac | None:
        return self.lower if self.lower == self.upper else None


def norm(x: Element) -> Frac:
    """Exact stage norm; raises UncertifiableNorm on limit elements whose
    tail supremum has no exact certificate (use norm_bounds there)."""
    p = x.payload
    if isinstance(p, BaseSeq):
        return max(p.sup_abs() / 3, abs(p.tail))
    if isinstance(p, Element):
        return max(norm(p) / 7, abs(phi(p)))
    b = norm_bounds(x)
    if b.exact is None:
        raise UncertifiableNorm(f"no exact norm certificate for {x.digest()}")
    return b.exact


def _tail_start(tail: TailExpr) -> int:
    """First component index where the tail's branch generators are live."""
    if isinstance(tail, BranchTail):
        return tail.handle.start
    if isinstance(tail, ScaleTail):
        return _tail_start(tail.t)
    if isinstance(tail, (SumTail, JoinTail, MeetTail)):
        return max(_tail_start(tail.a), _tail_start(tail.b))
    if isinstance(tail, (PosTail, AbsTail)):
        return _tail_start(tail.t)
    return 1


def norm_bounds(x: Element, sample_budget: int = 8) -> NormBound:
    """Certified two-sided bound on the stage norm.

    Lower: exact norms of explicit components and of tail components sampled
    at and after the tail's start offset (any component norm bounds the
    supremum from below).  Upper: the tail fact calculus plus exact explicit
    norms.  Non-limit elements get degenerate exact bounds.
    """
    p = x.payload
    if isinstance(p, BaseSeq):
        v = norm(x)
        return NormBound(v, v)
    if isinstance(p, Element):
        inner = norm_bounds(p, sample_budget)
        a = abs(phi(p))
        return NormBound(max(inner.lower / 7, a), max(inner.upper / 7, a))
    lower = Frac(0)
    upper = tail_upper_norm(p.tail)
    kk = len(p.explicit)
    for m in range(1, kk + 1):
        cb = norm_bounds(component(x, m), max(2, sample_budget // 2))
        lower = max(lower, cb.lower)
        upper = max(upper, cb.upper)
    start = max(kk + 1, _tail_start(p.tail))
    for m in range(start, start + sample_budget):
        cb = norm_bounds(component(x, m), max(2, sample_budget // 2))
        lower = max(lower, cb.lower)
    return NormBound(lower, upper)


@dataclass(frozen=True)
class UnknownBeyond:
    """Order comparison verified for all components up to ``beyond`` only."""

    beyond: int


LeqVerdict = bool | UnknownBeyond


def leq(x: Element, y: Element, tail_budget: int = 8) -> LeqVerdict:
    """Three-valued order test.

    Exact on base/successor stages.  On limit stages, explicit components are
    compared exactly and tails are decided by stored facts where possible
    (identical expressions; zero below nonnegative; canonical sequences are
    decreasing in their index); otherwise components are sampled and the
    verdict is UnknownBeyond.
    """
    if x.space != y.space:
        raise SpaceMismatch(f"{x.space} vs {y.space}")
    px, py = x.payload, y.payload
    if isinstance(px, BaseSeq):
        width = max(len(px.prefix), len(py.prefix))
        return all(px.entry(j) <= py.entry(j) for j in range(1, width + 1)) and px.tail <= py.tail
    if isinstance(px, Element):
        return leq(px, py, tail_budget)
    width = max(len(px.explicit), len(py.explicit))
    unknown_at: int | None = None
    for m in range(1, width + 1):
        v = leq(component(x, m), component(y, m), tail_budget)
        if v is False:
            return False
        if isinstance(v, UnknownBeyond):
            unknown_at = m
    decided = _tail_leq_by_rule(px.tail, py.tail)
    if decided is False:
        return False
    if decided is True:
        return True if unknown_at is None else UnknownBeyond(width)
    horizon = width + tail_budget
    for m in range(width + 1, horizon + 1):
        v = leq(component(x, m), component(y, m), max(2, tail_budget // 2))
        if v is False:
            return False
    return UnknownBeyond(horizon)


def _tail_leq_by_rule(a: TailExpr, b: TailExpr) -> bool | None:
    if a == b:
        return True
    if isinstance(a, ZeroTail) and tail_nonneg(b):
        return True
    if isinstance(a, ZSeqTail) and isinstance(b, ZSeqTail):
        # canonical sequences decrease in the index at every stage
        return a.k >= b.k
    return None


# ---------------------------------------------------------------------------
# canonical families
# ---------------------------------------------------------------------------


def z_seq(space: SpaceDescriptor, n: int) -> Element:
    """n-th canonical decreasing unit vector of the stage.

    Base: n zeros then ones.  Successor: the same vector one stage up.
    Limit: the symbolic diagonal through the child stages.
    """
    if n < 1:
        raise ValueError("index must be >= 1")
    if space.is_base:
        return base_element([0] * n, 1)
    if space.is_limit:
        return Element(space, LimitSeq((), ZSeqTail(n)))
    return wrap(z_seq(space.inner(), n))


def _calkin_wilf(count: int) -> list[Frac]:
    out = [Frac(1)]
    while len(out) < count:
        q = out[-1]
        out.append(1 / (2 * (q.numerator // q.denominator) - q + 1))
    return out


def _unpair(i: int) -> tuple[int, int]:
    # 1-based Cantor diagonal: 1 -> (1,1), 2 -> (1,2), 3 -> (2,1), ...
    d, r = 0, i - 1
    while r > d:
        d += 1
        r -= d
    return r + 1, d - r + 1


def pi_basis(space: SpaceDescriptor, index: int) -> Element:
    """Fixed countable enumeration of strictly positive minorants.

    Base: single-coordinate positive rational spikes.  Successor stages share
    the base enumeration (the order is unchanged).  Limit stages place a
    child-stage basis vector in one component, zero elsewhere.
    """
    if index < 1:
        raise ValueError("index must be >= 1")
    if space.is_base:
        pos, ridx = _unpair(index)
        value = _calkin_wilf(ridx)[-1]
        return base_element([Frac(0)] * (pos - 1) + [value], 0)
    if space.is_limit:
        comp, inner_idx = _unpair(index)
        explicit = [zero(space.child(m)) for m in range(1, comp)]
        explicit.append(pi_basis(space.child(comp), inner_idx))
        return limit_element(space, explicit, ZERO_TAIL)
    return wrap(pi_basis(space.inner(), index))


def in_sphere_S(x: Element) -> bool:
    """Positive, with limit functional and norm both exactly one (exact norm
    or a tight [1, 1] certificate)."""
    if is_zero_element(x):
        return False
    if leq(zero(x.space), x) is not True:
        return False
    if phi(x) != 1:
        return False
    b = norm_bounds(x)
    return b.exact == 1


# ---------------------------------------------------------------------------
# canonical z-family handle used by membership checks and games
# ---------------------------------------------------------------------------


class CanonicalZ:
    """The stage's canonical decreasing sequence, with the exact machinery
    for suprema over the whole index range on finitely renormed stages."""

    def __init__(self, space: SpaceDescriptor):
        self.space = space

    def term(self, n: int) -> Element:
        return z_seq(self.space, n)

    def is_decreasing(self) -> bool:
        return True

    def describe(self) -> dict:
        return {"kind": "canonical", "space": str(self.space.stage)}

    def sup_pos_part_norm(self, y: Element) -> Frac | None:
        """Supremum over all n of ``||(y - z_n)^+||``, exact.

        The map is nondecreasing in n (the sequence decreases, positive parts
        grow, and the lattice norm is monotone) and, over the base vector
        grammar, the norm value is constant once n passes the prefix length.
        Returns None on limit stages, where certificates take over.
        """
        if self.space.is_limit:
            return None
        p = base_payload(y)
        n_star = len(p.prefix) + 1
        return norm(pos_part(sub(y, self.term(n_star))))

    def key(self) -> tuple:
        return ("canonical", str(self.space.stage))

    def __eq__(self, other):
        return isinstance(other, CanonicalZ) and other.space == self.space

    def __hash__(self):
        return hash(self.key())
