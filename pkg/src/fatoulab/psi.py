"""Membership machinery for the tree of almost-lower-bound strings.

A string (y_1, ..., y_k) of strictly positive elements belongs to the tree of
a decreasing sequence (z_n) when every ``||(y_i - z_n)^+|| <= ||y_i|| / 3^i``
and every consecutive link satisfies ``||y_(i+1) - y_i|| <= ||y_i|| / 3^i``.

The universal quantifier over n is handled three ways, and the verdict says
which: a single violated n refutes outright (exact); a bounded scan gives an
honest semi-verdict; and canonical strings are certified for all n at once,
either by the exact eventually-constant supremum on finitely renormed stages
or by replaying the stage inequality chains on limit stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Iterable, Iterator

from .lattice import (
    BranchTail,
    CanonicalZ,
    Element,
    Frac,
    LimitSeq,
    NormBound,
    SpaceDescriptor,
    SpaceMismatch,
    UncertifiableNorm,
    base_element,
    base_payload,
    is_zero_element,
    leq,
    norm,
    norm_bounds,
    pos_part,
    sub,
    wrap_to,
    zero,
)
from .trees import FiniteTree


class PsiInputError(ValueError):
    """Bad string: wrong space or a label outside the positive cone."""


class LinkViolation(ValueError):
    """Branch fails a consecutive-link inequality it was assumed to satisfy."""


class SearchBudgetExceeded(RuntimeError):
    """Dense-enumeration scan ran out of budget before finding an approximant."""


@dataclass(frozen=True)
class PsiFact:
    """One judged inequality: exact sides where available, else bounds."""

    kind: str  # "z" | "link" | "note"
    i: int | None = None
    n: int | None = None
    lhs: str | None = None
    rhs: str | None = None
    note: str = ""

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v not in (None, "")}


@dataclass
class PsiVerdict:
    outcome: str  # "refuted" | "passed_up_to" | "certified"
    witness: tuple | None = None  # (i, n) or (i, "link") for refutations
    n_budget: int | None = None
    trace: list[PsiFact] = field(default_factory=list)

    @property
    def refuted(self) -> bool:
        return self.outcome == "refuted"

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "witness": list(self.witness) if self.witness else None,
            "n_budget": self.n_budget,
            "trace": [f.to_json() for f in self.trace],
        }


def _pow3(i: int) -> Frac:
    return Frac(1, 3**i)


def _validate(space: SpaceDescriptor, z, string: Iterable[Element]) -> list[Element]:
    labels = list(string)
    if z.is_decreasing() is not True:
        raise PsiInputError("the reference sequence must be decreasing")
    for y in labels:
        if y.space != space:
            raise SpaceMismatch(f"label in {y.space}, expected {space}")
        if is_zero_element(y) or leq(zero(space), y) is not True:
            raise PsiInputError(f"label {y.digest()} is not strictly positive")
    return labels


def _norm_bounds_of(x: Element) -> NormBound:
    return norm_bounds(x)


def psi_check(space: SpaceDescriptor, z, string: Iterable[Element], n_budget: int) -> PsiVerdict:
    """Exact link checks plus a bounded scan of the z-inequalities.

    Since ``(y_i - z_n)^+`` grows with n, one violated n refutes outright;
    passing every n up to the budget is a semi-verdict, never a certificate.
    """
    labels = _validate(space, z, string)
    if not labels:
        return PsiVerdict("certified", trace=[PsiFact("note", note="empty string belongs vacuously")])
    trace: list[PsiFact] = []
    norms = [_norm_bounds_of(y) for y in labels]
    for i in range(1, len(labels)):
        diff = _norm_bounds_of(sub(labels[i], labels[i - 1]))
        allowed = norms[i - 1]
        lhs, rhs = diff, NormBound(allowed.lower * _pow3(i), allowed.upper * _pow3(i))
        trace.append(PsiFact("link", i=i, lhs=str(lhs.upper), rhs=str(rhs.lower)))
        if lhs.lower > rhs.upper:
            return PsiVerdict("refuted", witness=(i, "link"), n_budget=n_budget, trace=trace)
    for i, y in enumerate(labels, start=1):
        allowed = NormBound(norms[i - 1].lower * _pow3(i), norms[i - 1].upper * _pow3(i))
        for n in range(1, n_budget + 1):
            lhs = _norm_bounds_of(pos_part(sub(y, z.term(n))))
            if lhs.lower > allowed.upper:
                trace.append(PsiFact("z", i=i, n=n, lhs=str(lhs.lower), rhs=str(allowed.upper)))
                return PsiVerdict("refuted", witness=(i, n), n_budget=n_budget, trace=trace)
        trace.append(PsiFact("z", i=i, n=n_budget, note=f"no violation for n <= {n_budget}"))
    return PsiVerdict("passed_up_to", n_budget=n_budget, trace=trace)


def first_violating_n(space: SpaceDescriptor, z, y: Element, bound: Frac, n_cap: int = 1_000_000) -> int:
    """Smallest n with ``||(y - z_n)^+|| > bound``; caller guarantees existence."""
    for n in range(1, n_cap + 1):
        v = norm_bounds(pos_part(sub(y, z.term(n))))
        if v.lower > bound:
            return n
    raise RuntimeError("no violating index found below the cap")


def _is_canonical_branch_string(labels: list[Element]) -> bool:
    for i, y in enumerate(labels, start=1):
        p = y.payload
        if not (isinstance(p, LimitSeq) and not p.explicit and isinstance(p.tail, BranchTail)):
            return False
        if p.tail.i != i:
            return False
    return True


def psi_certify(
    space: SpaceDescriptor,
    z,
    string: Iterable[Element],
    n_budget: int = 64,
    component_samples: int = 3,
) -> PsiVerdict:
    """Membership certificate covering all n simultaneously.

    On finitely renormed stages any eventually-constant string is decided
    exactly: the supremum of ``||(y_i - z_n)^+||`` over all n is computed from
    the stabilized pattern.  On limit stages, canonical witness-branch strings
    are certified by the component chain: every component of the i-th label is
    the i-th label of a component-stage witness node, so the component-stage
    certificate bounds each term by ``3^-i`` and the supremum inherits it;
    sampled components are re-verified exactly.  Anything else downgrades to
    the budgeted check.
    """
    labels = _validate(space, z, string)
    if not labels:
        return PsiVerdict("certified", trace=[PsiFact("note", note="empty string belongs vacuously")])

    if not space.is_limit:
        sups = [z.sup_pos_part_norm(y) for y in labels]
        if all(s is not None for s in sups):
            return _certify_exact(space, z, labels, sups)
        return psi_check(space, z, labels, n_budget)

    if isinstance(z, CanonicalZ) and z.space == space and _is_canonical_branch_string(labels):
        return _certify_weave(space, z, labels, n_budget, component_samples)
    return psi_check(space, z, labels, n_budget)


def _certify_exact(space, z, labels: list[Element], sups: list[Frac]) -> PsiVerdict:
    trace: list[PsiFact] = []
    for i, (y, sup) in enumerate(zip(labels, sups), start=1):
        bound = norm(y) * _pow3(i)
        trace.append(PsiFact("z", i=i, lhs=str(sup), rhs=str(bound), note="exact sup over all n"))
        if sup > bound:
            n = first_violating_n(space, z, y, bound)
            return PsiVerdict("refuted", witness=(i, n), trace=trace)
    for i in range(1, len(labels)):
        lhs = norm(sub(labels[i], labels[i - 1]))
        rhs = norm(labels[i - 1]) * _pow3(i)
        trace.append(PsiFact("link", i=i, lhs=str(lhs), rhs=str(rhs)))
        if lhs > rhs:
            return PsiVerdict("refuted", witness=(i, "link"), trace=trace)
    return PsiVerdict("certified", trace=trace)


def _certify_weave(space, z, labels, n_budget, component_samples) -> PsiVerdict:
    trace = [
        PsiFact(
            "note",
            note=(
                "canonical branch string: component r of label i is the i-th label "
                "of a component-stage witness node, so the component-stage chain "
                "bounds every term by ||y_i||/3^i and the supremum over components "
                "inherits the bound"
            ),
        )
    ]
    start = max(p.payload.tail.handle.start for p in labels)
    child_checked = 0
    for r in range(start, start + component_samples):
        child_space = space.child(r)
        comp_string = [lbl.payload.tail.handle.component_label(r, i) for i, lbl in enumerate(labels, start=1)]
        comp_z = CanonicalZ(child_space)
        sub_verdict = psi_certify(child_space, comp_z, comp_string, n_budget, component_samples)
        trace.append(
            PsiFact(
                "note",
                n=r,
                note=f"component {r} (stage {child_space.stage}): {sub_verdict.outcome}",
            )
        )
        if sub_verdict.refuted:
            return PsiVerdict("refuted", witness=sub_verdict.witness, trace=trace + sub_verdict.trace)
        child_checked += 1
    for i in range(1, len(labels)):
        d = norm_bounds(sub(labels[i], labels[i - 1]))
        trace.append(PsiFact("link", i=i, lhs=str(d.lower), rhs=str(_pow3(i)), note="components linked stagewise"))
        if d.lower > _pow3(i):
            return PsiVerdict("refuted", witness=(i, "link"), trace=trace)
    trace.append(PsiFact("note", note=f"{child_checked} component stages re-verified exactly"))
    return PsiVerdict("certified", trace=trace)


# ---------------------------------------------------------------------------
# the two constructive directions between branches and lower bounds
# ---------------------------------------------------------------------------


def branch_to_lower_bound(branch: list[Element], k: int) -> tuple[Element, Frac]:
    """From a link-respecting branch to an approximate positive lower bound.

    Returns ``y_k`` plus the geometric tail bound ``sum_(i>=k) ||y_i||/3^i``
    with norms beyond the branch extended by the last value.  A branch that is
    syntactically constant from position k onward returns its exact limit with
    error zero.
    """
    if not 1 <= k <= len(branch):
        raise ValueError(f"k={k} out of range for branch of length {len(branch)}")
    norms = [norm(y) for y in branch]
    for i in range(1, k):
        lhs = norm(sub(branch[i], branch[i - 1]))
        if lhs > norms[i - 1] * _pow3(i):
            raise LinkViolation(f"link {i}: {lhs} > {norms[i - 1] * _pow3(i)}")
    if all(y == branch[k - 1] for y in branch[k - 1 :]):
        return branch[k - 1], Frac(0)
    last = len(branch)
    error = sum((norms[i - 1] * _pow3(i) for i in range(k, last)), Frac(0))
    error += norms[last - 1] * _pow3(last) * Frac(3, 2)
    return branch[k - 1], error


def lower_bound_to_branch(
    y: Element,
    dense: Iterator[Element] | None,
    k: int,
    search_budget: int = 200_000,
) -> list[Element]:
    """Positive lower bound to a branch through a dense set.

    Picks, for each i <= k, the first enumerated element within
    ``||y||/7^i`` of ``y``; the geometric margins then force the link
    inequalities, which are re-verified exactly before returning.
    """
    if is_zero_element(y) or leq(zero(y.space), y) is not True:
        raise PsiInputError("the lower bound must be strictly positive")
    if dense is None:
        dense = dense_enumeration()
    ny = norm(y)
    radii = [ny / Frac(7**i) for i in range(1, k + 1)]
    found: list[Element | None] = [None] * k
    tau_y = base_payload(y).tail
    scanned = 0
    for cand in dense:
        scanned += 1
        if scanned > search_budget:
            missing = [i + 1 for i, f in enumerate(found) if f is None]
            raise SearchBudgetExceeded(f"no approximant for levels {missing} in {search_budget} elements")
        need = max((radii[i] for i in range(k) if found[i] is None), default=None)
        if need is None:
            break
        # the limit functional is 1-Lipschitz for the norm: cheap prefilter
        if abs(base_payload(cand).tail - tau_y) >= need:
            continue
        d = norm(sub(wrap_to(cand, y.space) if cand.space != y.space else cand, y))
        if d >= need:
            continue
        cand = wrap_to(cand, y.space) if cand.space != y.space else cand
        for i in range(k):
            if found[i] is None and d < radii[i]:
                found[i] = cand
    if any(f is None for f in found):
        missing = [i + 1 for i, f in enumerate(found) if f is None]
        raise SearchBudgetExceeded(f"enumeration exhausted before levels {missing}")
    branch = [f for f in found if f is not None]
    for i in range(1, k):
        lhs = norm(sub(branch[i], branch[i - 1]))
        rhs = norm(branch[i - 1]) * _pow3(i)
        if not lhs < rhs:
            raise LinkViolation(f"approximant chain broke link {i}: {lhs} vs {rhs}")
    return branch


# ---------------------------------------------------------------------------
# canonical dense enumeration of the positive cone (base stage)
# ---------------------------------------------------------------------------


def _rationals_of_weight(v: int) -> list[Fraction]:
    """Nonnegative reduced rationals with numerator + denominator = v."""
    out = []
    from math import gcd

    for den in range(1, v):
        num = v - den
        if gcd(num, den) == 1:
            out.append(Fraction(num, den))
    if v == 1:
        out.append(Fraction(0))
    return out


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def dense_enumeration() -> Iterator[Element]:
    """Diagonal enumeration of the positive eventually-constant rationals.

    Elements are ordered by total weight (prefix length plus the sizes of all
    reduced numerators and denominators), each element appearing exactly once
    in canonical form.  Dense in the positive cone of the base stage.
    """
    for weight in count(1):
        for p in range(0, weight):
            remaining = weight - p
            if remaining < p + 1:
                continue
            for split in _compositions(remaining, p + 1):
                tail_choices = _rationals_of_weight(split[-1])
                prefix_pools = [_rationals_of_weight(v) for v in split[:-1]]
                for elem in _emit(prefix_pools, tail_choices):
                    yield elem


def _emit(prefix_pools: list[list[Fraction]], tail_choices: list[Fraction]) -> Iterator[Element]:
    def rec(idx: int, acc: list[Fraction]) -> Iterator[Element]:
        if idx == len(prefix_pools):
            for tail in tail_choices:
                if acc and acc[-1] == tail:
                    continue  # non-canonical: trailing prefix equals the tail
                if not acc and tail == 0:
                    continue  # the zero element is not positive
                yield base_element(acc, tail)
            return
        for v in prefix_pools[idx]:
            yield from rec(idx + 1, acc + [v])

    yield from rec(0, [])


# ---------------------------------------------------------------------------
# pool-restricted membership trees
# ---------------------------------------------------------------------------


def can_extend(space: SpaceDescriptor, z, string: tuple[Element, ...], y: Element) -> bool:
    """Exact test that ``string + (y,)`` stays in the membership tree.

    Requires the sequence handle to decide suprema exactly (finitely renormed
    stages); membership here must be exact because game/rank cross-checks
    depend on it.
    """
    i = len(string) + 1
    sup = z.sup_pos_part_norm(y)
    if sup is None:
        raise UncertifiableNorm("pool trees need a sequence handle with exact suprema")
    if sup > norm(y) * _pow3(i):
        return False
    if string:
        prev = string[-1]
        if norm(sub(y, prev)) > norm(prev) * _pow3(i - 1):
            return False
    return True


def pool_tree(space: SpaceDescriptor, z, pool: list[Element], depth: int) -> FiniteTree:
    """Explicit membership tree restricted to a finite pool, up to ``depth``."""
    positives = [y for y in pool if not is_zero_element(y) and leq(zero(space), y) is True]
    nodes = {()}
    frontier: list[tuple[Element, ...]] = [()]
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for y in positives:
                if can_extend(space, z, s, y):
                    node = s + (y,)
                    if node not in nodes:
                        nodes.add(node)
                        nxt.append(node)
        frontier = nxt
        if not frontier:
            break
    return FiniteTree(frozenset(nodes))
