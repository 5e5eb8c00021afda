"""Executable convergence checkers on rule-represented sequences.

A sequence is finitely many explicit terms plus a tail rule from a small
grammar (constant, canonical-sequence tails, consecutive differences of the
canonical sequence, and rational-function multiples of a fixed element).
Every ``for all but finitely many n`` statement the checkers make is decided
exactly against the tail rule or reported Unknown; failure witnesses always
re-verify exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, gcd

from .lattice import (
    Element,
    Frac,
    SpaceDescriptor,
    abs_,
    add,
    base_element,
    base_payload,
    is_zero_element,
    join,
    leq,
    norm,
    pi_basis,
    pos_part,
    scale,
    sub,
    z_seq,
    zero,
)
from .reporting import FAIL, PASS, REJECTED, UNKNOWN, Report


# ---------------------------------------------------------------------------
# integer polynomials and rational-function coefficients
# ---------------------------------------------------------------------------


def poly_eval(coeffs: tuple[int, ...], n: int) -> int:
    out = 0
    for c in reversed(coeffs):
        out = out * n + c
    return out


def poly_trim(coeffs) -> tuple[int, ...]:
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def poly_mul(a, b) -> tuple[int, ...]:
    out = [0] * (len(a) + len(b) - 1 or 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return poly_trim(out)


def poly_sub(a, b) -> tuple[int, ...]:
    width = max(len(a), len(b))
    return poly_trim(tuple((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(width)))


def poly_shift(coeffs) -> tuple[int, ...]:
    """Compose with n -> n + 1."""
    out = [0] * len(coeffs)
    for i, c in enumerate(coeffs):
        # expand c * (n + 1)^i
        binom = 1
        for j in range(i + 1):
            out[j] += c * binom
            binom = binom * (i - j) // (j + 1)
    return poly_trim(out)


def poly_nonneg_from(coeffs, start: int) -> bool:
    """Exact decision of ``p(n) >= 0`` for every integer ``n >= start``.

    Beyond the Cauchy root bound the sign is the leading sign; the finitely
    many integers before it are checked directly.
    """
    cs = poly_trim(coeffs)
    if not cs:
        return True
    if cs[-1] < 0:
        return False
    bound = 1 + max(abs(c) for c in cs) / abs(cs[-1])
    horizon = max(start, ceil(bound) + 1)
    return all(poly_eval(cs, n) >= 0 for n in range(start, horizon + 1))


@dataclass(frozen=True)
class RatCoeff:
    """Rational function n -> num(n)/den(n) on integers n >= 1.

    The denominator must be strictly positive from 1 on; checked on creation.
    """

    num: tuple[int, ...]
    den: tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "num", poly_trim(self.num))
        object.__setattr__(self, "den", poly_trim(self.den) or (1,))
        if not poly_nonneg_from(poly_sub(self.den, (1,)), 1):
            raise ValueError("denominator must be >= 1 on the index range")

    def at(self, n: int) -> Frac:
        return Frac(poly_eval(self.num, n), poly_eval(self.den, n))

    def limit(self) -> Frac | None:
        """Limit as n grows, None when unbounded."""
        dn, dd = len(self.num) - 1, len(self.den) - 1
        if not self.num:
            return Frac(0)
        if dn < dd:
            return Frac(0)
        if dn == dd:
            return Frac(self.num[-1], self.den[-1])
        return None

    def nonincreasing(self) -> bool:
        diff = poly_sub(poly_mul(self.num, poly_shift(self.den)), poly_mul(poly_shift(self.num), self.den))
        return poly_nonneg_from(diff, 1)

    def nondecreasing(self) -> bool:
        diff = poly_sub(poly_mul(poly_shift(self.num), self.den), poly_mul(self.num, poly_shift(self.den)))
        return poly_nonneg_from(diff, 1)

    def nonneg(self) -> bool:
        return poly_nonneg_from(self.num, 1)

    def to_json(self) -> dict:
        return {"num": list(self.num), "den": list(self.den)}


# ---------------------------------------------------------------------------
# sequence specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantTail:
    value: Element


@dataclass(frozen=True)
class ZTailRule:
    """term(n) = z_(n + offset), the canonical decreasing sequence."""

    offset: int = 0


@dataclass(frozen=True)
class ZDiffTail:
    """term(n) = z_(n + offset) - z_(n + offset + 1): disjoint unit spikes."""

    offset: int = 0


@dataclass(frozen=True)
class ScaledTail:
    """term(n) = coeff(n) * u for a fixed element u."""

    u: Element
    coeff: RatCoeff


@dataclass(frozen=True)
class AffineTail:
    """term(n) = base + coeff(n) * u."""

    base: Element
    u: Element
    coeff: RatCoeff


TailRule = ConstantTail | ZTailRule | ZDiffTail | ScaledTail | AffineTail


@dataclass(frozen=True)
class SequenceSpec:
    space: SpaceDescriptor
    explicit: tuple[Element, ...]
    tail: TailRule

    def term(self, n: int) -> Element:
        if n < 1:
            raise ValueError("indices start at 1")
        if n <= len(self.explicit):
            return self.explicit[n - 1]
        t = self.tail
        if isinstance(t, ConstantTail):
            return t.value
        if isinstance(t, ZTailRule):
            return z_seq(self.space, n + t.offset)
        if isinstance(t, ZDiffTail):
            return sub(z_seq(self.space, n + t.offset), z_seq(self.space, n + t.offset + 1))
        if isinstance(t, ScaledTail):
            return scale(t.coeff.at(n), t.u)
        return add(t.base, scale(t.coeff.at(n), t.u))

    # -- decided properties -------------------------------------------------

    def decreasing(self) -> bool | None:
        """Exact where the rule decides it; None means undecidable here."""
        kk = len(self.explicit)
        for n in range(1, kk + 1):
            nxt = self.term(n + 1)
            if leq(nxt, self.term(n)) is not True:
                return False
        t = self.tail
        if isinstance(t, ConstantTail):
            return True
        if isinstance(t, ZTailRule):
            return True
        if isinstance(t, ZDiffTail):
            return False  # disjoint spikes are incomparable
        if isinstance(t, ScaledTail):
            if leq(zero(self.space), t.u) is True and t.coeff.nonneg() and t.coeff.nonincreasing():
                return True
            return None
        if leq(zero(self.space), t.u) is True and t.coeff.nonneg() and t.coeff.nonincreasing():
            return True
        return None

    def increasing(self) -> bool | None:
        kk = len(self.explicit)
        for n in range(1, kk + 1):
            if leq(self.term(n), self.term(n + 1)) is not True:
                return False
        t = self.tail
        if isinstance(t, ConstantTail):
            return True
        if isinstance(t, (ZTailRule, ZDiffTail)):
            return False
        if leq(zero(self.space), t.u) is True and t.coeff.nondecreasing():
            base_ok = not isinstance(t, AffineTail) or True
            return base_ok
        return None

    def positive_terms(self, n_budget: int) -> bool | None:
        for n in range(1, min(n_budget, len(self.explicit) + 2) + 1):
            x = self.term(n)
            if is_zero_element(x) or leq(zero(self.space), x) is not True:
                return False
        t = self.tail
        if isinstance(t, ConstantTail):
            return not is_zero_element(t.value) and leq(zero(self.space), t.value) is True
        if isinstance(t, (ZTailRule, ZDiffTail)):
            return True
        nn = leq(zero(self.space), t.u) is True and t.coeff.nonneg()
        if isinstance(t, AffineTail):
            nn = nn and leq(zero(self.space), t.base) is True
        return nn or None

    def as_z_family(self) -> "SeqZ":
        return SeqZ(self)

    def describe(self) -> dict:
        t = self.tail
        kind = type(t).__name__
        return {"kind": "sequence-spec", "space": str(self.space.stage), "tail": kind}


class SeqZ:
    """Adapter exposing a SequenceSpec as a decreasing-sequence handle."""

    def __init__(self, spec: SequenceSpec):
        self.spec = spec
        self.space = spec.space

    def term(self, n: int) -> Element:
        return self.spec.term(n)

    def is_decreasing(self) -> bool:
        return self.spec.decreasing() is True

    def describe(self) -> dict:
        return self.spec.describe()

    def sup_pos_part_norm(self, y: Element) -> Frac | None:
        """Exact sup over all n of ``||(y - term(n))^+||`` on finitely
        renormed stages; None when the rule cannot decide it.

        The map is nondecreasing in n for decreasing sequences, so the sup is
        the stabilized value (canonical tails) or the norm at the coefficient
        limit (rational-function tails, whose difference vectors keep a fixed
        prefix shape while every entry increases to its limit)."""
        if self.space.is_limit:
            return None
        spec = self.spec
        kk = len(spec.explicit)
        best = Frac(0)
        for n in range(1, kk + 1):
            best = max(best, norm(pos_part(sub(y, spec.term(n)))))
        t = spec.tail
        if isinstance(t, ConstantTail):
            return max(best, norm(pos_part(sub(y, t.value))))
        if isinstance(t, ZTailRule):
            p = len(base_payload(y).prefix)
            n_star = max(kk + 1, p + 1 - t.offset, 1)
            return max(best, norm(pos_part(sub(y, spec.term(n_star)))))
        if isinstance(t, (ScaledTail, AffineTail)):
            lim = t.coeff.limit()
            if lim is None or not t.coeff.nonincreasing():
                return None
            base = t.base if isinstance(t, AffineTail) else zero(self.space)
            w_inf = pos_part(sub(y, add(base, scale(lim, t.u))))
            return max(best, norm(w_inf))
        return None

    def key(self) -> tuple:
        return ("seq", str(self.space.stage), repr(self.spec))


def canonical_z_spec(space: SpaceDescriptor, offset: int = 0) -> SequenceSpec:
    return SequenceSpec(space, (), ZTailRule(offset))


def z_spike_diff_spec(space: SpaceDescriptor, offset: int = 0) -> SequenceSpec:
    return SequenceSpec(space, (), ZDiffTail(offset))


# ---------------------------------------------------------------------------
# window joins for the uniform characterization
# ---------------------------------------------------------------------------


def window_join_norm(seq: SequenceSpec, x: Element, k: int, m: int) -> Frac:
    """Exact ``|| join_(n=k..m) |term(n) - x| ||``."""
    acc = abs_(sub(seq.term(k), x))
    for n in range(k + 1, m + 1):
        acc = join(acc, abs_(sub(seq.term(n), x)))
    return norm(acc)


def window_join_sup(seq: SequenceSpec, x: Element, k: int) -> Frac | None:
    """Exact ``sup_(m>=k)`` of the window join norm, rule-decided.

    Canonical tails stabilize once the window passes every prefix length in
    sight; rational-coefficient tails attain coordinate suprema at the window
    endpoints, so the sup is the join with the coefficient-limit vector.
    """
    kk = len(seq.explicit)
    t = seq.tail
    if isinstance(t, ConstantTail):
        m_star = max(k, kk + 1)
        return window_join_norm(seq, x, k, m_star)
    if isinstance(t, (ZTailRule, ZDiffTail)):
        p_x = len(base_payload(x).prefix)
        p_terms = max(
            [len(base_payload(e).prefix) for e in seq.explicit[k - 1 : kk]] or [0]
        )
        m_star = max(k, kk, p_x, p_terms, t.offset) + 2
        return window_join_norm(seq, x, k, m_star)
    if isinstance(t, (ScaledTail, AffineTail)):
        lim = t.coeff.limit()
        if lim is None or not (t.coeff.nonincreasing() or t.coeff.nondecreasing()):
            return None
        base = t.base if isinstance(t, AffineTail) else zero(seq.space)
        acc = abs_(sub(seq.term(k), x))
        for n in range(k + 1, max(k, kk + 1) + 1):
            acc = join(acc, abs_(sub(seq.term(n), x)))
        acc = join(acc, abs_(sub(add(base, scale(lim, t.u)), x)))
        return norm(acc)
    return None


# ---------------------------------------------------------------------------
# the checkers
# ---------------------------------------------------------------------------


def uniform_conv_check(
    seq: SequenceSpec,
    x: Element,
    eps_list: list[Fraction],
    k_budget: int = 64,
) -> Report:
    """Uniform convergence to ``x``: every tolerance admits a window start
    from which all join norms stay below it.

    For each tolerance, the least power-of-two start below the budget whose
    exact window supremum beats it is recorded; otherwise the check fails
    with the stuck tolerance and the exact obstruction value (the window
    supremum at the largest probed start, which the rules make independent
    of the start when the sequence genuinely fails to converge uniformly).
    """
    report = Report(title="uniform convergence", budgets={"k_budget": k_budget})
    eps_sorted = sorted((Frac(e) for e in eps_list), reverse=True)
    if any(e <= 0 for e in eps_sorted):
        report.add("tolerances positive", REJECTED)
        return report
    starts = sorted({1, 2, 4, 8, 16, 32, k_budget} | {k for k in (k_budget,)})
    starts = [k for k in starts if k <= k_budget]
    sups: dict[int, Frac | None] = {k: window_join_sup(seq, x, k) for k in starts}
    if any(v is None for v in sups.values()):
        report.add("tail rule decides window suprema", UNKNOWN)
        return report
    obstruction = sups[max(starts)]
    for eps in eps_sorted:
        hit = next((k for k in starts if sups[k] < eps), None)
        if hit is None:
            report.add(
                f"tolerance {eps}",
                FAIL,
                stuck_eps=str(eps),
                obstruction=str(obstruction),
                window_sups={str(k): str(v) for k, v in sups.items()},
            )
            return report
        report.add(f"tolerance {eps}", PASS, k=hit, window_sup=str(sups[hit]))
    report.notes.append(f"window supremum at start {max(starts)}: {obstruction}")
    return report


def sigma_order_witness_check(
    seq: SequenceSpec,
    x: Element,
    z_witness: SequenceSpec,
    n_budget: int = 64,
    m_budget: int = 16,
) -> Report:
    """Domination of ``|term(n) - x|`` by each witness term for all but
    finitely many n, plus the infimum-zero check on the witness itself."""
    report = Report(
        title="sigma-order convergence witness",
        budgets={"n_budget": n_budget, "m_budget": m_budget},
    )
    if z_witness.decreasing() is not True:
        report.add("witness decreasing", REJECTED)
        return report
    report.add("witness decreasing", PASS)
    for m in range(1, m_budget + 1):
        w = z_witness.term(m)
        verdict = _eventually_dominated(seq, x, w, n_budget)
        if verdict is None:
            report.add(f"domination at witness index {m}", UNKNOWN)
        elif verdict is False:
            report.add(f"domination at witness index {m}", FAIL, witness_m=m)
            break
        else:
            report.add(f"domination at witness index {m}", PASS, from_n=verdict)
    down0 = x_down0_check(z_witness, m_budget=m_budget, n_budget=n_budget)
    report.add("witness has infimum zero", down0.verdict, sub_report=down0.to_json())
    return report


def _eventually_dominated(seq: SequenceSpec, x: Element, w: Element, n_budget: int):
    """Least n0 with ``|term(n) - x| <= w`` for all n >= n0; False if the rule
    refutes eventual domination; None if undecided within the budget."""
    kk = len(seq.explicit)
    t = seq.tail
    certified_from: int | None = None
    if isinstance(t, ConstantTail):
        certified_from = kk + 1 if leq(abs_(sub(t.value, x)), w) is True else None
        if certified_from is None:
            return False
    elif isinstance(t, ZTailRule) and is_zero_element(x):
        # |z_(n+off)| <= w once the moving prefix clears w's support
        hit = next(
            (n for n in range(kk + 1, n_budget + 1) if leq(seq.term(n), w) is True),
            None,
        )
        if hit is not None and leq(seq.term(hit + 1), seq.term(hit)) is True:
            certified_from = hit  # terms only decrease afterwards
    elif isinstance(t, ZDiffTail) and is_zero_element(x):
        hit = next(
            (n for n in range(kk + 1, n_budget + 1) if leq(seq.term(n), w) is True),
            None,
        )
        if hit is not None:
            p_w = len(base_payload(w).prefix)
            if base_payload(w).tail >= 1 and hit + t.offset + 1 >= p_w:
                certified_from = hit  # later spikes sit beyond w's prefix dip
            elif base_payload(w).tail >= 1:
                certified_from = max(hit, p_w)
    elif isinstance(t, (ScaledTail, AffineTail)):
        base = t.base if isinstance(t, AffineTail) else zero(seq.space)
        lim = t.coeff.limit()
        if lim is not None and t.coeff.nonincreasing() and leq(zero(seq.space), t.u) is True:
            if leq(abs_(sub(add(base, scale(lim, t.u)), x)), w) is not True:
                return False
            hit = next(
                (n for n in range(kk + 1, n_budget + 1) if leq(abs_(sub(seq.term(n), x)), w) is True),
                None,
            )
            if hit is not None and leq(abs_(sub(x, add(base, scale(lim, t.u)))), zero(seq.space)) is not None:
                # entries shrink monotonically toward the limit vector
                certified_from = hit
    if certified_from is None:
        return None
    for n in range(1, certified_from):
        if leq(abs_(sub(seq.term(n), x)), w) is True:
            certified_from = n
            break
    return certified_from


def x_down0_check(seq: SequenceSpec, m_budget: int = 64, n_budget: int = 64) -> Report:
    """Decreasing positive sequence with infimum zero, via the basis
    criterion: no basis minorant stays strictly below every term."""
    report = Report(title="infimum zero", budgets={"m_budget": m_budget, "n_budget": n_budget})
    if seq.decreasing() is not True:
        report.add("sequence decreasing", REJECTED)
        return report
    pos = seq.positive_terms(n_budget)
    if pos is False:
        report.add("terms positive", REJECTED)
        return report
    report.add("sequence decreasing and positive", PASS)
    for m in range(1, m_budget + 1):
        b = pi_basis(seq.space, m)
        found = None
        for n in range(1, n_budget + 1):
            t = seq.term(n)
            if leq(b, t) is False or b == t:
                found = n
                break
        if found is not None:
            report.add(f"basis index {m} not a lower bound", PASS, witness_n=found)
            continue
        if isinstance(seq.tail, ConstantTail) and len(seq.explicit) < n_budget:
            # the tail rule decides all n at once: the constant majorizes b
            report.add(
                f"basis index {m} minorizes every term",
                FAIL,
                witness_m=m,
                basis=b.digest(),
            )
            return report
        report.add(f"basis index {m}", UNKNOWN, stuck_m=m)
    return report


def x_up_unbounded_check(
    seq: SequenceSpec,
    dominating,
    m_budget: int = 16,
    n_budget: int = 64,
) -> Report:
    """Evidence that an increasing positive sequence escapes every member of
    a declared countable dominating family."""
    report = Report(title="order unboundedness", budgets={"m_budget": m_budget, "n_budget": n_budget})
    if seq.increasing() is not True:
        report.add("sequence increasing", REJECTED)
        return report
    if seq.positive_terms(n_budget) is False:
        report.add("terms positive", REJECTED)
        return report
    report.add("sequence increasing and positive", PASS)
    for m in range(1, m_budget + 1):
        d = dominating.term(m)
        bounded = _rule_bounded_by(seq, d)
        if bounded is True:
            report.add(f"dominated by family index {m}", FAIL, bounded_at=m)
            return report
        found = next((n for n in range(1, n_budget + 1) if leq(seq.term(n), d) is False), None)
        if found is None:
            report.add(f"dominating index {m}", UNKNOWN, stuck_m=m)
        else:
            report.add(f"escapes dominating index {m}", PASS, witness_n=found)
    return report


def _rule_bounded_by(seq: SequenceSpec, d: Element) -> bool | None:
    t = seq.tail
    explicit_ok = all(leq(e, d) is True for e in seq.explicit)
    if not explicit_ok:
        return False
    if isinstance(t, ConstantTail):
        return leq(t.value, d) is True
    if isinstance(t, (ScaledTail, AffineTail)):
        lim = t.coeff.limit()
        if lim is None:
            return None
        if t.coeff.nondecreasing() and leq(zero(seq.space), t.u) is True:
            base = t.base if isinstance(t, AffineTail) else zero(seq.space)
            return leq(add(base, scale(lim, t.u)), d) is True or None
    return None


class CanonicalDominating:
    """Multiples of the constant-one vector: a dominating family for the
    finitely renormed stages of eventually constant sequences."""

    def __init__(self, space: SpaceDescriptor):
        if space.is_limit:
            raise ValueError("no canonical dominating family on limit stages")
        self.space = space

    def term(self, m: int) -> Element:
        from .lattice import wrap_to

        return wrap_to(scale(m, base_element((), 1)), self.space)

    def describe(self) -> dict:
        return {"kind": "canonical-dominating", "space": str(self.space.stage)}


def down0_by_norm_check(seq: SequenceSpec, sigma_order_continuous_asserted: bool) -> Report:
    """Norm-vanishing criterion for infimum zero.

    Only valid under the caller-asserted sigma-order continuity of the space;
    the assertion is recorded verbatim in the report.
    """
    report = Report(
        title="infimum zero by norm decay",
        notes=[f"caller asserts sigma-order continuity: {sigma_order_continuous_asserted}"],
    )
    if seq.decreasing() is not True:
        report.add("sequence decreasing", REJECTED)
        return report
    limit = _norm_limit(seq)
    if limit is None:
        report.add("norm limit decided by rule", UNKNOWN)
        return report
    report.add(
        "norms vanish",
        PASS if limit == 0 else FAIL,
        norm_limit=str(limit),
        valid_only_under_asserted_flag=sigma_order_continuous_asserted,
    )
    return report


def _norm_limit(seq: SequenceSpec) -> Frac | None:
    t = seq.tail
    if isinstance(t, ConstantTail):
        return norm(t.value)
    if isinstance(t, ZTailRule):
        return norm(z_seq(seq.space, 1))  # canonical terms all share one norm
    if isinstance(t, ZDiffTail):
        return norm(seq.term(len(seq.explicit) + 1))  # disjoint spikes, constant norm
    lim = t.coeff.limit()
    if lim is None:
        return None
    base = t.base if isinstance(t, AffineTail) else zero(seq.space)
    return norm(add(base, scale(lim, t.u)))
