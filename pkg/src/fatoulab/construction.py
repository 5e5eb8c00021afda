"""Transfinite builder of the stage bundles.

``build(alpha)`` assembles, by structural recursion on the stage notation,
the stage space, its countable basis of minorants, the scalar homomorphism,
the canonical decreasing unit sequence, and a rank-certified witness tree
inside the membership tree of that sequence.

The base stage is explicit; a successor stage renorms the previous one and
prepends the previous stage's first canonical vector to every witness string;
a limit stage weaves the child-stage witness trees together: family k starts
at component offset k, its nodes project at every component r >= k to a
component-stage witness node of the same length, and node ranks transfer
exactly, so the weave root has rank equal to the stage and the certificate
exceeds it by design.

Stage bundles and embedded-label lookups are memoized by notation; building
a limit stage never eagerly builds infinitely many children.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import trees
from .lattice import (
    BranchTail,
    CanonicalZ,
    Element,
    Frac,
    LimitSeq,
    SpaceDescriptor,
    base_element,
    in_sphere_S,
    leq,
    norm,
    norm_bounds,
    phi,
    pi_basis,
    pos_part,
    space_for,
    sub,
    wrap,
    z_seq,
    zero,
)
from .ordinals import (
    Comparison,
    Ordinal,
    OrdinalKind,
    compare,
    fundamental_sequence,
    successor,
)
from .psi import psi_certify
from .reporting import FAIL, PASS, REJECTED, UNKNOWN, Report
from .trees import (
    ExplicitTree,
    FiniteTree,
    MappedTree,
    PrefixedTree,
    StructuredTree,
    WeaveTree,
    finite_rank,
    structured_rank,
    truncate,
)

ONE = Ordinal.from_int(1)


# ---------------------------------------------------------------------------
# node references: where a witness label comes from
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathRef:
    """A node of the stage witness tree, addressed by its child-step path."""

    stage: Ordinal
    path: tuple

    def key(self) -> tuple:
        return ("path", str(self.stage), self.path)


@dataclass(frozen=True)
class EmbRef:
    """The canonical image of ``src`` in the witness tree of a higher stage.

    Images preserve string length and never lower node ranks: a successor
    stage prepends its first canonical vector and drops the last label, and a
    limit stage routes through the least family whose component stage reaches
    the source.
    """

    src: "NodeRef"
    dst: Ordinal

    def __post_init__(self) -> None:
        if compare(ref_stage(self.src), self.dst) is not Comparison.LESS:
            raise ValueError("embedding target must be a strictly higher stage")

    def key(self) -> tuple:
        return ("emb", self.src.key(), str(self.dst))


NodeRef = PathRef | EmbRef


def ref_stage(ref: NodeRef) -> Ordinal:
    return ref.stage if isinstance(ref, PathRef) else ref.dst


@dataclass(frozen=True)
class WeaveHandle:
    """Tail resolver for a limit-stage witness label.

    ``component_label(m, i)`` yields the i-th label of the embedded node in
    the m-th child stage, or zero below the family's start offset.  Labels
    are unit-sphere members of their stages by construction.
    """

    stage: Ordinal
    family: int
    ref: NodeRef

    @property
    def start(self) -> int:
        return self.family

    def key(self) -> tuple:
        return ("weave", str(self.stage), self.family, self.ref.key())

    def component_label(self, m: int, i: int) -> Element:
        child_stage = fundamental_sequence(self.stage, m)
        if m < self.family:
            return zero(space_for(child_stage))
        src_stage = ref_stage(self.ref)
        ref = self.ref if child_stage == src_stage else EmbRef(self.ref, child_stage)
        return ref_label(ref, i)

    def __hash__(self):
        return hash(self.key())


def _least_family_reaching(dst: Ordinal, src: Ordinal, cap: int = 100_000) -> int:
    for k in range(1, cap + 1):
        if compare(fundamental_sequence(dst, k), src) is not Comparison.LESS:
            return k
    raise RuntimeError(f"no family of {dst} reaches {src} below the cap")


@lru_cache(maxsize=None)
def ref_label(ref: NodeRef, i: int) -> Element:
    """i-th label of the node a reference points at, materialized lazily."""
    if isinstance(ref, PathRef):
        return node_labels(ref.stage, ref.path)[i - 1]
    src_stage = ref_stage(ref.src)
    kind = ref.dst.kind()
    if kind is OrdinalKind.SUCCESSOR:
        below = ref.dst.predecessor()
        if i == 1:
            return wrap(z_seq(space_for(below), 1))
        inner = ref.src if below == src_stage else EmbRef(ref.src, below)
        return wrap(ref_label(inner, i - 1))
    k = _least_family_reaching(ref.dst, src_stage)
    target = fundamental_sequence(ref.dst, k)
    inner = ref.src if target == src_stage else EmbRef(ref.src, target)
    return Element(space_for(ref.dst), LimitSeq((), BranchTail(WeaveHandle(ref.dst, k, inner), i)))


# ---------------------------------------------------------------------------
# witness trees
# ---------------------------------------------------------------------------


_WITNESS: dict[Ordinal, StructuredTree] = {}


def witness_tree(stage: Ordinal) -> StructuredTree:
    if stage in _WITNESS:
        return _WITNESS[stage]
    if stage == ONE:
        y1 = base_element((), 1)
        tree: StructuredTree = ExplicitTree(FiniteTree.of([(), (y1,)]))
    elif stage.kind() is OrdinalKind.SUCCESSOR:
        below = stage.predecessor()
        lifted = MappedTree(witness_tree(below), lambda path, old: wrap(old))
        tree = PrefixedTree(wrap(z_seq(space_for(below), 1)), lifted)
    else:
        tree = WeaveTree(stage, _weave_family_builder(stage), note="canonical witness weave")
    _WITNESS[stage] = tree
    return tree


def _weave_family_builder(stage: Ordinal):
    def family(k: int) -> StructuredTree:
        child = fundamental_sequence(stage, k)

        def relabel(path: tuple, old) -> Element:
            handle = WeaveHandle(stage, k, PathRef(child, path))
            return Element(space_for(stage), LimitSeq((), BranchTail(handle, len(path))))

        return MappedTree(witness_tree(child), relabel)

    return family


@lru_cache(maxsize=None)
def node_labels(stage: Ordinal, path: tuple) -> tuple[Element, ...]:
    """Label string of the witness-tree node at ``path``."""
    tree = witness_tree(stage)
    labels: list[Element] = []
    cursor: StructuredTree = tree
    for step in path:
        edge = _edge_at(cursor, step)
        labels.append(edge.label)
        cursor = edge.subtree
    return tuple(labels)


def _edge_at(tree: StructuredTree, step) -> trees.ChildEdge:
    if isinstance(tree, WeaveTree):
        k, inner = step
        fam = tree.family(k)
        edge = _edge_at(fam, inner)
        return trees.ChildEdge(step, edge.label, edge.subtree)
    for edge in tree.child_nodes():
        if edge.step == step:
            return edge
    raise KeyError(f"no child with step {step!r}")


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ConstructionBundle:
    stage: Ordinal
    space: SpaceDescriptor
    z: CanonicalZ
    witness: StructuredTree
    provenance: tuple[str, ...]

    @property
    def rank_cert(self) -> Ordinal:
        return structured_rank(self.witness)

    def basis(self, index: int) -> Element:
        return pi_basis(self.space, index)

    def phi(self, x: Element) -> Frac:
        return phi(x)


_BUNDLES: dict[Ordinal, ConstructionBundle] = {}


def build(alpha: Ordinal) -> ConstructionBundle:
    """Stage bundle for ``alpha``, deterministic and memoized by notation."""
    if alpha.is_zero:
        raise ValueError("stages start at 1")
    if alpha in _BUNDLES:
        return _BUNDLES[alpha]
    kind = alpha.kind()
    if alpha == ONE:
        provenance = ("base stage: eventually constant rationals, norm max(sup/3, |limit|)",)
    elif kind is OrdinalKind.SUCCESSOR:
        below = build(alpha.predecessor())
        provenance = below.provenance + (
            f"stage {alpha}: renorm max(previous/7, |limit functional|); "
            f"witness prepends the stage-{below.stage} first canonical vector",
        )
    else:
        provenance = (
            f"stage {alpha}: sup-normed sum over child stages "
            f"{fundamental_sequence(alpha, 1)}, {fundamental_sequence(alpha, 2)}, ...; "
            "witness weaves the child witness trees with start offsets 1, 2, ...",
        )
    bundle = ConstructionBundle(
        stage=alpha,
        space=space_for(alpha),
        z=CanonicalZ(space_for(alpha)),
        witness=witness_tree(alpha),
        provenance=provenance,
    )
    _BUNDLES[alpha] = bundle
    return bundle


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def verify(
    bundle: ConstructionBundle,
    n_budget: int = 64,
    component_budget: int = 16,
    depth_budget: int = 6,
) -> Report:
    """Re-verify the five inductive stage properties with explicit budgets.

    (a) the canonical sequence is decreasing with unit norm and functional
    value one; (b) no basis minorant stays below every term (infimum-zero
    evidence); (c) every stored witness node certifies membership; (d) every
    witness label lies on the unit sphere; (e) the rank certificate exceeds
    the stage, corroborated by truncation ranks.
    """
    report = Report(
        title=f"stage {bundle.stage} verification",
        budgets={
            "n_budget": n_budget,
            "component_budget": component_budget,
            "depth_budget": depth_budget,
        },
    )
    space = bundle.space
    z = bundle.z

    terms = [z.term(n) for n in range(1, n_budget + 1)]
    bad = [n for n, t in enumerate(terms, start=1) if not in_sphere_S(t)]
    not_decreasing = [
        n for n in range(1, n_budget) if leq(terms[n], terms[n - 1]) is not True
    ]
    report.add(
        "z-terms on the unit sphere",
        PASS if not bad else FAIL,
        violations=bad,
        checked=n_budget,
    )
    report.add(
        "z-sequence decreasing",
        PASS if not not_decreasing else FAIL,
        violations=not_decreasing,
        checked=n_budget - 1,
    )

    stuck = []
    witnesses = {}
    for m in range(1, component_budget + 1):
        b = bundle.basis(m)
        hit = None
        for n in range(1, n_budget + 1):
            v = leq(b, terms[n - 1])
            if v is False or b == terms[n - 1]:
                hit = n
                break
        if hit is None:
            stuck.append(m)
        else:
            witnesses[m] = hit
    report.add(
        "no basis minorant below every term",
        PASS if not stuck else UNKNOWN,
        witnesses=witnesses,
        stuck=stuck,
    )

    strings = trees.enumerate_strings(bundle.witness, depth_budget, component_budget)
    bad_nodes = []
    for s in strings:
        verdict = psi_certify(space, z, s, n_budget=n_budget)
        if verdict.outcome != "certified":
            bad_nodes.append({"node": [e.digest() for e in s], "outcome": verdict.outcome})
    report.add(
        "witness nodes certify membership",
        PASS if not bad_nodes else FAIL,
        nodes_checked=len(strings),
        defects=bad_nodes,
    )

    labels = {lbl for s in strings for lbl in s}
    off_sphere = [lbl.digest() for lbl in labels if not in_sphere_S(lbl)]
    report.add(
        "witness labels on the unit sphere",
        PASS if not off_sphere else FAIL,
        labels_checked=len(labels),
        defects=off_sphere,
    )

    cert = bundle.rank_cert
    cert_ok = compare(cert, bundle.stage) is Comparison.GREATER
    trunc_info = {}
    trunc_ok = True
    for budget in range(1, min(8, component_budget) + 1):
        tr = truncate(bundle.witness, depth=budget + 2, components=budget)
        r = finite_rank(tr)
        trunc_info[budget] = str(r)
        if compare(r, cert) is Comparison.GREATER:
            trunc_ok = False
        if bundle.space.is_limit and r.is_finite and r.to_int() < budget:
            trunc_ok = False
    report.add(
        "rank certificate exceeds the stage",
        PASS if (cert_ok and trunc_ok) else FAIL,
        certificate=str(cert),
        stage=str(bundle.stage),
        truncation_ranks=trunc_info,
    )

    if bundle.stage.kind() is OrdinalKind.SUCCESSOR and not bundle.stage == ONE:
        _successor_chain_check(bundle, n_budget, report)
    return report


def _successor_chain_check(bundle: ConstructionBundle, n_budget: int, report: Report) -> None:
    """Replay the renorming chain with exact values.

    For every n: ``||(z1' - z_n)^+|| = (1/7) ||(z1' - z_n')^+||'`` at the new
    stage, bounded by 1/7 < 1/3; and the first two witness labels are within
    2/7 < 1/3 of each other.  (Primes denote the previous stage.)
    """
    below = bundle.stage.predecessor()
    prev_space = space_for(below)
    z1_prev = z_seq(prev_space, 1)
    z1_here = wrap(z1_prev)
    failures = []
    for n in range(1, n_budget + 1):
        zn_here = z_seq(bundle.space, n)
        zn_prev = z_seq(prev_space, n)
        lhs = norm_bounds(pos_part(sub(z1_here, zn_here)))
        prev = norm_bounds(pos_part(sub(z1_prev, zn_prev)))
        ok = (
            lhs.lower == prev.lower / 7
            and lhs.upper == prev.upper / 7
            and lhs.upper <= Frac(1, 7)
            and Frac(1, 7) < Frac(1, 3)
        )
        if not ok:
            failures.append(n)
    report.add(
        "successor chain: first-vector inequalities exact",
        PASS if not failures else FAIL,
        violations=failures,
        checked=n_budget,
    )
    edges = bundle.witness.child_nodes(2)
    first = edges[0]
    second_edges = first.subtree.child_nodes(2)
    if second_edges:
        gap = norm_bounds(sub(second_edges[0].label, first.label))
        ok = gap.upper <= Frac(2, 7) and Frac(2, 7) < Frac(1, 3)
        report.add(
            "successor chain: first link within 2/7 < 1/3",
            PASS if ok else FAIL,
            value_upper=str(gap.upper),
        )


def successor_norm_lemma_check(x: Element, y: Element) -> Report:
    """For unit-sphere x, y of one stage, the next stage rescales differences
    by exactly 1/7 and kills the functional on positive parts."""
    report = Report(title="successor rescaling identities")
    if x.space != y.space:
        report.add("inputs share a stage", REJECTED, reason="space mismatch")
        return report
    if not (in_sphere_S(x) and in_sphere_S(y)):
        report.add("inputs on the unit sphere", REJECTED)
        return report
    d = sub(x, y)
    dp = pos_part(d)
    report.add("functional vanishes on the positive part", PASS if phi(dp) == 0 else FAIL, value=str(phi(dp)))
    lifted_pos = norm_bounds(pos_part(sub(wrap(x), wrap(y))))
    lifted_diff = norm_bounds(sub(wrap(x), wrap(y)))
    here_pos = norm_bounds(dp)
    here_diff = norm_bounds(d)
    ok_pos = lifted_pos.lower == here_pos.lower / 7 and lifted_pos.upper == here_pos.upper / 7
    ok_diff = lifted_diff.lower == here_diff.lower / 7 and lifted_diff.upper == here_diff.upper / 7
    report.add("positive part rescales by 1/7", PASS if ok_pos else FAIL,
               next_stage=str(lifted_pos.upper), stage=str(here_pos.upper))
    report.add("difference rescales by 1/7", PASS if ok_diff else FAIL,
               next_stage=str(lifted_diff.upper), stage=str(here_diff.upper))
    return report
