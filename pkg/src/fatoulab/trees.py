"""Well-founded trees of label strings with exact ordinal ranks.

Finite trees are explicit prefix-closed node sets whose ranks are computed by
brute force.  Stage trees from the transfinite construction are represented
structurally: a prefix step adds one to the rank certificate, and a weave
glues countably many component subtrees with rising start offsets and carries
a limit rank certificate.  Structured trees expose a uniform child protocol
so that strategies, truncation and node enumeration never materialize more
than they query.

Trees are immutable after construction; lazily built weave families are
memoized idempotently, so concurrent duplicate materialization is harmless.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable

from .ordinals import Comparison, Ordinal, compare, successor

Label = Hashable
Node = tuple  # tuple of labels, () is the root


class TreeStructureError(ValueError):
    """Input violates tree invariants (prefix closure, missing certificate)."""


# ---------------------------------------------------------------------------
# finite explicit trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteTree:
    """Prefix-closed finite set of label strings containing the empty string."""

    nodes: frozenset

    def __post_init__(self) -> None:
        if () not in self.nodes:
            raise TreeStructureError("tree must contain the empty string")
        for node in self.nodes:
            if not isinstance(node, tuple):
                raise TreeStructureError(f"node {node!r} is not a tuple")
            if node and node[:-1] not in self.nodes:
                raise TreeStructureError(f"not prefix-closed at {node!r}")

    @staticmethod
    def of(nodes: Iterable) -> "FiniteTree":
        return FiniteTree(frozenset(tuple(n) for n in nodes))

    def children(self, node: Node) -> list[Node]:
        out = [n for n in self.nodes if len(n) == len(node) + 1 and n[: len(node)] == node]
        out.sort(key=_node_sort_key)
        return out

    def __contains__(self, node) -> bool:
        return tuple(node) in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)


def _label_key(label) -> str:
    digest = getattr(label, "digest", None)
    return digest() if callable(digest) else repr(label)


def _node_sort_key(node: Node) -> tuple:
    return tuple(_label_key(x) for x in node)


def node_rank(tree: FiniteTree, node: Node) -> Ordinal:
    """Rank of ``node`` in ``tree``: 0 on extension-free nodes, else the
    sup of child ranks plus one (for finite trees the recursion over
    immediate children realizes the sup over all proper extensions)."""
    node = tuple(node)
    if node not in tree:
        raise TreeStructureError(f"node {node!r} not in tree")
    return Ordinal.from_int(_rank_int(tree, node, {}))


def _rank_int(tree: FiniteTree, node: Node, memo: dict) -> int:
    if node in memo:
        return memo[node]
    kids = tree.children(node)
    value = 0 if not kids else max(_rank_int(tree, k, memo) for k in kids) + 1
    memo[node] = value
    return value


def finite_rank(tree: FiniteTree) -> Ordinal:
    """Tree rank: root rank plus one.  Finite trees have finite ranks."""
    return successor(node_rank(tree, ()))


# ---------------------------------------------------------------------------
# structured (possibly countable) trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChildEdge:
    step: Hashable
    label: Label
    subtree: "StructuredTree"


@dataclass(frozen=True)
class ExplicitTree:
    tree: FiniteTree

    def root_rank(self) -> Ordinal:
        return node_rank(self.tree, ())

    def child_nodes(self, family_budget: int = 8) -> list[ChildEdge]:
        out = []
        for idx, child in enumerate(self.tree.children(()), start=1):
            sub = FiniteTree.of(
                n[1:] for n in self.tree.nodes if n[: 1] == child or n == ()
            )
            out.append(ChildEdge(idx, child[0], ExplicitTree(sub)))
        return out


@dataclass(frozen=True)
class PrefixedTree:
    """One label prepended to every nonempty string of ``inner``."""

    root_label: Label
    inner: "StructuredTree"

    def root_rank(self) -> Ordinal:
        return successor(self.inner.root_rank())

    def child_nodes(self, family_budget: int = 8) -> list[ChildEdge]:
        return [ChildEdge(1, self.root_label, self.inner)]


class WeaveTree:
    """Limit-stage weave: ``family(k)`` is a lazily built subtree sharing the
    weave root, with start offset ``k``.  Family root ranks must be cofinal in
    ``stage``; the rank certificate is then ``stage + 1``."""

    def __init__(self, stage: Ordinal, family: Callable[[int], "StructuredTree"], note: str = ""):
        self.stage = stage
        self._family = family
        self.note = note
        self._memo: dict[int, StructuredTree] = {}

    def family(self, k: int) -> "StructuredTree":
        if k < 1:
            raise TreeStructureError("family index must be >= 1")
        if k not in self._memo:
            self._memo[k] = self._family(k)
        return self._memo[k]

    def root_rank(self) -> Ordinal:
        return self.stage

    def child_nodes(self, family_budget: int = 8) -> list[ChildEdge]:
        out = []
        for k in range(1, family_budget + 1):
            for edge in self.family(k).child_nodes(family_budget):
                out.append(ChildEdge((k, edge.step), edge.label, edge.subtree))
        return out


class MappedTree:
    """Structure of ``base`` with labels rewritten by ``fn(path, old_label)``,
    where ``path`` is the base-tree step path to the node."""

    def __init__(self, base: "StructuredTree", fn: Callable[[tuple, Label], Label], _path: tuple = ()):
        self.base = base
        self.fn = fn
        self._path = _path

    def root_rank(self) -> Ordinal:
        return self.base.root_rank()

    def child_nodes(self, family_budget: int = 8) -> list[ChildEdge]:
        out = []
        for edge in self.base.child_nodes(family_budget):
            path = self._path + (edge.step,)
            out.append(
                ChildEdge(edge.step, self.fn(path, edge.label), MappedTree(edge.subtree, self.fn, path))
            )
        return out


StructuredTree = ExplicitTree | PrefixedTree | WeaveTree | MappedTree


def structured_rank(tree: StructuredTree) -> Ordinal:
    """Rank certificate: explicit trees by brute force, a prefix adds one,
    a stage-``a`` weave certifies ``a + 1`` from its cofinal families."""
    return successor(tree.root_rank())


def rank_trace(tree: StructuredTree) -> list[str]:
    """Human-auditable derivation of the rank certificate."""
    if isinstance(tree, ExplicitTree):
        return [f"explicit tree with {len(tree.tree)} nodes: brute-force rank {structured_rank(tree)}"]
    if isinstance(tree, PrefixedTree):
        return rank_trace(tree.inner) + [
            f"prefix step: rank {structured_rank(tree.inner)} + 1 = {structured_rank(tree)}"
        ]
    if isinstance(tree, MappedTree):
        return rank_trace(tree.base) + ["label rewrite preserves structure and rank"]
    ranks = [str(tree.family(k).root_rank()) for k in range(1, 4)]
    return [
        f"weave at stage {tree.stage}: family root ranks {', '.join(ranks)}, ... are cofinal in {tree.stage}",
        "node rank is the minimum over component trees, attained at the start offset",
        f"root rank {tree.stage}, certificate {structured_rank(tree)}",
    ]


def child_with_rank(tree: StructuredTree, beta: Ordinal, family_limit: int = 4096) -> ChildEdge | None:
    """Canonical child of the root with node rank >= ``beta``, or None."""
    if isinstance(tree, ExplicitTree):
        for edge in tree.child_nodes():
            if compare(edge.subtree.root_rank(), beta) is not Comparison.LESS:
                return edge
        return None
    if isinstance(tree, PrefixedTree):
        edge = tree.child_nodes()[0]
        if compare(edge.subtree.root_rank(), beta) is Comparison.LESS:
            return None
        return edge
    if isinstance(tree, MappedTree):
        inner = child_with_rank(tree.base, beta, family_limit)
        if inner is None:
            return None
        path = tree._path + (inner.step,)
        return ChildEdge(inner.step, tree.fn(path, inner.label), MappedTree(inner.subtree, tree.fn, path))
    for k in range(1, family_limit + 1):
        fam = tree.family(k)
        if compare(fam.root_rank(), beta) is Comparison.GREATER:
            edge = child_with_rank(fam, beta, family_limit)
            if edge is not None:
                return ChildEdge((k, edge.step), edge.label, edge.subtree)
    return None


def truncate(tree: StructuredTree, depth: int, components: int) -> FiniteTree:
    """Explicit finite subtree within the given depth and family budgets.

    Always rank-sound: ``finite_rank(truncate(t, ...)) <= structured_rank(t)``,
    and for weaves the truncation ranks grow without bound as budgets do.
    """
    if depth < 1 or components < 1:
        raise TreeStructureError("budgets must be >= 1")
    nodes = {()}
    _collect(tree, (), depth, components, nodes)
    return FiniteTree(frozenset(nodes))


def _collect(tree: StructuredTree, prefix: Node, depth: int, components: int, nodes: set) -> None:
    if depth == 0:
        return
    for edge in tree.child_nodes(components):
        node = prefix + (edge.label,)
        nodes.add(node)
        _collect(edge.subtree, node, depth - 1, components, nodes)


def enumerate_strings(tree: StructuredTree, depth: int, components: int) -> list[Node]:
    """All label strings (excluding the root) within the budgets, sorted by
    length then digest for determinism."""
    explicit = truncate(tree, depth, components)
    out = [n for n in explicit.nodes if n]
    out.sort(key=lambda n: (len(n), _node_sort_key(n)))
    return out


def countable_refinement(tree: StructuredTree, target: Ordinal) -> StructuredTree:
    """Countable, finitely describable subtree with certificate >= ``target``.

    Explicit trees and weaves are already countable with exact certificates,
    so they are returned whole; a prefix recurses with the target less one.
    """
    if compare(structured_rank(tree), target) is Comparison.LESS:
        raise TreeStructureError(
            f"certificate {structured_rank(tree)} is below target {target}"
        )
    if isinstance(tree, PrefixedTree) and not target.is_zero:
        kind = target.kind()
        if kind.value == "successor":
            return PrefixedTree(tree.root_label, countable_refinement(tree.inner, target.predecessor()))
    return tree


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def to_dot(tree: FiniteTree, name: str = "tree") -> str:
    """DOT rendering of an explicit tree; node labels are label digests."""
    lines = [f"digraph {name} {{", '  rankdir=TB;', '  node [shape=box, fontsize=10];']
    ids = {node: f"n{i}" for i, node in enumerate(sorted(tree.nodes, key=lambda n: (len(n), _node_sort_key(n))))}
    for node, nid in ids.items():
        text = "()" if not node else _label_key(node[-1])
        lines.append(f'  {nid} [label="{text}"];')
    for node, nid in ids.items():
        if node:
            lines.append(f"  {ids[node[:-1]]} -> {nid};")
    lines.append("}")
    return "\n".join(lines)


def skeleton(tree: StructuredTree, families: int = 3) -> dict:
    """JSON-able structural summary with rank certificates and traces."""
    out: dict[str, Any] = {"rank_cert": str(structured_rank(tree)), "trace": rank_trace(tree)}
    if isinstance(tree, ExplicitTree):
        out["kind"] = "explicit"
        out["nodes"] = [[_label_key(x) for x in n] for n in sorted(tree.tree.nodes, key=lambda n: (len(n), _node_sort_key(n)))]
    elif isinstance(tree, PrefixedTree):
        out["kind"] = "prefixed"
        out["root_label"] = _label_key(tree.root_label)
        out["inner"] = skeleton(tree.inner, families)
    elif isinstance(tree, MappedTree):
        out["kind"] = "mapped"
        out["base"] = skeleton(tree.base, families)
    else:
        out["kind"] = "weave"
        out["stage"] = str(tree.stage)
        out["families"] = {str(k): skeleton(tree.family(k), families) for k in range(1, families + 1)}
    return out
