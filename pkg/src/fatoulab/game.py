"""The ordinal descent game over a decreasing sequence.

Player I plays a strictly decreasing chain of ordinals below the game bound;
player II answers every ordinal with a strictly positive element.  The run
ends when I plays zero and II responds, and II wins exactly when the string
of answers satisfies the membership inequalities (links judged exactly,
z-inequalities refuted-or-certified within the judge's budget).

Runs always terminate because the played ordinals strictly descend.  All
strategies are deterministic functions of the visible history, so stored
transcripts replay bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

from .lattice import (
    Element,
    SpaceDescriptor,
    is_zero_element,
    leq,
    zero,
)
from .ordinals import ZERO, Comparison, Ordinal, compare
from .psi import PsiVerdict, can_extend, pool_tree, psi_certify
from .trees import FiniteTree, StructuredTree, child_with_rank, finite_rank


class StrategyDefect(RuntimeError):
    """A certified tree failed to provide a child of the promised rank."""


@dataclass(frozen=True)
class GameState:
    alpha: Ordinal
    history: tuple[tuple[Ordinal, Element], ...]
    pending: Ordinal | None = None  # I's ordinal awaiting II's reply
    finished: bool = False

    @property
    def bound(self) -> Ordinal:
        """Exclusive upper bound for I's next ordinal."""
        return self.history[-1][0] if self.history else self.alpha

    @property
    def turn(self) -> str:
        return "II" if self.pending is not None else "I"

    def string(self) -> tuple[Element, ...]:
        return tuple(y for _, y in self.history)


@dataclass(frozen=True)
class Strategy:
    role: str  # "I" | "II"
    move: Callable[[GameState], object]
    name: str = "anonymous"


@dataclass
class Transcript:
    alpha: Ordinal
    z_desc: dict
    n_budget: int
    moves: list[dict] = field(default_factory=list)
    winner: str | None = None
    reason: str = ""
    judgment: PsiVerdict | None = None

    def to_json(self) -> dict:
        return {
            "alpha": str(self.alpha),
            "z": self.z_desc,
            "n_budget": self.n_budget,
            "moves": self.moves,
            "winner": self.winner,
            "reason": self.reason,
            "judgment": self.judgment.to_json() if self.judgment else None,
        }


def judge_string(space: SpaceDescriptor, z, string, n_budget: int) -> tuple[str, str, PsiVerdict]:
    """(winner, reason, verdict) for a completed run's answer string."""
    verdict = psi_certify(space, z, string, n_budget=n_budget)
    if verdict.refuted:
        return "I", f"inequality refuted at {verdict.witness}", verdict
    if verdict.outcome == "certified":
        return "II", "string certified for all n", verdict
    return "II", f"no refutation within n <= {n_budget}", verdict


def play(
    alpha: Ordinal,
    z,
    strat_i: Strategy,
    strat_ii: Strategy,
    n_budget: int = 64,
    space: SpaceDescriptor | None = None,
    max_rounds: int = 10_000,
) -> tuple[str, Transcript]:
    """Run one game to completion and judge it.

    Illegal moves (non-descending ordinal, non-positive element) lose
    immediately for the offender and are flagged distinctly from judged
    losses.  Termination is guaranteed by strict ordinal descent; the round
    cap only guards against a broken strategy replaying the same ordinal.
    """
    space = space or z.space
    transcript = Transcript(alpha=alpha, z_desc=z.describe(), n_budget=n_budget)
    state = GameState(alpha=alpha, history=())
    for _ in range(max_rounds):
        beta = strat_i.move(state)
        if not isinstance(beta, Ordinal) or compare(beta, state.bound) is not Comparison.LESS:
            transcript.winner, transcript.reason = "II", f"illegal move by I: {beta}"
            return "II", transcript
        transcript.moves.append({"player": "I", "ordinal": str(beta)})
        state = replace(state, pending=beta)
        y = strat_ii.move(state)
        bad = (
            not isinstance(y, Element)
            or y.space != space
            or is_zero_element(y)
            or leq(zero(space), y) is not True
        )
        if bad:
            transcript.winner, transcript.reason = "I", "illegal move by II: not a positive element"
            return "I", transcript
        transcript.moves.append({"player": "II", "element": y.digest()})
        state = GameState(alpha=alpha, history=state.history + ((beta, y),))
        if beta == ZERO:
            winner, reason, verdict = judge_string(space, z, state.string(), n_budget)
            transcript.winner, transcript.reason, transcript.judgment = winner, reason, verdict
            return winner, transcript
    raise StrategyDefect("round cap exceeded without reaching zero")


# ---------------------------------------------------------------------------
# named strategies
# ---------------------------------------------------------------------------


def fatou_strategy() -> Strategy:
    """Player I plays zero immediately, ending the game after one answer."""
    return Strategy(role="I", move=lambda state: ZERO, name="fatou")


def descent_strategy(steps: list[Ordinal]) -> Strategy:
    """Player I plays a fixed descending chain (must end with zero)."""
    chain = list(steps)

    def move(state: GameState) -> Ordinal:
        idx = len(state.history)
        return chain[idx] if idx < len(chain) else ZERO

    return Strategy(role="I", move=move, name="descent")


def tree_strategy(tree: StructuredTree) -> Strategy:
    """Player II follows a rank-certified tree: after I plays beta, extend the
    current node to a child of node rank >= beta.

    The strategy is a pure function of the history: the cursor is re-derived
    from scratch each move, so identical histories give identical answers.
    """

    def move(state: GameState) -> Element:
        cursor = tree
        for beta, _ in state.history:
            edge = child_with_rank(cursor, beta)
            if edge is None:
                raise StrategyDefect(f"no child of rank >= {beta} (certificate violated)")
            cursor = edge.subtree
        assert state.pending is not None
        edge = child_with_rank(cursor, state.pending)
        if edge is None:
            raise StrategyDefect(f"no child of rank >= {state.pending} (certificate violated)")
        return edge.label

    return Strategy(role="II", move=move, name="tree")


def pool_strategy(pool: list[Element]) -> Strategy:
    """Player II cycles deterministically through a fixed pool."""
    ordered = sorted(pool, key=lambda e: e.digest())

    def move(state: GameState) -> Element:
        return ordered[len(state.history) % len(ordered)]

    return Strategy(role="II", move=move, name="pool")


# ---------------------------------------------------------------------------
# exhaustive solving of finite restrictions
# ---------------------------------------------------------------------------


@dataclass
class SolveResult:
    winner: str
    i_can_force: bool
    ii_can_force: bool
    alpha: int
    capped_tree: FiniteTree
    tree_rank_exceeds_alpha: bool

    @property
    def determined(self) -> bool:
        return self.i_can_force != self.ii_can_force

    @property
    def agrees_with_rank(self) -> bool:
        # rank above alpha must mean II wins, and conversely
        return self.tree_rank_exceeds_alpha == (self.winner == "II")


def exhaustive_solve(alpha, z, pool: list[Element], n_budget: int = 64) -> SolveResult:
    """Full backward induction over the finite restriction of the game.

    Player I is restricted to finite ordinals below ``alpha`` and player II
    to the finite pool.  Both players' forcing powers are computed by
    independent recursions so determinacy can be validated rather than
    assumed, and the winner is cross-checked against the rank criterion on
    the pool-restricted membership tree.
    """
    a = alpha.to_int() if isinstance(alpha, Ordinal) else int(alpha)
    if a < 1:
        raise ValueError("the game bound must be at least 1")
    space = z.space
    legal = [
        y
        for y in sorted(pool, key=lambda e: e.digest())
        if not is_zero_element(y) and leq(zero(space), y) is True
    ]

    good_memo: dict[tuple[int, ...], bool] = {}

    def good(s: tuple[int, ...]) -> bool:
        if s not in good_memo:
            string = tuple(legal[j] for j in s[:-1])
            good_memo[s] = can_extend(space, z, string, legal[s[-1]])
        return good_memo[s]

    @lru_cache(maxsize=None)
    def ii_survives(bound: int, s: tuple[int, ...]) -> bool:
        for beta in range(bound):
            ok = [j for j in range(len(legal)) if good(s + (j,))]
            if beta == 0:
                if not ok:
                    return False
            else:
                if not any(ii_survives(beta, s + (j,)) for j in ok):
                    return False
        return True

    @lru_cache(maxsize=None)
    def i_forces(bound: int, s: tuple[int, ...]) -> bool:
        for beta in range(bound):
            ok = [j for j in range(len(legal)) if good(s + (j,))]
            if beta == 0:
                if not ok:
                    return True
            else:
                if all(i_forces(beta, s + (j,)) for j in ok):
                    return True
        return False

    ii_win = ii_survives(a, ()) if legal else False
    i_win = i_forces(a, ()) if legal else True
    capped = pool_tree(space, z, legal, depth=a)
    exceeds = any(len(node) == a for node in capped.nodes)
    winner = "II" if ii_win else "I"
    return SolveResult(
        winner=winner,
        i_can_force=i_win,
        ii_can_force=ii_win,
        alpha=a,
        capped_tree=capped,
        tree_rank_exceeds_alpha=exceeds,
    )
