"""Forward simulation of planar branching trees and genealogy extraction.

A tree starts from a single founder at generation -N and runs to generation
0.  Children are laid out left to right under their mother, and nodes at a
given depth are ordered left to right across the whole tree, so lineages
never cross.  The present individuals (depth N) are ranked 1..K in that
planar order.

Extraction functions recover, for each present individual i:

* its ancestor's rank at every level (``ancestor_index``),
* the pairwise coalescent times of consecutive individuals (``coalescent_times``),
* the count of extra daughters of each spine ancestor whose descendants have
  rank >= i (``extract_D``), and the derived truncated vector (``extract_B``)
  and reduced point-measure sequence (``extract_Btilde``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .environment import Environment
from .errors import (
    AttemptCapError,
    DegenerateEnvironmentError,
    DomainError,
    HorizonError,
)
from .pgf import survival_prob
from .sampling import UniformStream, as_stream, draw_count


class Tree:
    """Planar branching tree over a fixed number of generations.

    ``counts[d][j]`` is the child count of the j-th node (left to right) at
    depth d, for 0 <= d < N.  Depth-N nodes are the present individuals.
    """

    __slots__ = (
        "env",
        "counts",
        "parents",
        "child_start",
        "alive",
        "max_rank",
        "attempts",
    )

    def __init__(self, env: Environment, counts: list[list[int]]):
        N = env.horizon
        if len(counts) != N:
            raise DomainError(f"need {N} generations of child counts, got {len(counts)}")
        if len(counts[0]) != 1:
            raise DomainError("exactly one founder expected")
        self.env = env
        self.counts = counts
        self.attempts = 1

        # children of node j at depth d occupy a contiguous block at depth d+1
        self.child_start: list[list[int]] = []
        self.parents: list[list[int]] = [[-1]]
        for d in range(N):
            row = counts[d]
            starts = []
            acc = 0
            parent_row = []
            for j, c in enumerate(row):
                starts.append(acc)
                acc += c
                parent_row.extend([j] * c)
            self.child_start.append(starts)
            self.parents.append(parent_row)
            expected = len(self.parents[d])
            if d > 0 and len(row) != expected:
                raise DomainError(
                    f"depth {d} has {len(row)} counts but {expected} nodes"
                )

        # alive = has at least one descendant at depth N (present individuals
        # count as their own descendants)
        k = len(self.parents[N])
        self.alive: list[list[bool]] = [None] * (N + 1)  # type: ignore[list-item]
        self.max_rank: list[list[int]] = [None] * (N + 1)  # type: ignore[list-item]
        self.alive[N] = [True] * k
        self.max_rank[N] = list(range(1, k + 1))
        for d in range(N - 1, -1, -1):
            row = counts[d]
            starts = self.child_start[d]
            child_rank = self.max_rank[d + 1]
            alive_row = []
            rank_row = []
            for j, c in enumerate(row):
                best = 0
                for pos in range(starts[j], starts[j] + c):
                    if child_rank[pos] > best:
                        best = child_rank[pos]
                alive_row.append(best > 0)
                rank_row.append(best)
            self.alive[d] = alive_row
            self.max_rank[d] = rank_row

    @property
    def horizon(self) -> int:
        return self.env.horizon

    @property
    def k(self) -> int:
        """Number of present individuals."""
        return len(self.parents[self.horizon])

    def n_nodes(self, depth: int) -> int:
        if not 0 <= depth <= self.horizon:
            raise HorizonError(f"depth {depth} outside [0, {self.horizon}]")
        return len(self.parents[depth])

    def label(self, depth: int, pos: int) -> tuple[int, ...]:
        """Ulam-Harris label: 1-based child positions from the founder down."""
        out = []
        d, j = depth, pos
        while d > 0:
            parent = self.parents[d][j]
            out.append(j - self.child_start[d - 1][parent] + 1)
            d, j = d - 1, parent
        out.reverse()
        return tuple(out)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Tree(horizon={self.horizon}, k={self.k})"


def simulate_tree(env: Environment, rng) -> Tree:
    """Draw one tree; ``rng`` may be a seed, numpy Generator, or UniformStream."""
    stream = as_stream(rng)
    counts: list[list[int]] = []
    width = 1
    for d in range(env.horizon):
        law = env.laws[d]
        row = [draw_count(law, stream) for _ in range(width)]
        counts.append(row)
        width = sum(row)
    return Tree(env, counts)


def condition_on_survival(env: Environment, rng, max_attempts: int = 100_000) -> Tree:
    """Rejection-sample a tree with at least one present individual."""
    if survival_prob(env, env.horizon) == 0:
        raise DegenerateEnvironmentError(
            "environment cannot produce survivors; conditioning is undefined"
        )
    stream = as_stream(rng)
    for attempt in range(1, max_attempts + 1):
        tree = simulate_tree(env, stream)
        if tree.k > 0:
            tree.attempts = attempt
            return tree
    raise AttemptCapError(f"no surviving tree in {max_attempts} attempts")


def ancestor_index(tree: Tree, i: int, n: int) -> int:
    """Planar rank of the level-n ancestor of present individual i.

    Ranks count all nodes of that generation left to right, starting at 1.
    """
    N = tree.horizon
    if not 1 <= i <= tree.k:
        raise DomainError(f"individual {i} outside 1..{tree.k}")
    if not 1 <= n <= N:
        raise HorizonError(f"level {n} outside [1, {N}]")
    pos = i - 1
    for d in range(N, N - n, -1):
        pos = tree.parents[d][pos]
    return pos + 1


@dataclass(frozen=True)
class Cpp:
    """Coalescent point process of one tree: K and the consecutive-pair
    coalescent times A_1..A_{K-1}."""

    k: int
    a: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.k < 0 or len(self.a) != max(self.k - 1, 0):
            raise DomainError(f"need exactly {max(self.k - 1, 0)} times for k={self.k}")


def coalescent_times(tree: Tree) -> Cpp:
    """Levels at which consecutive present individuals first share an ancestor."""
    N = tree.horizon
    k = tree.k
    a = []
    for i in range(k - 1):
        left, right = i, i + 1
        d = N
        while left != right:
            left = tree.parents[d][left]
            right = tree.parents[d][right]
            d -= 1
        a.append(N - d)
    return Cpp(k=k, a=tuple(a))


def extract_D(tree: Tree, i: int, n: int) -> int:
    """Extra daughters of i's level-n ancestor with descendants of rank >= i.

    The daughter leading to individual i always qualifies, so the result is
    the qualifying-daughter count minus one and is never negative.
    """
    N = tree.horizon
    if not 1 <= i <= tree.k:
        raise DomainError(f"individual {i} outside 1..{tree.k}")
    if not 1 <= n <= N:
        raise HorizonError(f"level {n} outside [1, {N}]")
    pos = i - 1
    for d in range(N, N - n, -1):
        pos = tree.parents[d][pos]
    depth = N - n
    start = tree.child_start[depth][pos]
    count = tree.counts[depth][pos]
    ranks = tree.max_rank[depth + 1]
    hits = 0
    for c in range(start, start + count):
        if ranks[c] >= i:
            hits += 1
    return hits - 1


def extract_B(tree: Tree, i: int, cpp: Cpp | None = None) -> tuple[int, ...]:
    """The D-values of individual i truncated to the running maximum of
    coalescent times, b = (D_i(1), ..., D_i(l_i)) with l_i = max(A_1..A_i)."""
    if cpp is None:
        cpp = coalescent_times(tree)
    if not 1 <= i <= cpp.k - 1:
        raise DomainError(f"individual {i} needs a right neighbor, k={cpp.k}")
    l_i = max(cpp.a[:i])
    return tuple(extract_D(tree, i, n) for n in range(1, l_i + 1))


# ---------------------------------------------------------------------------
# Reduced point-measure sequence.  States are canonical tuples of
# (level, multiplicity) pairs sorted by level; the empty tuple is the null
# measure.
# ---------------------------------------------------------------------------

BtState = tuple[tuple[int, int], ...]


def bt_min(b: BtState) -> int | None:
    """Smallest charged level, or None for the null measure."""
    return b[0][0] if b else None


def bt_star(b: BtState) -> BtState:
    """Remove one unit of mass at the smallest charged level."""
    if not b:
        return b
    (lvl, mult), rest = b[0], b[1:]
    if mult > 1:
        return ((lvl, mult - 1),) + rest
    return rest


def bt_update(b: BtState, a: int, mult: int) -> BtState:
    """One step of the reduced recursion given the next pair (a, mult)."""
    s = bt_min(b)
    star = bt_star(b)
    s_star = bt_min(star)
    if a != s and (s_star is None or a < s_star):
        return ((a, mult),) + star
    return star


def extract_Btilde(tree: Tree, cpp: Cpp | None = None) -> tuple[BtState, ...]:
    """Reduced point-measure sequence along the present individuals.

    Entry i-1 is the state after folding in individual i's pair
    (A_i, D_i(A_i)); there are K-1 entries.
    """
    if cpp is None:
        cpp = coalescent_times(tree)
    if cpp.k < 2:
        return ()
    state: BtState = ()
    out = []
    for i in range(1, cpp.k):
        a_i = cpp.a[i - 1]
        mult = extract_D(tree, i, a_i)
        state = bt_update(state, a_i, mult)
        out.append(state)
    return tuple(out)


def cpp_and_marks(tree: Tree, upto: int | None = None) -> tuple[list[int], list[int]]:
    """Coalescent times A_i with the spine multiplicities D_i(A_i), fused.

    One parent walk per consecutive pair gives both the meeting level and the
    daughter counts at the meeting node.  ``upto`` limits the number of pairs.
    """
    N = tree.horizon
    k = tree.k
    pairs = k - 1 if upto is None else min(upto, k - 1)
    a_vals: list[int] = []
    marks: list[int] = []
    parents = tree.parents
    child_start = tree.child_start
    counts = tree.counts
    for i in range(pairs):
        left, right = i, i + 1
        d = N
        while left != right:
            left = parents[d][left]
            right = parents[d][right]
            d -= 1
        a_vals.append(N - d)
        start = child_start[d][left]
        span = counts[d][left]
        ranks = tree.max_rank[d + 1]
        hits = 0
        for c in range(start, start + span):
            if ranks[c] >= i + 1:
                hits += 1
        marks.append(hits - 1)
    return a_vals, marks


def genealogy_from_cpp(cpp: Cpp) -> np.ndarray:
    """Full pairwise coalescent table C[i][j] = max(A_i..A_{j-1}), 1-based
    individuals mapped to 0-based entries; only i < j entries are filled."""
    k = cpp.k
    table = np.zeros((k, k), dtype=np.int64)
    for i in range(k - 1):
        acc = 0
        for j in range(i + 1, k):
            acc = max(acc, cpp.a[j - 1])
            table[i, j] = acc
    return table


def dump_tree(tree: Tree) -> str:
    """One node per line: label, child count, survival flag.

    Lines are emitted depth first, which sorts labels lexicographically as
    integer sequences.  The founder's empty label prints as '-'.
    """
    lines = []

    def visit(depth: int, pos: int, label: tuple[int, ...]) -> None:
        count = tree.counts[depth][pos] if depth < tree.horizon else 0
        name = ".".join(str(x) for x in label) if label else "-"
        flag = 1 if tree.alive[depth][pos] else 0
        lines.append(f"{name} {count} {flag}")
        if depth < tree.horizon:
            start = tree.child_start[depth][pos]
            for c in range(count):
                visit(depth + 1, start + c, label + (c + 1,))

    visit(0, 0, ())
    return "\n".join(lines) + "\n"
