import numpy as np
import pytest

from gwcoal import (
    Cpp,
    Environment,
    FiniteSupportLaw,
    Tree,
    ancestor_index,
    bt_update,
    coalescent_times,
    condition_on_survival,
    constant_environment,
    cpp_and_marks,
    dirac,
    dump_tree,
    extract_B,
    extract_Btilde,
    extract_D,
    genealogy_from_cpp,
    simulate_tree,
    stream_for_run,
)
from gwcoal.errors import AttemptCapError, DegenerateEnvironmentError
from gwcoal.tree import bt_min, bt_star


@pytest.fixture
def tree_3leaves(binom2):
    # root -> (c1, c2); c1 -> one leaf, c2 -> two leaves
    return Tree(binom2, [[2], [1, 2]])


@pytest.fixture
def tree_with_gap(binom2):
    # c1's line dies out: root -> (c1, c2), c1 -> 0, c2 -> 2
    return Tree(binom2, [[2], [0, 2]])


class TestTreeStructure:
    def test_counts_and_labels(self, tree_3leaves):
        t = tree_3leaves
        assert t.horizon == 2
        assert t.k == 3
        assert t.n_nodes(0) == 1
        assert t.n_nodes(1) == 2
        assert t.n_nodes(2) == 3
        assert t.label(1, 1) == (2,)
        assert t.label(2, 1) == (2, 1)
        assert t.label(2, 2) == (2, 2)

    def test_ancestor_walk(self, tree_3leaves):
        assert ancestor_index(tree_3leaves, 1, 1) == 1
        assert ancestor_index(tree_3leaves, 2, 1) == 2
        assert ancestor_index(tree_3leaves, 3, 1) == 2
        assert ancestor_index(tree_3leaves, 3, 2) == 1

    def test_dead_line_not_counted(self, tree_with_gap):
        assert tree_with_gap.k == 2

    def test_dump_format(self, tree_3leaves):
        text = dump_tree(tree_3leaves)
        lines = text.strip().split("\n")
        assert lines[0].startswith("-")
        assert len(lines) == 6


class TestCoalescentTimes:
    def test_hand_tree(self, tree_3leaves):
        cpp = coalescent_times(tree_3leaves)
        assert cpp == Cpp(k=3, a=(2, 1))

    def test_gap_tree(self, tree_with_gap):
        assert coalescent_times(tree_with_gap) == Cpp(k=2, a=(1,))

    def test_full_binary(self):
        env = constant_environment(dirac(2), 2)
        tree = simulate_tree(env, stream_for_run(0, 0))
        assert coalescent_times(tree) == Cpp(k=4, a=(1, 2, 1))

    def test_singleton(self, binom2):
        tree = Tree(binom2, [[1], [1]])
        assert coalescent_times(tree) == Cpp(k=1, a=())

    def test_cpp_validation(self):
        with pytest.raises(ValueError):
            Cpp(k=3, a=(1,))

    def test_pairwise_matrix(self):
        cpp = Cpp(k=4, a=(1, 2, 1))
        mat = genealogy_from_cpp(cpp)
        # time between leaves i and j is the running maximum between them
        expected = np.array(
            [[0, 1, 2, 2], [0, 0, 2, 2], [0, 0, 0, 1], [0, 0, 0, 0]]
        )
        assert (mat == expected).all()


class TestMarks:
    def test_sibling_counts_hand_tree(self, tree_3leaves):
        # leaf 1: its level-1 ancestor has no later surviving daughters, the
        # root has one
        assert extract_D(tree_3leaves, 1, 1) == 0
        assert extract_D(tree_3leaves, 1, 2) == 1
        assert extract_D(tree_3leaves, 2, 1) == 1
        assert extract_D(tree_3leaves, 2, 2) == 0
        assert extract_D(tree_3leaves, 3, 1) == 0
        assert extract_D(tree_3leaves, 3, 2) == 0

    def test_prefix_vectors(self, tree_3leaves):
        cpp = coalescent_times(tree_3leaves)
        assert extract_B(tree_3leaves, 1, cpp) == (0, 1)
        assert extract_B(tree_3leaves, 2, cpp) == (1, 0)

    def test_first_nonzero_is_time(self, binom3):
        # structural link between the mark vectors and the times
        for seed in range(40):
            tree = condition_on_survival(binom3, stream_for_run(seed, 0))
            cpp = coalescent_times(tree)
            running = 0
            for i in range(1, tree.k):
                b = extract_B(tree, i, cpp)
                running = max(running, cpp.a[i - 1])
                assert len(b) == running
                first = next(m + 1 for m, v in enumerate(b) if v)
                assert first == cpp.a[i - 1]

    def test_fused_extraction_matches(self, varying3):
        for seed in range(40):
            tree = condition_on_survival(varying3, stream_for_run(seed, 1))
            cpp = coalescent_times(tree)
            a_vals, marks = cpp_and_marks(tree)
            assert tuple(a_vals) == cpp.a
            for i in range(1, tree.k):
                assert marks[i - 1] == extract_D(tree, i, cpp.a[i - 1])


class TestReducedSequence:
    def test_update_rules(self):
        # consuming the minimum reveals nothing new
        assert bt_update((), 2, 2) == ((2, 2),)
        assert bt_update(((2, 2),), 2, 1) == ((2, 1),)
        # one unit at the minimum is always consumed first, then a strictly
        # lower new level is prepended with its own multiplicity
        assert bt_update(((2, 2),), 1, 3) == ((1, 3), (2, 1))
        assert bt_update(((2, 1),), 1, 3) == ((1, 3),)
        # consuming at the minimum does not re-add
        assert bt_update(((1, 1), (2, 1)), 1, 5) == ((2, 1),)

    def test_min_and_star(self):
        assert bt_min(((1, 2), (3, 1))) == 1
        assert bt_min(()) is None
        assert bt_star(((1, 2), (3, 1))) == ((1, 1), (3, 1))
        assert bt_star(((1, 1), (3, 1))) == ((3, 1),)

    def test_extract_hand_tree(self, tree_3leaves):
        seq = extract_Btilde(tree_3leaves)
        assert seq == (((2, 1),), ((1, 1),))

    def test_matches_update_recursion(self, binom3):
        for seed in range(40):
            tree = condition_on_survival(binom3, stream_for_run(seed, 2))
            cpp = coalescent_times(tree)
            seq = extract_Btilde(tree, cpp)
            state = ()
            for i in range(1, tree.k):
                state = bt_update(state, cpp.a[i - 1], extract_D(tree, i, cpp.a[i - 1]))
                assert seq[i - 1] == state


class TestSimulation:
    def test_deterministic_given_seed(self, binom3):
        t1 = simulate_tree(binom3, stream_for_run(5, 3))
        t2 = simulate_tree(binom3, stream_for_run(5, 3))
        assert t1.counts == t2.counts

    def test_conditioning_survives(self, binom3):
        tree = condition_on_survival(binom3, stream_for_run(1, 0))
        assert tree.k >= 1
        assert tree.attempts >= 1

    def test_conditioning_impossible(self):
        env = constant_environment(dirac(0), 2)
        with pytest.raises(DegenerateEnvironmentError):
            condition_on_survival(env, stream_for_run(0, 0))

    def test_attempt_cap(self):
        # survival is possible but rare enough that two attempts cannot do it
        env = constant_environment(FiniteSupportLaw((0.999, 0.001)), 3)
        with pytest.raises(AttemptCapError):
            condition_on_survival(env, stream_for_run(0, 0), max_attempts=2)

    def test_empirical_survival_rate(self, binom2):
        # survival probability at two generations is 39/64
        stream = stream_for_run(123, 0)
        n = 20_000
        alive = sum(1 for _ in range(n) if simulate_tree(binom2, stream).k > 0)
        p = 39 / 64
        se = (p * (1 - p) / n) ** 0.5
        assert abs(alive / n - p) < 4 * se
