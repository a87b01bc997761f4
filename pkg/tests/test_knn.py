import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from embedstab.errors import DataFormatError
from embedstab.knn import knn_graph, knn_graph_from_points, pairwise_distances

from oracles import ref_knn_lists


class TestPairwiseDistances:
    def test_euclidean_345(self):
        D = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert D.values[0, 1] == pytest.approx(5.0)

    def test_manhattan(self):
        D = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]), "manhattan")
        assert D.values[0, 1] == pytest.approx(7.0)

    def test_cosine_orthogonal(self):
        D = pairwise_distances(np.array([[1.0, 0.0], [0.0, 1.0]]), "cosine")
        assert D.values[0, 1] == pytest.approx(1.0)

    def test_cosine_zero_norm_row(self):
        with pytest.raises(DataFormatError, match="row 1"):
            pairwise_distances(np.array([[1.0, 0.0], [0.0, 0.0]]), "cosine")

    def test_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(0)
        D = pairwise_distances(rng.standard_normal((20, 4))).values
        assert np.array_equal(D, D.T)
        assert np.all(np.diagonal(D) == 0)

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            pairwise_distances(np.eye(3), "chebyshev")


class TestKnnGraph:
    def test_collinear_hand_case(self):
        # points 0,1,2,3 on a line; ties resolve to the lower index
        D = pairwise_distances(np.array([[0.0], [1.0], [2.0], [3.0]]))
        G = knn_graph(D, 1)
        assert G.neighbors.ravel().tolist() == [1, 0, 1, 2]

    def test_full_graph_is_permutation(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((8, 3))
        G = knn_graph(pairwise_distances(pts), 7)
        for i, row in enumerate(G.neighbors):
            assert sorted(row.tolist()) == [j for j in range(8) if j != i]

    def test_exact_tie_break_lowest_index(self):
        # point 0 is exactly equidistant from 1 and 2; tie resolves to 1
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        G = knn_graph(pairwise_distances(pts), 1)
        assert G.neighbors.ravel().tolist() == [1, 0, 0]

    def test_k_out_of_range(self):
        D = pairwise_distances(np.eye(4))
        for bad in (0, 4):
            with pytest.raises(ValueError):
                knn_graph(D, bad)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((30, 3))
        G = knn_graph(pairwise_distances(pts), 5)
        assert G.neighbors.tolist() == ref_knn_lists(pts.tolist(), 5)

    def test_rank_distances_nondecreasing(self):
        rng = np.random.default_rng(3)
        G = knn_graph(pairwise_distances(rng.standard_normal((25, 2))), 10)
        assert np.all(np.diff(G.distances, axis=1) >= 0)

    def test_repeated_calls_identical(self):
        D = pairwise_distances(np.random.default_rng(4).standard_normal((15, 2)))
        a = knn_graph(D, 4)
        b = knn_graph(D, 4)
        assert np.array_equal(a.neighbors, b.neighbors)

    @given(
        arrays(np.float64, (12, 3), elements=st.floats(-50, 50)),
        st.floats(min_value=0.1, max_value=100.0),
    )
    @settings(max_examples=30, deadline=None)
    def test_scaling_invariance(self, pts, scale):
        D1 = pairwise_distances(pts)
        D2 = pairwise_distances(pts * scale)
        assert np.array_equal(knn_graph(D1, 3).neighbors, knn_graph(D2, 3).neighbors)


class TestKdtreePath:
    @pytest.mark.parametrize("k", [1, 3, 9])
    def test_identical_to_brute(self, k):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((40, 4))
        brute = knn_graph_from_points(pts, k, method="brute")
        tree = knn_graph_from_points(pts, k, method="kdtree")
        assert np.array_equal(brute.neighbors, tree.neighbors)

    def test_identical_with_duplicates_and_ties(self):
        # grid data: many exact distance ties plus exact duplicate points
        xs, ys = np.meshgrid(np.arange(5.0), np.arange(5.0))
        pts = np.column_stack([xs.ravel(), ys.ravel()])
        pts = np.vstack([pts, pts[:3]])
        for k in (1, 2, 4):
            brute = knn_graph_from_points(pts, k, method="brute")
            tree = knn_graph_from_points(pts, k, method="kdtree")
            assert np.array_equal(brute.neighbors, tree.neighbors)

    def test_k_equals_n_minus_1(self):
        rng = np.random.default_rng(6)
        pts = rng.standard_normal((10, 2))
        brute = knn_graph_from_points(pts, 9, method="brute")
        tree = knn_graph_from_points(pts, 9, method="kdtree")
        assert np.array_equal(brute.neighbors, tree.neighbors)
