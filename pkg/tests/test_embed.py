import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedstab.dataset import DataMatrix
from embedstab.embed import (
    AffinityMatrix,
    OptimizerParams,
    kl_gradient,
    load_external_embedding,
    objective,
    random_init,
    run_engine,
    save_embedding,
    tsne_affinities_knn,
    tsne_affinities_perplexity,
    tsne_optimize,
)
from embedstab.errors import DataFormatError, NumericError
from embedstab.knn import KnnGraph, knn_graph, pairwise_distances


def _entropy_bits(p):
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _oracle_conditional_row(dists, perplexity):
    """Scalar bisection over the bandwidth, independent of the production path."""
    d2 = np.asarray(dists, dtype=float) ** 2
    target = math.log2(perplexity)

    def entropy(beta):
        w = np.exp(-beta * (d2 - d2.min()))
        p = w / w.sum()
        return _entropy_bits(p), p

    lo, hi = 1e-12, 1e12
    for _ in range(300):
        mid = math.sqrt(lo * hi)
        h, p = entropy(mid)
        if abs(h - target) < 1e-10:
            return p
        if h > target:
            lo = mid
        else:
            hi = mid
    return p


class TestPerplexityAffinities:
    def test_two_equidistant_others(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
        D = pairwise_distances(pts)
        cond = _conditionals_from(D, 2.0)
        assert cond[0][1] == pytest.approx(0.5, abs=1e-9)
        assert cond[0][2] == pytest.approx(0.5, abs=1e-9)
        P = tsne_affinities_perplexity(D, 2.0)
        assert P.values[0, 1] == pytest.approx(P.values[0, 2], abs=1e-12)

    def test_calibration_every_row(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((40, 5))
        perp = 12.0
        D = pairwise_distances(pts)
        P = tsne_affinities_perplexity(D, perp)
        cond = _conditionals_from(D, perp)
        for i in range(40):
            h = _entropy_bits(cond[i])
            assert 2**h == pytest.approx(perp, abs=1e-4)

    def test_collinear_middle_row_oracle(self):
        pts = np.array([[0.0], [1.0], [3.0]])
        D = pairwise_distances(pts)
        perp = 1.5
        cond = _conditionals_from(D, perp)
        expect = _oracle_conditional_row([1.0, 2.0], perp)
        assert cond[1][[0, 2]] == pytest.approx(expect, abs=1e-6)

    def test_sum_and_symmetry(self):
        rng = np.random.default_rng(1)
        P = tsne_affinities_perplexity(pairwise_distances(rng.standard_normal((15, 3))), 5.0)
        assert P.values.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.array_equal(P.values, P.values.T)

    def test_perplexity_out_of_range(self):
        D = pairwise_distances(np.random.default_rng(2).standard_normal((6, 2)))
        for bad in (1.0, 6.0, 0.5):
            with pytest.raises(ValueError):
                tsne_affinities_perplexity(D, bad)

    def test_degenerate_row_raises(self):
        # identical points: conditional entropy is pinned, search cannot converge
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(NumericError, match="row"):
            tsne_affinities_perplexity(pairwise_distances(pts), 2.0)


def _conditionals_from(D, perp):
    """Recover per-row conditionals via the same calibration the module uses."""
    from embedstab.embed import _row_entropy_bits

    n = D.n
    target = math.log2(perp)
    out = []
    for i in range(n):
        others = np.arange(n) != i
        row = D.values[i, others] ** 2
        beta, lo, hi = 1.0, 0.0, math.inf
        for _ in range(200):
            h, p = _row_entropy_bits(row, beta)
            if abs(h - target) <= 1e-7:
                break
            if h > target:
                lo = beta
                beta = beta * 2 if hi == math.inf else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = 0.5 * (lo + hi)
        full = np.zeros(n)
        full[others] = p
        out.append(full)
    return out


class TestKnnAffinities:
    def test_directed_cycle_gives_eighths(self):
        # hand-built graph: 0->1->2->3->0; OR-symmetrization yields 4 edges,
        # hence 8 ordered entries of 1/8 each
        G = KnnGraph(np.array([[1], [2], [3], [0]]), k=1)
        P = tsne_affinities_knn(G)
        expect = np.array(
            [
                [0, 1, 0, 1],
                [1, 0, 1, 0],
                [0, 1, 0, 1],
                [1, 0, 1, 0],
            ]
        ) / 8.0
        assert np.allclose(P.values, expect, atol=1e-15)

    def test_non_neighbor_exactly_zero(self):
        pts = np.array([[0.0], [1.0], [10.0], [11.0]])
        P = tsne_affinities_knn(knn_graph(pairwise_distances(pts), 1))
        assert P.values[0, 2] == 0.0
        assert P.values[0, 3] == 0.0

    def test_sums_to_one(self):
        rng = np.random.default_rng(3)
        G = knn_graph(pairwise_distances(rng.standard_normal((30, 4))), 5)
        assert tsne_affinities_knn(G).values.sum() == pytest.approx(1.0, abs=1e-12)


class TestRandomInit:
    def test_mean_near_origin(self):
        n, scale = 400, 1e-4
        Y = random_init(n, 0, scale)
        assert np.abs(Y.mean(axis=0)).max() < 3 * scale / math.sqrt(n)

    def test_seed_reproducible(self):
        assert np.array_equal(random_init(10, 5), random_init(10, 5))

    def test_different_seeds_differ(self):
        assert not np.array_equal(random_init(10, 5), random_init(10, 6))

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            random_init(5, 0, 0.0)


class TestObjective:
    def test_equilateral_uniform(self):
        # three symmetric points, uniform affinities: all q_ij = 1/6
        Y = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        P = AffinityMatrix(np.full((3, 3), 1 / 6.0) - np.eye(3) / 6.0, kind="knn-uniform")
        assert objective(P, Y) == pytest.approx(math.log(1 / 6), abs=1e-9)

    def test_two_point_normalizer(self):
        # n=2: both q entries are exactly 1/2 regardless of the distance
        Y = np.array([[0.0, 0.0], [5.0, 1.0]])
        P = AffinityMatrix(np.array([[0.0, 0.5], [0.5, 0.0]]), kind="knn-uniform")
        assert objective(P, Y) == pytest.approx(math.log(0.5), abs=1e-12)

    def test_coincident_points_defined(self):
        Y = np.zeros((3, 2))
        P = AffinityMatrix(np.full((3, 3), 1 / 6.0) - np.eye(3) / 6.0, kind="knn-uniform")
        assert objective(P, Y) == pytest.approx(math.log(1 / 6), abs=1e-12)

    @given(
        st.integers(min_value=0, max_value=2**31),
        st.floats(min_value=-math.pi, max_value=math.pi),
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=-5, max_value=5),
    )
    @settings(max_examples=25, deadline=None)
    def test_rigid_motion_invariance(self, seed, angle, tx, ty):
        rng = np.random.default_rng(seed)
        n = 6
        Y = rng.standard_normal((n, 2))
        P = _random_affinities(rng, n)
        rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        Y2 = Y @ rot.T + np.array([tx, ty])
        assert abs(objective(P, Y) - objective(P, Y2)) < 1e-9


def _random_affinities(rng, n):
    raw = rng.uniform(size=(n, n))
    raw = raw + raw.T
    np.fill_diagonal(raw, 0.0)
    return AffinityMatrix(raw / raw.sum(), kind="knn-uniform")


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(3, 9))
            Y = rng.standard_normal((n, 2))
            P = _random_affinities(rng, n)
            g = kl_gradient(P.values, Y)
            step = 1e-5
            num = np.zeros_like(g)
            for i in range(n):
                for c in range(2):
                    yp, ym = Y.copy(), Y.copy()
                    yp[i, c] += step
                    ym[i, c] -= step
                    # KL = -objective - entropy(P); entropy term is constant
                    num[i, c] = -(objective(P, yp) - objective(P, ym)) / (2 * step)
            denom = max(np.abs(num).max(), 1e-12)
            assert np.abs(g - num).max() / denom < 1e-4


class TestOptimize:
    def test_symmetric_input_near_equilateral(self):
        # three symmetric points, full neighbor graph: the optimum equalizes
        # all pairwise distances; start at unit scale to avoid the degenerate
        # coincident optimum where the gradient vanishes
        pts = DataMatrix(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]))
        params = OptimizerParams(
            iterations=1500, exaggeration=1, exaggeration_iters=0, learning_rate=0.5, init_scale=1.0
        )
        for seed in range(10):
            run = run_engine("tsne-knn", pts, 2, seed, params)
            d = np.sort(
                [np.linalg.norm(run.coords[a] - run.coords[b]) for a, b in [(0, 1), (0, 2), (1, 2)]]
            )
            assert d[-1] / d[0] < 1.02

    def test_single_attracting_pair_ends_closest(self):
        n = 4
        p = np.zeros((n, n))
        p[0, 1] = p[1, 0] = 0.5
        P = AffinityMatrix(p, kind="knn-uniform")
        run = tsne_optimize(
            P,
            random_init(n, 3),
            OptimizerParams(iterations=300, exaggeration=1, exaggeration_iters=0, learning_rate=5.0),
        )
        d = np.linalg.norm(run.coords[:, None] - run.coords[None, :], axis=2)
        pair = d[0, 1]
        others = [d[i, j] for i in range(n) for j in range(i + 1, n) if (i, j) != (0, 1)]
        assert pair < min(others)

    def test_ascent_property(self):
        rng = np.random.default_rng(9)
        P = _random_affinities(rng, 12)
        init = random_init(12, 1)
        run = tsne_optimize(
            P,
            init,
            OptimizerParams(iterations=300, exaggeration=1, exaggeration_iters=0, learning_rate=5.0),
        )
        assert run.final_objective >= objective(P, init)

    def test_monotone_tail(self):
        rng = np.random.default_rng(10)
        P = _random_affinities(rng, 15)
        run = tsne_optimize(P, random_init(15, 2), OptimizerParams(iterations=120, exaggeration_iters=40))
        tail = run.tail_objectives
        assert len(tail) == 51
        assert all(b >= a - 1e-6 for a, b in zip(tail, tail[1:]))
        assert run.final_objective == tail[-1]

    def test_bad_init_shape(self):
        P = _random_affinities(np.random.default_rng(0), 5)
        with pytest.raises(DataFormatError):
            tsne_optimize(P, np.zeros((4, 2)))


class TestRunEngine:
    def test_bitwise_deterministic(self):
        X = DataMatrix(np.random.default_rng(11).standard_normal((20, 3)))
        params = OptimizerParams(iterations=60, exaggeration_iters=20)
        a = run_engine("tsne-knn", X, 3, 7, params)
        b = run_engine("tsne-knn", X, 3, 7, params)
        assert np.array_equal(a.coords, b.coords)
        assert a.final_objective == b.final_objective

    def test_different_seeds_differ(self):
        X = DataMatrix(np.random.default_rng(12).standard_normal((20, 3)))
        params = OptimizerParams(iterations=60, exaggeration_iters=20)
        a = run_engine("tsne-knn", X, 3, 1, params)
        b = run_engine("tsne-knn", X, 3, 2, params)
        assert not np.array_equal(a.coords, b.coords)

    def test_provenance_recorded(self):
        X = DataMatrix(np.random.default_rng(13).standard_normal((12, 2)))
        run = run_engine("tsne-perplexity", X, 4.0, 5, OptimizerParams(iterations=40, exaggeration_iters=10))
        assert run.engine == "tsne-perplexity"
        assert run.gcp == 4.0
        assert run.seed == 5
        assert run.iterations == 40

    def test_engine_gcp_validation(self):
        X = DataMatrix(np.random.default_rng(14).standard_normal((10, 2)))
        with pytest.raises(ValueError):
            run_engine("tsne-knn", X, 2.5, 0)
        with pytest.raises(ValueError):
            run_engine("tsne-perplexity", X, 1.0, 0)
        with pytest.raises(ValueError):
            run_engine("umap", X, 5, 0)


class TestExternalEmbedding:
    def test_load_5x2(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("dim1,dim2\n1,2\n3,4\n5,6\n7,8\n9,10\n")
        run = load_external_embedding(f, engine="umap", gcp=15, seed=3)
        assert run.n == 5
        assert run.engine == "umap"

    def test_wrong_width(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("1,2,3\n4,5,6\n")
        with pytest.raises(DataFormatError):
            load_external_embedding(f)

    def test_roundtrip_stable(self, tmp_path):
        run = tsne_optimize(
            _random_affinities(np.random.default_rng(15), 8),
            random_init(8, 0),
            OptimizerParams(iterations=30, exaggeration_iters=10),
        )
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        save_embedding(run, p1, tmp_path / "a.json")
        reloaded = load_external_embedding(p1, engine=run.engine, gcp=run.gcp, seed=run.seed)
        save_embedding(reloaded, p2)
        assert p1.read_text().splitlines()[1:] == p2.read_text().splitlines()[1:]
