"""
Tests for the graph CRB, the constrained CRB and their closed forms
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.models.fisher import DiagonalNoise, ExplicitMatrix, RelativeMeasurement
from src.models.graph import ConstraintSet, Graph
from src.services.bounds_service import BoundsService
from src.services.spectral_service import SpectralService
from src.utils.errors import (
    BadCovariance, BandOutOfRange, DimensionMismatch, DisconnectedGraph,
    SingularInformation, VertexCountMismatch,
)
from src.utils.linalg import moore_penrose_residuals
from tests.helpers import connected_graphs, path_graph, random_connected_graph, triangle


def random_spd(seed, M):
    A = np.random.default_rng(seed).normal(size=(M, M))
    return A @ A.T + M * np.eye(M)


def random_constraints(seed, M, K):
    G = np.random.default_rng(seed).normal(size=(K, M))
    return SpectralService.constraint_set(G, np.zeros(K))


def scale_of(*arrays):
    return max(1.0, *(float(np.max(np.abs(a))) for a in arrays))


class TestRelativeFisherInformation:
    def test_p2_unit(self):
        """Test the two-node unit-weight information"""
        J = BoundsService.relative_fim(path_graph(2), 1.0).matrix()
        assert np.allclose(J, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)

    def test_triangle_unit_is_laplacian(self):
        """Test that a unit triangle gives L / sigma2"""
        sigma2 = 0.5
        J = BoundsService.relative_fim(triangle(), sigma2).matrix()
        L = SpectralService.build_laplacian(triangle())
        assert np.allclose(J, L / sigma2, atol=1e-9)

    def test_unit_weights_reduce_to_laplacian(self):
        """Test that unit weights reduce the information to the scaled Laplacian"""
        g = random_connected_graph(21, 12).with_unit_weights()
        J = BoundsService.relative_fim(g, 2.0).matrix()
        assert np.max(np.abs(J - SpectralService.build_laplacian(g) / 2.0)) <= 1e-9

    def test_matches_score_outer_products(self):
        """Test that the closed form is the mean outer product of simulated scores"""
        sigma2, trials = 0.5, 20000
        g = triangle(3.0, 2.0, 1.0)
        Lbar = SpectralService.build_laplacian(g)
        E = SpectralService.incidence(g).matrix
        score_map = Lbar @ SpectralService.pinv_laplacian(E @ E.T) @ E / sigma2
        noise = np.random.default_rng(2024).normal(scale=np.sqrt(sigma2), size=(trials, g.num_edges))
        scores = noise @ score_map.T
        products = scores[:, :, None] * scores[:, None, :]
        mean = products.mean(axis=0)
        se = products.std(axis=0, ddof=1) / np.sqrt(trials)
        J = BoundsService.relative_fim(g, sigma2).matrix()
        assert np.all(np.abs(mean - J) <= 3.0 * se + 1e-12)

    def test_disconnected_measurement_graph(self):
        """Test that a disconnected measurement graph is rejected"""
        with pytest.raises(DisconnectedGraph):
            BoundsService.relative_fim(Graph(4, ((0, 1, 1.0), (2, 3, 1.0))), 1.0)

    def test_p2_pseudo_inverse(self):
        """Test the closed-form pseudo-inverse on two nodes"""
        P = BoundsService.relative_fim_pinv(path_graph(2), 2.0)
        assert np.allclose(P, 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-12)

    def test_unit_weight_pseudo_inverse_is_scaled_laplacian_pinv(self):
        """Test that unit weights give sigma2 times the Laplacian pseudo-inverse"""
        g = random_connected_graph(22, 10).with_unit_weights()
        P = BoundsService.relative_fim_pinv(g, 3.0)
        Lpinv = SpectralService.pinv_laplacian(SpectralService.build_laplacian(g))
        assert np.max(np.abs(P - 3.0 * Lpinv)) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(g=connected_graphs(max_vertices=20), sigma2=st.sampled_from([0.1, 1.0, 4.0]))
    def test_moore_penrose_conditions(self, g, sigma2):
        """Test the four Moore-Penrose conditions for the closed-form pseudo-inverse"""
        J = BoundsService.relative_fim(g, sigma2).matrix()
        P = BoundsService.relative_fim_pinv(g, sigma2)
        tol = 1e-8 * scale_of(J, P) ** 2
        assert max(moore_penrose_residuals(J, P)) <= tol


class TestRelativeCRB:
    """Closed-form bound for relative measurements"""

    def test_p2_trace_is_sigma2(self):
        """Test that two nodes with one unit edge give trace sigma2"""
        g = path_graph(2)
        L = SpectralService.build_laplacian(g)
        spec = SpectralService.decompose(L)
        for sigma2 in (0.5, 1.0, 3.0):
            assert BoundsService.relative_crb(spec, L, g, sigma2).trace == pytest.approx(sigma2)

    def test_trace_is_linear_in_sigma2(self):
        """Test that the trace scales linearly with the noise variance"""
        g = random_connected_graph(23, 15)
        L = SpectralService.build_laplacian(g)
        spec = SpectralService.decompose(L)
        one = BoundsService.relative_crb(spec, L, g, 1.0).trace
        two = BoundsService.relative_crb(spec, L, g, 2.0).trace
        assert two == pytest.approx(2.0 * one, rel=1e-12)

    def test_zero_noise_gives_zero_bound(self):
        """Test that zero noise gives a zero bound"""
        g = random_connected_graph(24, 8)
        L = SpectralService.build_laplacian(g)
        bound = BoundsService.relative_crb(SpectralService.decompose(L), L, g, 0.0)
        assert bound.trace == 0.0

    def test_unit_measurement_graph_trace(self):
        """Test the trace for a unit-weight measurement graph"""
        # same unit-weight graph for physics and sensing: sigma2 Tr(Lbar^+ L) = sigma2 (M - 1)
        g = random_connected_graph(25, 12).with_unit_weights()
        L = SpectralService.build_laplacian(g)
        bound = BoundsService.relative_crb(SpectralService.decompose(L), L, g, 1.5)
        assert bound.trace == pytest.approx(1.5 * 11, rel=1e-9)

    def test_trace_matches_matrix_trace(self):
        """Test that the fast trace equals the trace of the bound matrix"""
        g = random_connected_graph(26, 14)
        meas = random_connected_graph(27, 14)
        L = SpectralService.build_laplacian(g)
        bound = BoundsService.relative_crb(SpectralService.decompose(L), L, meas, 0.7)
        assert bound.trace == pytest.approx(np.trace(bound.matrix), rel=1e-9)
        assert np.all(bound.matrix[0, :] == 0.0)

    @settings(max_examples=50, deadline=None)
    @given(M=st.integers(min_value=2, max_value=20), seed=st.integers(min_value=0, max_value=10_000))
    def test_agrees_with_generic_bound(self, M, seed):
        """Test that the closed form matches the generic graph CRB"""
        g = random_connected_graph(seed, M)
        meas = random_connected_graph(seed + 1, M, extra_edge_prob=0.2)
        L = SpectralService.build_laplacian(g)
        spec = SpectralService.decompose(L)
        closed = BoundsService.relative_crb(spec, L, meas, 0.8)
        generic = BoundsService.graph_crb(spec, RelativeMeasurement(meas, 0.8), ConstraintSet.unconstrained(M))
        assert np.max(np.abs(closed.matrix - generic.matrix)) <= 1e-8 * scale_of(closed.matrix)
        assert generic.trace == pytest.approx(closed.trace, rel=1e-8)

    def test_vertex_count_mismatch(self):
        """Test that graphs of different sizes are rejected"""
        g = path_graph(4)
        L = SpectralService.build_laplacian(g)
        with pytest.raises(VertexCountMismatch):
            BoundsService.relative_crb(SpectralService.decompose(L), L, path_graph(3), 1.0)

    def test_disconnected_measurement_graph(self):
        """Test that a disconnected measurement graph is rejected"""
        g = path_graph(4)
        L = SpectralService.build_laplacian(g)
        with pytest.raises(DisconnectedGraph):
            BoundsService.relative_crb(SpectralService.decompose(L), L, Graph(4, ((0, 1, 1.0), (2, 3, 1.0))), 1.0)

    def test_extra_unit_measurement_never_increases_trace(self):
        """Test that adding a measurement edge never increases the trace"""
        rng = np.random.default_rng(28)
        for trial in range(100):
            M = int(rng.integers(4, 15))
            g = random_connected_graph(1000 + trial, M)
            L = SpectralService.build_laplacian(g)
            spec = SpectralService.decompose(L)
            meas = random_connected_graph(2000 + trial, M, extra_edge_prob=0.1).with_unit_weights()
            missing = [(i, j) for i in range(M) for j in range(i + 1, M) if meas.weight_of(i, j) is None]
            if not missing:
                continue
            i, j = missing[rng.integers(len(missing))]
            before = BoundsService.relative_crb(spec, L, meas, 1.0).trace
            after = BoundsService.relative_crb(spec, L, meas.with_edge(i, j, 1.0), 1.0).trace
            assert after <= before * (1 + 1e-9)


class TestGraphCRB:
    """General bound under linear constraints"""

    def test_unconstrained_ccrb_is_inverse(self):
        """Test that without constraints the CCRB is the inverse information"""
        J = random_spd(30, 6)
        C = BoundsService.ccrb(ExplicitMatrix(J), ConstraintSet.unconstrained(6))
        assert np.max(np.abs(C - np.linalg.inv(J))) <= 1e-8

    def test_accepts_raw_matrix(self):
        """Test that a plain array is accepted as information"""
        J = random_spd(31, 5)
        a = BoundsService.ccrb(J, ConstraintSet.unconstrained(5))
        b = BoundsService.ccrb(ExplicitMatrix(J), ConstraintSet.unconstrained(5))
        assert np.allclose(a, b, atol=1e-14)

    def test_p2_laplacian_information(self):
        """Test the graph CRB for two nodes with Laplacian information"""
        sigma2 = 2.0
        g = path_graph(2)
        L = SpectralService.build_laplacian(g)
        spec = SpectralService.decompose(L)
        bound = BoundsService.graph_crb(spec, L / sigma2, ConstraintSet.unconstrained(2))
        assert bound.trace == pytest.approx(sigma2)

    @pytest.mark.parametrize("seed", range(50))
    def test_sandwich_identity_and_trace_form(self, seed):
        """Test the spectral sandwich identity and the trace form"""
        rng = np.random.default_rng(seed)
        M = int(rng.integers(3, 15))
        K = int(rng.integers(0, M - 1))
        g = random_connected_graph(seed, M)
        L = SpectralService.build_laplacian(g)
        spec = SpectralService.decompose(L)
        J = random_spd(seed + 100, M)
        cs = random_constraints(seed + 200, M, K) if K else ConstraintSet.unconstrained(M)

        bound = BoundsService.graph_crb(spec, J, cs)
        C = BoundsService.ccrb(J, cs)
        s, V = spec.sqrt_eigenvalues, spec.eigenvectors
        sandwich = np.diag(s) @ V.T @ C @ V @ np.diag(s)
        assert np.max(np.abs(bound.matrix - sandwich)) <= 1e-9 * scale_of(sandwich)
        assert bound.trace == pytest.approx(np.trace(L @ C), rel=1e-9, abs=1e-12)
        assert bound.trace == pytest.approx(np.trace(bound.matrix), rel=1e-12, abs=1e-15)
        assert np.max(np.abs(bound.matrix[0, :])) <= 1e-10
        assert np.min(np.linalg.eigvalsh(bound.matrix)) >= -1e-8 * scale_of(bound.matrix)

    @pytest.mark.parametrize("seed", range(20))
    def test_depends_only_on_null_space(self, seed):
        """Test that rotating the null-space basis leaves the bound unchanged"""
        M, K = 10, 3
        spec = SpectralService.spectrum_of(random_connected_graph(seed, M))
        J = random_spd(seed + 1, M)
        cs = random_constraints(seed + 2, M, K)
        O, _ = np.linalg.qr(np.random.default_rng(seed + 3).normal(size=(M - K, M - K)))
        rotated = ConstraintSet(cs.G, cs.a, cs.U @ O)
        a = BoundsService.graph_crb(spec, J, cs).matrix
        b = BoundsService.graph_crb(spec, J, rotated).matrix
        assert np.max(np.abs(a - b)) <= 1e-8 * scale_of(a)

    def test_scaling_information_scales_bound(self):
        """Test that scaling the information scales the bound inversely"""
        spec = SpectralService.spectrum_of(random_connected_graph(40, 8))
        J = ExplicitMatrix(random_spd(41, 8))
        cs = random_constraints(42, 8, 2)
        base = BoundsService.graph_crb(spec, J, cs)
        scaled = BoundsService.graph_crb(spec, J.scaled(4.0), cs)
        assert np.allclose(scaled.matrix, base.matrix / 4.0, atol=1e-12)

    def test_dimension_mismatch(self):
        """Test that mismatched sizes are rejected"""
        spec = SpectralService.spectrum_of(path_graph(4))
        with pytest.raises(DimensionMismatch):
            BoundsService.graph_crb(spec, np.eye(3), ConstraintSet.unconstrained(3))
        with pytest.raises(DimensionMismatch):
            BoundsService.ccrb(np.eye(3), ConstraintSet.unconstrained(4))

    @pytest.mark.parametrize("seed", range(20))
    def test_bandlimited_constraint_matches_closed_form(self, seed):
        """Test that band constraints reproduce the bandlimited closed form"""
        rng = np.random.default_rng(seed)
        M, R = 12, 4
        spec = SpectralService.spectrum_of(random_connected_graph(seed + 50, M))
        nodes = sorted(rng.choice(M, size=8, replace=False))
        if not BoundsService.is_recoverable(spec, R, nodes, max_cond=1e6):
            pytest.skip("sample set too poorly conditioned for a tight comparison")
        variances = rng.uniform(0.5, 2.0, size=M)
        mask = BoundsService.sampling_mask(nodes, M)
        J = BoundsService.gaussian_mask_fim(mask, np.diag(variances))

        bound = BoundsService.graph_crb(spec, J, SpectralService.bandlimited_constraint(spec, R))
        closed = BoundsService.bandlimited_crb_trace(spec, R, nodes, DiagonalNoise(variances).restrict(nodes))
        assert bound.trace == pytest.approx(closed, rel=1e-7)

    def test_bandlimited_ccrb_for_iid_noise(self):
        """Test the bandlimited CCRB under i.i.d. noise"""
        M, R, sigma2 = 10, 3, 0.4
        spec = SpectralService.spectrum_of(random_connected_graph(60, M))
        nodes = list(range(M))
        J = BoundsService.gaussian_mask_fim(np.eye(M), sigma2 * np.eye(M))
        C = BoundsService.ccrb(J, SpectralService.bandlimited_constraint(spec, R))
        V_SR = spec.low_band(R)
        expected = sigma2 * np.trace(np.linalg.inv(V_SR[nodes].T @ V_SR[nodes]))
        assert np.trace(C) == pytest.approx(expected, rel=1e-9)


class TestGaussianMask:
    def test_mask_rows_follow_sorted_nodes(self):
        """Test that mask rows follow the sorted sample nodes"""
        mask = BoundsService.sampling_mask([3, 1], 5)
        assert mask.shape == (2, 5)
        assert mask[0, 1] == 1.0 and mask[1, 3] == 1.0
        assert mask.sum() == 2.0

    def test_mask_out_of_range(self):
        """Test that out-of-range sample nodes are rejected"""
        with pytest.raises(DimensionMismatch):
            BoundsService.sampling_mask([5], 5)

    def test_iid_noise(self):
        """Test the masked information for i.i.d. noise"""
        mask = BoundsService.sampling_mask([0, 2], 4)
        J = BoundsService.gaussian_mask_fim(mask, 2.0 * np.eye(4)).matrix()
        assert np.allclose(J, np.diag([0.5, 0.0, 0.5, 0.0]))

    def test_singular_covariance(self):
        """Test that a singular masked covariance is rejected"""
        mask = BoundsService.sampling_mask([0, 1], 3)
        with pytest.raises(BadCovariance):
            BoundsService.gaussian_mask_fim(mask, np.zeros((3, 3)))


class TestBandlimitedBounds:
    def test_p3_full_sampling(self):
        """Test the P3 bound with every node sampled"""
        spec = SpectralService.spectrum_of(path_graph(3))
        for sigma2 in (0.5, 2.0):
            trace = BoundsService.bandlimited_crb_trace(spec, 2, [0, 1, 2], DiagonalNoise.iid(3, sigma2))
            assert trace == pytest.approx(sigma2)

    def test_dc_band_is_free(self):
        """Test that a DC-only band has a zero bound"""
        spec = SpectralService.spectrum_of(path_graph(4))
        assert BoundsService.bandlimited_crb_trace(spec, 1, [2], DiagonalNoise.iid(1, 1.0)) == 0.0

    def test_too_few_samples(self):
        """Test that fewer samples than frequencies are singular"""
        spec = SpectralService.spectrum_of(path_graph(5))
        with pytest.raises(SingularInformation):
            BoundsService.bandlimited_crb_trace(spec, 3, [0, 4], DiagonalNoise.iid(2, 1.0))

    def test_band_out_of_range(self):
        """Test that a band outside 1..M is rejected"""
        spec = SpectralService.spectrum_of(path_graph(3))
        with pytest.raises(BandOutOfRange):
            BoundsService.bandlimited_crb_trace(spec, 0, [0, 1, 2], DiagonalNoise.iid(3, 1.0))

    def test_information_size_must_match_sample_set(self):
        """Test that the information must match the sample set size"""
        spec = SpectralService.spectrum_of(path_graph(4))
        with pytest.raises(DimensionMismatch):
            BoundsService.bandlimited_crb_trace(spec, 2, [0, 1, 2], DiagonalNoise.iid(4, 1.0))

    def test_a_design_full_sampling(self):
        """Test that full i.i.d. sampling gives an A-design value of R sigma2"""
        M, R, sigma2 = 9, 4, 0.3
        spec = SpectralService.spectrum_of(random_connected_graph(70, M))
        value = BoundsService.a_design_objective(spec, R, range(M), DiagonalNoise.iid(M, sigma2))
        assert value == pytest.approx(R * sigma2, rel=1e-9)

    def test_a_design_iid_formula(self):
        """Test the A-design objective against its i.i.d. formula"""
        M, R, sigma2 = 12, 4, 0.6
        spec = SpectralService.spectrum_of(random_connected_graph(71, M))
        nodes = [0, 2, 3, 5, 7, 8, 11]
        value = BoundsService.a_design_objective(spec, R, nodes, DiagonalNoise.iid(len(nodes), sigma2))
        V_SR = spec.low_band(R)[nodes]
        assert value == pytest.approx(sigma2 * np.trace(np.linalg.inv(V_SR.T @ V_SR)), rel=1e-8)

    def test_e_design(self):
        """Test the E-design objective"""
        M = 9
        spec = SpectralService.spectrum_of(random_connected_graph(72, M))
        assert BoundsService.e_design_objective(spec, 4, range(M)) == pytest.approx(1.0, abs=1e-12)
        assert BoundsService.e_design_objective(spec, 4, [0, 1]) == 0.0
        assert 0.0 < BoundsService.e_design_objective(spec, 4, [0, 1, 2, 3, 4, 5]) <= 1.0 + 1e-12

    def test_is_recoverable(self):
        """Test the recoverability check"""
        spec = SpectralService.spectrum_of(path_graph(6))
        assert BoundsService.is_recoverable(spec, 3, range(6))
        assert not BoundsService.is_recoverable(spec, 3, [0, 1])


class TestAlternativeBandBound:
    def test_dc_only_band(self):
        """Test that a DC-only band gives a zero matrix"""
        spec = SpectralService.spectrum_of(path_graph(4))
        bound = BoundsService.alt_band_bound(spec, 1, np.eye(4))
        assert np.array_equal(bound.matrix, np.zeros((1, 1)))

    def test_identity_information_gives_eigenvalues(self):
        """Test that identity information gives the low eigenvalues"""
        spec = SpectralService.spectrum_of(random_connected_graph(80, 10))
        bound = BoundsService.alt_band_bound(spec, 5, np.eye(10))
        assert np.allclose(bound.matrix, np.diag(spec.eigenvalues[:5]), atol=1e-12)

    @pytest.mark.parametrize("seed", range(50))
    def test_full_iid_sampling_matches_constrained_trace(self, seed):
        """Test that full i.i.d. sampling matches the bandlimited trace"""
        rng = np.random.default_rng(seed)
        M = int(rng.integers(3, 20))
        R = int(rng.integers(1, M + 1))
        sigma2 = float(rng.uniform(0.1, 5.0))
        spec = SpectralService.spectrum_of(random_connected_graph(seed + 300, M))
        J = BoundsService.gaussian_mask_fim(np.eye(M), sigma2 * np.eye(M))
        alt = BoundsService.alt_band_bound(spec, R, J)
        closed = BoundsService.bandlimited_crb_trace(spec, R, range(M), DiagonalNoise.iid(M, sigma2))
        assert alt.trace == pytest.approx(closed, rel=1e-8, abs=1e-12)

    @pytest.mark.parametrize("seed", range(50))
    def test_partial_sampling_matches_bandlimited_trace(self, seed):
        """Test that a sampling-mask information gives the bandlimited bound on a node subset"""
        rng = np.random.default_rng(seed + 500)
        M = int(rng.integers(4, 20))
        R = int(rng.integers(1, M))
        spec = SpectralService.spectrum_of(random_connected_graph(seed + 600, M))
        variances = rng.uniform(0.2, 3.0, size=M)
        for _ in range(100):
            D = int(rng.integers(R, M))
            nodes = np.sort(rng.choice(M, size=D, replace=False))
            if BoundsService.is_recoverable(spec, R, nodes, max_cond=1e4):
                break
        else:
            pytest.skip("no well-conditioned subset drawn")
        mask = BoundsService.sampling_mask(nodes, M)
        J = BoundsService.gaussian_mask_fim(mask, np.diag(variances))
        alt = BoundsService.alt_band_bound(spec, R, J)
        closed = BoundsService.bandlimited_crb_trace(spec, R, nodes, DiagonalNoise(variances[nodes]))
        assert len(nodes) < M
        assert alt.trace == pytest.approx(closed, rel=1e-8, abs=1e-12)

    def test_dimension_mismatch(self):
        """Test that information of the wrong size is rejected"""
        spec = SpectralService.spectrum_of(path_graph(4))
        with pytest.raises(DimensionMismatch):
            BoundsService.alt_band_bound(spec, 2, np.eye(3))
