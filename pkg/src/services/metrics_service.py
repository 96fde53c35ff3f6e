"""
Laplacian-weighted cost, risk and unbiasedness service
"""
import logging
from typing import Iterable, Optional

import numpy as np

from ..config import Config
from ..models.graph import Graph, Spectrum
from ..models.risk import CostMatrix, RiskEstimate, UnbiasednessCheck
from ..utils.errors import DimensionMismatch, EmptyBand, InvalidPower
from ..utils.linalg import as_square, as_vector

logger = logging.getLogger(__name__)


def _error(est, truth, M: int) -> np.ndarray:
    return as_vector(est, M, name="estimate") - as_vector(truth, M, name="truth")


class MetricsService:
    """Cost matrices, Dirichlet energies and bias checks"""

    @staticmethod
    def cost_matrix(est, truth, spec: Spectrum) -> CostMatrix:
        """
        C = Lambda^{1/2} V^T e e^T V Lambda^{1/2} with e = est - truth

        The result has rank one and an exactly zero first row and column.
        """
        err = _error(est, truth, spec.size)
        # constant offsets lie in the null space; removing one keeps large shifts exact
        a = spec.sqrt_eigenvalues * (spec.eigenvectors.T @ (err - err[0]))
        return CostMatrix(np.outer(a, a), err)

    @staticmethod
    def cost_matrix_elementwise(est, truth, spec: Spectrum) -> CostMatrix:
        """
        Cost matrix from pairwise error differences only

        C_mn = -1/2 sqrt(l_m l_n) sum_k sum_l V_km V_ln (e_k - e_l)^2
        """
        err = _error(est, truth, spec.size)
        diff_sq = (err[:, None] - err[None, :]) ** 2
        V = spec.eigenvectors
        s = spec.sqrt_eigenvalues
        inner = V.T @ diff_sq @ V
        return CostMatrix(-0.5 * np.outer(s, s) * inner, err)

    @staticmethod
    def dirichlet_energy(err, L) -> float:
        """e^T L e, clipped at zero"""
        L = as_square(L, name="Laplacian")
        e = as_vector(err, L.shape[0], name="error")
        e = e - e[0]
        return max(float(e @ L @ e), 0.0)

    @staticmethod
    def edge_difference_energy(err, g: Graph) -> float:
        """Sum over edges of w_ij (e_i - e_j)^2"""
        e = as_vector(err, g.num_vertices, name="error")
        if g.num_edges == 0:
            return 0.0
        idx = np.array(g.edge_pairs)
        return float(np.sum(g.weights * (e[idx[:, 0]] - e[idx[:, 1]]) ** 2))

    @staticmethod
    def spectral_energy(err_f, spec: Spectrum) -> float:
        """Sum over m >= 2 of lambda_m * e_tilde_m^2"""
        e = as_vector(err_f, spec.size, name="spectral error")
        return float(np.sum(spec.eigenvalues[1:] * e[1:] ** 2))

    @staticmethod
    def frequency_cost(est_f, truth_f, spec: Spectrum) -> CostMatrix:
        """Frequency-domain form of the cost matrix"""
        err_f = _error(est_f, truth_f, spec.size)
        a = spec.sqrt_eigenvalues * err_f
        return CostMatrix(np.outer(a, a), spec.eigenvectors @ err_f)

    @staticmethod
    def generalized_cost(est, truth, spec: Spectrum, p: float) -> CostMatrix:
        """Cost weighted by Lambda^{p/2} instead of Lambda^{1/2}"""
        if not p >= 1:
            raise InvalidPower(f"power p must be >= 1, got {p}")
        err = _error(est, truth, spec.size)
        weights = np.clip(spec.eigenvalues, 0.0, None) ** (p / 2.0)
        a = weights * (spec.eigenvectors.T @ (err - err[0]))
        return CostMatrix(np.outer(a, a), err)

    @staticmethod
    def band_cost(est, truth, spec: Spectrum, band: Iterable[int]) -> np.ndarray:
        """Cost restricted to the graph frequencies in band (0-based indices)"""
        idx = sorted(set(int(b) for b in band))
        if not idx:
            raise EmptyBand("frequency band is empty")
        if idx[0] < 0 or idx[-1] >= spec.size:
            raise DimensionMismatch(f"band indices must lie in 0..{spec.size - 1}")
        err = _error(est, truth, spec.size)
        a = spec.sqrt_eigenvalues[idx] * (spec.eigenvectors[:, idx].T @ (err - err[0]))
        return np.outer(a, a)

    @staticmethod
    def check_graph_unbiasedness(mean_error, se, L, U, sigmas: Optional[float] = None) -> UnbiasednessCheck:
        """
        Test U^T L b = 0 for a Monte Carlo mean error b

        se is either the per-component standard errors of b (treated as
        independent) or the full covariance matrix of b. A component
        passes when |statistic| <= sigmas * its propagated standard error.
        """
        sigmas = Config.UNBIASED_SIGMAS if sigmas is None else sigmas
        L = as_square(L, name="Laplacian")
        M = L.shape[0]
        b = as_vector(mean_error, M, name="mean error")
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[0] != M:
            raise DimensionMismatch(f"basis U has shape {U.shape}, expected {M} rows")

        A = U.T @ L
        statistic = A @ (b - b[0])

        se_arr = np.asarray(se, dtype=float)
        if se_arr.ndim == 1:
            as_vector(se_arr, M, name="standard errors")
            var = (A ** 2) @ (se_arr ** 2)
        elif se_arr.shape == (M, M):
            var = np.einsum('ij,jk,ik->i', A, se_arr, A)
        else:
            raise DimensionMismatch(f"standard errors have shape {se_arr.shape}")
        std = np.sqrt(np.clip(var, 0.0, None))

        slack = 1e-12 * max(1.0, float(np.max(np.abs(A), initial=0.0)) * float(np.max(np.abs(b), initial=0.0)))
        passed = bool(np.all(np.abs(statistic) <= sigmas * std + slack))
        if not passed:
            logger.info(f"Graph-unbiasedness check failed: max |stat|={np.max(np.abs(statistic)):.3g}")
        return UnbiasednessCheck(passed, statistic, std, sigmas)


class RiskAccumulator:
    """
    Streaming Monte Carlo accumulator for cost matrices and errors

    Memory is O(M^2) regardless of the number of trials; only the
    per-trial traces are kept for their standard error.
    """

    def __init__(self, spec: Spectrum):
        self.spec = spec
        M = spec.size
        self._n = 0
        self._mean_cost = np.zeros((M, M))
        self._mean_err = np.zeros(M)
        self._m2_err = np.zeros((M, M))
        self._traces = []

    @property
    def trials(self) -> int:
        return self._n

    @property
    def traces(self) -> np.ndarray:
        return np.array(self._traces)

    def add(self, est, truth) -> CostMatrix:
        cost = MetricsService.cost_matrix(est, truth, self.spec)
        self.add_cost(cost)
        return cost

    def add_cost(self, cost: CostMatrix):
        self._n += 1
        n = self._n
        self._mean_cost += (cost.matrix - self._mean_cost) / n
        self._traces.append(cost.trace)
        delta = cost.error - self._mean_err
        self._mean_err += delta / n
        self._m2_err += np.outer(delta, cost.error - self._mean_err)

    def risk(self) -> RiskEstimate:
        traces = self.traces
        n = self._n
        trace_mean = float(np.mean(traces)) if n else 0.0
        trace_se = float(np.std(traces, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return RiskEstimate(self._mean_cost.copy(), n, trace_mean, trace_se)

    def mean_error(self) -> np.ndarray:
        return self._mean_err.copy()

    def mean_error_covariance(self) -> np.ndarray:
        """Covariance of the mean error (sample covariance / trials)"""
        if self._n < 2:
            return np.zeros_like(self._m2_err)
        return self._m2_err / (self._n - 1) / self._n

    def unbiasedness(self, L, U, sigmas: Optional[float] = None) -> UnbiasednessCheck:
        return MetricsService.check_graph_unbiasedness(
            self.mean_error(), self.mean_error_covariance(), L, U, sigmas
        )
