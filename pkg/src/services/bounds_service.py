"""
Graph Cramer-Rao bound service

General matrix bound for graph-unbiased estimators, the constrained CRB
it is a weighted version of, and closed forms for the relative
measurement and bandlimited sampling models.
"""
import logging
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg

from ..config import Config
from ..models.fisher import BoundResult, ExplicitMatrix, FisherInfo
from ..models.graph import ConstraintSet, Graph, Spectrum
from ..utils.errors import (
    BadCovariance, BandOutOfRange, DimensionMismatch, DisconnectedGraph,
    InvalidVariance, SingularInformation, VertexCountMismatch,
)
from ..utils.linalg import as_square, condition_number, pinv_psd, solve_spd, symmetrize
from .spectral_service import SpectralService

logger = logging.getLogger(__name__)

InfoLike = Union[FisherInfo, np.ndarray]


def _info_matrix(J: InfoLike) -> np.ndarray:
    if isinstance(J, FisherInfo):
        return J.matrix()
    return as_square(J, name="information matrix")


def _check_band(spec: Spectrum, R: int):
    if not 1 <= R <= spec.size:
        raise BandOutOfRange(f"band R={R} outside 1..{spec.size}")


def _check_nodes(nodes: Sequence[int], M: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(n) for n in nodes)), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= M):
        raise DimensionMismatch(f"sample indices must lie in 0..{M - 1}")
    return idx


class BoundsService:
    """Bounds on the Laplacian-weighted risk"""

    # ------------------------------------------------------------ general

    @staticmethod
    def ccrb(J: InfoLike, constraints: ConstraintSet) -> np.ndarray:
        """Constrained CRB on the plain MSE: U (U^T J U)^+ U^T"""
        Jm = _info_matrix(J)
        U = constraints.U
        if Jm.shape[0] != U.shape[0]:
            raise DimensionMismatch(f"information is {Jm.shape[0]}x{Jm.shape[0]}, constraints act on {U.shape[0]}")
        inner = pinv_psd(U.T @ Jm @ U)
        return symmetrize(U @ inner @ U.T)

    @classmethod
    def graph_crb(cls, spec: Spectrum, J: InfoLike, constraints: ConstraintSet,
                  model: str = "general", policy: str = "-") -> BoundResult:
        """
        Matrix graph CRB: Lambda^{1/2} V^T U (U^T J U)^+ U^T V Lambda^{1/2}

        The trace equals Tr(L U (U^T J U)^+ U^T), the bound on the
        expected Dirichlet energy of the error.
        """
        if constraints.size != spec.size:
            raise DimensionMismatch(f"constraints act on {constraints.size} vertices, spectrum has {spec.size}")
        C = cls.ccrb(J, constraints)
        s = spec.sqrt_eigenvalues
        V = spec.eigenvectors
        B = s[:, None] * (V.T @ C @ V) * s[None, :]
        return BoundResult.from_matrix(B, model, policy)

    @staticmethod
    def sampling_mask(nodes: Sequence[int], M: int) -> np.ndarray:
        """D x M binary matrix selecting the sorted sample nodes"""
        idx = _check_nodes(nodes, M)
        mask = np.zeros((idx.size, M))
        mask[np.arange(idx.size), idx] = 1.0
        return mask

    @staticmethod
    def gaussian_mask_fim(mask, noise_cov) -> ExplicitMatrix:
        """
        Information of x = Mask (theta + w), w ~ N(0, Sigma)

        J = Mask^T (Mask Sigma Mask^T)^{-1} Mask
        """
        mask = np.atleast_2d(np.asarray(mask, dtype=float))
        Sigma = as_square(noise_cov, mask.shape[1], name="noise covariance")
        inner = symmetrize(mask @ Sigma @ mask.T)
        try:
            factor = linalg.cho_factor(inner, lower=True)
        except linalg.LinAlgError as e:
            raise BadCovariance(f"masked noise covariance is not positive definite: {e}") from e
        return ExplicitMatrix(symmetrize(mask.T @ linalg.cho_solve(factor, mask)))

    # ------------------------------------------------ relative measurements

    @staticmethod
    def _require_connected(meas_graph: Graph):
        if not meas_graph.is_connected():
            raise DisconnectedGraph("connectivity check failed: measurement graph is disconnected")

    @classmethod
    def relative_fim(cls, meas_graph: Graph, sigma2: float) -> ExplicitMatrix:
        """
        FIM of the relative-measurement model

        (1/sigma2) Lbar (E E^T - 11^T/M)^{-1} Lbar; reduces to Lbar/sigma2
        for unit weights.
        """
        if not (np.isfinite(sigma2) and sigma2 > 0):
            raise InvalidVariance(f"sigma2 must be positive, got {sigma2}")
        cls._require_connected(meas_graph)
        M = meas_graph.num_vertices
        Lbar = SpectralService.build_laplacian(meas_graph)
        E = SpectralService.incidence(meas_graph).matrix
        inner = E @ E.T - np.full((M, M), 1.0 / M)
        J = Lbar @ linalg.solve(inner, Lbar, assume_a='sym') / sigma2
        return ExplicitMatrix(symmetrize(J))

    @classmethod
    def relative_fim_pinv(cls, meas_graph: Graph, sigma2: float) -> np.ndarray:
        """Closed-form pseudo-inverse: sigma2 Lbar^+ E E^T Lbar^+"""
        if not (np.isfinite(sigma2) and sigma2 >= 0):
            raise InvalidVariance(f"sigma2 must be nonnegative, got {sigma2}")
        cls._require_connected(meas_graph)
        Lbar_pinv = SpectralService.pinv_laplacian(SpectralService.build_laplacian(meas_graph))
        E = SpectralService.incidence(meas_graph).matrix
        return symmetrize(sigma2 * Lbar_pinv @ E @ E.T @ Lbar_pinv)

    @classmethod
    def relative_crb(cls, spec: Spectrum, L, meas_graph: Graph, sigma2: float,
                     policy: str = "-") -> BoundResult:
        """
        Graph CRB for relative measurements on meas_graph

        B = sigma2 Lambda^{1/2} V^T Lbar^+ E E^T Lbar^+ V Lambda^{1/2};
        the trace is sigma2 Tr(E^T Lbar^+ L Lbar^+ E). Neither depends on
        the signal values.
        """
        L = as_square(L, name="physical Laplacian")
        if meas_graph.num_vertices != spec.size or L.shape[0] != spec.size:
            raise VertexCountMismatch(
                f"measurement graph has {meas_graph.num_vertices} vertices, physical graph has {spec.size}"
            )
        if not (np.isfinite(sigma2) and sigma2 >= 0):
            raise InvalidVariance(f"sigma2 must be nonnegative, got {sigma2}")
        cls._require_connected(meas_graph)
        Lbar_pinv = SpectralService.pinv_laplacian(SpectralService.build_laplacian(meas_graph))
        E = SpectralService.incidence(meas_graph).matrix
        P = Lbar_pinv @ E
        cov = sigma2 * (P @ P.T)
        s = spec.sqrt_eigenvalues
        V = spec.eigenvectors
        B = symmetrize(s[:, None] * (V.T @ cov @ V) * s[None, :])
        trace = sigma2 * float(np.trace(P.T @ L @ P))
        return BoundResult(B, trace, "relative", policy)

    # ------------------------------------------------- bandlimited sampling

    @staticmethod
    def band_information(spec: Spectrum, R: int, nodes: Sequence[int], J_S: InfoLike) -> np.ndarray:
        """V_SR^T J_S V_SR for the sample set S and band R"""
        _check_band(spec, R)
        idx = _check_nodes(nodes, spec.size)
        Js = _info_matrix(J_S)
        if Js.shape[0] != idx.size:
            raise DimensionMismatch(f"information on S is {Js.shape[0]}x{Js.shape[0]}, |S| = {idx.size}")
        V_SR = spec.eigenvectors[np.ix_(idx, np.arange(R))]
        return symmetrize(V_SR.T @ Js @ V_SR)

    @classmethod
    def _band_inverse(cls, spec: Spectrum, R: int, nodes: Sequence[int], J_S: InfoLike) -> np.ndarray:
        if len(set(nodes)) < R:
            raise SingularInformation(f"{len(set(nodes))} samples cannot recover {R} graph frequencies")
        A = cls.band_information(spec, R, nodes, J_S)
        ok, inv = solve_spd(A, np.eye(R))
        if not ok:
            raise SingularInformation(
                f"sampled band information is singular (condition number {condition_number(A):.3g})"
            )
        return inv

    @classmethod
    def bandlimited_crb_trace(cls, spec: Spectrum, R: int, nodes: Sequence[int], J_S: InfoLike) -> float:
        """
        Trace graph CRB for R-bandlimited signals sampled on nodes

        sum_{m=2}^{R} lambda_m [(V_SR^T J_S V_SR)^{-1}]_mm
        """
        inv = cls._band_inverse(spec, R, nodes, J_S)
        return float(np.sum(spec.eigenvalues[1:R] * np.diag(inv)[1:R]))

    @classmethod
    def a_design_objective(cls, spec: Spectrum, R: int, nodes: Sequence[int], J_S: InfoLike) -> float:
        """Trace of (V_SR^T J_S V_SR)^{-1}"""
        inv = cls._band_inverse(spec, R, nodes, J_S)
        return float(np.trace(inv))

    @staticmethod
    def e_design_objective(spec: Spectrum, R: int, nodes: Sequence[int]) -> float:
        """Smallest singular value of V_SR (zero when |S| < R)"""
        _check_band(spec, R)
        idx = _check_nodes(nodes, spec.size)
        if idx.size < R:
            return 0.0
        V_SR = spec.eigenvectors[np.ix_(idx, np.arange(R))]
        return float(linalg.svdvals(V_SR)[-1])

    @staticmethod
    def alt_band_bound(spec: Spectrum, R: int, J: InfoLike, policy: str = "-") -> BoundResult:
        """
        Unconstrained low-band bound: Lambda_R^{1/2} V_R^T J^+ V_R Lambda_R^{1/2}

        An R x R matrix on the R lowest graph frequencies. J^+ is taken
        with the bandlimited model substituted, V_R (V_R^T J V_R)^+ V_R^T,
        so for a sampling mask the trace is the bandlimited bound.
        """
        _check_band(spec, R)
        Jm = _info_matrix(J)
        if Jm.shape[0] != spec.size:
            raise DimensionMismatch(f"information is {Jm.shape[0]}x{Jm.shape[0]}, spectrum has {spec.size}")
        V_R = spec.low_band(R)
        s = spec.sqrt_eigenvalues[:R]
        B = s[:, None] * pinv_psd(V_R.T @ Jm @ V_R) * s[None, :]
        return BoundResult.from_matrix(B, "alt-band", policy)

    @staticmethod
    def is_recoverable(spec: Spectrum, R: int, nodes: Sequence[int], max_cond: Optional[float] = None) -> bool:
        """Whether V_SR^T V_SR is well enough conditioned for recovery"""
        max_cond = Config.SINGULAR_COND if max_cond is None else max_cond
        idx = _check_nodes(nodes, spec.size)
        if idx.size < R:
            return False
        V_SR = spec.eigenvectors[np.ix_(idx, np.arange(R))]
        return condition_number(V_SR.T @ V_SR) <= max_cond
