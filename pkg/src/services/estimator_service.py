"""
Closed-form estimators whose performance the graph CRB predicts
"""
import logging
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ..models.graph import Graph, Spectrum
from ..models.observations import MaskedObservation, RelativeObservation
from ..utils.errors import BadCovariance, DimensionMismatch, DisconnectedGraph, SingularInformation
from ..utils.linalg import condition_number, solve_spd
from .spectral_service import SpectralService

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def _relative_operator(meas_graph: Graph) -> np.ndarray:
    """Lbar^+ E for a connected measurement graph (cached, read-only)"""
    if not meas_graph.is_connected():
        raise DisconnectedGraph("connectivity check failed: measurement graph is disconnected")
    Lbar = SpectralService.build_laplacian(meas_graph)
    E = SpectralService.incidence(meas_graph).matrix
    op = SpectralService.pinv_laplacian(Lbar) @ E
    op.setflags(write=False)
    return op


class EstimatorService:
    """Relative-measurement and bandlimited estimators"""

    @staticmethod
    def relative_estimate(obs: RelativeObservation, anchor: Optional[int] = 0) -> np.ndarray:
        """
        Efficient estimator Lbar^+ E x for relative measurements

        The signal is only identifiable up to a constant; when anchor is
        given the estimate is shifted so that its value there is 0.

        Args:
            obs: relative measurements on a connected graph
            anchor: 0-based reference node, or None for the minimum-norm estimate
        """
        theta_hat = _relative_operator(obs.graph) @ obs.x
        if anchor is not None:
            if not 0 <= anchor < obs.graph.num_vertices:
                raise DimensionMismatch(f"anchor {anchor} outside 0..{obs.graph.num_vertices - 1}")
            theta_hat = theta_hat - theta_hat[anchor]
        return theta_hat

    @staticmethod
    def _low_band_solve(obs: MaskedObservation, spec: Spectrum, R: int) -> np.ndarray:
        if not 1 <= R <= spec.size:
            raise DimensionMismatch(f"band R={R} outside 1..{spec.size}")
        idx = np.asarray(obs.sample_set, dtype=int)
        if idx.size and idx[-1] >= spec.size:
            raise DimensionMismatch(f"sample indices must lie in 0..{spec.size - 1}")
        if idx.size < R:
            raise SingularInformation(f"{idx.size} samples cannot recover {R} graph frequencies")

        try:
            factor = linalg.cho_factor(obs.noise_cov, lower=True)
        except linalg.LinAlgError as e:
            raise BadCovariance(f"noise covariance is not positive definite: {e}") from e

        V_SR = spec.eigenvectors[np.ix_(idx, np.arange(R))]
        W_V = linalg.cho_solve(factor, V_SR)
        A = V_SR.T @ W_V
        b = W_V.T @ obs.x
        ok, theta_r = solve_spd(A, b)
        if not ok:
            raise SingularInformation(
                f"sampled band information is singular (condition number {condition_number(A):.3g})"
            )
        return theta_r

    @classmethod
    def cml_bandlimited(cls, obs: MaskedObservation, spec: Spectrum, R: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Constrained ML estimate of an R-bandlimited signal

        Returns (vertex estimate, spectral estimate); spectral entries above
        R are exactly zero.
        """
        theta_f = np.zeros(spec.size)
        theta_f[:R] = cls._low_band_solve(obs, spec, R)
        return spec.eigenvectors @ theta_f, theta_f

    @classmethod
    def alt_band_estimate(cls, obs: MaskedObservation, spec: Spectrum, R: int) -> np.ndarray:
        """Estimates of the R lowest graph frequencies only"""
        return cls._low_band_solve(obs, spec, R)

    @staticmethod
    def clear_cache():
        _relative_operator.cache_clear()
        logger.info("Relative estimator operator cache cleared")
