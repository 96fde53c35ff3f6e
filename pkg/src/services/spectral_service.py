"""
Laplacian spectral service

Laplacian construction, eigendecomposition with fixed sign and ordering
conventions, the graph Fourier transform, Laplacian pseudo-inverse,
incidence matrices and constraint null-space bases.
"""
import logging

import numpy as np
from scipy import linalg

from ..config import Config
from ..models.graph import ConstraintSet, Graph, IncidenceMatrix, Spectrum
from ..utils.errors import BandOutOfRange, DisconnectedGraph, RankDeficientConstraint
from ..utils.linalg import as_square, as_vector, condition_number, fix_signs, symmetrize

logger = logging.getLogger(__name__)


class SpectralService:
    """Graph-core operations on Graph, Spectrum and ConstraintSet"""

    @staticmethod
    def build_laplacian(g: Graph) -> np.ndarray:
        """L = D - W for the weighted graph g"""
        W = g.adjacency()
        return np.diag(W.sum(axis=1)) - W

    @classmethod
    def decompose(cls, L) -> Spectrum:
        """
        Eigendecomposition of a connected graph's Laplacian

        Eigenvalues are returned ascending with the first one snapped to 0
        and its eigenvector set to 1/sqrt(M). Each column's first entry
        above Config.SIGN_TOL is positive. Columns inside a cluster of
        (numerically) repeated eigenvalues are ordered by the position of
        their largest-magnitude entry.

        Raises:
            DisconnectedGraph: more than one eigenvalue is numerically zero
        """
        L = symmetrize(as_square(L, name="Laplacian"))
        M = L.shape[0]
        w, V = linalg.eigh(L)

        lam_max = float(w[-1])
        zero_tol = Config.EIGEN_ZERO_TOL * lam_max
        num_zero = int(np.sum(w < zero_tol)) if lam_max > 0 else M
        if num_zero != 1:
            raise DisconnectedGraph(
                f"connectivity check failed: {num_zero} Laplacian eigenvalues below {zero_tol:.3g}"
            )

        w = w.copy()
        w[0] = 0.0
        V = fix_signs(V)
        V[:, 0] = 1.0 / np.sqrt(M)

        # clusters of repeated eigenvalues get a reproducible column order
        gap_tol = Config.EIGEN_ZERO_TOL * lam_max
        start = 1
        while start < M:
            stop = start + 1
            while stop < M and w[stop] - w[stop - 1] < gap_tol:
                stop += 1
            if stop - start > 1:
                block = V[:, start:stop]
                order = sorted(range(stop - start), key=lambda c: (int(np.argmax(np.abs(block[:, c]))), c))
                V[:, start:stop] = block[:, order]
                w[start:stop] = np.mean(w[start:stop])
            start = stop

        return Spectrum(w, V)

    @classmethod
    def spectrum_of(cls, g: Graph) -> Spectrum:
        return cls.decompose(cls.build_laplacian(g))

    @staticmethod
    def gft(signal, spec: Spectrum) -> np.ndarray:
        """Graph Fourier transform: V^T theta"""
        theta = as_vector(signal, spec.size, name="graph signal")
        return spec.eigenvectors.T @ theta

    @staticmethod
    def inverse_gft(spectral, spec: Spectrum) -> np.ndarray:
        """Inverse graph Fourier transform: V theta_tilde"""
        theta_f = as_vector(spectral, spec.size, name="spectral signal")
        return spec.eigenvectors @ theta_f

    @staticmethod
    def pinv_laplacian(L) -> np.ndarray:
        """
        Pseudo-inverse of a connected graph's Laplacian

        Uses (L - 11^T/M)^{-1} + 11^T/M, which only needs a dense solve.

        Raises:
            DisconnectedGraph: the shifted matrix is singular
        """
        L = as_square(L, name="Laplacian")
        M = L.shape[0]
        J = np.full((M, M), 1.0 / M)
        inner = L - J
        if condition_number(inner) > 1.0 / Config.PINV_RCOND:
            raise DisconnectedGraph("connectivity check failed: L - 11^T/M is singular")
        inv = linalg.solve(inner, np.eye(M), assume_a='sym')
        return symmetrize(inv + J)

    @staticmethod
    def spectral_pinv(spec: Spectrum) -> np.ndarray:
        """Sum over nonzero eigenvalues of v v^T / lambda"""
        lam = spec.eigenvalues
        inv = np.zeros_like(lam)
        inv[1:] = 1.0 / lam[1:]
        V = spec.eigenvectors
        return (V * inv) @ V.T

    @staticmethod
    def incidence(g: Graph) -> IncidenceMatrix:
        """Oriented incidence matrix with columns in lexicographic edge order"""
        E = np.zeros((g.num_vertices, g.num_edges))
        for col, (i, j, _) in enumerate(g.edges):
            E[i, col] = 1.0
            E[j, col] = -1.0
        return IncidenceMatrix(E, g.edge_pairs, g.weights)

    @staticmethod
    def nullspace_basis(G) -> np.ndarray:
        """
        Orthonormal basis of null(G) for a full-row-rank K x M matrix

        K = 0 gives the identity. Column signs follow the Spectrum rule.

        Raises:
            RankDeficientConstraint: smallest singular value below 1e-10 of the largest
        """
        G = np.atleast_2d(np.asarray(G, dtype=float))
        K, M = G.shape
        if K == 0:
            return np.eye(M)
        s = linalg.svdvals(G)
        if K > M or s[-1] <= Config.PINV_RCOND * s[0]:
            raise RankDeficientConstraint(f"constraint matrix of shape {G.shape} is not full row rank")
        _, _, Vh = linalg.svd(G)
        return fix_signs(Vh[K:].T)

    @classmethod
    def constraint_set(cls, G, a) -> ConstraintSet:
        G = np.atleast_2d(np.asarray(G, dtype=float))
        return ConstraintSet(G, a, cls.nullspace_basis(G))

    @staticmethod
    def bandlimited_constraint(spec: Spectrum, R: int) -> ConstraintSet:
        """
        Constraint set for R-bandlimited signals: G = Q V^T, a = 0, U = V Q_bar

        Raises:
            BandOutOfRange: R outside 1..M
        """
        M = spec.size
        if not 1 <= R <= M:
            raise BandOutOfRange(f"band R={R} outside 1..{M}")
        V = spec.eigenvectors
        G = V[:, R:].T
        return ConstraintSet(G, np.zeros(M - R), V[:, :R])
