"""Empirical moments, spectral covariance, PSD extraction and stationarity level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    AsymmetricInput,
    DimensionMismatch,
    EmptyEnsemble,
    NegativeDiagonal,
    NonzeroDiagonal,
    TooFewRealizations,
    ZeroMatrix,
)
from .kernels import Sampled
from .spectral import SpectralBasis

NEGATIVE_DIAG_TOL = 1e-8
DEFAULT_THRESHOLD = 0.8


@dataclass(frozen=True, eq=False)
class SignalEnsemble:
    """K realizations of a graph signal stored column-wise (N x K).

    ``centered`` records that the data has zero mean, either because the mean
    was removed (then ``mean`` holds it) or because it is known to be zero.
    """
    data: np.ndarray
    mean: np.ndarray | None = None
    centered: bool = False

    def __post_init__(self):
        X = np.asarray(self.data, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise EmptyEnsemble(f"ensemble data must be a non-empty N x K matrix, got shape {X.shape}")
        X = X.copy()
        X.setflags(write=False)
        object.__setattr__(self, "data", X)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> int:
        return self.data.shape[1]


def empirical_mean(ens: SignalEnsemble) -> np.ndarray:
    return ens.data.mean(axis=1)


def center(ens: SignalEnsemble) -> SignalEnsemble:
    """Remove the per-vertex sample mean; a no-op on centered ensembles."""
    if ens.centered:
        return ens
    m = empirical_mean(ens)
    return SignalEnsemble(ens.data - m[:, None], mean=m, centered=True)


def empirical_covariance(ens: SignalEnsemble) -> np.ndarray:
    """Sample covariance with the unbiased ``1/(K-1)`` factor."""
    if ens.k < 2:
        raise TooFewRealizations(f"covariance needs at least 2 realizations, got {ens.k}")
    Xc = ens.data - ens.data.mean(axis=1, keepdims=True)
    S = (Xc @ Xc.T) / (ens.k - 1)
    return 0.5 * (S + S.T)


@dataclass(frozen=True, eq=False)
class SpectralCovariance:
    """``Gamma = U^T Sigma U`` together with the basis that produced it."""
    Gamma: np.ndarray
    basis: SpectralBasis


def spectral_covariance(basis: SpectralBasis, Sigma) -> SpectralCovariance:
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (basis.n, basis.n):
        raise DimensionMismatch(f"covariance shape {Sigma.shape} does not match N={basis.n}")
    G = basis.U.T @ Sigma @ basis.U
    return SpectralCovariance(G, basis)


def psd_from_covariance(basis: SpectralBasis, Sigma) -> Sampled:
    """PSD knots ``(lambda_l, Gamma_ll)``, one knot per eigenvalue cluster.

    Inside a cluster of repeated eigenvalues the diagonal entries are averaged,
    which makes the result independent of the eigenvector rotation.

    Raises:
        NegativeDiagonal: a diagonal entry below ``-1e-8`` (relative to the
            largest entry), i.e. the input is not positive semi-definite.
    """
    G = spectral_covariance(basis, Sigma).Gamma
    diag = np.diag(G)
    scale = max(1.0, float(np.max(np.abs(diag))) if diag.size else 1.0)
    worst = float(diag.min())
    if worst < -NEGATIVE_DIAG_TOL * scale:
        raise NegativeDiagonal(f"spectral covariance has diagonal entry {worst:.3g} < 0")
    lams, vals = [], []
    for idx in basis.clusters():
        lams.append(float(np.mean(basis.lambdas[idx])))
        vals.append(float(np.mean(diag[idx])))
    vals = np.maximum(np.asarray(vals), 0.0)
    return Sampled(np.asarray(lams), vals, nonnegative=True)


def stationarity_measure(Gamma) -> float:
    """``||diag(Gamma)||_2 / ||Gamma||_F``; equals 1 exactly when Gamma is diagonal."""
    if isinstance(Gamma, SpectralCovariance):
        Gamma = Gamma.Gamma
    G = np.asarray(Gamma, dtype=float)
    fro = np.linalg.norm(G)
    if fro == 0:
        raise ZeroMatrix("stationarity measure undefined for a zero matrix")
    return float(np.linalg.norm(np.diag(G)) / fro)


def squared_distance_matrix(X) -> np.ndarray:
    """``D[i, n] = mean_k (x_k[i] - x_k[n])^2`` for samples stored as columns of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return cdist(X, X, "sqeuclidean") / X.shape[1]


def gram_from_distances(D) -> np.ndarray:
    """Double centering ``-1/2 J D J`` with ``J = I - 11^T / N``.

    For samples whose entries each sum to zero over the vertices, this equals
    their ``1/K`` Gram matrix when ``D`` is their mean squared distance matrix.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionMismatch(f"distance matrix must be square, got {D.shape}")
    scale = max(float(np.max(np.abs(D))) if D.size else 0.0, np.finfo(float).tiny)
    if np.max(np.abs(D - D.T), initial=0.0) > 1e-12 * scale:
        raise AsymmetricInput("distance matrix is not symmetric")
    if np.max(np.abs(np.diag(D)), initial=0.0) > 1e-12 * scale:
        raise NonzeroDiagonal("distance matrix has a nonzero diagonal")
    row = D.mean(axis=1, keepdims=True)
    col = D.mean(axis=0, keepdims=True)
    return -0.5 * (D - row - col + D.mean())


def stationarity_report(basis: SpectralBasis, ens: SignalEnsemble,
                        threshold: float = DEFAULT_THRESHOLD, preview: int = 10) -> dict:
    """Summary of how close an ensemble is to stationary on the graph.

    The ``stationary`` flag is informational (``s_r >= threshold``).
    """
    if ens.n != basis.n:
        raise DimensionMismatch(f"signals have {ens.n} rows, graph has {basis.n} vertices")
    Sigma = empirical_covariance(ens)
    sc = spectral_covariance(basis, Sigma)
    s_r = stationarity_measure(sc)
    return {
        "s_r": s_r,
        "n": basis.n,
        "k": ens.k,
        "cluster_count": len(basis.clusters()),
        "threshold": threshold,
        "stationary": bool(s_r >= threshold),
        "gamma_diag_preview": np.diag(sc.Gamma)[:preview].tolist(),
    }
