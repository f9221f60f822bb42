"""Laplacian eigendecomposition, graph Fourier transform and graph filtering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InputError, TooLarge
from .graph import Laplacian
from .kernels import Kernel

MAX_DENSE_N = 5000
CLUSTER_RTOL = 1e-8
DEFAULT_ORDER = 30


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Laplacian.

    ``U[:, l]`` is the eigenvector for ``lambdas[l]``.
    """
    lambdas: np.ndarray
    U: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def lambda_max(self) -> float:
        return float(max(self.lambdas[-1], 0.0))

    def clusters(self, rtol: float = CLUSTER_RTOL) -> list[np.ndarray]:
        """Index groups of numerically equal eigenvalues.

        Consecutive eigenvalues closer than ``rtol * lambda_max`` share a group.
        """
        gap = np.diff(self.lambdas) >= rtol * max(self.lambda_max, np.finfo(float).tiny)
        starts = np.concatenate([[0], np.flatnonzero(gap) + 1])
        ends = np.concatenate([starts[1:], [self.n]])
        return [np.arange(a, b) for a, b in zip(starts, ends)]

    def kernel_values(self, kernel: Kernel) -> np.ndarray:
        return kernel(self.lambdas, self.lambda_max)

    def matrix(self, kernel: Kernel) -> np.ndarray:
        """Dense ``g(L) = U g(Lambda) U^T``."""
        return (self.U * self.kernel_values(kernel)) @ self.U.T


def eigendecompose(lap: Laplacian, max_n: int = MAX_DENSE_N) -> SpectralBasis:
    """Full dense eigendecomposition.

    Each eigenvector is signed so that its first entry of non-negligible
    magnitude is positive.

    Raises:
        TooLarge: when ``N > max_n``; use the Chebyshev routines instead.
    """
    n = lap.n
    if n > max_n:
        raise TooLarge(
            f"dense eigendecomposition refused for N={n} > {max_n}; "
            "use Chebyshev filtering (filter_chebyshev / estimate_psd) instead")
    lams, U = np.linalg.eigh(lap.toarray())
    tol = 1e-10 / np.sqrt(max(n, 1))
    first = np.argmax(np.abs(U) > tol, axis=0)
    signs = np.sign(U[first, np.arange(n)])
    signs[signs == 0] = 1.0
    U = U * signs
    lams.setflags(write=False)
    U.setflags(write=False)
    return SpectralBasis(lams, U)


def _as_signal(basis_n: int, x, name="signal"):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[0] != basis_n:
        raise DimensionMismatch(f"{name} has shape {x.shape}, expected leading dimension {basis_n}")
    return x


def gft(basis: SpectralBasis, x) -> np.ndarray:
    x = _as_signal(basis.n, x)
    return basis.U.T @ x


def igft(basis: SpectralBasis, xhat) -> np.ndarray:
    xhat = _as_signal(basis.n, xhat, "spectrum")
    return basis.U @ xhat


def filter_exact(basis: SpectralBasis, kernel: Kernel, X) -> np.ndarray:
    """``U g(Lambda) U^T X`` for a vector or an N x K matrix."""
    X = _as_signal(basis.n, X)
    g = basis.kernel_values(kernel)
    coef = basis.U.T @ X
    coef = coef * (g if X.ndim == 1 else g[:, None])
    return basis.U @ coef


def chebyshev_coefficients(kernel: Kernel, lambda_max: float, order: int) -> np.ndarray:
    """Coefficients ``c_0..c_order`` of the kernel on ``[0, lambda_max]``.

    The approximation is ``c_0 / 2 + sum_{j>=1} c_j T_j(2 lam / lambda_max - 1)``,
    obtained by interpolation at the ``order + 1`` Chebyshev points.
    """
    order = int(order)
    if order < 0:
        raise InputError("Chebyshev order must be non-negative")
    n = order + 1
    theta = np.pi * (np.arange(n) + 0.5) / n
    lam = 0.5 * lambda_max * (np.cos(theta) + 1.0)
    g = kernel(lam, lambda_max)
    j = np.arange(n)[:, None]
    return (2.0 / n) * (np.cos(j * theta[None, :]) @ g)


def chebyshev_eval(coeffs: np.ndarray, lam, lambda_max: float) -> np.ndarray:
    """Evaluate the scalar Chebyshev approximation (useful for checking coefficients)."""
    t = 2.0 * np.asarray(lam, dtype=float) / lambda_max - 1.0
    c = np.array(coeffs, dtype=float)
    c[0] *= 0.5
    return np.polynomial.chebyshev.chebval(t, c)


def _chebyshev_apply(lap: Laplacian, coeff_rows: np.ndarray, X: np.ndarray) -> np.ndarray:
    # coeff_rows: (M, order+1); returns (M, *X.shape); shares one recurrence
    a = lap.lambda_max
    L = lap.L
    M, n_terms = coeff_rows.shape
    out = np.empty((M,) + X.shape)
    t_prev = X
    out[:] = 0.5 * coeff_rows[:, 0].reshape((M,) + (1,) * X.ndim) * X
    if n_terms == 1:
        return out
    t_cur = (2.0 / a) * (L @ X) - X
    out += coeff_rows[:, 1].reshape((M,) + (1,) * X.ndim) * t_cur
    for k in range(2, n_terms):
        t_next = (4.0 / a) * (L @ t_cur) - 2.0 * t_cur - t_prev
        out += coeff_rows[:, k].reshape((M,) + (1,) * X.ndim) * t_next
        t_prev, t_cur = t_cur, t_next
    return out


def filter_chebyshev(lap: Laplacian, kernel: Kernel, X, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Polynomial approximation of ``g(L) X`` via the three-term recurrence.

    Costs ``order`` sparse products with ``L``; no eigendecomposition.
    """
    if int(order) < 1:
        raise InputError("Chebyshev order must be >= 1")
    X = _as_signal(lap.n, X)
    c = chebyshev_coefficients(kernel, lap.lambda_max, order)
    return _chebyshev_apply(lap, c[None, :], X)[0]


def filter_chebyshev_bank(lap: Laplacian, kernels, X, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Apply several kernels at once; returns an array of shape ``(len(kernels), *X.shape)``.

    The Chebyshev polynomials of ``L`` applied to ``X`` are computed once and
    shared by all kernels.
    """
    if int(order) < 1:
        raise InputError("Chebyshev order must be >= 1")
    X = _as_signal(lap.n, X)
    C = np.vstack([chebyshev_coefficients(k, lap.lambda_max, order) for k in kernels])
    return _chebyshev_apply(lap, C, X)


def filter_signal(op, kernel: Kernel, X, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Exact filtering when ``op`` is a SpectralBasis, Chebyshev when it is a Laplacian."""
    if isinstance(op, SpectralBasis):
        return filter_exact(op, kernel, X)
    if isinstance(op, Laplacian):
        return filter_chebyshev(op, kernel, X, order)
    raise TypeError(f"expected SpectralBasis or Laplacian, got {type(op).__name__}")


def localize(op, kernel: Kernel, i: int, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Kernel localized at vertex ``i``: the vector ``g(L) delta_i``."""
    n = op.n
    if not 0 <= int(i) < n:
        raise IndexOutOfRange(f"vertex {i} outside [0, {n})")
    if isinstance(op, SpectralBasis):
        g = op.kernel_values(kernel)
        return op.U @ (g * op.U[int(i), :])
    delta = np.zeros(n)
    delta[int(i)] = 1.0
    return filter_signal(op, kernel, delta, order)
