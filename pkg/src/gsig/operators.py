"""Measurement operators ``H`` for the data model ``y = H x + noise``."""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, IndexOutOfRange, InputError, OperatorNotAFilter
from .graph import Laplacian
from .kernels import Constant, Kernel
from .spectral import DEFAULT_ORDER, SpectralBasis, filter_signal

NORM_SAMPLES = 1000


class LinearOperator:
    """A linear map with its adjoint and an upper bound on its spectral norm.

    ``kind`` is one of ``identity``, ``mask``, ``filter``, ``composed`` or
    ``matrix``. Filters keep their kernel and graph so that solvers can use
    closed forms in the spectral domain.
    """

    def __init__(self, apply: Callable, adjoint: Callable, shape: tuple[int, int],
                 norm_bound: float, kind: str = "matrix", **info):
        self._apply = apply
        self._adjoint = adjoint
        self.shape = (int(shape[0]), int(shape[1]))
        self.norm_bound = float(norm_bound)
        self.kind = kind
        self.info = info

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.shape[1]:
            raise DimensionMismatch(f"operator expects {self.shape[1]} rows, got {x.shape[0]}")
        return self._apply(x)

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.shape[0]:
            raise DimensionMismatch(f"adjoint expects {self.shape[0]} rows, got {y.shape[0]}")
        return self._adjoint(y)

    __matmul__ = apply

    def todense(self) -> np.ndarray:
        return self.apply(np.eye(self.shape[1]))

    @property
    def T(self) -> "LinearOperator":
        return LinearOperator(self._adjoint, self._apply, self.shape[::-1], self.norm_bound, "matrix")

    def __repr__(self) -> str:
        return f"LinearOperator(kind={self.kind!r}, shape={self.shape}, norm<={self.norm_bound:.4g})"


def identity_operator(n: int) -> LinearOperator:
    return LinearOperator(lambda x: x.copy(), lambda y: y.copy(), (n, n), 1.0, "identity")


def mask_operator(n: int, indices) -> LinearOperator:
    """Selection of the entries ``indices`` (in the given order)."""
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexOutOfRange(f"mask index outside [0, {n})")
    if np.unique(idx).size != idx.size:
        raise InputError("mask indices must be unique")
    idx.setflags(write=False)

    def adj(y):
        out = np.zeros((n,) + y.shape[1:])
        out[idx] = y
        return out

    return LinearOperator(lambda x: x[idx], adj, (idx.size, n), 1.0, "mask", indices=idx)


def filter_norm_bound(kernel: Kernel, lambda_max: float) -> float:
    lam = np.linspace(0.0, lambda_max, NORM_SAMPLES)
    return float(np.max(np.abs(kernel(lam, lambda_max))))


def filter_operator(graph, kernel: Kernel, order: int = DEFAULT_ORDER) -> LinearOperator:
    """``h(L)``: exact if ``graph`` is a SpectralBasis, Chebyshev if a Laplacian."""
    if not isinstance(graph, (SpectralBasis, Laplacian)):
        raise TypeError("filter_operator needs a SpectralBasis or a Laplacian")
    n = graph.n
    bound = filter_norm_bound(kernel, graph.lambda_max)
    f = lambda x: filter_signal(graph, kernel, x, order)  # noqa: E731
    return LinearOperator(f, f, (n, n), bound, "filter", kernel=kernel, graph=graph, order=order)


def matrix_operator(A) -> LinearOperator:
    if sp.issparse(A):
        A = A.tocsr()
        bound = float(np.sqrt(abs(A).sum(axis=0).max() * abs(A).sum(axis=1).max()))
    else:
        A = np.asarray(A, dtype=float)
        bound = float(np.linalg.norm(A, 2)) if A.size else 0.0
    return LinearOperator(lambda x: A @ x, lambda y: A.T @ y, A.shape, bound, "matrix", matrix=A)


def compose(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    """``A o B`` (apply ``B`` first)."""
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"cannot compose {A.shape} with {B.shape}")
    return LinearOperator(lambda x: A.apply(B.apply(x)), lambda y: B.adjoint(A.adjoint(y)),
                          (A.shape[0], B.shape[1]), A.norm_bound * B.norm_bound, "composed",
                          outer=A, inner=B)


def as_operator(H, n: int | None = None) -> LinearOperator:
    if isinstance(H, LinearOperator):
        return H
    if H is None:
        if n is None:
            raise InputError("identity operator needs a size")
        return identity_operator(n)
    return matrix_operator(H)


def filter_kernel_of(H: LinearOperator, n: int) -> Kernel:
    """Spectral kernel of an operator that commutes with L, else OperatorNotAFilter."""
    if H.kind == "identity" and H.shape == (n, n):
        return Constant(1.0)
    if H.kind == "filter":
        return H.info["kernel"]
    raise OperatorNotAFilter(f"operator of kind {H.kind!r} is not a graph filter")
