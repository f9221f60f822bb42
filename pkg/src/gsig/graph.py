"""Weighted undirected graphs, combinatorial Laplacians and graph gradients."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.spatial import cKDTree

from .errors import (
    DegenerateFeatures,
    DuplicateEdge,
    IndexOutOfRange,
    InputError,
    NonPositiveWeight,
    SelfLoop,
)

AUTO = "auto"

POWER_ITERATIONS = 50
POWER_TOL = 1e-6
LAMBDA_MAX_SAFETY = 1.01


class Graph:
    """Immutable weighted undirected graph without self-loops.

    Edges are stored once per unordered pair with ``i < j``, sorted
    lexicographically. The symmetric weight matrix is kept in CSR form so that
    ``neighbors`` costs O(deg).
    """

    __slots__ = ("_n", "_i", "_j", "_w", "_W")

    def __init__(self, n_vertices: int, i, j, w):
        self._n = int(n_vertices)
        order = np.lexsort((j, i))
        self._i = np.ascontiguousarray(np.asarray(i, dtype=np.int64)[order])
        self._j = np.ascontiguousarray(np.asarray(j, dtype=np.int64)[order])
        self._w = np.ascontiguousarray(np.asarray(w, dtype=float)[order])
        for a in (self._i, self._j, self._w):
            a.setflags(write=False)
        n = self._n
        W = sp.coo_matrix(
            (np.concatenate([self._w, self._w]),
             (np.concatenate([self._i, self._j]), np.concatenate([self._j, self._i]))),
            shape=(n, n),
        ).tocsr()
        W.sort_indices()
        self._W = W

    @property
    def n_vertices(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return len(self._w)

    @property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Read-only ``(i, j, w)`` arrays, sorted by ``(i, j)``."""
        return self._i, self._j, self._w

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self._i, self._j, self._w)]

    @property
    def W(self) -> sp.csr_matrix:
        return self._W.copy()

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self._W.sum(axis=1)).ravel()

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(indices, weights)`` of the vertices adjacent to ``i``."""
        _check_vertex(i, self._n)
        lo, hi = self._W.indptr[i], self._W.indptr[i + 1]
        return self._W.indices[lo:hi].copy(), self._W.data[lo:hi].copy()

    def n_components(self) -> int:
        return connected_components(self._W, directed=False)[0]

    def component_labels(self) -> np.ndarray:
        return connected_components(self._W, directed=False)[1]

    def __repr__(self) -> str:
        return f"Graph(n_vertices={self._n}, n_edges={self.n_edges})"


def _check_vertex(i, n):
    if not 0 <= int(i) < n:
        raise IndexOutOfRange(f"vertex {i} outside [0, {n})")


def graph_from_edge_list(n: int, edges) -> Graph:
    """Build a graph from ``(i, j, w)`` triples.

    Each unordered pair may appear at most once, in either orientation.

    Raises:
        IndexOutOfRange, NonPositiveWeight, SelfLoop, DuplicateEdge
    """
    n = int(n)
    if n < 1:
        raise InputError("a graph needs at least one vertex")
    arr = np.asarray(list(edges), dtype=float).reshape(-1, 3)
    i, j, w = arr[:, 0], arr[:, 1], arr[:, 2]
    if np.any(i != np.round(i)) or np.any(j != np.round(j)):
        raise InputError("vertex indices must be integers")
    i = i.astype(np.int64)
    j = j.astype(np.int64)
    bad = (i < 0) | (i >= n) | (j < 0) | (j >= n)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise IndexOutOfRange(f"edge {k} ({i[k]}, {j[k]}) has a vertex outside [0, {n})")
    loops = i == j
    if loops.any():
        k = int(np.flatnonzero(loops)[0])
        raise SelfLoop(f"edge {k} is a self-loop on vertex {i[k]}")
    nonpos = ~(w > 0) | ~np.isfinite(w)
    if nonpos.any():
        k = int(np.flatnonzero(nonpos)[0])
        raise NonPositiveWeight(f"edge {k} ({i[k]}, {j[k]}) has weight {w[k]}")
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    key = lo * n + hi
    uniq, first, counts = np.unique(key, return_index=True, return_counts=True)
    if np.any(counts > 1):
        dup = uniq[counts > 1][0]
        raise DuplicateEdge(f"edge ({dup // n}, {dup % n}) listed more than once")
    return Graph(n, lo, hi, w)


def knn_graph(features, k: int, sigma2=AUTO) -> Graph:
    """k-nearest-neighbour graph with weights ``exp(-d^2 / sigma2)``.

    An edge joins ``i`` and ``n`` when either is among the ``k`` nearest
    neighbours of the other. With ``sigma2="auto"`` the scale is the mean of
    the retained squared distances (1.0 if they are all zero).
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    N = X.shape[0]
    if N < 2:
        raise DegenerateFeatures("k-NN graph needs at least two feature rows")
    k = int(k)
    if not 1 <= k < N:
        raise InputError(f"k must satisfy 1 <= k < N (got k={k}, N={N})")
    if not np.all(np.isfinite(X)):
        raise InputError("features contain non-finite values")

    tree = cKDTree(X)
    _, idx = tree.query(X, k=k + 1)
    idx = np.atleast_2d(idx)
    rows = np.arange(N)[:, None]
    is_self = idx == rows
    # drop self if returned, otherwise the farthest candidate (duplicate points)
    keep = ~is_self
    no_self = ~is_self.any(axis=1)
    keep[no_self, -1] = False
    src = np.broadcast_to(rows, idx.shape)[keep]
    dst = idx[keep]
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    pairs = np.unique(lo * N + hi)
    lo, hi = pairs // N, pairs % N
    d2 = np.sum((X[lo] - X[hi]) ** 2, axis=1)
    if isinstance(sigma2, str):
        if sigma2 != AUTO:
            raise InputError(f"sigma2 must be positive or 'auto', got {sigma2!r}")
        s2 = float(d2.mean()) if d2.size and d2.mean() > 0 else 1.0
    else:
        s2 = float(sigma2)
        if not s2 > 0:
            raise InputError("sigma2 must be positive")
    w = np.maximum(np.exp(-d2 / s2), np.finfo(float).tiny)
    return Graph(N, lo, hi, w)


def ring_graph(n: int) -> Graph:
    """Unit-weight cycle on ``n >= 3`` vertices."""
    n = int(n)
    if n < 3:
        raise InputError("ring graph needs n >= 3")
    i = np.arange(n)
    j = (i + 1) % n
    return Graph(n, np.minimum(i, j), np.maximum(i, j), np.ones(n))


def grid_graph(rows: int, cols: int) -> Graph:
    """4-connected unit-weight grid; vertex ``r * cols + c``."""
    rows, cols = int(rows), int(cols)
    if rows < 1 or cols < 1:
        raise InputError("grid dimensions must be positive")
    idx = np.arange(rows * cols).reshape(rows, cols)
    i = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    j = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return Graph(rows * cols, i, j, np.ones(len(i)))


def random_geometric_graph(n: int, k: int = 10, seed: int = 0) -> Graph:
    """k-NN graph (exponential weights, automatic scale) on uniform points in the unit square."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(int(n), 2))
    return knn_graph(pts, k)


def geometric_coords(n: int, seed: int = 0) -> np.ndarray:
    """Vertex coordinates used by ``random_geometric_graph(n, k, seed)``."""
    return np.random.default_rng(seed).uniform(size=(int(n), 2))


class Laplacian:
    """Combinatorial Laplacian ``L = D - W`` with a cached spectral upper bound."""

    __slots__ = ("graph", "_L", "lambda_max")

    def __init__(self, graph: Graph, L: sp.csr_matrix, lambda_max: float):
        self.graph = graph
        self._L = L
        self.lambda_max = float(lambda_max)

    @property
    def L(self) -> sp.csr_matrix:
        return self._L

    @property
    def n(self) -> int:
        return self.graph.n_vertices

    def dot(self, X):
        return self._L @ X

    def toarray(self) -> np.ndarray:
        return self._L.toarray()

    def __repr__(self) -> str:
        return f"Laplacian(n={self.n}, lambda_max<={self.lambda_max:.6g})"


def _degree_pair_bound(g: Graph, d: np.ndarray) -> float:
    # Anderson-Morley: lambda_max <= max over edges of d_i + d_j
    i, j, _ = g.edge_arrays
    if len(i) == 0:
        return 0.0
    return float(np.max(d[i] + d[j]))


def estimate_lambda_max(L: sp.spmatrix, d: np.ndarray | None = None, graph: Graph | None = None) -> float:
    """Upper bound on the largest eigenvalue of a Laplacian.

    Power iteration (50 steps, relative tolerance 1e-6) on a fixed start
    vector; if it has not settled, a Lanczos solve refines the value. The
    estimate is inflated by 1 % and then capped by the degree-pair bound,
    which is itself a valid upper bound.
    """
    n = L.shape[0]
    x = np.random.default_rng(0).standard_normal(n)
    x /= np.linalg.norm(x)
    rho = 0.0
    converged = False
    for _ in range(POWER_ITERATIONS):
        y = L @ x
        new = float(x @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            rho, converged = 0.0, True
            break
        x = y / nrm
        if abs(new - rho) <= POWER_TOL * max(abs(new), 1e-300):
            rho, converged = new, True
            break
        rho = new
    if not converged and n > 2:
        try:
            rho = max(rho, float(eigsh(L, k=1, which="LA", tol=1e-8, v0=x, return_eigenvectors=False)[0]))
        except ArpackNoConvergence as exc:  # pragma: no cover - fall back to the cap
            rho = max([rho, *np.atleast_1d(exc.eigenvalues)]) if len(exc.eigenvalues) else np.inf
    bound = LAMBDA_MAX_SAFETY * rho
    if graph is not None and d is not None:
        bound = min(bound, _degree_pair_bound(graph, d))
    return bound if bound > 0 else 1.0


def laplacian(g: Graph) -> Laplacian:
    d = g.degrees
    L = (sp.diags(d) - g.W).tocsr()
    L.sort_indices()
    return Laplacian(g, L, estimate_lambda_max(L, d, g))


class GradientOperator:
    """Edge-by-vertex difference operator with ``||grad x||^2 = x^T L x``.

    Row ``e`` for edge ``(i, j, w)`` holds ``+sqrt(w)`` at ``i`` and
    ``-sqrt(w)`` at ``j``; rows follow the graph's ``(i, j)`` edge order.
    """

    __slots__ = ("matrix", "lambda_max")

    def __init__(self, matrix: sp.csr_matrix, lambda_max: float):
        self.matrix = matrix
        # ||grad||_2^2 = lambda_max(L)
        self.lambda_max = float(lambda_max)

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix.T @ y

    __matmul__ = apply


def gradient_operator(g: Graph, lambda_max: float | None = None) -> GradientOperator:
    i, j, w = g.edge_arrays
    m = len(w)
    s = np.sqrt(w)
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([i, j])
    vals = np.concatenate([s, -s])
    G = sp.csr_matrix((vals, (rows, cols)), shape=(m, g.n_vertices))
    if lambda_max is None:
        lambda_max = laplacian(g).lambda_max
    return GradientOperator(G, lambda_max)
