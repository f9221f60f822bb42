"""Graph Wiener filtering and Wiener optimization.

The regularized problem is

    min_x ||H x - y||^2 + ||w(L) (x - m)||^2,   w^2 = n / s^2,

solved by accelerated forward-backward splitting whose proximal step is the
bounded Wiener denoiser ``s^2 / (s^2 + beta n)``. ``w`` itself is never formed.
Closed-form dense estimators serve as desk-scale references.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InputError, NonconvergedWarning, SingularSystem
from .graph import Laplacian
from .kernels import Constant, FunctionKernel, Kernel
from .operators import LinearOperator, as_operator, filter_kernel_of
from .spectral import DEFAULT_ORDER, SpectralBasis, filter_signal

DEFAULT_EPS = 1e-8
DEFAULT_J = 2000
DEFAULT_DELTA = 1e-12
RESTART_RTOL = 1e-12
SINGULAR_RCOND = 1e-13
PINV_RTOL = 1e-10


def _safe_ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def wiener_kernel(h: Kernel, s2: Kernel, n: Kernel) -> Kernel:
    """``h s^2 / (h^2 s^2 + n)`` with ``0/0 = 0``."""
    def g(lam):
        hv, sv, nv = h(lam), np.maximum(s2(lam), 0.0), n(lam)
        return _safe_ratio(hv * sv, hv * hv * sv + nv)
    return FunctionKernel(g, "wiener")


def prox_kernel(s2: Kernel, n: Kernel, beta: float) -> Kernel:
    """Wiener denoiser ``s^2 / (s^2 + beta n)`` used as the proximal step."""
    def g(lam):
        sv = np.maximum(s2(lam), 0.0)
        return _safe_ratio(sv, sv + beta * n(lam))
    return FunctionKernel(g, "wiener_prox")


def _penalty_kernel(s2: Kernel, n: Kernel, beta: float) -> Kernel:
    # w^2 g^2 = n s^2 / (s^2 + beta n)^2: penalty of a prox output, always finite
    def q(lam):
        sv = np.maximum(s2(lam), 0.0)
        nv = n(lam)
        return _safe_ratio(nv * sv, (sv + beta * nv) ** 2)
    return FunctionKernel(q, "wiener_penalty")


@dataclass(eq=False)
class WienerProblem:
    """Data ``y = H x + noise`` for a stationary signal with PSD ``psd``.

    ``graph`` is a SpectralBasis (exact filtering) or a Laplacian (Chebyshev).
    ``noise`` is the noise PSD; use ``Constant(sigma**2)`` for i.i.d. noise.
    """
    graph: SpectralBasis | Laplacian
    H: LinearOperator
    psd: Kernel
    noise: Kernel
    y: np.ndarray
    mean: float | np.ndarray = 0.0
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        n = self.graph.n
        self.H = as_operator(self.H, n)
        self.y = np.asarray(self.y, dtype=float)
        if self.H.shape[1] != n:
            raise DimensionMismatch(f"operator has {self.H.shape[1]} columns, graph has {n} vertices")
        if self.y.shape != (self.H.shape[0],):
            raise DimensionMismatch(f"y has shape {self.y.shape}, operator has {self.H.shape[0]} rows")
        if np.ndim(self.mean) not in (0, 1) or (np.ndim(self.mean) == 1 and len(self.mean) != n):
            raise DimensionMismatch("mean must be a scalar or a length-N vector")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def mean_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.mean, dtype=float), (self.n,)).copy()


@dataclass
class WienerSolution:
    x: np.ndarray
    objective: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def trace_dict(self) -> dict:
        return {"objective": [float(v) for v in self.objective],
                "iterations": self.iterations, "converged": self.converged}


def wiener_filter(problem: WienerProblem) -> np.ndarray:
    """Single-filter estimate ``m + g(L)(y - h(L) m)`` for ``H = h(L)``.

    Raises:
        OperatorNotAFilter: if ``H`` does not commute with the Laplacian.
    """
    h = filter_kernel_of(problem.H, problem.n)
    g = wiener_kernel(h, problem.psd, problem.noise)
    m = problem.mean_vector
    resid = problem.y - problem.H.apply(m)
    return m + filter_signal(problem.graph, g, resid, problem.order)


def default_step(H: LinearOperator) -> float:
    return 1.0 / (2.0 * H.norm_bound**2)


def wiener_denoise(op, psd: Kernel, noise: Kernel, beta: float, v, mean=0.0,
                   order: int = DEFAULT_ORDER) -> np.ndarray:
    """Proximal step of the Wiener penalty: ``m + g(L)(v - m)`` with ``g = s^2 / (s^2 + beta n)``."""
    v = np.asarray(v, dtype=float)
    m = np.broadcast_to(np.asarray(mean, dtype=float), v.shape)
    return m + filter_signal(op, prox_kernel(psd, noise, beta), v - m, order)


def wiener_objective(problem: WienerProblem, x) -> float:
    """``||Hx - y||^2 + ||w(L)(x - m)||^2`` evaluated exactly (needs a SpectralBasis).

    Spectral components where ``s = 0`` contribute 0 if the coefficient is 0
    and infinity otherwise.
    """
    basis = problem.graph
    if not isinstance(basis, SpectralBasis):
        raise InputError("exact objective needs a SpectralBasis")
    r = problem.H.apply(x) - problem.y
    c = basis.U.T @ (np.asarray(x, dtype=float) - problem.mean_vector)
    s2 = np.maximum(basis.kernel_values(problem.psd), 0.0)
    nv = basis.kernel_values(problem.noise)
    pos = s2 > 0
    pen = float(np.sum(nv[pos] / s2[pos] * c[pos] ** 2))
    if np.any(np.abs(c[~pos]) > 1e-12 * max(1.0, np.abs(c).max())) and np.any(nv[~pos] > 0):
        pen = np.inf
    return float(r @ r) + pen


def wiener_optimize(problem: WienerProblem, beta: float | None = None, eps: float = DEFAULT_EPS,
                    J: int = DEFAULT_J, delta: float = DEFAULT_DELTA, x0=None) -> WienerSolution:
    """Accelerated forward-backward solver for Wiener optimization.

    Each iteration takes a gradient step on the data term, applies the Wiener
    denoiser around the mean, and extrapolates with the usual FISTA momentum.
    Stops when ``||z_{j+1} - z_j||^2 / (||z_j||^2 + delta) < eps`` or after ``J``
    iterations (then warns with NonconvergedWarning). A step that raises the
    objective is rejected and the momentum restarts from the last accepted
    point, so the run never stops on an increase. Returns the last accepted
    proximal output and the objective of every candidate.
    """
    H = problem.H
    bmax = default_step(H)
    if beta is None:
        beta = bmax
    if not 0 < beta <= bmax * (1 + 1e-12):
        raise InputError(f"step beta={beta} must lie in (0, 1/(2 ||H||^2)] = (0, {bmax}]")
    if int(J) < 1:
        raise InputError("J must be >= 1")
    graph, y, m = problem.graph, problem.y, problem.mean_vector
    g = prox_kernel(problem.psd, problem.noise, beta)
    q = _penalty_kernel(problem.psd, problem.noise, beta)

    if isinstance(graph, SpectralBasis):
        U = graph.U
        gv = graph.kernel_values(g)
        qv = graph.kernel_values(q)

        def prox(vt):
            c = U.T @ vt
            return U @ (gv * c), float(qv @ (c * c))
    else:
        sq = FunctionKernel(lambda lam: np.sqrt(q(lam)), "sqrt_penalty")

        def prox(vt):
            pen_vec = filter_signal(graph, sq, vt, problem.order)
            return filter_signal(graph, g, vt, problem.order), float(pen_vec @ pen_vec)

    z = m.copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    u_prev = z.copy()
    t = 1.0
    trace = []
    f_prev = np.inf
    converged = False
    j = 0
    for j in range(1, int(J) + 1):
        v = z - beta * H.adjoint(H.apply(z) - y)
        du, pen = prox(v - m)
        u = m + du
        r = H.apply(u) - y
        f = float(r @ r) + pen
        trace.append(f)
        if f > f_prev + RESTART_RTOL * abs(f_prev):
            # momentum overshot: restart from the last accepted point
            z, t = u_prev, 1.0
            continue
        f_prev = f
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z_next = u + ((t - 1.0) / t_next) * (u - u_prev)
        if not np.all(np.isfinite(z_next)):
            raise SingularSystem("Wiener optimization produced non-finite iterates")
        crit = float(np.sum((z_next - z) ** 2) / (np.sum(z * z) + delta))
        z, u_prev, t = z_next, u, t_next
        if crit < eps:
            converged = True
            break
    if not converged:
        warnings.warn(f"Wiener optimization stopped at J={J} without reaching eps={eps}",
                      NonconvergedWarning, stacklevel=2)
    return WienerSolution(u_prev, trace, j, converged)


def _dense(H, n: int) -> np.ndarray:
    H = as_operator(H, n)
    return H.todense()


def _check_spd_solve(A: np.ndarray, b: np.ndarray, pinv: bool) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    top = max(float(np.max(np.abs(w))) if w.size else 0.0, np.finfo(float).tiny)
    if pinv:
        keep = w > PINV_RTOL * top
        inv = np.zeros_like(w)
        inv[keep] = 1.0 / w[keep]
        return V @ (inv * (V.T @ b))
    if w.size == 0 or w.min() <= SINGULAR_RCOND * top:
        raise SingularSystem("measurement covariance is singular")
    return V @ ((V.T @ b) / w)


def lmmse_from_covariance(Sigma, H, y, sigma2: float, mean=0.0, pinv: bool = False) -> np.ndarray:
    """``m + Sigma H^T (H Sigma H^T + sigma2 I)^{-1} (y - H m)`` by dense algebra.

    With ``pinv=True`` a pseudo-inverse replaces the inverse (rank-deficient
    empirical covariances).
    """
    Sigma = np.asarray(Sigma, dtype=float)
    n = Sigma.shape[0]
    Hd = _dense(H, n)
    y = np.asarray(y, dtype=float)
    m = np.broadcast_to(np.asarray(mean, dtype=float), (n,))
    Sxy = Sigma @ Hd.T
    Sy = Hd @ Sxy + float(sigma2) * np.eye(Hd.shape[0])
    a = _check_spd_solve(Sy, y - Hd @ m, pinv)
    return m + Sxy @ a


def lmmse_closed_form(basis: SpectralBasis, H, y, s2: Kernel, sigma2: float, mean=0.0) -> np.ndarray:
    """Linear minimum mean square error estimate for covariance ``s^2(L)``.

    Raises:
        SingularSystem: ``H s^2(L) H^T + sigma2 I`` is not invertible.
    """
    S = basis.matrix(FunctionKernel(lambda lam: np.maximum(s2(lam), 0.0)))
    return lmmse_from_covariance(S, H, y, sigma2, mean)


def wiener_interpolate_noiseless(basis: SpectralBasis, H, y, s2: Kernel, mean=0.0) -> np.ndarray:
    """Minimizer of ``||s^{-1}(L)(x - m)||^2`` subject to ``H x = y``.

    Computed as ``m + S H^T (H S H^T)^+ (y - H m)`` with ``S = s^2(L)``; the
    pseudo-inverse covers band-limited PSDs sampled at more points than their
    rank.

    Raises:
        SingularSystem: when the constraint cannot be met (``y`` is not
            reachable through ``H S H^T``).
    """
    n = basis.n
    S = basis.matrix(FunctionKernel(lambda lam: np.maximum(s2(lam), 0.0)))
    Hd = _dense(H, n)
    y = np.asarray(y, dtype=float)
    m = np.broadcast_to(np.asarray(mean, dtype=float), (n,))
    Sxy = S @ Hd.T
    a = _check_spd_solve(Hd @ Sxy, y - Hd @ m, pinv=True)
    x = m + Sxy @ a
    if np.linalg.norm(Hd @ x - y) > 1e-8 * max(1.0, np.linalg.norm(y)):
        raise SingularSystem("H s^2(L) H^T is singular on the measurements; constraint H x = y unreachable")
    return x


def epsilon_rule(sigma: float, m: int) -> float:
    """Constraint radius ``sigma * sqrt(m)`` for i.i.d. noise of std ``sigma`` on ``m`` samples."""
    if sigma < 0:
        raise InputError("noise std must be non-negative")
    return float(sigma) * float(np.sqrt(m))


def white_noise(sigma2: float) -> Kernel:
    return Constant(float(sigma2))
