"""Constrained Tikhonov and total-variation reconstructions.

Both solve ``min R(x) s.t. ||H x - y||_2 <= eps`` through the Lagrangian
``||H x - y||^2 + gamma R(x)``: the residual grows with ``gamma``, so a
log-scale bisection on ``gamma`` finds the largest feasible value. Tikhonov
inner problems are linear solves; TV inner problems use primal-dual
(Chambolle-Pock) iterations.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, Infeasible, InputError, NonconvergedWarning
from .graph import GradientOperator, Laplacian, gradient_operator
from .operators import LinearOperator, as_operator
from .spectral import SpectralBasis

BISECT_RTOL = 1e-3
FEAS_RTOL = 1e-6
MAX_BISECT = 200
TIKHONOV_RTOL = 1e-9
GAMMA_SPAN = 1e14


def _spectral_filter_data(H: LinearOperator, basis: SpectralBasis | None):
    """Kernel values of H on ``basis`` when H is a filter on that same graph."""
    if basis is None:
        return None
    if H.kind == "identity" and H.shape == (basis.n, basis.n):
        return np.ones(basis.n)
    if H.kind == "filter" and isinstance(H.info.get("graph"), SpectralBasis) and H.info["graph"].n == basis.n:
        return basis.kernel_values(H.info["kernel"])
    return None


def _component_basis(lap: Laplacian) -> np.ndarray:
    labels = lap.graph.component_labels()
    B = np.zeros((lap.n, labels.max() + 1))
    B[np.arange(lap.n), labels] = 1.0
    return B


def _nullspace_fit(lap: Laplacian, H: LinearOperator, y: np.ndarray):
    """Best fit among signals constant on each connected component (R(x) = 0)."""
    B = _component_basis(lap)
    HB = H.apply(B)
    a, *_ = np.linalg.lstsq(HB, y, rcond=None)
    x = B @ a
    return x, float(np.linalg.norm(H.apply(x) - y))


def _min_residual(H: LinearOperator, y: np.ndarray, hv) -> float:
    if H.kind in ("identity", "mask"):
        return 0.0
    if hv is not None:
        basis = H.info.get("graph")
        c = basis.U.T @ y
        return float(np.linalg.norm(c[np.abs(hv) <= 1e-14 * np.abs(hv).max()]))
    A = spla.LinearOperator(H.shape, matvec=H.apply, rmatvec=H.adjoint)
    x = spla.lsqr(A, y, atol=1e-14, btol=1e-14, iter_lim=10 * H.shape[1])[0]
    return float(np.linalg.norm(H.apply(x) - y))


def _check_inputs(lap: Laplacian, H, y, eps):
    H = as_operator(H, lap.n)
    y = np.asarray(y, dtype=float)
    if H.shape[1] != lap.n or y.shape != (H.shape[0],):
        raise DimensionMismatch(f"operator {H.shape}, y {y.shape} and N={lap.n} are inconsistent")
    if not eps >= 0:
        raise InputError("eps must be non-negative")
    return H, y


def _bisect(solve, eps: float, gamma0: float, x_flat: np.ndarray, rtol: float = BISECT_RTOL):
    """Largest gamma whose solution has residual <= eps, to relative accuracy ``rtol``.

    ``solve(gamma, warm)`` returns ``(x, residual, state)``.
    """
    lo = hi = None
    state = None
    g = gamma0
    x, r, state = solve(g, state)
    if r <= eps:
        lo = (g, x, r, state)
        while hi is None:
            g *= 10.0
            if g > gamma0 * GAMMA_SPAN:
                # still feasible for enormous gamma: the flat solution is the limit
                return x_flat
            x, r, state = solve(g, state)
            if r <= eps:
                lo = (g, x, r, state)
            else:
                hi = (g, x, r, state)
    else:
        hi = (g, x, r, state)
        while lo is None:
            g /= 10.0
            if g < gamma0 / GAMMA_SPAN:
                if r <= eps * (1 + FEAS_RTOL):
                    return x
                raise Infeasible(f"no gamma reaches residual {eps:.6g}; best {r:.6g}")
            x, r, state = solve(g, state)
            if r <= eps:
                lo = (g, x, r, state)
            else:
                hi = (g, x, r, state)
    for _ in range(MAX_BISECT):
        if lo[2] >= eps * (1 - rtol) or hi[0] / lo[0] < 1 + 1e-12:
            return lo[1]
        g = np.sqrt(lo[0] * hi[0])
        x, r, st = solve(g, lo[3])
        if r <= eps:
            lo = (g, x, r, st)
        else:
            hi = (g, x, r, st)
    warnings.warn("gamma bisection did not reach its tolerance", NonconvergedWarning, stacklevel=3)
    return lo[1]


def _finish(H, x, y, eps):
    r = float(np.linalg.norm(H.apply(x) - y))
    if r > eps * (1 + FEAS_RTOL) + 1e-12 * max(1.0, float(np.linalg.norm(y))):
        raise Infeasible(f"solution residual {r:.6g} exceeds eps={eps:.6g}")
    return x


# ---------------------------------------------------------------- Tikhonov

def _tikhonov_equality(lap: Laplacian, H: LinearOperator, y, hv, basis):
    n = lap.n
    if H.kind == "identity":
        return y.copy()
    if hv is not None:
        c = basis.U.T @ y
        nz = np.abs(hv) > 1e-14 * np.abs(hv).max()
        xc = np.zeros(n)
        xc[nz] = c[nz] / hv[nz]
        return basis.U @ xc
    if H.kind == "mask":
        obs = H.info["indices"]
        free = np.setdiff1d(np.arange(n), obs)
        x = np.zeros(n)
        x[obs] = y
        if free.size:
            L = lap.L
            A = L[free][:, free]
            b = -(L[free][:, obs] @ y)
            x[free] = spla.minres(A, b, rtol=1e-12, maxiter=20 * n)[0] if _singular_block(lap, obs) \
                else spla.spsolve(A.tocsc(), b)
        return x
    # general H: KKT system of min x^T L x s.t. Hx = y
    Hd = H.todense()
    m = Hd.shape[0]
    K = np.block([[2 * lap.toarray(), Hd.T], [Hd, np.zeros((m, m))]])
    sol = np.linalg.lstsq(K, np.concatenate([np.zeros(n), y]), rcond=None)[0]
    return sol[:n]


def _singular_block(lap: Laplacian, obs) -> bool:
    labels = lap.graph.component_labels()
    return np.setdiff1d(np.unique(labels), labels[obs]).size > 0


def tikhonov_solve(lap: Laplacian, H, y, eps: float, basis: SpectralBasis | None = None,
                   rtol: float = TIKHONOV_RTOL) -> np.ndarray:
    """``argmin x^T L x`` subject to ``||H x - y||_2 <= eps``.

    When ``basis`` is given and ``H`` is a filter on it, inner solves are
    diagonal in the spectral domain; otherwise they are sparse/CG solves of
    ``(H^T H + gamma L) x = H^T y``.

    Raises:
        Infeasible: no signal reaches the residual bound.
    """
    H, y = _check_inputs(lap, H, y, eps)
    hv = _spectral_filter_data(H, basis)
    x_flat, r_flat = _nullspace_fit(lap, H, y)
    if r_flat <= eps:
        return x_flat
    r0 = _min_residual(H, y, hv)
    if r0 > eps * (1 + FEAS_RTOL) + 1e-12 * max(1.0, float(np.linalg.norm(y))):
        raise Infeasible(f"eps={eps:.6g} is below the smallest achievable residual {r0:.6g}")
    if eps == 0 or r0 >= eps:
        return _finish(H, _tikhonov_equality(lap, H, y, hv, basis), y, eps)

    L = lap.L
    if hv is not None:
        lam = np.maximum(basis.lambdas, 0.0)
        yc = basis.U.T @ y

        def solve(gamma, state):
            den = hv * hv + gamma * lam
            xc = np.divide(hv * yc, den, out=np.zeros_like(yc), where=den > 0)
            x = basis.U @ xc
            return x, float(np.linalg.norm(hv * xc - yc)), None
    elif H.kind in ("identity", "mask"):
        d = H.adjoint(np.ones(H.shape[0]))
        rhs = H.adjoint(y)
        singular = H.kind == "mask" and _singular_block(lap, H.info["indices"])

        def solve(gamma, state):
            A = (sp.diags(d) + gamma * L).tocsc()
            if singular:
                x = spla.cg(A, rhs, x0=state, rtol=1e-12, maxiter=20 * lap.n)[0]
            else:
                x = spla.spsolve(A, rhs)
            return x, float(np.linalg.norm(H.apply(x) - y)), x
    else:
        rhs = H.adjoint(y)

        def solve(gamma, state):
            A = spla.LinearOperator((lap.n, lap.n), matvec=lambda v: H.adjoint(H.apply(v)) + gamma * (L @ v))
            x = spla.cg(A, rhs, x0=state, rtol=1e-12, maxiter=20 * lap.n)[0]
            return x, float(np.linalg.norm(H.apply(x) - y)), x

    gamma0 = H.norm_bound**2 / lap.lambda_max
    x = _bisect(solve, eps, gamma0, x_flat, rtol)
    return _finish(H, x, y, eps)


# ---------------------------------------------------------------- TV

def _data_prox(H: LinearOperator, y, hv, basis):
    """``prox_{tau/2 ||H . - y||^2}`` and the strong-convexity modulus of the data term."""
    if H.kind == "identity":
        return (lambda v, tau: (v + tau * y) / (1 + tau)), 1.0
    if hv is not None:
        U = basis.U
        yc = U.T @ y
        return (lambda v, tau: U @ ((U.T @ v + tau * hv * yc) / (1 + tau * hv * hv))), float(np.min(hv * hv))
    if H.kind == "mask":
        d = H.adjoint(np.ones(H.shape[0]))
        Hty = H.adjoint(y)
        return (lambda v, tau: (v + tau * Hty) / (1 + tau * d)), 0.0
    Hty = H.adjoint(y)
    n = H.shape[1]

    def prox(v, tau):
        A = spla.LinearOperator((n, n), matvec=lambda u: u + tau * H.adjoint(H.apply(u)))
        return spla.cg(A, v + tau * Hty, x0=v, rtol=1e-12, maxiter=10 * n)[0]
    return prox, 0.0


def _chambolle_pock(D: GradientOperator, prox_g, mu: float, gamma: float, x0, p0,
                    tol: float, max_iter: int):
    """min_x G(x) + gamma ||D x||_1 with the primal-dual algorithm (accelerated if mu > 0)."""
    Dm = D.matrix
    DT = Dm.T.tocsr()
    nrm = np.sqrt(max(D.lambda_max, 1e-300))
    tau = sigma = 0.99 / nrm
    x = x0.copy()
    xbar = x.copy()
    p = p0.copy()
    for _ in range(max_iter):
        p = np.clip(p + sigma * (Dm @ xbar), -gamma, gamma)
        x_new = prox_g(x - tau * (DT @ p), tau)
        theta = 1.0 / np.sqrt(1.0 + 2.0 * mu * tau) if mu > 0 else 1.0
        xbar = x_new + theta * (x_new - x)
        change = np.linalg.norm(x_new - x)
        x = x_new
        if mu > 0:
            tau *= theta
            sigma /= theta
        if change <= tol * max(np.linalg.norm(x), 1e-300):
            break
    return x, p


def _tv_equality(lap, D, H, y, hv, basis, tol, max_iter):
    n = lap.n
    if H.kind == "identity":
        return y.copy()
    if H.kind == "mask":
        obs = H.info["indices"]

        def proj(v, tau):
            out = v.copy()
            out[obs] = y
            return out
        x0 = np.zeros(n)
        x0[obs] = y
        x, _ = _chambolle_pock(D, proj, 0.0, 1.0, x0, np.zeros(D.shape[0]), tol, max_iter)
        return x
    return _tikhonov_equality(lap, H, y, hv, basis)


def tv_solve(lap: Laplacian, grad: GradientOperator | None, H, y, eps: float,
             basis: SpectralBasis | None = None, tol: float = 1e-7, max_iter: int = 5000,
             rtol: float = BISECT_RTOL) -> np.ndarray:
    """``argmin ||grad x||_1`` subject to ``||H x - y||_2 <= eps``.

    Raises:
        Infeasible: no signal reaches the residual bound.
    """
    H, y = _check_inputs(lap, H, y, eps)
    D = grad if grad is not None else gradient_operator(lap.graph, lap.lambda_max)
    hv = _spectral_filter_data(H, basis)
    x_flat, r_flat = _nullspace_fit(lap, H, y)
    if r_flat <= eps:
        return x_flat
    r0 = _min_residual(H, y, hv)
    if r0 > eps * (1 + FEAS_RTOL) + 1e-12 * max(1.0, float(np.linalg.norm(y))):
        raise Infeasible(f"eps={eps:.6g} is below the smallest achievable residual {r0:.6g}")
    if eps == 0 or r0 >= eps:
        return _finish(H, _tv_equality(lap, D, H, y, hv, basis, tol, max_iter), y, eps)

    prox_g, mu = _data_prox(H, y, hv, basis)
    x_init = H.adjoint(y) if H.kind == "mask" else y.copy() if H.shape[0] == lap.n else np.zeros(lap.n)

    def solve(gamma, state):
        x0, p0 = state if state is not None else (x_init, np.zeros(D.shape[0]))
        p0 = np.clip(p0, -gamma, gamma)
        x, p = _chambolle_pock(D, prox_g, mu, gamma, x0, p0, tol, max_iter)
        return x, float(np.linalg.norm(H.apply(x) - y)), (x, p)

    # Lagrangian scale: ||H^T y||_inf-ish over the gradient norm
    gamma0 = float(np.linalg.norm(H.adjoint(y))) / max(np.sqrt(D.shape[0]), 1.0)
    gamma0 = gamma0 if gamma0 > 0 else 1.0
    x = _bisect(solve, eps, gamma0, x_flat, rtol)
    return _finish(H, x, y, eps)
