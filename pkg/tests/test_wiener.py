import warnings

import numpy as np
import pytest

from gsig.errors import InputError, NonconvergedWarning, OperatorNotAFilter, SingularSystem
from gsig.graph import graph_from_edge_list, laplacian, random_geometric_graph
from gsig.kernels import Bandlimit, Constant, Gaussian, Heat, from_callable
from gsig.operators import filter_operator, identity_operator, mask_operator
from gsig.spectral import eigendecompose, filter_exact, gft
from gsig.wiener import (
    WienerProblem,
    default_step,
    epsilon_rule,
    lmmse_closed_form,
    prox_kernel,
    wiener_denoise,
    wiener_filter,
    wiener_interpolate_noiseless,
    wiener_kernel,
    wiener_objective,
    wiener_optimize,
)

TIGHT = dict(eps=1e-16, J=200000)


def dense_lmmse(basis, Hd, y, s2, sigma2, m):
    S = basis.U @ np.diag(np.maximum(basis.kernel_values(s2), 0)) @ basis.U.T
    Sxy = S @ Hd.T
    Sy = Hd @ Sxy + sigma2 * np.eye(Hd.shape[0])
    K = np.linalg.solve(Sy, np.eye(Hd.shape[0]))
    return Sxy @ K @ y + (np.eye(basis.n) - Sxy @ K @ Hd) @ m


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestWienerKernel:

    def test_noiseless_inverse(self):
        g = wiener_kernel(Heat(1.0), Constant(2.0), Constant(0.0))
        lam = np.linspace(0, 3, 7)
        np.testing.assert_allclose(g(lam), np.exp(lam), rtol=1e-12)

    def test_half(self):
        g = wiener_kernel(Constant(1.0), Heat(0.5), Heat(0.5))
        np.testing.assert_allclose(g(np.linspace(0, 2, 5)), 0.5)

    def test_plug_in(self):
        g = wiener_kernel(Constant(1.0), Heat(1.0), Constant(0.1))
        assert g(0.0) == pytest.approx(1 / 1.1)

    def test_zero_over_zero(self):
        g = wiener_kernel(Constant(1.0), Bandlimit(1.0), Constant(0.0))
        assert g(2.0) == 0.0 and g(0.5) == 1.0


class TestWienerFilter:

    def test_identity_noiseless(self, geo60):
        _, _, b = geo60
        y = np.random.default_rng(0).standard_normal(60)
        p = WienerProblem(b, identity_operator(60), Heat(0.3), Constant(0.0), y)
        np.testing.assert_allclose(wiener_filter(p), y, atol=1e-12)

    def test_inverse_filter(self, geo60):
        _, _, b = geo60
        x = np.random.default_rng(1).standard_normal(60)
        h = Heat(1.0 / b.lambda_max)
        H = filter_operator(b, h)
        p = WienerProblem(b, H, Constant(1.0), Constant(0.0), H.apply(x))
        np.testing.assert_allclose(wiener_filter(p), x, atol=1e-8)

    def test_huge_noise_returns_mean(self, geo60):
        _, _, b = geo60
        y = np.random.default_rng(2).standard_normal(60)
        p = WienerProblem(b, filter_operator(b, Heat(0.2)), Heat(0.5), Constant(1e14), y, mean=0.7)
        np.testing.assert_allclose(wiener_filter(p), 0.7, atol=1e-10)

    def test_mean_formula(self, geo60):
        _, _, b = geo60
        rng = np.random.default_rng(3)
        m, y = rng.standard_normal(60), rng.standard_normal(60)
        h, s2, n = Heat(0.4), Gaussian(0.0, 3.0), Constant(0.2)
        p = WienerProblem(b, filter_operator(b, h), s2, n, y, mean=m)
        g = wiener_kernel(h, s2, n)
        expected = m + filter_exact(b, g, y - filter_exact(b, h, m))
        np.testing.assert_allclose(wiener_filter(p), expected, atol=1e-12)

    def test_requires_filter(self, geo60):
        _, _, b = geo60
        p = WienerProblem(b, mask_operator(60, [1, 2]), Heat(1.0), Constant(1.0), np.zeros(2))
        with pytest.raises(OperatorNotAFilter):
            wiener_filter(p)

    def test_chebyshev_path(self, geo60):
        _, lap, b = geo60
        y = np.random.default_rng(4).standard_normal(60)
        kw = dict(psd=Heat(2.0 / b.lambda_max), noise=Constant(0.1), y=y)
        exact = wiener_filter(WienerProblem(b, filter_operator(b, Heat(1.0 / b.lambda_max)), **kw))
        approx = wiener_filter(WienerProblem(lap, filter_operator(lap, Heat(1.0 / b.lambda_max)), **kw))
        assert rel(approx, exact) < 1e-6


class TestWienerOptimize:

    def test_identity_noiseless(self, geo60):
        _, _, b = geo60
        y = np.random.default_rng(5).standard_normal(60)
        sol = wiener_optimize(WienerProblem(b, identity_operator(60), Heat(0.5), Constant(0.0), y), **TIGHT)
        np.testing.assert_allclose(sol.x, y, atol=1e-8)

    def test_matches_filter(self, geo200):
        _, _, b = geo200
        rng = np.random.default_rng(6)
        H = filter_operator(b, Heat(10.0 / b.lambda_max))
        y = rng.standard_normal(200)
        p = WienerProblem(b, H, Heat(3.0 / b.lambda_max), Constant(0.05), y, mean=0.3)
        sol = wiener_optimize(p, **TIGHT)
        assert sol.converged
        assert rel(sol.x, wiener_filter(p)) < 1e-6

    def test_matches_lmmse_on_mask(self):
        g = random_geometric_graph(100, 8, seed=21)
        b = eigendecompose(laplacian(g))
        rng = np.random.default_rng(7)
        H = mask_operator(100, np.sort(rng.choice(100, 50, replace=False)))
        s2 = Heat(4.0 / b.lambda_max)
        y = rng.standard_normal(50)
        sol = wiener_optimize(WienerProblem(b, H, s2, Constant(0.05), y), **TIGHT)
        assert rel(sol.x, lmmse_closed_form(b, H, y, s2, 0.05)) < 1e-5

    def test_step_bound(self, geo60):
        _, _, b = geo60
        p = WienerProblem(b, identity_operator(60), Heat(0.5), Constant(0.1), np.zeros(60))
        assert default_step(p.H) == 0.5
        with pytest.raises(InputError):
            wiener_optimize(p, beta=0.6)
        with pytest.raises(InputError):
            wiener_optimize(p, J=0)

    def test_nonconverged_warning(self, geo60):
        _, _, b = geo60
        y = np.random.default_rng(8).standard_normal(30)
        p = WienerProblem(b, mask_operator(60, np.arange(30)), Heat(0.5), Constant(0.01), y)
        with pytest.warns(NonconvergedWarning):
            sol = wiener_optimize(p, eps=1e-30, J=5)
        assert sol.iterations == 5 and not sol.converged and len(sol.objective) == 5

    def test_prox_step(self, geo60):
        _, _, b = geo60
        rng = np.random.default_rng(9)
        s2, n, beta = Heat(0.8), Constant(0.3), 0.5
        v, m = rng.standard_normal(60), rng.standard_normal(60)
        expected = m + filter_exact(b, prox_kernel(s2, n, beta), v - m)
        np.testing.assert_allclose(wiener_denoise(b, s2, n, beta, v, m), expected, atol=1e-14)
        # one solver iteration started on the constraint set is exactly the prox step
        H = mask_operator(60, np.arange(0, 60, 2))
        p = WienerProblem(b, H, s2, n, H.apply(v), mean=m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonconvergedWarning)
            sol = wiener_optimize(p, beta=beta, J=1, x0=v)
        np.testing.assert_allclose(sol.x, expected, atol=1e-12)

    def test_zero_psd_components(self, geo60):
        _, _, b = geo60
        rng = np.random.default_rng(10)
        cut = b.lambdas[20]
        s2 = Bandlimit(cut)
        H = mask_operator(60, np.sort(rng.choice(60, 40, replace=False)))
        m = 0.4
        p = WienerProblem(b, H, s2, Constant(0.1), rng.standard_normal(40), mean=m)
        zero = b.kernel_values(s2) == 0
        assert zero.sum() > 0
        sol = wiener_optimize(p, **TIGHT)
        assert np.max(np.abs(gft(b, sol.x - m)[zero])) < 1e-8
        pf = WienerProblem(b, filter_operator(b, Heat(0.3)), s2, Constant(0.1), rng.standard_normal(60), mean=m)
        assert np.max(np.abs(gft(b, wiener_filter(pf) - m)[zero])) < 1e-8

    def test_trace_terminal_and_finite(self, geo200):
        _, _, b = geo200
        rng = np.random.default_rng(11)
        H = mask_operator(200, np.sort(rng.choice(200, 120, replace=False)))
        p = WienerProblem(b, H, Heat(5.0 / b.lambda_max), Constant(0.01), rng.standard_normal(120))
        sol = wiener_optimize(p, **TIGHT)
        tr = np.asarray(sol.objective)
        assert np.all(np.isfinite(tr)) and np.all(np.isfinite(sol.x))
        assert tr[-1] - tr.min() <= 1e-9 * max(1.0, abs(tr.min()))
        assert tr[-1] == pytest.approx(wiener_objective(p, sol.x), rel=1e-8)

    def test_chebyshev_path(self, geo60):
        _, lap, b = geo60
        y = np.random.default_rng(12).standard_normal(30)
        H = mask_operator(60, np.arange(30))
        kw = dict(psd=Heat(3.0 / b.lambda_max), noise=Constant(0.1), y=y)
        a = wiener_optimize(WienerProblem(b, H, **kw), **TIGHT).x
        c = wiener_optimize(WienerProblem(lap, H, **kw), **TIGHT).x
        assert rel(c, a) < 1e-5


class TestClosedForms:

    def test_lmmse_identity_noiseless(self, geo60):
        _, _, b = geo60
        y = np.random.default_rng(13).standard_normal(60)
        np.testing.assert_allclose(lmmse_closed_form(b, identity_operator(60), y, Heat(0.5), 0.0), y, atol=1e-8)

    def test_lmmse_observing_mean(self, geo60):
        _, _, b = geo60
        m = np.random.default_rng(14).standard_normal(60)
        H = mask_operator(60, np.arange(10, 40))
        np.testing.assert_allclose(lmmse_closed_form(b, H, H.apply(m), Heat(0.5), 0.1, m), m, atol=1e-12)

    def test_lmmse_path_fixture(self):
        g = graph_from_edge_list(10, [(i, i + 1, 1.0) for i in range(9)])
        b = eigendecompose(laplacian(g))
        H = mask_operator(10, [0, 2, 5, 7, 9])
        y = np.array([1.0, -0.5, 0.25, 2.0, -1.0])
        s2 = Heat(2.0)
        got = lmmse_closed_form(b, H, y, s2, 0.01)
        np.testing.assert_allclose(got, dense_lmmse(b, H.todense(), y, s2, 0.01, np.zeros(10)), atol=1e-10)
        pinned = [0.9517262577662621, 0.31968462312472806, -0.4535579745663078, -0.8550973406496453,
                  -0.6147166257464326, 0.3338055230941126, 1.515279193675276, 1.7699637822673573,
                  0.555996301901619, -0.8783845801684078]
        np.testing.assert_allclose(got, pinned, atol=1e-12)

    def test_lmmse_singular(self, geo60):
        _, _, b = geo60
        with pytest.raises(SingularSystem):
            lmmse_closed_form(b, identity_operator(60), np.ones(60), Bandlimit(0.1), 0.0)

    def test_interp_identity(self, geo60):
        _, _, b = geo60
        y = np.random.default_rng(15).standard_normal(60)
        np.testing.assert_allclose(wiener_interpolate_noiseless(b, identity_operator(60), y, Heat(0.5)), y,
                                   atol=1e-8)

    def test_interp_constraint(self, geo60):
        _, _, b = geo60
        rng = np.random.default_rng(16)
        H = mask_operator(60, np.sort(rng.choice(60, 25, replace=False)))
        y = rng.standard_normal(25)
        x = wiener_interpolate_noiseless(b, H, y, Heat(1.0 / b.lambda_max), mean=0.2)
        assert np.max(np.abs(H.apply(x) - y)) < 1e-10

    def test_interp_bandlimited_recovery(self):
        g = random_geometric_graph(50, 8, seed=31)
        b = eigendecompose(laplacian(g))
        rng = np.random.default_rng(17)
        k = 6
        s2 = Bandlimit(0.5 * (b.lambdas[k - 1] + b.lambdas[k]))
        x = b.U[:, :k] @ rng.standard_normal(k)
        H = mask_operator(50, np.sort(rng.choice(50, 30, replace=False)))
        np.testing.assert_allclose(wiener_interpolate_noiseless(b, H, H.apply(x), s2), x, atol=1e-8)

    def test_interp_unreachable(self, geo60):
        _, _, b = geo60
        H = mask_operator(60, np.arange(20))
        with pytest.raises(SingularSystem):
            wiener_interpolate_noiseless(b, H, np.random.default_rng(18).standard_normal(20), Bandlimit(1e-9))

    def test_epsilon_rule(self):
        assert epsilon_rule(0.0, 10) == 0.0
        assert epsilon_rule(0.5, 100) == 5.0
        with pytest.raises(InputError):
            epsilon_rule(-1.0, 3)
