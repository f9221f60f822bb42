import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsig.errors import DimensionMismatch, IndexOutOfRange, InputError, TooLarge
from gsig.graph import graph_from_edge_list, laplacian, random_geometric_graph, ring_graph
from gsig.kernels import (
    Bandlimit,
    Constant,
    Gaussian,
    Heat,
    InverseLambda,
    Polynomial,
    RaisedCosine,
    Sampled,
    from_callable,
    kernel_from_dict,
    kernel_from_json,
)
from gsig.spectral import (
    chebyshev_coefficients,
    chebyshev_eval,
    eigendecompose,
    filter_chebyshev,
    filter_chebyshev_bank,
    filter_exact,
    gft,
    igft,
    localize,
)

from conftest import dense_laplacian


def hop_distance(g, i):
    dist = np.full(g.n_vertices, -1)
    dist[i] = 0
    frontier = [i]
    while frontier:
        nxt = []
        for v in frontier:
            for u in g.neighbors(v)[0]:
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


class TestKernels:

    def test_heat_values(self):
        k = Heat(2.0)
        assert k(0.5) == pytest.approx(np.exp(-1.0))

    def test_clamp_outside_domain(self):
        k = from_callable(lambda lam: lam, "id")
        assert k(-1.0, 3.0) == 0.0
        assert k(5.0, 3.0) == 3.0

    def test_sampled_interpolation(self):
        k = Sampled([0.0, 1.0, 2.0], [1.0, 3.0, 0.0])
        np.testing.assert_allclose(k(np.array([0.5, 1.5, 9.0])), [2.0, 1.5, 0.0])
        assert k(-3.0) == 1.0

    def test_sampled_increasing(self):
        with pytest.raises(InputError):
            Sampled([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])

    def test_nonnegative_clamp(self):
        k = Sampled([0.0, 1.0], [-1.0, 1.0], nonnegative=True)
        assert k(0.0) == 0.0

    def test_raised_cosine(self):
        k = RaisedCosine(1.0, 2.0)
        np.testing.assert_allclose(k(np.array([0.0, 1.0, 1.5, 2.0, 3.0])), [1, 1, 0.5, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("k", [Heat(1.5), Gaussian(2.0, 0.5), InverseLambda(0.1), Bandlimit(1.0),
                                   Constant(2.0), Polynomial([1.0, -0.5, 0.25]), RaisedCosine(0.5, 1.0),
                                   Sampled([0.0, 2.0], [1.0, 0.5], nonnegative=True)])
    def test_json_roundtrip(self, k):
        k2 = kernel_from_json(k.to_json())
        lam = np.linspace(0, 3, 17)
        np.testing.assert_array_equal(k(lam), k2(lam))
        assert k2.to_dict() == k.to_dict()

    def test_missing_field_named(self):
        with pytest.raises(InputError, match="tau"):
            kernel_from_dict({"type": "heat"})
        with pytest.raises(InputError, match="knots"):
            kernel_from_dict({"type": "sampled"})


class TestEigendecompose:

    def test_ring4(self):
        b = eigendecompose(laplacian(ring_graph(4)))
        np.testing.assert_allclose(b.lambdas, [0, 2, 2, 4], atol=1e-12)

    def test_orthonormal_and_eigen(self, geo200):
        g, lap, b = geo200
        np.testing.assert_allclose(b.U.T @ b.U, np.eye(200), atol=1e-10)
        L = lap.toarray()
        np.testing.assert_allclose(L @ b.U, b.U * b.lambdas, atol=1e-8)
        assert np.all(np.diff(b.lambdas) >= 0)

    def test_constant_first_vector(self, geo200):
        _, _, b = geo200
        assert abs(b.lambdas[0]) < 1e-10
        np.testing.assert_allclose(b.U[:, 0], np.full(200, 1 / np.sqrt(200)), atol=1e-10)

    def test_sign_convention(self, geo60):
        _, _, b = geo60
        for col in b.U.T:
            first = col[np.abs(col) > 1e-10 / np.sqrt(60)][0]
            assert first > 0

    def test_too_large(self):
        with pytest.raises(TooLarge, match="Chebyshev"):
            eigendecompose(laplacian(ring_graph(20)), max_n=10)

    def test_clusters(self):
        b = eigendecompose(laplacian(ring_graph(6)))
        sizes = sorted(len(c) for c in b.clusters())
        assert sizes == [1, 1, 2, 2]


class TestFourier:

    def test_constant(self, geo60):
        _, _, b = geo60
        xh = gft(b, np.full(60, 3.0))
        np.testing.assert_allclose(xh, np.r_[3 * np.sqrt(60), np.zeros(59)], atol=1e-12)

    def test_parseval_and_inverse(self, geo60):
        _, _, b = geo60
        x = np.random.default_rng(0).standard_normal(60)
        xh = gft(b, x)
        assert np.linalg.norm(xh) == pytest.approx(np.linalg.norm(x), rel=1e-12)
        np.testing.assert_allclose(igft(b, xh), x, atol=1e-12)

    def test_dimension(self, geo60):
        _, _, b = geo60
        with pytest.raises(DimensionMismatch):
            gft(b, np.zeros(59))

    def test_ring_matches_dft(self):
        n = 16
        b = eigendecompose(laplacian(ring_graph(n)))
        x = np.random.default_rng(1).standard_normal(n)
        xh = gft(b, x)
        F = np.fft.fft(x) / np.sqrt(n)
        freq_lam = 2 - 2 * np.cos(2 * np.pi * np.arange(n) / n)
        # energy per eigenvalue cluster agrees with the DFT energy per frequency pair
        for idx in b.clusters():
            lam = b.lambdas[idx].mean()
            sel = np.abs(freq_lam - lam) < 1e-8
            assert np.sum(xh[idx] ** 2) == pytest.approx(np.sum(np.abs(F[sel]) ** 2), rel=1e-10)


class TestFilterExact:

    def test_identity(self, geo60):
        _, _, b = geo60
        X = np.random.default_rng(2).standard_normal((60, 3))
        np.testing.assert_allclose(filter_exact(b, Constant(1.0), X), X, atol=1e-12)

    def test_linear_kernel_is_laplacian(self, geo60):
        _, lap, b = geo60
        X = np.random.default_rng(3).standard_normal((60, 2))
        lin = from_callable(lambda lam: lam, "lin")
        np.testing.assert_allclose(filter_exact(b, lin, X), lap.toarray() @ X, atol=1e-10)

    def test_heat_preserves_mass(self, geo60):
        _, _, b = geo60
        out = filter_exact(b, Heat(0.7), np.eye(60)[:, 5])
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    def test_commuting(self, geo60):
        _, _, b = geo60
        x = np.random.default_rng(4).standard_normal(60)
        g, h = Heat(0.3), Gaussian(2.0, 1.0)
        np.testing.assert_allclose(filter_exact(b, g, filter_exact(b, h, x)),
                                   filter_exact(b, g * h, x), atol=1e-10)

    def test_spectral_response(self, geo60):
        _, _, b = geo60
        x = np.random.default_rng(5).standard_normal(60)
        k = InverseLambda(0.5)
        np.testing.assert_allclose(gft(b, filter_exact(b, k, x)), b.kernel_values(k) * gft(b, x), atol=1e-10)

    def test_dense_oracle(self):
        g = graph_from_edge_list(5, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 4, 1.0), (0, 4, 0.3)])
        b = eigendecompose(laplacian(g))
        lam, V = np.linalg.eigh(dense_laplacian(g))
        expected = V @ np.diag(np.exp(-lam)) @ V.T
        np.testing.assert_allclose(filter_exact(b, Heat(1.0), np.eye(5)), expected, atol=1e-12)


class TestChebyshev:

    def test_polynomial_exact(self, geo200):
        _, lap, b = geo200
        X = np.random.default_rng(6).standard_normal((200, 2))
        k = Polynomial([0.5, -0.2, 0.03, -0.001])
        Y = filter_chebyshev(lap, k, X, order=5)
        ref = filter_exact(b, k, X)
        assert np.linalg.norm(Y - ref) <= 1e-10 * np.linalg.norm(ref)

    def test_heat_order30(self, geo200):
        _, lap, b = geo200
        k = Heat(10 / lap.lambda_max)
        X = np.random.default_rng(7).standard_normal((200, 4))
        ref = filter_exact(b, k, X)
        err = np.linalg.norm(filter_chebyshev(lap, k, X, 30) - ref) / np.linalg.norm(ref)
        assert err < 1e-6

    def test_order1_constant(self, geo60):
        _, lap, _ = geo60
        X = np.random.default_rng(8).standard_normal((60, 2))
        np.testing.assert_allclose(filter_chebyshev(lap, Constant(2.5), X, 1), 2.5 * X, atol=1e-12)

    def test_order_validated(self, geo60):
        _, lap, _ = geo60
        with pytest.raises(InputError):
            filter_chebyshev(lap, Constant(1.0), np.zeros(60), 0)

    def test_coefficients_interpolate(self):
        k = Heat(0.8)
        c = chebyshev_coefficients(k, 5.0, 12)
        lam = 2.5 + 2.5 * np.cos(np.pi * (np.arange(13) + 0.5) / 13)
        np.testing.assert_allclose(chebyshev_eval(c, lam, 5.0), k(lam), atol=1e-13)

    def test_bank_matches_single(self, geo60):
        _, lap, _ = geo60
        X = np.random.default_rng(9).standard_normal((60, 3))
        ks = [Heat(0.5), Gaussian(1.0, 0.4), Constant(1.0)]
        bank = filter_chebyshev_bank(lap, ks, X, 20)
        for m, k in enumerate(ks):
            np.testing.assert_allclose(bank[m], filter_chebyshev(lap, k, X, 20), atol=1e-12)

    def test_columns_independent(self, geo60):
        _, lap, _ = geo60
        X = np.random.default_rng(10).standard_normal((60, 5))
        Y = filter_chebyshev(lap, Heat(0.4), X, 30)
        for j in range(5):
            np.testing.assert_array_equal(Y[:, j], filter_chebyshev(lap, Heat(0.4), X[:, j:j + 1], 30)[:, 0])

    def test_random_smooth_kernels(self):
        rng = np.random.default_rng(11)
        for t in range(20):
            g = random_geometric_graph(int(rng.integers(50, 500)), 8, seed=100 + t)
            lap = laplacian(g)
            b = eigendecompose(lap)
            lm = lap.lambda_max
            kind = t % 3
            if kind == 0:
                k = Heat(rng.uniform(0.5, 10) / lm)
            elif kind == 1:
                k = Gaussian(rng.uniform(0, lm), rng.uniform(0.3, 1.0) * lm)
            else:
                k = InverseLambda(rng.uniform(0.5, 2.0) * lm)
            X = rng.standard_normal((g.n_vertices, 3))
            ref = filter_exact(b, k, X)
            err = np.linalg.norm(filter_chebyshev(lap, k, X, 30) - ref) / np.linalg.norm(ref)
            assert err < 1e-5, (t, err)


class TestLocalize:

    def test_ring_shift(self):
        b = eigendecompose(laplacian(ring_graph(32)))
        k = Gaussian(1.0, 0.5)
        base = localize(b, k, 0)
        for i in (1, 7, 20):
            np.testing.assert_allclose(localize(b, k, i), np.roll(base, i), atol=1e-10)

    def test_symmetry(self, geo60):
        _, _, b = geo60
        k = Heat(0.5)
        G = np.column_stack([localize(b, k, i) for i in range(60)])
        np.testing.assert_allclose(G, G.T, atol=1e-10)

    def test_identity_kernel(self, geo60):
        _, _, b = geo60
        np.testing.assert_allclose(localize(b, Constant(1.0), 3), np.eye(60)[3], atol=1e-12)

    def test_polynomial_support(self, geo60):
        g, lap, b = geo60
        for d in (1, 2, 3):
            k = Polynomial([1.0] + [0.3**j for j in range(1, d + 1)])
            out = localize(b, k, 10)
            far = hop_distance(g, 10) > d
            far |= hop_distance(g, 10) < 0
            assert np.max(np.abs(out[far]), initial=0.0) < 1e-12
            out_c = localize(lap, k, 10, order=d)
            assert np.max(np.abs(out_c[far]), initial=0.0) < 1e-12

    def test_index_checked(self, geo60):
        _, _, b = geo60
        with pytest.raises(IndexOutOfRange):
            localize(b, Heat(1.0), 60)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.integers(0, 1000))
def test_chebyshev_reproduces_polynomials(coeffs, seed):
    g = random_geometric_graph(40, 5, seed=seed)
    lap = laplacian(g)
    b = eigendecompose(lap)
    scale = np.array([lap.lambda_max ** -j for j in range(len(coeffs))])
    k = Polynomial(list(np.asarray(coeffs) * scale))
    x = np.random.default_rng(seed).standard_normal(40)
    ref = filter_exact(b, k, x)
    out = filter_chebyshev(lap, k, x, order=max(1, len(coeffs) - 1))
    assert np.linalg.norm(out - ref) <= 1e-10 * max(np.linalg.norm(ref), np.linalg.norm(x))
