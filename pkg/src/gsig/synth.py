"""Synthetic stationary signals, degradations, SNR and the benchmark recipes."""

from __future__ import annotations

import csv
import io
import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .baselines import tikhonov_solve, tv_solve
from .errors import DimensionMismatch, InputError, NonconvergedWarning, ZeroVarianceReference
from .graph import gradient_operator, laplacian, random_geometric_graph
from .kernels import Heat, Kernel, RaisedCosine
from .operators import LinearOperator, as_operator, filter_operator, mask_operator
from .psd import estimate_psd, psd_to_kernel
from .spectral import DEFAULT_ORDER, eigendecompose, filter_signal
from .stationarity import SignalEnsemble, empirical_covariance
from .wiener import (
    WienerProblem,
    epsilon_rule,
    lmmse_from_covariance,
    white_noise,
    wiener_filter,
    wiener_optimize,
)

SNR_CAP_DB = 300.0
DECONV_NOISE = (0.01, 0.02, 0.05, 0.1)
INPAINT_NOISE = (0.02, 0.05, 0.1, 0.2)
HEAT_STRENGTH = 10.0
TV_TOL = 1e-5
TV_MAX_ITER = 2000


def generate_stationary(op, g: Kernel, K: int, mean: float = 0.0, seed=0,
                        order: int = DEFAULT_ORDER) -> SignalEnsemble:
    """``K`` realizations ``mean + g(L) w`` with white Gaussian ``w``; the PSD is ``g^2``.

    ``op`` is a SpectralBasis (exact) or a Laplacian (Chebyshev of ``order``).
    """
    K = int(K)
    if K < 1:
        raise InputError("K must be >= 1")
    W = np.random.default_rng(seed).standard_normal((op.n, K))
    return SignalEnsemble(float(mean) + filter_signal(op, g, W, order))


@dataclass
class DegradationModel:
    """``y = H x + sigma w`` with ``w`` drawn from ``default_rng(seed)``."""
    H: LinearOperator
    sigma: float = 0.0
    seed: object = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InputError("noise std must be non-negative")


def degrade(x, model: DegradationModel) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    H = as_operator(model.H, x.shape[0])
    if x.ndim != 1 or x.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"signal of shape {x.shape} does not fit operator {H.shape}")
    y = H.apply(x)
    if model.sigma > 0:
        y = y + model.sigma * np.random.default_rng(model.seed).standard_normal(y.shape)
    return y


def snr_db(x_true, x_est) -> float:
    """``-10 log10(var(x - x_est) / var(x))``, capped at +300 dB."""
    x = np.asarray(x_true, dtype=float)
    xe = np.asarray(x_est, dtype=float)
    if x.shape != xe.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {xe.shape} differ")
    vx = np.var(x)
    if vx == 0:
        raise ZeroVarianceReference("reference signal has zero variance")
    ve = np.var(x - xe)
    if ve == 0:
        return SNR_CAP_DB
    return float(min(SNR_CAP_DB, -10.0 * np.log10(ve / vx)))


@dataclass
class ExperimentReport:
    """Mean SNR and standard error per method and noise level."""
    methods: list
    noise_levels: list
    snr: dict            # method -> array (levels x trials)
    trials: int
    seed: int
    runtime: float = 0.0
    meta: dict = field(default_factory=dict)

    def mean(self, method: str) -> np.ndarray:
        return np.mean(self.snr[method], axis=1)

    def stderr(self, method: str) -> np.ndarray:
        a = self.snr[method]
        if a.shape[1] < 2:
            return np.zeros(a.shape[0])
        return np.std(a, axis=1, ddof=1) / np.sqrt(a.shape[1])

    def rows(self) -> list[dict]:
        out = []
        for m in self.methods:
            mu, se = self.mean(m), self.stderr(m)
            for i, s in enumerate(self.noise_levels):
                out.append({"method": m, "noise_std": float(s), "mean_snr_db": float(mu[i]),
                            "stderr_db": float(se[i]), "trials": self.trials})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["method", "noise_std", "mean_snr_db", "stderr_db", "trials"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": self.rows(), "methods": list(self.methods),
                "noise_levels": [float(s) for s in self.noise_levels], "trials": self.trials,
                "seed": self.seed, "runtime_s": self.runtime, "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def lowpass_amplitude(lambda_max: float) -> Kernel:
    """Amplitude ``s``: flat up to ``lambda_max/4``, raised-cosine decay to 0 at ``lambda_max/2``."""
    return RaisedCosine(lambda_max / 4.0, lambda_max / 2.0)


def _check_common(noise_levels, trials):
    if int(trials) < 1:
        raise InputError("trials must be >= 1")
    levels = [float(s) for s in noise_levels]
    if not levels or min(levels) < 0:
        raise InputError("noise levels must be a non-empty list of non-negative values")
    return levels, int(trials)


def experiment_deconvolution(n_nodes: int = 300, noise_levels=DECONV_NOISE, trials: int = 20,
                             seed: int = 0, knn: int = 10) -> ExperimentReport:
    """Heat-kernel blur plus noise on a random geometric graph.

    Compares the Wiener filter (true PSD and noise level) with constrained
    Tikhonov and TV, both using ``eps = sigma sqrt(N)``.
    """
    levels, trials = _check_common(noise_levels, trials)
    t0 = time.perf_counter()
    g = random_geometric_graph(n_nodes, k=knn, seed=seed)
    lap = laplacian(g)
    basis = eigendecompose(lap)
    grad = gradient_operator(g, lap.lambda_max)
    lmax = basis.lambda_max
    s = lowpass_amplitude(lmax)
    psd = s * s
    h = Heat(HEAT_STRENGTH / lmax)
    H = filter_operator(basis, h)
    methods = ["wiener", "tikhonov", "tv"]
    snr = {m: np.zeros((len(levels), trials)) for m in methods}
    for t in range(trials):
        x = generate_stationary(basis, s, 1, seed=[seed, t, 0]).data[:, 0]
        for i, sig in enumerate(levels):
            y = degrade(x, DegradationModel(H, sig, [seed, t, 1, i]))
            prob = WienerProblem(basis, H, psd, white_noise(sig**2), y)
            eps = epsilon_rule(sig, n_nodes)
            snr["wiener"][i, t] = snr_db(x, wiener_filter(prob))
            snr["tikhonov"][i, t] = snr_db(x, tikhonov_solve(lap, H, y, eps, basis=basis))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonconvergedWarning)
                xt = tv_solve(lap, grad, H, y, eps, basis=basis, tol=TV_TOL, max_iter=TV_MAX_ITER)
                snr["tv"][i, t] = snr_db(x, xt)
    meta = {"experiment": "deconvolution", "n_nodes": n_nodes, "knn": knn,
            "psd": "raised_cosine^2", "psd_flat": lmax / 4, "psd_stop": lmax / 2,
            "blur": "heat", "blur_tau": HEAT_STRENGTH / lmax, "lambda_max": lmax}
    return ExperimentReport(methods, levels, snr, trials, seed, time.perf_counter() - t0, meta)


def experiment_inpainting(n_nodes: int = 400, mask_fraction: float = 0.5, noise_levels=INPAINT_NOISE,
                          trials: int = 20, seed: int = 0, k1_values=(50, 1), knn: int = 10,
                          wiener_eps: float = 1e-10, wiener_J: int = 5000) -> ExperimentReport:
    """Missing samples plus noise on a random geometric graph.

    ``mask_fraction`` is the fraction of observed vertices. Methods: Wiener
    optimization with the true PSD, with PSDs estimated from ``k1`` clean
    training signals, constrained Tikhonov and TV, and the Gaussian MAP
    estimate built from the empirical covariance of the largest training set.
    """
    levels, trials = _check_common(noise_levels, trials)
    if not 0 < mask_fraction < 1:
        raise InputError("mask_fraction must lie in (0, 1)")
    k1_values = [int(k) for k in k1_values]
    if any(k < 1 for k in k1_values):
        raise InputError("training set sizes must be >= 1")
    t0 = time.perf_counter()
    g = random_geometric_graph(n_nodes, k=knn, seed=seed)
    lap = laplacian(g)
    basis = eigendecompose(lap)
    grad = gradient_operator(g, lap.lambda_max)
    s = lowpass_amplitude(basis.lambda_max)
    psd = s * s
    m_obs = min(n_nodes - 1, max(1, int(round(mask_fraction * n_nodes))))
    methods = ["wiener"] + [f"wiener_est_k{k}" for k in k1_values] + ["tikhonov", "tv"]
    kmax = max(k1_values) if k1_values else 0
    if kmax >= 2:
        methods.append(f"map_empirical_k{kmax}")
    snr = {m: np.zeros((len(levels), trials)) for m in methods}
    for t in range(trials):
        x = generate_stationary(basis, s, 1, seed=[seed, t, 0]).data[:, 0]
        obs = np.sort(np.random.default_rng([seed, t, 2]).choice(n_nodes, m_obs, replace=False))
        H = mask_operator(n_nodes, obs)
        est = {}
        if kmax:
            train = generate_stationary(basis, s, kmax, seed=[seed, t, 3]).data
            for k in k1_values:
                ens = SignalEnsemble(train[:, :k], centered=True)
                est[k] = psd_to_kernel(estimate_psd(lap, ens, seed=seed))
            if kmax >= 2:
                Sigma = empirical_covariance(SignalEnsemble(train, centered=True))
        for i, sig in enumerate(levels):
            y = degrade(x, DegradationModel(H, sig, [seed, t, 1, i]))
            noise = white_noise(sig**2)
            eps = epsilon_rule(sig, m_obs)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonconvergedWarning)
                sol = wiener_optimize(WienerProblem(basis, H, psd, noise, y), eps=wiener_eps, J=wiener_J)
                snr["wiener"][i, t] = snr_db(x, sol.x)
                for k in k1_values:
                    sol = wiener_optimize(WienerProblem(basis, H, est[k], noise, y), eps=wiener_eps, J=wiener_J)
                    snr[f"wiener_est_k{k}"][i, t] = snr_db(x, sol.x)
                snr["tikhonov"][i, t] = snr_db(x, tikhonov_solve(lap, H, y, eps, basis=basis))
                xt = tv_solve(lap, grad, H, y, eps, basis=basis, tol=TV_TOL, max_iter=TV_MAX_ITER)
                snr["tv"][i, t] = snr_db(x, xt)
            if kmax >= 2:
                xm = lmmse_from_covariance(Sigma, H, y, max(sig**2, 1e-12), pinv=True)
                snr[f"map_empirical_k{kmax}"][i, t] = snr_db(x, xm)
    meta = {"experiment": "inpainting", "n_nodes": n_nodes, "knn": knn, "observed": m_obs,
            "mask_fraction": mask_fraction, "k1_values": k1_values, "psd": "raised_cosine^2",
            "psd_flat": basis.lambda_max / 4, "psd_stop": basis.lambda_max / 2,
            "lambda_max": basis.lambda_max}
    return ExperimentReport(methods, levels, snr, trials, seed, time.perf_counter() - t0, meta)
