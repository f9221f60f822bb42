"""Command-line front end: ``gsig <command> [subcommand] [options]``.

Machine-readable results go to stdout or to ``-o`` files; diagnostics go to
stderr. Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np
from threadpoolctl import threadpool_limits

from . import io as gio
from .baselines import tikhonov_solve, tv_solve
from .errors import GsigError, InputError, NumericalError
from .graph import (
    gradient_operator,
    grid_graph,
    knn_graph,
    laplacian,
    random_geometric_graph,
    ring_graph,
)
from .kernels import Constant, kernel_from_dict
from .operators import filter_operator, identity_operator, mask_operator
from .psd import design_filterbank, estimate_psd
from .spectral import DEFAULT_ORDER, MAX_DENSE_N, eigendecompose
from .stationarity import SignalEnsemble, stationarity_report
from .synth import (
    DECONV_NOISE,
    INPAINT_NOISE,
    DegradationModel,
    degrade,
    experiment_deconvolution,
    experiment_inpainting,
    generate_stationary,
)
from .wiener import (
    DEFAULT_EPS,
    DEFAULT_J,
    WienerProblem,
    epsilon_rule,
    lmmse_closed_form,
    wiener_filter,
    wiener_interpolate_noiseless,
    wiener_optimize,
)

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _graph_stats(g, lap=None) -> dict:
    lap = laplacian(g) if lap is None else lap
    return {"n_vertices": g.n_vertices, "n_edges": g.n_edges,
            "n_components": g.n_components(), "lambda_max_bound": lap.lambda_max}


def _load_graph(args):
    return gio.read_edge_list(args.graph, getattr(args, "n", None))


def _spectral_op(lap, exact: bool):
    return eigendecompose(lap) if exact else lap


def _signals(path, n: int) -> np.ndarray:
    X = gio.read_matrix(path)
    if X.shape[0] != n:
        raise InputError(f"{path}: {X.shape[0]} rows but the graph has {n} vertices")
    return X


def _vector(path, name="vector") -> np.ndarray:
    X = gio.read_matrix(path)
    if X.shape[1] != 1:
        raise InputError(f"{path}: {name} must be a single column, got {X.shape[1]}")
    return X[:, 0]


# ---------------------------------------------------------------- graph

def cmd_graph(args) -> None:
    if args.kind == "build":
        g = gio.read_edge_list(args.edges, args.n)
    elif args.kind == "knn":
        sigma2 = "auto" if args.sigma2 is None else args.sigma2
        g = knn_graph(gio.read_matrix(args.features), args.k, sigma2)
    elif args.kind == "ring":
        g = ring_graph(args.n)
    elif args.kind == "grid":
        g = grid_graph(args.rows, args.cols)
    else:
        g = random_geometric_graph(args.n, args.k, args.seed)
    gio.write_edge_list(args.output, g)
    _emit(_graph_stats(g))


# ---------------------------------------------------------------- synth

def _operator(spec: dict, n: int, op, order: int):
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("operator spec must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "identity":
        return identity_operator(n)
    if kind == "mask":
        if "indices" not in spec:
            raise InputError("mask operator is missing field 'indices'")
        return mask_operator(n, spec["indices"])
    if kind == "filter":
        if "kernel" not in spec:
            raise InputError("filter operator is missing field 'kernel'")
        return filter_operator(op, kernel_from_dict(spec["kernel"]), order)
    raise InputError(f"unknown operator type {kind!r}")


def cmd_synth(args) -> None:
    g = _load_graph(args)
    lap = laplacian(g)
    if args.kind == "generate":
        op = _spectral_op(lap, args.exact)
        ens = generate_stationary(op, gio.read_kernel(args.kernel), args.k, args.mean, args.seed, args.order)
        gio.write_matrix(args.output, ens.data)
        _emit({"n": ens.n, "k": ens.k, "exact": bool(args.exact)})
        return
    x = _vector(args.signal, "signal")
    if x.shape[0] != g.n_vertices:
        raise InputError(f"{args.signal}: {x.shape[0]} rows but the graph has {g.n_vertices} vertices")
    if args.operator is not None:
        spec = gio.read_json(args.operator)
    elif args.mask_fraction is not None:
        if not 0 < args.mask_fraction <= 1:
            raise InputError("--mask-fraction must lie in (0, 1]")
        m = max(1, int(round(args.mask_fraction * g.n_vertices)))
        idx = np.sort(np.random.default_rng([args.seed, 2]).choice(g.n_vertices, m, replace=False))
        spec = {"type": "mask", "indices": idx.tolist()}
    else:
        spec = {"type": "identity"}
    H = _operator(spec, g.n_vertices, _spectral_op(lap, args.exact), args.order)
    y = degrade(x, DegradationModel(H, args.sigma, [args.seed, 1]))
    gio.write_matrix(args.output, y)
    if args.operator_out:
        gio.write_json(args.operator_out, spec)
    _emit({"rows": int(y.shape[0]), "sigma": args.sigma, "operator": spec["type"]})


# ---------------------------------------------------------------- psd

def cmd_psd(args) -> None:
    g = _load_graph(args)
    lap = laplacian(g)
    X = _signals(args.signals, g.n_vertices)
    ens = SignalEnsemble(X, centered=not args.center)
    fb = design_filterbank(lap.lambda_max, args.M)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="ensemble not centered")
        est = estimate_psd(lap, ens, fb, args.order, args.k2, args.seed)
        if args.exact:
            if g.n_vertices > MAX_DENSE_N:
                raise InputError(f"--exact needs N <= {MAX_DENSE_N}")
            ref = estimate_psd(lap, ens, fb, args.order, args.k2, args.seed, basis=eigendecompose(lap))
            gio.write_json(args.exact, ref.to_dict())
    if args.output:
        gio.write_json(args.output, est.to_dict())
    else:
        _emit(est.to_dict())


# ---------------------------------------------------------------- solve

def _noise_kernel(spec):
    if not isinstance(spec, dict):
        raise InputError("problem field 'noise' must be an object")
    if "sigma2" in spec:
        s2 = float(spec["sigma2"])
        if s2 < 0:
            raise InputError("noise sigma2 must be non-negative")
        return Constant(s2), s2
    k = kernel_from_dict(spec)
    return k, (k.c if isinstance(k, Constant) else None)


def cmd_solve(args) -> None:
    g = _load_graph(args)
    lap = laplacian(g)
    n = g.n_vertices
    prob = gio.read_json(args.problem)
    if not isinstance(prob, dict):
        raise InputError("problem must be a JSON object")
    exact = args.exact or args.kind in ("lmmse", "interp")
    op = _spectral_op(lap, exact)
    H = _operator(prob.get("operator", {"type": "identity"}), n, op, args.order)
    y = _vector(args.y, "measurements")
    if y.shape[0] != H.shape[0]:
        raise InputError(f"{args.y}: {y.shape[0]} measurements but the operator has {H.shape[0]} rows")
    mean = prob.get("mean", 0.0)
    mean = float(mean) if np.ndim(mean) == 0 else np.asarray(mean, dtype=float)
    solver = prob.get("solver", {})
    trace = None

    def need(field):
        if field not in prob:
            raise InputError(f"problem is missing field {field!r}")
        return prob[field]

    if args.kind == "wiener":
        psd = kernel_from_dict(need("psd"))
        noise, _ = _noise_kernel(need("noise"))
        wp = WienerProblem(op, H, psd, noise, y, mean, args.order)
        if args.method == "filter":
            x = wiener_filter(wp)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("always")
                sol = wiener_optimize(wp, solver.get("beta"), float(solver.get("eps", DEFAULT_EPS)),
                                      int(solver.get("J", DEFAULT_J)))
            x, trace = sol.x, sol.trace_dict()
    elif args.kind in ("tikhonov", "tv"):
        if args.radius is not None:
            eps = args.radius
        else:
            _, s2 = _noise_kernel(need("noise"))
            if s2 is None:
                raise InputError("constraint radius needs white noise or --radius")
            eps = epsilon_rule(np.sqrt(s2), H.shape[0])
        basis = op if exact else None
        if args.kind == "tikhonov":
            x = tikhonov_solve(lap, H, y, eps, basis=basis)
        else:
            x = tv_solve(lap, gradient_operator(g, lap.lambda_max), H, y, eps, basis=basis)
    elif args.kind == "lmmse":
        psd = kernel_from_dict(need("psd"))
        _, s2 = _noise_kernel(need("noise"))
        if s2 is None:
            raise InputError("lmmse needs white noise given as {'sigma2': ...}")
        x = lmmse_closed_form(op, H, y, psd, s2, mean)
    else:
        x = wiener_interpolate_noiseless(op, H, y, kernel_from_dict(need("psd")), mean)
    gio.write_matrix(args.output, x)
    if args.trace:
        gio.write_json(args.trace, trace if trace is not None else {"objective": [], "iterations": 0,
                                                                     "converged": True})
    summary = {"method": args.kind, "n": n, "residual": float(np.linalg.norm(H.apply(x) - y))}
    if trace is not None:
        summary.update(iterations=trace["iterations"], converged=trace["converged"])
    _emit(summary)


# ---------------------------------------------------------------- stationarity

def cmd_stationarity(args) -> None:
    g = _load_graph(args)
    X = _signals(args.signals, g.n_vertices)
    basis = eigendecompose(laplacian(g))
    rep = stationarity_report(basis, SignalEnsemble(X), args.threshold)
    if args.output:
        gio.write_json(args.output, rep)
    _emit(rep)


# ---------------------------------------------------------------- experiment

def cmd_experiment(args) -> None:
    if args.kind == "deconv":
        rep = experiment_deconvolution(args.nodes, args.noise or DECONV_NOISE, args.trials, args.seed)
    else:
        rep = experiment_inpainting(args.nodes, args.mask, args.noise or INPAINT_NOISE, args.trials,
                                    args.seed, tuple(args.k1))
    if args.json:
        gio.write_json(args.json, rep.to_dict())
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(rep.to_csv())
    else:
        sys.stdout.write(rep.to_csv())


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="cap on BLAS/OpenMP threads (default: $GSIG_THREADS or unlimited)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="gsig", description="Stationary signal processing on graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    pg = sub.add_parser("graph", help="build a graph and write its edge list")
    gsub = pg.add_subparsers(dest="kind", required=True)
    b = gsub.add_parser("build", parents=[common], help="validate an edge-list CSV")
    b.add_argument("--edges", required=True)
    b.add_argument("--n", type=int, default=None, help="vertex count (default: largest index + 1)")
    b = gsub.add_parser("knn", parents=[common], help="k-nearest-neighbour graph from a feature CSV")
    b.add_argument("--features", required=True)
    b.add_argument("--k", type=int, default=10)
    b.add_argument("--sigma2", type=float, default=None, help="kernel width (default: mean squared distance)")
    b = gsub.add_parser("ring", parents=[common], help="cycle graph")
    b.add_argument("--n", type=int, required=True)
    b = gsub.add_parser("grid", parents=[common], help="2-D lattice")
    b.add_argument("--rows", type=int, required=True)
    b.add_argument("--cols", type=int, required=True)
    b = gsub.add_parser("geometric", parents=[common], help="random geometric k-NN graph")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, default=10)
    for p in gsub.choices.values():
        p.add_argument("-o", "--output", required=True, help="edge-list CSV to write")
    pg.set_defaults(func=cmd_graph)

    ps = sub.add_parser("synth", help="generate or degrade signals")
    ssub = ps.add_subparsers(dest="kind", required=True)
    b = ssub.add_parser("generate", parents=[common], help="stationary signals by filtering white noise")
    b.add_argument("--kernel", required=True, help="kernel JSON (file or inline)")
    b.add_argument("--k", type=int, default=1, help="number of realizations")
    b.add_argument("--mean", type=float, default=0.0)
    b = ssub.add_parser("degrade", parents=[common], help="apply y = H x + noise")
    b.add_argument("--signal", required=True, help="single-column signal CSV")
    b.add_argument("--operator", default=None, help="operator JSON (file or inline)")
    b.add_argument("--mask-fraction", type=float, default=None, help="random mask keeping this fraction")
    b.add_argument("--operator-out", default=None, help="write the operator JSON used")
    b.add_argument("--sigma", type=float, default=0.0, help="noise standard deviation")
    for p in ssub.choices.values():
        p.add_argument("--graph", required=True, help="edge-list CSV")
        p.add_argument("--order", type=int, default=DEFAULT_ORDER)
        p.add_argument("--exact", action="store_true", help="filter through the eigendecomposition")
        p.add_argument("-o", "--output", required=True)
    ps.set_defaults(func=cmd_synth)

    pp = sub.add_parser("psd", parents=[common], help="filterbank PSD estimate")
    pp.add_argument("--graph", required=True)
    pp.add_argument("--signals", required=True, help="N x K signal CSV")
    pp.add_argument("--M", type=int, default=30, help="number of bands")
    pp.add_argument("--order", type=int, default=DEFAULT_ORDER)
    pp.add_argument("--k2", type=int, default=4, help="probe signals for the band norms")
    pp.add_argument("--center", action="store_true", help="remove the per-vertex sample mean first")
    pp.add_argument("--exact", default=None, metavar="PATH", help="also write the exact-filtering estimate")
    pp.add_argument("-o", "--output", default=None)
    pp.set_defaults(func=cmd_psd)

    pv = sub.add_parser("solve", help="recover a signal from measurements")
    vsub = pv.add_subparsers(dest="kind", required=True)
    for name, hlp in [("wiener", "Wiener optimization or filter"), ("tikhonov", "constrained Tikhonov"),
                      ("tv", "constrained total variation"), ("lmmse", "dense LMMSE estimate"),
                      ("interp", "noiseless interpolation")]:
        b = vsub.add_parser(name, parents=[common], help=hlp)
        b.add_argument("--graph", required=True)
        b.add_argument("--problem", required=True, help="problem JSON (file or inline)")
        b.add_argument("--y", required=True, help="measurement CSV")
        b.add_argument("--order", type=int, default=DEFAULT_ORDER)
        b.add_argument("--exact", action="store_true", help="use the eigendecomposition")
        b.add_argument("--trace", default=None, help="write the iteration trace JSON")
        b.add_argument("-o", "--output", required=True)
        if name == "wiener":
            b.add_argument("--method", choices=["optimize", "filter"], default="optimize")
        if name in ("tikhonov", "tv"):
            b.add_argument("--radius", type=float, default=None,
                           help="constraint radius (default sigma sqrt(#y))")
    pv.set_defaults(func=cmd_solve)

    pt = sub.add_parser("stationarity", parents=[common], help="stationarity level of an ensemble")
    pt.add_argument("--graph", required=True)
    pt.add_argument("--signals", required=True)
    pt.add_argument("--threshold", type=float, default=0.8)
    pt.add_argument("-o", "--output", default=None)
    pt.set_defaults(func=cmd_stationarity)

    pe = sub.add_parser("experiment", help="synthetic benchmarks")
    esub = pe.add_subparsers(dest="kind", required=True)
    b = esub.add_parser("deconv", parents=[common], help="heat-kernel deconvolution")
    b.add_argument("--nodes", type=int, default=300)
    b = esub.add_parser("inpaint", parents=[common], help="inpainting of missing samples")
    b.add_argument("--nodes", type=int, default=400)
    b.add_argument("--mask", type=float, default=0.5, help="fraction of observed vertices")
    b.add_argument("--k1", type=int, nargs="+", default=[50, 1], help="training set sizes for PSD estimation")
    for p in esub.choices.values():
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--noise", type=float, nargs="+", default=None, help="noise standard deviations")
        p.add_argument("-o", "--output", default=None, help="report CSV (default stdout)")
        p.add_argument("--json", default=None, help="also write the report JSON")
    pe.set_defaults(func=cmd_experiment)
    return parser


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("GSIG_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"GSIG_THREADS must be an integer, got {env!r}") from None
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with threadpool_limits(limits=_threads(args)):
            args.func(args)
    except InputError as e:
        print(f"gsig: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as e:
        print(f"gsig: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (GsigError, OSError) as e:
        print(f"gsig: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
