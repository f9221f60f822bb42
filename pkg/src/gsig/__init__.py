"""Stationary signal processing on weighted undirected graphs."""

from .baselines import tikhonov_solve, tv_solve
from .errors import (
    DimensionMismatch,
    GsigError,
    Infeasible,
    InputError,
    NonconvergedWarning,
    NumericalError,
    OperatorNotAFilter,
    SingularSystem,
)
from .graph import (
    Graph,
    Laplacian,
    gradient_operator,
    graph_from_edge_list,
    grid_graph,
    knn_graph,
    laplacian,
    random_geometric_graph,
    ring_graph,
)
from .kernels import (
    Bandlimit,
    Constant,
    Gaussian,
    Heat,
    InverseLambda,
    Kernel,
    Polynomial,
    RaisedCosine,
    Sampled,
    from_callable,
    kernel_from_dict,
)
from .operators import compose, filter_operator, identity_operator, mask_operator, matrix_operator
from .psd import PsdEstimate, bias_oracle, design_filterbank, estimate_filter_norms, estimate_psd, psd_to_kernel
from .spectral import (
    SpectralBasis,
    eigendecompose,
    filter_chebyshev,
    filter_exact,
    filter_signal,
    gft,
    igft,
    localize,
)
from .stationarity import (
    SignalEnsemble,
    center,
    empirical_covariance,
    gram_from_distances,
    psd_from_covariance,
    spectral_covariance,
    squared_distance_matrix,
    stationarity_measure,
)
from .synth import (
    DegradationModel,
    ExperimentReport,
    degrade,
    experiment_deconvolution,
    experiment_inpainting,
    generate_stationary,
    snr_db,
)
from .wiener import (
    WienerProblem,
    epsilon_rule,
    lmmse_closed_form,
    wiener_filter,
    wiener_interpolate_noiseless,
    wiener_kernel,
    wiener_optimize,
)

__version__ = "0.1.0"
