"""Multiple Fourier-series expansions of iterated Itô and Stratonovich
integrals, Hu-Meyer decompositions and a path-coupled Monte Carlo oracle."""

__version__ = "0.1.0"

from .basis import LEGENDRE, TRIGONOMETRIC, BasisSpec, Interval, basis_antiderivative, eval_basis, gram_matrix
from .combinatorics import PairPartition, adjacent_to_sr, all_pair_partitions, enum_A, enum_pair_partitions
from .errors import CapacityError, ContractError, ConvergenceError, DomainError
from .hu_meyer import (
    ConversionTerm,
    HuMeyerDecomposition,
    conversion_terms,
    convert_expansion,
    convert_round_trip,
    hu_meyer_forward,
    hu_meyer_inverse,
    hu_meyer_round_trip,
    stratonovich_spectral,
)
from .kernels import (
    CoeffTensor,
    GeneralKernel,
    VolterraKernel,
    WeightSpec,
    coeff_tensor,
    collapsed_coeff,
    collapsed_tensor,
    fourier_coeff,
    general_coeff,
    general_coeff_tensor,
    kernel_eval,
)
from .mc import (
    MCEstimate,
    WienerPath,
    iterated_ito_mc,
    iterated_strat_mc,
    mc_estimate,
    ms_error,
    noise_from_path,
    riemann_multiple_strat,
    simulate_path,
    simulate_paths,
)
from .quadrature import CumulativeRule, Quadrature, composite_gauss, gauss_legendre
from .traces import (
    ResidualSeries,
    TraceTensor,
    bar_trace,
    breve_trace,
    condition_residual,
    limiting_trace_partial,
    tilde_trace,
    tilde_trace_partial,
    trace_l2_distance,
)
from .wiener import NoiseSample, hermite, ito_truncated, multiple_wiener_elementary, product_expansion, sample_noise

__all__ = [
    "__version__",
    "LEGENDRE",
    "TRIGONOMETRIC",
    "BasisSpec",
    "Interval",
    "basis_antiderivative",
    "eval_basis",
    "gram_matrix",
    "PairPartition",
    "adjacent_to_sr",
    "all_pair_partitions",
    "enum_A",
    "enum_pair_partitions",
    "CapacityError",
    "ContractError",
    "ConvergenceError",
    "DomainError",
    "ConversionTerm",
    "HuMeyerDecomposition",
    "conversion_terms",
    "convert_expansion",
    "convert_round_trip",
    "hu_meyer_forward",
    "hu_meyer_inverse",
    "hu_meyer_round_trip",
    "stratonovich_spectral",
    "CoeffTensor",
    "GeneralKernel",
    "VolterraKernel",
    "WeightSpec",
    "coeff_tensor",
    "collapsed_coeff",
    "collapsed_tensor",
    "fourier_coeff",
    "general_coeff",
    "general_coeff_tensor",
    "kernel_eval",
    "MCEstimate",
    "WienerPath",
    "iterated_ito_mc",
    "iterated_strat_mc",
    "mc_estimate",
    "ms_error",
    "noise_from_path",
    "riemann_multiple_strat",
    "simulate_path",
    "simulate_paths",
    "CumulativeRule",
    "Quadrature",
    "composite_gauss",
    "gauss_legendre",
    "ResidualSeries",
    "TraceTensor",
    "bar_trace",
    "breve_trace",
    "condition_residual",
    "limiting_trace_partial",
    "tilde_trace",
    "tilde_trace_partial",
    "trace_l2_distance",
    "NoiseSample",
    "hermite",
    "ito_truncated",
    "multiple_wiener_elementary",
    "product_expansion",
    "sample_noise",
]
