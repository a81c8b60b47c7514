"""Gaussian process regression with exact integrated-gradients attribution.

The public surface re-exports the main types and operations; the modules
group them by layer: special functions, kernels, regression, exact
attribution, quadrature benchmarking, random-feature approximation, data
handling, and the command line.
"""

from .attrib_exact import (
    AttrCoefficients,
    AttributionGaussian,
    AttributionReport,
    attr_coefficients,
    attribution_report,
    bayes_linear_attribution,
    bayes_linear_posterior,
    gpr_attribution,
    kernel_slice_attribution,
    prior_attribution_variance,
    write_report_csv,
    write_report_json_dict,
)
from .attrib_quad import (
    McOracleResult,
    QuadratureSpec,
    SweepRow,
    convergence_sweep,
    mc_attribution_oracle,
    nodes_weights,
    posterior_mean_gradient,
    quad_attribution,
)
from .data_io import (
    Baseline,
    DataError,
    Dataset,
    NormStats,
    load_csv,
    mean_baseline,
    normalize,
    denormalize,
    simulate,
    target_filtered_baseline,
)
from .gpr import (
    GprModel,
    fit,
    load_model,
    log_marginal_likelihood,
    optimize_hyperparameters,
    predict,
    save_model,
)
from .kernels import (
    ArdSeHyper,
    ardse_eval,
    ardse_grad_i,
    ardse_hess_ii,
    grad_i_cross,
    hess_ii_cross,
    kernel_cross,
    kernel_matrix,
)
from .rfgp import (
    AttributionMixture,
    RfgpModel,
    feature_gradient_integral,
    feature_map,
    marginalized_attribution,
    rfgp_attribution,
    rfgp_fit,
    rfgp_predict,
    sample_frequencies,
)
from .specfun import DEFAULT_TOLERANCES, NumericalError, Tolerances, erf

__version__ = "0.1.0"
