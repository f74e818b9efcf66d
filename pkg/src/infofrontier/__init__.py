"""
Entropy versus class-information frontiers for compressed binary likelihoods.

Typical use::

    from infofrontier import AnalyticToy, micro_bins, sweep_frontier
    m = micro_bins(AnalyticToy(), 2000)
    curve = sweep_frontier(m, M_max=8)
"""
from .bounds import (
    InconsistentInputsError, bits_decode, bits_distribution, bits_encode, bloat_and_loss,
    encoding_bloat, fano_bound, info_lower_bound,
)
from .dib import DibConfig, dib_objective, dib_optimize, dib_sweep
from .frontier import (
    ContiguousBinning, FrontierCurve, InfeasibleError, NegativityError, NoGainError,
    ParetoPoint, TooLargeError, brute_force_frontier, corner, corners, eval_binning,
    new_bin_slope, pareto_filter, refine, sample_binnings, swap_derivative, swap_step,
    sweep_frontier,
)
from .info import (
    DivergenceUndefinedError, InvalidDistributionError, binary_entropy, conditional_entropy,
    entropy, joint_entropy, kl_divergence, marginals, mutual_info, mutual_info_kl,
)
from .models import (
    AnalyticToy, CifarCdfDensity, ClassConditionalModel, ExpBetaDensity, InvalidBinningError,
    InvalidParameterError, NonNormalizableError, UndefinedConditionalError, binned_joint,
    builtin_specs, cifar_cdf_eval, conditional_prob, fit_density_eval, load_model,
    model_from_spec, normalize_fit, toy_binned_joint, toy_cdf, toy_marginal_pdf,
    toy_mutual_info, toy_w, uniformize,
)
from .pipeline import (
    MicroBinModel, SampleSet, adaptive_bin_placement, fine_bin, fine_bin_from_samples,
    fit_class_densities, fit_expbeta, ingest_samples, micro_bins, sample_model, sort_bins,
    vertical_bin, write_samples,
)

__version__ = "0.1.0"
