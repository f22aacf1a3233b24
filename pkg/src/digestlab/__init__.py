"""digestlab: bifactor reliability pipeline and digestion-efficiency scoring.

The package estimates exploratory bifactor models from 6-point Likert
survey data (correlation -> principal-axis extraction -> quartimin
rotation -> Schmid-Leiman orthogonalization), reports omega reliability
coefficients, ECV, and residual fit, applies factor-count rejection rules,
and turns group-factor reliabilities into the convex digestion-efficiency
score rho.
"""

from .bifactor import (ReliabilityReport, build_report, ecv,
                       implied_correlation, omegas, rmsr)
from .corr import CorrelationMatrix, bvn_cdf, pearson, polychoric, smc
from .digestion import (DigestionScore, EvaluationSheet, FactorWeightSet,
                        average_evaluations, builtin_weights,
                        load_evaluations, load_weight_set, score,
                        weights_from_report)
from .efa import (BifactorSolution, ConvergenceError, LoadingMatrix,
                  ObliqueSolution, extract_paf, quartimin_criterion,
                  rotate_quartimin, schmid_leiman, second_order)
from .instrument import (Instrument, ObservedItem, PairStat, ResponseMatrix,
                         bundled_instrument_path, load_instrument,
                         load_responses, pair_asymmetry, save_responses,
                         write_responses)
from .select import (KCandidate, SelectionConfig, SelectionTrace, Verdict,
                     dominance_by_cluster, evaluate_k, fit_k,
                     select_factor_count)
from .synth import (GeneratorSpec, default_thresholds, generate_continuous,
                    generate_likert, load_generator_spec, skewed_thresholds)

__version__ = "0.1.0"

__all__ = [
    "BifactorSolution", "ConvergenceError", "CorrelationMatrix",
    "DigestionScore", "EvaluationSheet", "FactorWeightSet", "GeneratorSpec",
    "Instrument", "KCandidate", "LoadingMatrix", "ObliqueSolution",
    "ObservedItem", "PairStat", "ReliabilityReport", "ResponseMatrix",
    "SelectionConfig", "SelectionTrace", "Verdict",
    "average_evaluations", "build_report", "builtin_weights",
    "bundled_instrument_path", "bvn_cdf", "default_thresholds",
    "dominance_by_cluster", "ecv", "evaluate_k", "extract_paf", "fit_k",
    "generate_continuous", "generate_likert", "implied_correlation",
    "load_evaluations", "load_generator_spec", "load_instrument",
    "load_responses", "load_weight_set", "omegas", "pair_asymmetry",
    "pearson", "polychoric", "quartimin_criterion", "rmsr",
    "rotate_quartimin", "save_responses", "schmid_leiman", "score",
    "second_order", "select_factor_count", "skewed_thresholds", "smc",
    "weights_from_report", "write_responses",
]
