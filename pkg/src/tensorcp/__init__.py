"""Mean change-point detection for tensor sequences with screened MOSUM ridge ratios."""

from .confidence import CIResult, GridSpec, JumpEstimate, brownian_argmax_quantiles, ci_for_changepoint, estimate_jump
from .detector import CandidateInterval, Detection, DetectorConfig, detect, find_intervals, locate, prune_msfd, prune_sfd
from .harness import RunReport, cp_correct, cp_metric, format_table, run_experiment
from .mosum import MosumField, SequenceTooShort, mosum_field, population_mosum
from .ratio import RatioSeries, ratio_series_msfd, ratio_series_sfd
from .screening import ConfigError, Mode, ScreeningParams, derive_params, screening_norm
from .simgen import SimSpec, gen_custom, gen_dense_order1, gen_null, gen_order2
from .tensor import Shape, TensorSeq

__all__ = [
    "CIResult",
    "CandidateInterval",
    "ConfigError",
    "Detection",
    "DetectorConfig",
    "GridSpec",
    "JumpEstimate",
    "Mode",
    "MosumField",
    "RatioSeries",
    "RunReport",
    "ScreeningParams",
    "SequenceTooShort",
    "Shape",
    "SimSpec",
    "TensorSeq",
    "brownian_argmax_quantiles",
    "ci_for_changepoint",
    "cp_correct",
    "cp_metric",
    "derive_params",
    "detect",
    "estimate_jump",
    "find_intervals",
    "format_table",
    "gen_custom",
    "gen_dense_order1",
    "gen_null",
    "gen_order2",
    "locate",
    "mosum_field",
    "population_mosum",
    "prune_msfd",
    "prune_sfd",
    "ratio_series_msfd",
    "ratio_series_sfd",
    "run_experiment",
    "screening_norm",
]
