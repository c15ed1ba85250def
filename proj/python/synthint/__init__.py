"""Counterfactual trajectories under every intervention via synthetic interventions."""

from ._core import (
    AlignmentSpec,
    BucketSpec,
    ExpFit,
    SvtConfig,
    SynthIntError,
    align_to_event,
    artifact_hash,
    fit_exponential,
    fit_weights,
    parse_deaths_csv,
    parse_mobility_csv,
    predict_counterfactual,
    project_peak,
    run_pipeline,
    run_si,
    select_rank,
    svt,
)

__all__ = [
    "AlignmentSpec",
    "BucketSpec",
    "ExpFit",
    "SvtConfig",
    "SynthIntError",
    "align_to_event",
    "artifact_hash",
    "fit_exponential",
    "fit_weights",
    "parse_deaths_csv",
    "parse_mobility_csv",
    "predict_counterfactual",
    "project_peak",
    "run_pipeline",
    "run_si",
    "select_rank",
    "svt",
]
