"""Kolchin partition models for microclustering and entity resolution."""

from ._kolchin import (
    DomainError,
    calibrate_dp,
    calibrate_kappa,
    calibrate_pyp,
    fit,
    log_prior,
    max_fraction,
    oracle,
    pairwise_errors,
    reseat_probabilities,
)

__all__ = [
    "DomainError",
    "calibrate_dp",
    "calibrate_kappa",
    "calibrate_pyp",
    "fit",
    "log_prior",
    "max_fraction",
    "oracle",
    "pairwise_errors",
    "reseat_probabilities",
]
