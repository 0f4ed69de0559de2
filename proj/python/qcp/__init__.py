"""Quantum change-point detection: optimal strategies, SDP bounds and simulation."""

from ._core import (
    InputError,
    NumericalError,
    SplitRequired,
    certify,
    gap,
    hamiltonian_success_probability,
    max_success_probability,
    min_error_discrimination,
    mle_estimate,
    outcome_model,
    separable_baseline,
    simulate,
    strategy,
)

__all__ = [
    "InputError",
    "NumericalError",
    "SplitRequired",
    "certify",
    "gap",
    "hamiltonian_success_probability",
    "max_success_probability",
    "min_error_discrimination",
    "mle_estimate",
    "outcome_model",
    "separable_baseline",
    "simulate",
    "strategy",
]
