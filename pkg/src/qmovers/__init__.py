"""Generalized quantum movers: superoperators with fixed input-output fidelity."""

__version__ = "0.1.0"

from .channels import (
    SuperOperator,
    apply,
    choi,
    convex_combine,
    extend,
    from_kraus,
    identity_map,
    is_completely_positive,
    is_positive_sampled,
    is_trace_preserving,
)
from .movers import (
    check_gqm_constraints,
    constraint_tensor,
    cp_threshold,
    critical_p,
    is_gqm,
    qubit_witness,
    universal_inverter,
    werner_lambda,
    witness_eigen_scan,
    witness_map,
)
from .states import fidelity, random_pure_state, werner_concurrence, werner_state

__all__ = [
    "SuperOperator", "apply", "choi", "convex_combine", "extend", "from_kraus",
    "identity_map", "is_completely_positive", "is_positive_sampled", "is_trace_preserving",
    "check_gqm_constraints", "constraint_tensor", "cp_threshold", "critical_p", "is_gqm",
    "qubit_witness", "universal_inverter", "werner_lambda", "witness_eigen_scan", "witness_map",
    "fidelity", "random_pure_state", "werner_concurrence", "werner_state",
]
