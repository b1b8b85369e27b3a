"""Circuit-level security experiments for composed quantum protocols.

Protocols are sets of gate circuits ordered by a partial order.  Environments,
ideal protocols and simulators are circuits as well, so every security
experiment reduces to running one circuit and reading the test bit Z.
"""

from .circuit import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    ClassicalPermutation,
    Controlled,
    Gate,
    Measurement,
    Register,
    Unitary,
    UnorderedConflict,
    Xor,
    active_complexity,
    canonical_schedule,
    compose_circuits,
    validate_circuit,
)
from .engine import Distribution, run_dfs, run_exact, run_monte_carlo, schedule_invariance_check
from .protocol import (
    Environment,
    IdealProtocol,
    Protocol,
    ProtocolBuilder,
    Simulator,
    bind_overall_setting,
    compose_protocols,
    make_adversarial,
    make_corruptible,
    make_dummy_ideal,
    validate_environment,
)
from .security import (
    SecurityExperiment,
    check_secure_realization,
    distinguishing_advantage,
    dummy_adversary_transform,
    negligibility_fit,
    parity_distance_bound,
)
from .composition import (
    EpsilonLedger,
    ProtocolDag,
    ProtocolTree,
    SecurityCertificate,
    build_tilde,
    compose_bottom_up,
    dag_to_tree,
)
from .privacy import (
    KeyExperimentRecord,
    combined_privacy,
    conditioned_mutual_information,
    correctness,
    uniformity_distance,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CircuitBuilder",
    "CircuitError",
    "ClassicalPermutation",
    "Controlled",
    "Distribution",
    "Environment",
    "EpsilonLedger",
    "Gate",
    "IdealProtocol",
    "KeyExperimentRecord",
    "Measurement",
    "Protocol",
    "ProtocolBuilder",
    "ProtocolDag",
    "ProtocolTree",
    "Register",
    "SecurityCertificate",
    "SecurityExperiment",
    "Simulator",
    "Unitary",
    "UnorderedConflict",
    "Xor",
    "active_complexity",
    "bind_overall_setting",
    "build_tilde",
    "canonical_schedule",
    "check_secure_realization",
    "combined_privacy",
    "compose_bottom_up",
    "compose_circuits",
    "compose_protocols",
    "conditioned_mutual_information",
    "correctness",
    "dag_to_tree",
    "distinguishing_advantage",
    "dummy_adversary_transform",
    "make_adversarial",
    "make_corruptible",
    "make_dummy_ideal",
    "negligibility_fit",
    "parity_distance_bound",
    "run_dfs",
    "run_exact",
    "run_monte_carlo",
    "schedule_invariance_check",
    "uniformity_distance",
    "validate_circuit",
    "validate_environment",
]
