"""Divisibility analysis and information-backflow witnesses for
discrete-time quantum and classical dynamical mappings."""

__version__ = "0.1.0"

from .channels import (  # noqa: F401
    Povm,
    QuantumChannel,
    apply,
    choi_from_kraus,
    compose,
    embed_stochastic,
    identity_channel,
    kraus_from_choi,
    linear_map_rank,
    qc_channel,
    tensor_with_identity,
    validate_cptp,
)
from .discrimination import (  # noqa: F401
    Ensemble,
    GuessingTrace,
    guessing_trace,
    helstrom,
    is_more_informative,
    pguess,
)
from .divisibility import (  # noqa: F401
    DynamicalMapping,
    PropagatorCertificate,
    WitnessReport,
    check_divisible,
    classical_step_propagator,
    detect_reversible,
    find_step_propagator,
    witness_search,
)
from .constructions import (  # noqa: F401
    build_qc_propagator,
    build_teleport_propagator,
    make_teleport_kit,
    simulate_povm,
)
