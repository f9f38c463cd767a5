"""Stability and instability certificates for switched linear systems.

The package certifies a switching signal for a family ``x' = A_p x`` as
stabilizing, destabilizing, or undetermined by building quadratic
Lyapunov-like functions per subsystem, evaluating the switching statistics
of the signal, and checking the resulting exponential envelopes against
simulated trajectories.
"""

__version__ = "0.1.0"

from .certkit import (
    CertificateSet,
    EdgeGains,
    Stability,
    SubsystemCertificate,
    SubsystemFamily,
    build_certificate,
    build_certificate_set,
    classify_subsystem,
    edge_gains,
)
from .sigkit import (
    AsymptoticStatistics,
    SignalStatistics,
    SwitchingSignal,
    eulerian_transition_cycle,
    periodic_from_cycle,
    random_admissible,
    stats_at,
    validate,
)
from .simkit import SimConfig, Trajectory, check_envelopes, divergence_verdict, propagate
from .verdikt import (
    Classification,
    MarginReport,
    classify,
    empirical_margins,
    envelope_exponents,
    instability_margin,
    stability_margin,
)

__all__ = [
    "__version__",
    "AsymptoticStatistics",
    "CertificateSet",
    "Classification",
    "EdgeGains",
    "MarginReport",
    "SignalStatistics",
    "SimConfig",
    "Stability",
    "SubsystemCertificate",
    "SubsystemFamily",
    "SwitchingSignal",
    "Trajectory",
    "build_certificate",
    "build_certificate_set",
    "check_envelopes",
    "classify",
    "classify_subsystem",
    "divergence_verdict",
    "edge_gains",
    "empirical_margins",
    "envelope_exponents",
    "eulerian_transition_cycle",
    "instability_margin",
    "periodic_from_cycle",
    "propagate",
    "random_admissible",
    "stability_margin",
    "stats_at",
    "validate",
]
