"""Deadline-constrained multicast offloading with one D2D relay per slot."""

from .channel import (
    FadingModel,
    NoPhaseTwo,
    phase1_duration,
    rate_from_threshold,
    relay_threshold,
    sample_slot_gains,
    threshold_from_rate,
)
from .model import (
    ConfigError,
    GainMatrix,
    RunSummary,
    SimConfig,
    SlotDecision,
    VirtualQueueState,
    choose_auxiliary,
    drift_constant,
    reference_config,
    update_user_queue,
    update_z_queue,
    validate_config,
)
from .scheduler import (
    Candidate,
    InfeasibleCandidate,
    baseline_decide,
    brute_force_decide,
    evaluate_candidate,
    free_bs_decide,
)

__version__ = "0.1.0"
