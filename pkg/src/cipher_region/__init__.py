"""Achievable (distortion, cryptogram rate, equivocation) region of a cipher
system whose key reaches the receiver over a noisy, capacity-limited channel,
plus desk-scale simulators of concrete schemes."""

from cipher_region.info_core import (
    Channel,
    JointPmf,
    Pmf,
    binary_entropy,
    conditional_entropy,
    entropy,
    mutual_information,
    output_distribution,
)
from cipher_region.rd_capacity import (
    CapacityResult,
    DistortionMeasure,
    RdPoint,
    capacity,
    distortion_rate_inverse,
    rate_distortion,
    rd_curve,
)
from cipher_region.region import (
    SystemSpec,
    TradeoffPoint,
    extended_conditions,
    feedback_bounds,
    h_star,
    is_achievable,
    perfect_secrecy_condition,
    region_boundary,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityResult",
    "Channel",
    "DistortionMeasure",
    "JointPmf",
    "Pmf",
    "RdPoint",
    "SystemSpec",
    "TradeoffPoint",
    "binary_entropy",
    "capacity",
    "conditional_entropy",
    "distortion_rate_inverse",
    "entropy",
    "extended_conditions",
    "feedback_bounds",
    "h_star",
    "is_achievable",
    "mutual_information",
    "output_distribution",
    "perfect_secrecy_condition",
    "rate_distortion",
    "rd_curve",
    "region_boundary",
]
