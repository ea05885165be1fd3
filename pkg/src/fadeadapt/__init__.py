"""Quantized-feedback constellation rotation for the two-user fading MAC with M-PSK inputs."""

__version__ = "0.1.0"

from .constellation import Constellation, eff_index, eff_point, effective_constellation, index_roundtrip, mpsk
from .errors import (
    DegenerateChannelError,
    FadeAdaptError,
    FeedbackDecodeError,
    InsufficientRangeError,
    InvalidParameterError,
    ProtocolError,
)
from .geometry import (
    CanonicalFadeState,
    DistanceClass,
    FadeState,
    SingularFadeState,
    brute_force_min_distance,
    canonicalize,
    class_distance,
    enumerate_classes,
    enumerate_singular,
    min_distance,
    min_vanishing_class,
)
from .quantizer import (
    FeedbackMessage,
    GridSpec,
    ViolationCircle,
    classify,
    decode_feedback,
    encode_feedback,
    feedback_bits,
    quantization_map,
    violation_circles,
)
from .adaptation import RotationPolicy, apply_rotation, build_policy, delta_max, optimal_rotation
from .linksim import SimConfig, SerCurve, interpolate_gain, run_sweep, run_trial

__all__ = [name for name in dir() if not name.startswith("_")]
