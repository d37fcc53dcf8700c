"""Robust static output feedback synthesis for uncertain Lipschitz nonlinear discrete-time systems."""

from .sdp import SdpStatus, SolverConfig, solve
from .synthesis import SynthesisRequest, SynthesisResult, synthesize
from .system import (
    DisturbanceSignal,
    NonlinearityDescriptor,
    UncertaintySignal,
    UncertainSystem,
    benchmark_system,
    load_system,
)

__version__ = "0.1.0"

__all__ = [
    "DisturbanceSignal",
    "NonlinearityDescriptor",
    "SdpStatus",
    "SolverConfig",
    "SynthesisRequest",
    "SynthesisResult",
    "UncertaintySignal",
    "UncertainSystem",
    "benchmark_system",
    "load_system",
    "solve",
    "synthesize",
]
