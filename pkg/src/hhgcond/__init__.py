"""Exact coherent-state-superposition engine for heralded HHG field states."""

from .css import CSSState
from .dipole import DipoleWaveform, ShiftTable, all_shifts
from .errors import ConfigError, GuardError, VerificationError

__all__ = [
    "CSSState",
    "DipoleWaveform",
    "ShiftTable",
    "all_shifts",
    "ConfigError",
    "GuardError",
    "VerificationError",
]

__version__ = "0.1.0"
