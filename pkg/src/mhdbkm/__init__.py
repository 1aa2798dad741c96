"""Pseudo-spectral incompressible MHD with zero viscosity, with regularity diagnostics."""

from .spectral import Grid
from .dynamics import MHDState, StepperConfig, step, run
from .diagnostics import DiagnosticsRecord, Monitor

__all__ = ["Grid", "MHDState", "StepperConfig", "step", "run", "DiagnosticsRecord", "Monitor"]
__version__ = "0.1.0"
