"""Superradiance toolkit: Dicke master equation, quantum trajectories,
mean-field limit, and the scripted experiments built on them."""

__version__ = "0.1.0"

from . import algebra, lindblad, mcwf, meanfield, observables, states  # noqa: F401
