"""Measured quantities: intensity, populations, uncertainties, pulse metrics.

Operators are stored unnormalized; this layer is the single place where
per-atom quantities divide by N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import CollectiveBasis, ladder_operators, transfer_operator
from .states import DensityOperator, StateVector, expectation

__all__ = [
    "TimeSeries",
    "PulseSummary",
    "intensity",
    "intensity_operator",
    "delay_time",
    "uncertainties",
    "peak_intensity_per_atom",
    "integrated_intensity",
]

IMAG_TOL = 1e-10


@dataclass
class TimeSeries:
    """Sampled observable record: ascending times plus named real channels."""

    t: np.ndarray
    channels: dict[str, np.ndarray]
    std_errors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for name, vals in {**self.channels, **self.std_errors}.items():
            if np.asarray(vals).shape != self.t.shape:
                raise ValueError(f"channel {name!r} length does not match time grid")

    def channel(self, name: str) -> np.ndarray:
        return self.channels[name]


@dataclass
class PulseSummary:
    peak_time: float
    peak_value: float
    delay_time: float
    at_boundary: bool = False
    per_atom: bool = False


def intensity_operator(basis: CollectiveBasis) -> np.ndarray:
    """J+J- for two-level, J_eg J_ge (e->g channel) for three-level."""
    if basis.level_count == 2:
        ops = ladder_operators(basis)
        return ops.jp.matrix @ ops.jm.matrix
    j_ge = transfer_operator(basis, "g", "e").matrix
    return j_ge.conj().T @ j_ge


def intensity(state, gamma: float) -> float:
    """Emitted intensity gamma <J+ J->; the imaginary residue is checked, then dropped."""
    val = expectation(state, intensity_operator(state.basis))
    if abs(val.imag) > IMAG_TOL:
        raise ValueError(f"intensity has imaginary residue {val.imag:.3e}")
    return gamma * val.real


def _quadratic_peak(t: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Vertex of the parabola through samples i-1, i, i+1 (nonuniform grids ok)."""
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    d01 = (t1 - t0) * (y1 - y2)
    d21 = (t1 - t2) * (y1 - y0)
    denom = 2.0 * (d01 - d21)
    if denom == 0.0:
        return float(t1), float(y1)
    tp = t1 - ((t1 - t0) * d01 - (t1 - t2) * d21) / denom
    # Lagrange value at tp.
    l0 = (tp - t1) * (tp - t2) / ((t0 - t1) * (t0 - t2))
    l1 = (tp - t0) * (tp - t2) / ((t1 - t0) * (t1 - t2))
    l2 = (tp - t0) * (tp - t1) / ((t2 - t0) * (t2 - t1))
    return float(tp), float(y0 * l0 + y1 * l1 + y2 * l2)


def delay_time(series: TimeSeries, channel: str = "intensity") -> PulseSummary:
    """Pulse maximum located by 3-point quadratic interpolation.

    A maximum at either end of the series is reported with the boundary flag
    set and no interpolation applied.
    """
    y = np.asarray(series.channels[channel], dtype=float)
    t = series.t
    if y.size == 0:
        raise ValueError("empty series")
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1 or y.size < 3:
        return PulseSummary(
            peak_time=float(t[i]), peak_value=float(y[i]), delay_time=float(t[i]), at_boundary=True
        )
    tp, yp = _quadratic_peak(t, y, i)
    return PulseSummary(peak_time=tp, peak_value=yp, delay_time=tp)


def uncertainties(state) -> tuple[float, float, float]:
    """Standard deviations (dJx, dJy, dJz) for a two-level collective state."""
    basis = state.basis
    if basis.level_count != 2:
        raise ValueError("uncertainties requires a two-level basis")
    out = []
    ops = ladder_operators(basis)
    for op in (ops.jx, ops.jy, ops.jz):
        mean = expectation(state, op.matrix).real
        second = expectation(state, op.matrix @ op.matrix).real
        out.append(float(np.sqrt(max(second - mean * mean, 0.0))))
    return tuple(out)


def peak_intensity_per_atom(series: TimeSeries, n_atoms: int, channel: str = "intensity") -> float:
    """Maximum of the interpolated intensity divided by the atom number."""
    summary = delay_time(series, channel=channel)
    return summary.peak_value / n_atoms


def integrated_intensity(series: TimeSeries, channel: str = "intensity") -> float:
    """Trapezoidal time integral of the intensity on the sample grid."""
    return float(np.trapezoid(series.channels[channel], series.t))
