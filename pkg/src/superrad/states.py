"""State containers: density operators and pure states on a collective basis.

Validity tolerances follow the container contracts used throughout the
package: hermiticity 1e-10, trace 1e-8, smallest eigenvalue >= -1e-8 for
density operators; norm within 1e-10 of one for pure states at sample times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import CollectiveBasis, OperatorMatrix, build_three_level_basis, build_two_level_basis

__all__ = [
    "DensityOperator",
    "StateVector",
    "StateReport",
    "all_excited_state",
    "all_metastable_state",
    "pure_state",
    "expectation",
    "validate",
    "state_to_json",
    "state_from_json",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_TOL = 1e-8
NORM_TOL = 1e-10


@dataclass
class DensityOperator:
    basis: CollectiveBasis
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match basis dim {self.basis.dim}"
            )

    def copy(self) -> "DensityOperator":
        return DensityOperator(self.basis, self.matrix.copy())


@dataclass
class StateVector:
    basis: CollectiveBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude shape {self.amplitudes.shape} does not match basis dim {self.basis.dim}"
            )

    def to_density(self) -> DensityOperator:
        return DensityOperator(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))

    def copy(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes.copy())


@dataclass
class StateReport:
    """Invariant deviations; zero-filled fields do not apply to the state kind."""

    hermiticity: float = 0.0
    trace: float = 0.0
    min_eigenvalue: float = 0.0
    norm: float = 0.0

    @property
    def ok(self) -> bool:
        return (
            self.hermiticity <= HERMITICITY_TOL
            and self.trace <= TRACE_TOL
            and self.min_eigenvalue >= -EIGENVALUE_TOL
            and self.norm <= NORM_TOL
        )


def pure_state(basis: CollectiveBasis, label) -> StateVector:
    amp = np.zeros(basis.dim, dtype=np.complex128)
    amp[basis.label_index(label)] = 1.0
    return StateVector(basis, amp)


def all_excited_state(basis: CollectiveBasis) -> DensityOperator:
    """Projector onto the fully inverted Dicke state |j, j> (n_e = N)."""
    if basis.level_count != 2:
        raise ValueError("all_excited_state requires a two-level basis")
    return pure_state(basis, basis.n_atoms).to_density()


def all_metastable_state(basis: CollectiveBasis) -> StateVector:
    """All atoms in the metastable |s> level: label (N, 0, 0)."""
    if basis.level_count != 3:
        raise ValueError("all_metastable_state requires a three-level basis")
    return pure_state(basis, (basis.n_atoms, 0, 0))


def _op_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)


def _check_basis(state, op):
    if isinstance(op, OperatorMatrix) and op.basis is not state.basis and op.basis != state.basis:
        raise ValueError("operator and state bases do not match")


def expectation(state, op) -> complex:
    """tr(op rho) for a density operator, <psi|op|psi> for a pure state."""
    _check_basis(state, op)
    mat = _op_matrix(op)
    if isinstance(state, DensityOperator):
        return complex(np.trace(mat @ state.matrix))
    psi = state.amplitudes
    return complex(np.vdot(psi, mat @ psi))


def validate(state) -> StateReport:
    """Measure invariant deviations without mutating the state."""
    if isinstance(state, DensityOperator):
        m = state.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        trace = abs(float(np.trace(m).real) - 1.0) + abs(float(np.trace(m).imag))
        eigmin = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
        return StateReport(hermiticity=herm, trace=trace, min_eigenvalue=eigmin)
    norm_dev = abs(float(np.linalg.norm(state.amplitudes)) - 1.0)
    return StateReport(norm=norm_dev)


# --- JSON checkpoint layout -------------------------------------------------
#
# {"basis": {"n_atoms": N, "level_count": 2|3},
#  "kind": "density" | "pure",
#  "entries": [[re, im], ...]}           # row-major for matrices
def state_to_json(state) -> str:
    if isinstance(state, DensityOperator):
        kind, data = "density", state.matrix.ravel()
    else:
        kind, data = "pure", state.amplitudes
    payload = {
        "basis": {"n_atoms": state.basis.n_atoms, "level_count": state.basis.level_count},
        "kind": kind,
        "entries": [[float(z.real), float(z.imag)] for z in data],
    }
    return json.dumps(payload)


def state_from_json(text: str):
    payload = json.loads(text)
    b = payload["basis"]
    basis = (
        build_two_level_basis(b["n_atoms"])
        if b["level_count"] == 2
        else build_three_level_basis(b["n_atoms"])
    )
    flat = np.array([complex(re, im) for re, im in payload["entries"]], dtype=np.complex128)
    if payload["kind"] == "density":
        return DensityOperator(basis, flat.reshape(basis.dim, basis.dim))
    return StateVector(basis, flat)
