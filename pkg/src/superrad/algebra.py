"""Symmetric-subspace bases and collective operators for atomic ensembles.

Two-level ensembles live in the maximal angular-momentum (Dicke) ladder with
j = N/2 and dimension N+1; three-level (Lambda) ensembles live in the
permutation-symmetric subspace of dimension (N+1)(N+2)/2, indexed by the
occupation numbers of the three levels.

Operators are stored *unnormalized* (Jm|j,m> = sqrt(j(j+1)-m(m-1)) |j,m-1>,
[Jz, J+-] = +-J+-, [J+, J-] = 2 Jz).  Per-atom quantities are obtained by
dividing expectation values by N at the observables layer, never here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "CollectiveBasis",
    "OperatorMatrix",
    "LadderOperators",
    "build_two_level_basis",
    "build_three_level_basis",
    "ladder_operators",
    "transfer_operator",
    "collective_identity",
    "verify_algebra",
]

LEVELS = ("s", "e", "g")


@dataclass(frozen=True)
class CollectiveBasis:
    """Symmetric-subspace basis descriptor.

    ``state_labels`` is the frozen basis order: for two-level ensembles the
    excited-atom count n_e = 0..N (index 0 = all atoms in the ground state);
    for three-level ensembles tuples (n_s, n_e, n_g) sorted lexicographically
    in (n_s, n_e).
    """

    n_atoms: int
    level_count: int
    dim: int
    state_labels: tuple

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.level_count not in (2, 3):
            raise ValueError(f"level_count must be 2 or 3, got {self.level_count}")

    @property
    def j(self) -> float:
        """Collective spin quantum number N/2 (two-level only)."""
        return self.n_atoms / 2

    def label_index(self, label) -> int:
        return self.state_labels.index(label)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """A collective operator matrix tagged with its basis and a symbolic label."""

    basis: CollectiveBasis
    matrix: np.ndarray
    label: str

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, _frozen(self.matrix.conj().T), self.label + "^dag")

    def __matmul__(self, other):
        mat = other.matrix if isinstance(other, OperatorMatrix) else other
        return self.matrix @ mat


class LadderOperators(NamedTuple):
    jp: OperatorMatrix
    jm: OperatorMatrix
    jz: OperatorMatrix
    jx: OperatorMatrix
    jy: OperatorMatrix


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def build_two_level_basis(n_atoms: int) -> CollectiveBasis:
    """Dicke basis |j=N/2, m = n_e - N/2> ordered by ascending n_e."""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    labels = tuple(range(n_atoms + 1))
    return CollectiveBasis(n_atoms, 2, n_atoms + 1, labels)


@lru_cache(maxsize=None)
def build_three_level_basis(n_atoms: int) -> CollectiveBasis:
    """Symmetric subspace of N Lambda atoms, labels (n_s, n_e, n_g)."""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    labels = tuple(
        (ns, ne, n_atoms - ns - ne)
        for ns in range(n_atoms + 1)
        for ne in range(n_atoms - ns + 1)
    )
    dim = (n_atoms + 1) * (n_atoms + 2) // 2
    assert len(labels) == dim
    return CollectiveBasis(n_atoms, 3, dim, labels)


@lru_cache(maxsize=None)
def ladder_operators(basis: CollectiveBasis) -> LadderOperators:
    """Unnormalized spin-j matrices (Jp, Jm, Jz, Jx, Jy) with j = N/2."""
    if basis.level_count != 2:
        raise ValueError("ladder_operators requires a two-level basis")
    n = basis.n_atoms
    j = n / 2
    m = np.arange(n + 1) - j  # m ascending with n_e
    # Jm lowers n_e by one: <m-1|Jm|m> = sqrt(j(j+1) - m(m-1)).
    amp = np.sqrt(j * (j + 1) - m[1:] * (m[1:] - 1))
    jm = np.zeros((n + 1, n + 1), dtype=np.complex128)
    jm[np.arange(n), np.arange(1, n + 1)] = amp
    jp = jm.conj().T
    jz = np.diag(m.astype(np.complex128))
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    return LadderOperators(
        OperatorMatrix(basis, _frozen(jp), "Jp"),
        OperatorMatrix(basis, _frozen(jm), "Jm"),
        OperatorMatrix(basis, _frozen(jz), "Jz"),
        OperatorMatrix(basis, _frozen(jx), "Jx"),
        OperatorMatrix(basis, _frozen(jy), "Jy"),
    )


@lru_cache(maxsize=None)
def transfer_operator(basis: CollectiveBasis, a: str, b: str) -> OperatorMatrix:
    """Collective transfer operator J_ab = sum_j |a><b| on atom j (unnormalized).

    On the occupation label it moves one atom from level b to level a with the
    Schwinger-boson amplitude sqrt(n_b (n_a + 1)); J_aa is diagonal with
    eigenvalue n_a.
    """
    if basis.level_count != 3:
        raise ValueError("transfer_operator requires a three-level basis")
    if a not in LEVELS or b not in LEVELS:
        raise ValueError(f"levels must be in {LEVELS}, got ({a!r}, {b!r})")
    ia, ib = LEVELS.index(a), LEVELS.index(b)
    index = {lab: k for k, lab in enumerate(basis.state_labels)}
    mat = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
    for k, lab in enumerate(basis.state_labels):
        if a == b:
            mat[k, k] = lab[ia]
            continue
        if lab[ib] == 0:
            continue
        target = list(lab)
        target[ib] -= 1
        target[ia] += 1
        mat[index[tuple(target)], k] = np.sqrt(lab[ib] * (lab[ia] + 1))
    return OperatorMatrix(basis, _frozen(mat), f"J_{a}{b}")


def collective_identity(basis: CollectiveBasis) -> OperatorMatrix:
    return OperatorMatrix(basis, _frozen(np.eye(basis.dim, dtype=np.complex128)), "I")


def _maxabs(mat) -> float:
    return float(np.max(np.abs(mat)))


def verify_algebra(basis: CollectiveBasis) -> dict[str, float]:
    """Max absolute deviations of the defining operator relations.

    Two-level: [Jz, J+-] -+ J+-, [J+, J-] - 2Jz and the Casimir
    Jx^2 + Jy^2 + Jz^2 - j(j+1) I.  Three-level: all commutators
    [J_ab, J_cd] - (delta_bc J_ad - delta_da J_cb).
    """
    report: dict[str, float] = {}
    if basis.level_count == 2:
        jp, jm, jz, jx, jy = (op.matrix for op in ladder_operators(basis))
        j = basis.j
        eye = np.eye(basis.dim)
        report["[Jz,Jp]-Jp"] = _maxabs(jz @ jp - jp @ jz - jp)
        report["[Jz,Jm]+Jm"] = _maxabs(jz @ jm - jm @ jz + jm)
        report["[Jp,Jm]-2Jz"] = _maxabs(jp @ jm - jm @ jp - 2 * jz)
        report["Casimir-j(j+1)"] = _maxabs(jx @ jx + jy @ jy + jz @ jz - j * (j + 1) * eye)
    else:
        ops = {(a, b): transfer_operator(basis, a, b).matrix for a in LEVELS for b in LEVELS}
        worst = 0.0
        for a in LEVELS:
            for b in LEVELS:
                for c in LEVELS:
                    for d in LEVELS:
                        lhs = ops[a, b] @ ops[c, d] - ops[c, d] @ ops[a, b]
                        rhs = (b == c) * ops[a, d] - (d == a) * ops[c, b]
                        worst = max(worst, _maxabs(lhs - rhs))
        report["[Jab,Jcd]-(d_bc Jad - d_da Jcb)"] = worst
        total = sum(ops[a, a] for a in LEVELS)
        report["sum Jaa - N"] = _maxabs(total - basis.n_atoms * np.eye(basis.dim))
    report["max"] = max(report.values())
    return report
