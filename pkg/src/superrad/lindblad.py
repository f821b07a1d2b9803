"""Dicke master equation: right-hand side, time integration, steady state.

d rho/dt = -i[H(t), rho] - (gamma/2) (C^dag C rho + rho C^dag C - 2 C rho C^dag)

with the collective jump operator C = J- for two-level ensembles and
C = J_ge (the e->g emission channel) for three-level Lambda ensembles.
A full tensor-product twin of the evolution (N <= 4) serves as the
verification oracle for the symmetric-subspace solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import product_space
from .algebra import (
    CollectiveBasis,
    OperatorMatrix,
    ladder_operators,
    transfer_operator,
)
from .integrators import integrate_adaptive
from .states import DensityOperator, StateReport, validate

__all__ = [
    "HamiltonianSpec",
    "LindbladProblem",
    "EvolutionResult",
    "SteadyStateError",
    "rhs",
    "evolve",
    "steady_state",
    "evolve_full_product",
]

RTOL_DEFAULT = 1e-8
ATOL_DEFAULT = 1e-10
STEADY_RESIDUAL_TOL = 1e-9


class SteadyStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class HamiltonianSpec:
    """Drive Hamiltonian description.

    kind = "none":           H = 0
    kind = "constant_drive": H = -delta Jz - (omega/2)(J+ + J-)      (two-level)
    kind = "raman_pulse":    H(t) = -(delta/2)(J_ss + J_ee)
                                    - (omega(t)/2)(J_se + J_es),
                             omega(t) = omega0 sin^2(pi t / t_pulse) on
                             [0, t_pulse], zero outside.
    """

    kind: str = "none"
    omega: float = 0.0
    delta: float = 0.0
    omega0: float = 0.0
    t_pulse: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "constant_drive", "raman_pulse"):
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if self.kind == "raman_pulse" and self.t_pulse <= 0:
            raise ValueError("raman_pulse requires t_pulse > 0")

    @property
    def time_dependent(self) -> bool:
        return self.kind == "raman_pulse"

    def envelope(self, t: float) -> float:
        """Multiplier of the drive part at time t."""
        if self.kind == "raman_pulse":
            if 0.0 <= t <= self.t_pulse:
                s = np.sin(np.pi * t / self.t_pulse)
                return self.omega0 * s * s
            return 0.0
        return 1.0

    def breakpoints(self) -> tuple[float, ...]:
        return (self.t_pulse,) if self.kind == "raman_pulse" else ()


@dataclass
class LindbladProblem:
    basis: CollectiveBasis
    hamiltonian: HamiltonianSpec
    gamma: float
    jump_op: OperatorMatrix = None

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.hamiltonian.kind == "constant_drive" and self.basis.level_count != 2:
            raise ValueError("constant_drive is a two-level Hamiltonian")
        if self.hamiltonian.kind == "raman_pulse" and self.basis.level_count != 3:
            raise ValueError("raman_pulse is a three-level Hamiltonian")
        if self.jump_op is None:
            if self.basis.level_count == 2:
                self.jump_op = ladder_operators(self.basis).jm
            else:
                self.jump_op = transfer_operator(self.basis, "g", "e")

    def hamiltonian_parts(self):
        """(H_static, H_drive) matrices; H(t) = H_static + envelope(t) * H_drive."""
        spec = self.hamiltonian
        dim = self.basis.dim
        zero = np.zeros((dim, dim), dtype=np.complex128)
        if spec.kind == "none":
            return zero, None
        if spec.kind == "constant_drive":
            jp, jm, jz = (op.matrix for op in ladder_operators(self.basis)[:3])
            return -spec.delta * jz - (spec.omega / 2) * (jp + jm), None
        j_ss = transfer_operator(self.basis, "s", "s").matrix
        j_ee = transfer_operator(self.basis, "e", "e").matrix
        j_se = transfer_operator(self.basis, "s", "e").matrix
        j_es = transfer_operator(self.basis, "e", "s").matrix
        static = -(spec.delta / 2) * (j_ss + j_ee)
        drive = -0.5 * (j_se + j_es)
        return static, drive


@dataclass
class EvolutionResult:
    t: np.ndarray
    states: list  # DensityOperator snapshots (empty when an observer streams them)
    n_steps: int = 0
    n_rhs: int = 0
    hermitize_max_dev: float = 0.0
    reports: list = field(default_factory=list)


def _rhs_matrices(problem: LindbladProblem):
    c = problem.jump_op.matrix
    c_dag = c.conj().T
    k = c_dag @ c
    h_static, h_drive = problem.hamiltonian_parts()
    return c, c_dag, k, h_static, h_drive


def rhs(problem: LindbladProblem, t: float, rho) -> np.ndarray:
    """Master-equation generator applied to rho (matrix in, matrix out)."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    c, c_dag, k, h_static, h_drive = _rhs_matrices(problem)
    h = h_static if h_drive is None else h_static + problem.hamiltonian.envelope(t) * h_drive
    out = -1j * (h @ mat - mat @ h)
    g = problem.gamma
    if g != 0.0:
        out -= (g / 2) * (k @ mat + mat @ k - 2 * (c @ mat @ c_dag))
    return out


def evolve(
    problem: LindbladProblem,
    rho0: DensityOperator,
    t_grid: np.ndarray,
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
    observer: Callable[[int, float, np.ndarray], None] | None = None,
    validate_samples: bool = False,
) -> EvolutionResult:
    """Integrate the master equation and sample at ``t_grid``.

    Snapshots are collected as DensityOperator objects unless an ``observer``
    callback is given, in which case samples are streamed (index, time,
    matrix) and not stored.  After every accepted step the state is replaced
    by its Hermitian part; the largest correction is reported and must stay
    within the density-operator hermiticity tolerance.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 1 or t_grid[0] < 0:
        raise ValueError("t_grid must start at t >= 0")
    report0 = validate(rho0)
    if not report0.ok:
        raise ValueError(f"invalid initial state: {report0}")

    basis = problem.basis
    dim = basis.dim
    c, c_dag, k, h_static, h_drive = _rhs_matrices(problem)
    g = problem.gamma
    spec = problem.hamiltonian

    def flat_rhs(t, y):
        mat = y.reshape(dim, dim)
        h = h_static if h_drive is None else h_static + spec.envelope(t) * h_drive
        out = -1j * (h @ mat - mat @ h)
        if g != 0.0:
            out -= (g / 2) * (k @ mat + mat @ k - 2 * (c @ mat @ c_dag))
        return out.ravel()

    def hermitize(t, y):
        mat = y.reshape(dim, dim)
        sym = (mat + mat.conj().T) / 2
        dev = float(np.max(np.abs(mat - sym)))
        return sym.ravel(), dev

    res = integrate_adaptive(
        flat_rhs,
        (t_grid[0], t_grid[-1]),
        rho0.matrix.ravel(),
        t_grid,
        rtol=rtol,
        atol=atol,
        post_step=hermitize,
        breakpoints=spec.breakpoints(),
    )

    out = EvolutionResult(
        t=t_grid,
        states=[],
        n_steps=res.n_steps,
        n_rhs=res.n_rhs,
        hermitize_max_dev=res.post_step_max_dev,
    )
    for i, ti in enumerate(t_grid):
        mat = res.y[i].reshape(dim, dim)
        mat = (mat + mat.conj().T) / 2
        if observer is not None:
            observer(i, float(ti), mat)
        else:
            out.states.append(DensityOperator(basis, mat))
        if validate_samples:
            out.reports.append(validate(DensityOperator(basis, mat)))
    return out


def steady_state(problem: LindbladProblem) -> DensityOperator:
    """Unique trace-one null vector of the (time-independent) Liouvillian.

    Solves the vectorized linear system with the trace constraint appended;
    dense direct solve, practical for basis dimensions up to a few hundred.
    """
    if problem.hamiltonian.time_dependent:
        raise ValueError("steady_state requires a time-independent Hamiltonian")
    if problem.gamma <= 0:
        raise ValueError("steady_state requires gamma > 0")

    basis = problem.basis
    dim = basis.dim
    c, c_dag, k, h_static, _ = _rhs_matrices(problem)
    eye = np.eye(dim)
    g = problem.gamma
    # Row-major vec: vec(A X B) = (A kron B^T) vec(X).
    liouv = -1j * (np.kron(h_static, eye) - np.kron(eye, h_static.T))
    liouv -= (g / 2) * (np.kron(k, eye) + np.kron(eye, k.T) - 2 * np.kron(c, c_dag.T))

    trace_row = np.eye(dim).ravel().astype(np.complex128)
    a = np.vstack([liouv, trace_row])
    b = np.zeros(dim * dim + 1, dtype=np.complex128)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)

    mat = sol.reshape(dim, dim)
    mat = (mat + mat.conj().T) / 2
    mat /= np.trace(mat).real
    residual = float(np.max(np.abs(rhs(problem, 0.0, mat))))
    if residual > STEADY_RESIDUAL_TOL:
        raise SteadyStateError(
            f"steady-state residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL:.1e}"
        )
    return DensityOperator(basis, mat)


MAX_ORACLE_ATOMS = 4


def evolve_full_product(
    problem: LindbladProblem,
    rho0: DensityOperator,
    t_grid: np.ndarray,
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
):
    """Verification oracle: evolve in the full 2^N / 3^N product space.

    The initial collective state is embedded through the symmetric isometry,
    evolved with the collective jump operator sum_j |g><e|_j, and returned as
    sampled observable channels (intensity plus jz or level populations).
    """
    basis = problem.basis
    n = basis.n_atoms
    if n > MAX_ORACLE_ATOMS:
        raise ValueError(f"full product space limited to N <= {MAX_ORACLE_ATOMS}")

    t_grid = np.asarray(t_grid, dtype=float)
    v = product_space.symmetric_embedding(basis)
    c = product_space.collective_lowering_product(basis)
    c_dag = c.conj().T
    k = c_dag @ c
    spec = problem.hamiltonian
    g = problem.gamma

    if spec.kind == "none":
        h_static, h_drive = None, None
    elif spec.kind == "constant_drive":
        sz = product_space.single_atom_transfer(2, "e", "e") - product_space.single_atom_transfer(2, "g", "g")
        jz = product_space.single_atom_sum(basis, sz / 2)
        jm = c
        jp = c_dag
        h_static, h_drive = -spec.delta * jz - (spec.omega / 2) * (jp + jm), None
    else:
        p_ss = product_space.single_atom_sum(basis, product_space.single_atom_transfer(3, "s", "s"))
        p_ee = product_space.single_atom_sum(basis, product_space.single_atom_transfer(3, "e", "e"))
        t_se = product_space.single_atom_sum(basis, product_space.single_atom_transfer(3, "s", "e"))
        h_static = -(spec.delta / 2) * (p_ss + p_ee)
        h_drive = -0.5 * (t_se + t_se.conj().T)

    pd = v.shape[0]
    rho_p = v @ rho0.matrix @ v.conj().T

    def flat_rhs(t, y):
        mat = y.reshape(pd, pd)
        out = np.zeros_like(mat)
        if h_static is not None:
            h = h_static if h_drive is None else h_static + spec.envelope(t) * h_drive
            out += -1j * (h @ mat - mat @ h)
        if g != 0.0:
            out -= (g / 2) * (k @ mat + mat @ k - 2 * (c @ mat @ c_dag))
        return out.ravel()

    def hermitize(t, y):
        mat = y.reshape(pd, pd)
        sym = (mat + mat.conj().T) / 2
        return sym.ravel(), float(np.max(np.abs(mat - sym)))

    res = integrate_adaptive(
        flat_rhs,
        (t_grid[0], t_grid[-1]),
        rho_p.ravel(),
        t_grid,
        rtol=rtol,
        atol=atol,
        post_step=hermitize,
        breakpoints=spec.breakpoints(),
    )

    channels: dict[str, np.ndarray] = {"intensity": np.empty(t_grid.size)}
    if basis.level_count == 2:
        sz = product_space.single_atom_transfer(2, "e", "e") - product_space.single_atom_transfer(2, "g", "g")
        obs = {"jz": product_space.single_atom_sum(basis, sz / 2)}
    else:
        obs = {
            f"pop_{lvl}": product_space.single_atom_sum(
                basis, product_space.single_atom_transfer(3, lvl, lvl)
            )
            for lvl in ("s", "e", "g")
        }
    for name in obs:
        channels[name] = np.empty(t_grid.size)
    for i in range(t_grid.size):
        mat = res.y[i].reshape(pd, pd)
        channels["intensity"][i] = g * np.trace(k @ mat).real
        for name, op in obs.items():
            channels[name][i] = np.trace(op @ mat).real
    return t_grid, channels
