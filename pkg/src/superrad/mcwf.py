"""Monte Carlo wave-function (quantum jump) unraveling of the master equation.

Between jumps a trajectory follows the non-Hermitian drift
H_eff = H(t) - (i gamma / 2) C^dag C; the squared norm of the unnormalized
state is the no-jump survival probability, so a jump fires when it decays to
a uniform threshold r drawn per segment (waiting-time sampling).  The jump
applies C and renormalizes.  There is a single collapse channel (C = J- or
J_ge), so no channel-selection step exists; adding channels would have to
extend the threshold logic explicitly.

Randomness: one Philox4x64 counter-based stream per trajectory, keyed by
``SeedSequence(master_seed, spawn_key=(..., trajectory_index))``, so ensembles
are reproducible bit-for-bit independent of execution order and worker count.

For the Lambda-system Raman scenario the drift conserves the ground-level
occupation n_g, so between jumps the state stays inside one (N - n_g + 1)-
dimensional sector; trajectories are integrated sector-by-sector, which keeps
the per-step cost at O((N+1)^2) instead of O(dim^2) with dim ~ N^2/2.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .algebra import transfer_operator
from .lindblad import LindbladProblem
from .states import StateVector

__all__ = [
    "TrajectoryConfig",
    "TrajectoryResult",
    "EnsembleResult",
    "TrajectoryError",
    "evolve_trajectory",
    "run_ensemble",
    "mcwf_intensity",
]

RNG_ALGORITHM = "philox4x64 via numpy SeedSequence(master_seed, spawn_key=(..., trajectory))"

MCWF_RTOL = 1e-8
MCWF_ATOL = 1e-12


class TrajectoryError(RuntimeError):
    def __init__(self, index: int, message: str):
        super().__init__(f"trajectory {index}: {message}")
        self.index = index


@dataclass
class TrajectoryConfig:
    n_trajectories: int
    master_seed: int
    t_grid: np.ndarray
    problem: LindbladProblem
    psi0: StateVector
    rtol: float = MCWF_RTOL
    atol: float = MCWF_ATOL

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.t_grid.size < 1 or np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly ascending")


@dataclass
class TrajectoryResult:
    t_grid: np.ndarray
    states: np.ndarray        # (n_times, dim), normalized at sample times
    norm_sq: np.ndarray       # squared norm of the raw state at sample times
    jump_times: np.ndarray
    n_steps: int
    n_rejected: int
    norm_dev: float = 0.0     # max | ||state|| - 1 | after sample normalization


@dataclass
class EnsembleResult:
    t_grid: np.ndarray
    means: dict[str, np.ndarray]
    std_errors: dict[str, np.ndarray]
    jump_counts: np.ndarray
    n_trajectories: int
    master_seed: int
    failures: list = field(default_factory=list)  # (trajectory index, message)
    max_norm_dev: float = 0.0


def _jump_operator(problem: LindbladProblem) -> np.ndarray:
    return problem.jump_op.matrix


def mcwf_intensity(psi: StateVector, gamma: float, problem: LindbladProblem | None = None) -> float:
    """gamma * ||C psi||^2 (= gamma <psi|C^dag C|psi>), nonnegative."""
    if problem is not None:
        c = _jump_operator(problem)
    elif psi.basis.level_count == 2:
        from .algebra import ladder_operators

        c = ladder_operators(psi.basis).jm.matrix
    else:
        c = transfer_operator(psi.basis, "g", "e").matrix
    v = c @ psi.amplitudes
    return float(gamma * np.real(np.vdot(v, v)))


# --- sector decomposition of the Raman drift --------------------------------


def _raman_sectors(problem: LindbladProblem):
    """Per-n_g blocks of the Lambda-system drift, in ascending n_g.

    Each entry: (full-basis indices, drift matrix A, drive matrix B,
    jump amplitudes into the next sector).  Local index inside sector k is
    the excited-level occupation n_e = 0 .. N-k.
    """
    basis = problem.basis
    n = basis.n_atoms
    spec = problem.hamiltonian
    g = problem.gamma
    index = {lab: i for i, lab in enumerate(basis.state_labels)}
    sectors = []
    for k in range(n + 1):
        d = n - k + 1
        idx = np.array([index[(n - k - ne, ne, k)] for ne in range(d)], dtype=np.int64)
        ne = np.arange(d)
        a = np.zeros((d, d), dtype=np.complex128)
        a[ne, ne] = 1j * (spec.delta / 2) * (n - k) - (g / 2) * ne * (k + 1)
        b = np.zeros((d, d), dtype=np.complex128)
        amp = np.sqrt((n - k - ne[:-1]) * (ne[:-1] + 1))  # <ne+1|J_es|ne>
        b[ne[:-1] + 1, ne[:-1]] = 0.5j * amp
        b[ne[:-1], ne[:-1] + 1] = 0.5j * amp
        jump_amp = np.sqrt(ne * (k + 1.0))  # local ne -> next-sector ne-1
        sectors.append((idx, a, b, jump_amp))
    return sectors


def _uses_sector_path(problem: LindbladProblem, psi0: StateVector) -> int | None:
    """Return the starting sector index, or None when the dense path applies."""
    if problem.basis.level_count != 3:
        return None
    if problem.hamiltonian.kind not in ("none", "raman_pulse"):
        return None
    if problem.jump_op.label != "J_ge":
        return None
    support = {
        problem.basis.state_labels[i][2]
        for i in np.nonzero(np.abs(psi0.amplitudes) > 0)[0]
    }
    if len(support) != 1:
        return None
    return support.pop()


def _dense_drift(problem: LindbladProblem):
    c = _jump_operator(problem)
    k = c.conj().T @ c
    h_static, h_drive = problem.hamiltonian_parts()
    a = -1j * h_static - (problem.gamma / 2) * k
    b = np.zeros((1, 1), dtype=np.complex128) if h_drive is None else -1j * h_drive
    return np.ascontiguousarray(a), np.ascontiguousarray(b), h_drive is not None


def evolve_trajectory(
    problem: LindbladProblem,
    psi0: StateVector,
    t_grid: np.ndarray,
    seed,
    rtol: float = MCWF_RTOL,
    atol: float = MCWF_ATOL,
) -> TrajectoryResult:
    """One quantum trajectory, a deterministic function of (inputs, seed).

    ``seed`` is an integer or a numpy SeedSequence; the jump thresholds are
    drawn from the Philox stream it keys.  Sampled states are renormalized;
    the raw squared norms are returned alongside for diagnostics.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    norm0 = np.linalg.norm(psi0.amplitudes)
    if abs(norm0 - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalized")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.Philox(ss))

    basis = problem.basis
    dim = basis.dim
    spec = problem.hamiltonian
    n_t = t_grid.size
    states = np.zeros((n_t, dim), dtype=np.complex128)
    norm_sq = np.zeros(n_t)
    jump_times: list[float] = []
    n_steps = 0
    n_rejected = 0

    sector = _uses_sector_path(problem, psi0)
    if sector is not None:
        sectors = _raman_sectors(problem)
        idx, a_mat, b_mat, jump_amp = sectors[sector]
        psi = psi0.amplitudes[idx].copy()
    else:
        a_full, b_full, has_drive = _dense_drift(problem)
        idx = None
        psi = psi0.amplitudes.copy()
        c_mat = _jump_operator(problem)

    t = float(t_grid[0])
    t_final = float(t_grid[-1])
    grid_pos = 0
    while grid_pos < n_t and t_grid[grid_pos] <= t:
        if idx is None:
            states[grid_pos] = psi
        else:
            states[grid_pos, idx] = psi
        norm_sq[grid_pos] = float(np.real(np.vdot(psi, psi)))
        grid_pos += 1

    threshold = float(rng.random())
    h = -1.0
    while t < t_final or grid_pos < n_t:
        if spec.kind == "raman_pulse" and t < spec.t_pulse:
            use_drive = True
            seg_end = min(spec.t_pulse, t_final)
            amp, period = spec.omega0, spec.t_pulse
        else:
            use_drive = False
            seg_end = t_final
            amp, period = 0.0, 1.0
        if idx is not None:
            a_mat_seg, b_mat_seg = a_mat, b_mat
        else:
            a_mat_seg, b_mat_seg = a_full, b_full
            use_drive = use_drive and has_drive

        d_seg = psi.size
        scratch = np.zeros((n_t, d_seg), dtype=np.complex128)
        status, t_r, h, new_pos, ns, nr, psi = _kernels.trajectory_segment(
            a_mat_seg,
            b_mat_seg if use_drive else np.zeros((1, 1), dtype=np.complex128),
            use_drive,
            amp,
            period,
            t,
            seg_end,
            psi,
            threshold,
            t_grid,
            grid_pos,
            scratch,
            norm_sq,
            rtol,
            atol,
            h,
        )
        n_steps += ns
        n_rejected += nr
        if new_pos > grid_pos:
            if idx is None:
                states[grid_pos:new_pos] = scratch[grid_pos:new_pos]
            else:
                states[np.ix_(range(grid_pos, new_pos), idx)] = scratch[grid_pos:new_pos]
            grid_pos = new_pos

        if status == _kernels.STATUS_UNDERFLOW:
            raise RuntimeError(f"step size underflow at t = {t_r!r}")
        if status == _kernels.STATUS_JUMP:
            jump_times.append(t_r)
            if idx is not None:
                psi_next = jump_amp[1:] * psi[1:]  # local ne -> ne-1 in sector+1
                sector += 1
                idx, a_mat, b_mat, jump_amp = sectors[sector]
                psi = psi_next
            else:
                psi = c_mat @ psi
            nrm = np.linalg.norm(psi)
            if nrm == 0.0:
                raise RuntimeError(f"jump annihilated the state at t = {t_r!r}")
            psi = np.ascontiguousarray(psi / nrm)
            threshold = float(rng.random())
        t = t_r
        if status == _kernels.STATUS_END and t >= t_final:
            break

    scale = np.sqrt(norm_sq)
    states /= scale[:, None]
    norm_dev = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    return TrajectoryResult(
        t_grid=t_grid,
        states=states,
        norm_sq=norm_sq,
        jump_times=np.array(jump_times),
        n_steps=n_steps,
        n_rejected=n_rejected,
        norm_dev=norm_dev,
    )


# --- ensembles ---------------------------------------------------------------


def observable_weights(problem: LindbladProblem) -> dict[str, np.ndarray]:
    """Diagonal weights w such that <obs> = sum_i w_i |psi_i|^2.

    All ensemble channels (intensity, population imbalance, level populations)
    are diagonal in the collective basis.
    """
    basis = problem.basis
    if basis.level_count == 2:
        ne = np.arange(basis.dim, dtype=float)
        n = basis.n_atoms
        return {
            "intensity": problem.gamma * ne * (n - ne + 1),
            "jz": ne - n / 2,
        }
    labels = np.array(basis.state_labels, dtype=float)
    ns, ne, ng = labels[:, 0], labels[:, 1], labels[:, 2]
    return {
        "intensity": problem.gamma * ne * (ng + 1),
        "pop_s": ns,
        "pop_e": ne,
        "pop_g": ng,
    }


def _trajectory_channels(config: TrajectoryConfig, weights, traj_index: int, spawn_prefix):
    ss = np.random.SeedSequence(entropy=config.master_seed, spawn_key=(*spawn_prefix, traj_index))
    res = evolve_trajectory(
        config.problem, config.psi0, config.t_grid, ss, rtol=config.rtol, atol=config.atol
    )
    prob = np.abs(res.states) ** 2
    chans = {name: prob @ w for name, w in weights.items()}
    return chans, res.jump_times.size, res.norm_dev


def _trajectory_worker(args):
    config, weights, i, spawn_prefix = args
    try:
        chans, jumps, norm_dev = _trajectory_channels(config, weights, i, spawn_prefix)
        return i, chans, jumps, norm_dev, None
    except Exception as exc:  # propagated with index by the caller
        return i, None, 0, 0.0, str(exc)


def run_ensemble(
    config: TrajectoryConfig,
    jobs: int = 1,
    spawn_prefix: tuple = (),
    allow_failures: bool = False,
) -> EnsembleResult:
    """Average ``config.n_trajectories`` trajectories.

    Per-trajectory seeds are derived from (master_seed, spawn_prefix, index),
    so the result is bit-identical for any ``jobs``.  Failed trajectories
    raise unless ``allow_failures`` (the index is always part of the error).
    """
    weights = observable_weights(config.problem)
    n = config.n_trajectories
    n_t = config.t_grid.size
    per_traj = {name: np.zeros((n, n_t)) for name in weights}
    jump_counts = np.zeros(n, dtype=np.int64)
    failures = []

    tasks = [(config, weights, i, spawn_prefix) for i in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trajectory_worker, tasks, chunksize=8))
    else:
        results = [_trajectory_worker(task) for task in tasks]

    ok_mask = np.ones(n, dtype=bool)
    max_norm_dev = 0.0
    for i, chans, jumps, norm_dev, err in results:
        if err is not None:
            if not allow_failures:
                raise TrajectoryError(i, err)
            failures.append((i, err))
            ok_mask[i] = False
            continue
        for name in per_traj:
            per_traj[name][i] = chans[name]
        jump_counts[i] = jumps
        max_norm_dev = max(max_norm_dev, norm_dev)

    n_ok = int(ok_mask.sum())
    if n_ok == 0:
        raise TrajectoryError(-1, "all trajectories failed")
    means = {}
    std_errors = {}
    for name, arr in per_traj.items():
        good = arr[ok_mask]
        means[name] = good.mean(axis=0)
        if n_ok > 1:
            std_errors[name] = good.std(axis=0, ddof=1) / np.sqrt(n_ok)
        else:
            std_errors[name] = np.zeros(n_t)
    return EnsembleResult(
        t_grid=config.t_grid,
        means=means,
        std_errors=std_errors,
        jump_counts=jump_counts[ok_mask],
        n_trajectories=n_ok,
        master_seed=config.master_seed,
        failures=failures,
        max_norm_dev=max_norm_dev,
    )
