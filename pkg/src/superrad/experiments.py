"""Scenario runners reproducing the delay-time, phase-transition and
stochastic-resonance experiments, with CSV/JSON persistence.

Output layout (all floats printed with 17 significant digits):

    <out>/run.json          full run record (scenario echo, seeds, summaries)
    <out>/summary.csv       one row per sweep point (or the single point)
    <out>/point_XXX.csv     time series per sweep point (kinds with series)

The CSV column order is fixed per scenario kind; see the SERIES_COLUMNS /
SUMMARY_COLUMNS constants.  Re-running a scenario with identical inputs and
seed reproduces every CSV byte for byte regardless of the worker count; the
JSON record additionally carries the wall clock, which is the one volatile
field.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import build_three_level_basis, build_two_level_basis
from .lindblad import HamiltonianSpec, LindbladProblem, evolve, steady_state
from .mcwf import TrajectoryConfig, observable_weights, run_ensemble
from .meanfield import default_tip_angle, mf_delay, mf_evolve, mf_steady
from .observables import TimeSeries, delay_time
from .states import StateVector, all_excited_state, all_metastable_state, validate

__all__ = [
    "Scenario",
    "Sweep",
    "RunRecord",
    "PointRecord",
    "ScenarioError",
    "parse_sweep",
    "run_scenario",
    "run_free_decay",
    "run_driven_steady",
    "run_raman_pulse",
    "write_run",
    "load_run",
    "FIGURE_CATALOG",
]

KINDS = ("free_decay", "driven_steady", "raman_pulse")
SOLVERS = ("master", "mcwf", "meanfield")

# Paper defaults: 500 trajectories for small samples, 100 for N >= 20.
TRAJECTORY_DEFAULT_SMALL = 500
TRAJECTORY_DEFAULT_LARGE = 100
TRAJECTORY_N_THRESHOLD = 15

SERIES_COLUMNS = {
    ("free_decay", "master"): ["t", "intensity", "intensity_per_atom", "jz_per_n"],
    ("free_decay", "meanfield"): ["t", "intensity", "intensity_per_atom", "jz_per_n"],
    ("free_decay", "mcwf"): [
        "t", "intensity", "intensity_per_atom", "jz_per_n",
        "intensity_se", "intensity_per_atom_se", "jz_per_n_se",
    ],
    ("raman_pulse", "master"): [
        "t", "intensity", "intensity_per_atom",
        "pop_s_per_n", "pop_e_per_n", "pop_g_per_n",
    ],
    ("raman_pulse", "mcwf"): [
        "t", "intensity", "intensity_per_atom",
        "pop_s_per_n", "pop_e_per_n", "pop_g_per_n",
        "intensity_se", "intensity_per_atom_se",
        "pop_s_per_n_se", "pop_e_per_n_se", "pop_g_per_n_se",
    ],
}

SUMMARY_COLUMNS = {
    "free_decay": [
        "index", "n_atoms", "gamma", "delay_time", "peak_time", "peak_intensity",
        "peak_intensity_per_atom", "at_boundary", "mf_delay_time",
    ],
    "driven_steady": [
        "index", "gamma", "gamma_n_over_omega", "jz_per_n", "intensity",
        "intensity_per_atom", "mf_jz_per_n", "mf_intensity", "mf_intensity_per_atom",
        "mf_saturated",
    ],
    "raman_pulse": [
        "index", "n_atoms", "gamma", "omega0", "delta", "pulse_length",
        "n_trajectories", "peak_time", "peak_intensity_per_atom",
        "peak_intensity_per_atom_se", "at_boundary", "mean_jumps", "max_jumps",
        "n_failures",
    ],
}


class ScenarioError(RuntimeError):
    pass


@dataclass
class Sweep:
    param: str
    values: list

    def to_dict(self):
        return {"param": self.param, "values": list(self.values)}


def parse_sweep(text: str) -> Sweep:
    """Parse ``<param>:<start>:<stop>:<count>[:log]``."""
    parts = text.split(":")
    if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] != "log"):
        raise ScenarioError(f"bad sweep spec {text!r}; expected param:start:stop:count[:log]")
    param = parts[0]
    if param not in ("gamma", "n", "omega", "omega0", "delta"):
        raise ScenarioError(f"unknown sweep parameter {param!r}")
    start, stop = float(parts[1]), float(parts[2])
    count = int(parts[3])
    if count < 1:
        raise ScenarioError("sweep count must be >= 1")
    if len(parts) == 5:
        if start <= 0 or stop <= 0:
            raise ScenarioError("log sweep requires positive bounds")
        values = np.geomspace(start, stop, count)
    else:
        values = np.linspace(start, stop, count)
    if param == "n":
        ints = np.rint(values).astype(int)
        if np.any(ints < 1):
            raise ScenarioError("atom-number sweep requires N >= 1")
        values = ints
    return Sweep(param, [v.item() for v in values])


@dataclass
class Scenario:
    kind: str
    n_atoms: int = 20
    gamma: float = 1.0
    omega: float = 1.0
    omega0: float = 1.0
    delta: float = 0.0
    pulse_length: float = 5.0
    solver: str = ""
    sweep: Sweep | None = None
    n_trajectories: int | None = None
    master_seed: int = 0
    t_max: float | None = None
    n_samples: int | None = None
    tip_angle: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if not self.solver:
            self.solver = {"free_decay": "master", "driven_steady": "master",
                           "raman_pulse": "mcwf"}[self.kind]
        if self.solver not in SOLVERS:
            raise ScenarioError(f"unknown solver {self.solver!r}")
        if self.kind == "raman_pulse" and self.solver == "meanfield":
            raise ScenarioError("the Raman scenario has no mean-field solver")
        if self.kind == "driven_steady":
            if self.solver != "master":
                raise ScenarioError("driven_steady supports only the master solver")
            if self.delta != 0.0:
                raise ScenarioError("driven_steady is defined on resonance (delta = 0)")
        if self.kind == "raman_pulse" and self.pulse_length <= 0:
            raise ScenarioError("pulse_length must be > 0")
        if self.n_atoms < 1:
            raise ScenarioError("n_atoms must be >= 1")
        if self.sweep is not None and self.sweep.param in ("gamma", "omega", "omega0"):
            if any(v <= 0 for v in self.sweep.values):
                raise ScenarioError(f"sweep over {self.sweep.param} requires positive values")

    def to_dict(self):
        d = asdict(self)
        d["sweep"] = self.sweep.to_dict() if self.sweep else None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("sweep"):
            d["sweep"] = Sweep(d["sweep"]["param"], d["sweep"]["values"])
        return cls(**d)


@dataclass
class PointRecord:
    index: int
    params: dict
    summary: dict
    seed_key: list
    series: TimeSeries | None = None
    conservation: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self):
        d = {
            "index": self.index,
            "params": self.params,
            "summary": self.summary,
            "seed_key": self.seed_key,
            "conservation": self.conservation,
            "error": self.error,
            "series": None,
        }
        if self.series is not None:
            d["series"] = {
                "t": self.series.t.tolist(),
                "channels": {k: v.tolist() for k, v in self.series.channels.items()},
                "std_errors": {k: v.tolist() for k, v in self.series.std_errors.items()},
            }
        return d

    @classmethod
    def from_dict(cls, d):
        series = None
        if d.get("series"):
            s = d["series"]
            series = TimeSeries(
                t=np.array(s["t"]),
                channels={k: np.array(v) for k, v in s["channels"].items()},
                std_errors={k: np.array(v) for k, v in s["std_errors"].items()},
            )
        return cls(
            index=d["index"],
            params=d["params"],
            summary=d["summary"],
            seed_key=list(d["seed_key"]),
            series=series,
            conservation=d.get("conservation", {}),
            error=d.get("error"),
        )


@dataclass
class RunRecord:
    scenario: dict
    version: str
    wall_clock_seconds: float
    points: list

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "version": self.version,
            "wall_clock_seconds": self.wall_clock_seconds,
            "points": [p.to_dict() for p in self.points],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            scenario=d["scenario"],
            version=d["version"],
            wall_clock_seconds=d["wall_clock_seconds"],
            points=[PointRecord.from_dict(p) for p in d["points"]],
        )


def default_t_max(scenario: Scenario, n_atoms: int, gamma: float) -> float:
    if scenario.t_max is not None:
        return scenario.t_max
    if scenario.kind == "raman_pulse":
        return 1.5 * scenario.pulse_length
    if n_atoms == 1:
        return 10.0 / gamma
    return 50.0 * mf_delay(gamma, n_atoms)


def default_n_samples(scenario: Scenario) -> int:
    if scenario.n_samples is not None:
        return scenario.n_samples
    return 1201 if scenario.kind == "free_decay" else 361


def default_trajectories(scenario: Scenario, n_atoms: int) -> int:
    if scenario.n_trajectories is not None:
        return scenario.n_trajectories
    return (
        TRAJECTORY_DEFAULT_SMALL
        if n_atoms <= TRAJECTORY_N_THRESHOLD
        else TRAJECTORY_DEFAULT_LARGE
    )


def _point_params(scenario: Scenario, index: int) -> dict:
    params = {
        "n_atoms": scenario.n_atoms,
        "gamma": scenario.gamma,
        "omega": scenario.omega,
        "omega0": scenario.omega0,
        "delta": scenario.delta,
        "pulse_length": scenario.pulse_length,
    }
    if scenario.sweep is not None:
        value = scenario.sweep.values[index]
        key = {"n": "n_atoms"}.get(scenario.sweep.param, scenario.sweep.param)
        params[key] = value
        params["sweep_value"] = value
    return params


def _master_series(problem, rho0, t_grid, weights, per_n):
    """Evolve the master equation, streaming observables and conservation checks."""
    names = list(weights)
    chans = {name: np.empty(t_grid.size) for name in names}
    cons = {"max_trace_dev": 0.0, "min_eigenvalue": np.inf, "max_norm_dev": 0.0}

    def observer(i, t, mat):
        diag = np.real(np.diag(mat))
        for name in names:
            chans[name][i] = weights[name] @ diag
        cons["max_trace_dev"] = max(cons["max_trace_dev"], abs(float(np.trace(mat).real) - 1.0))
        eigmin = float(np.linalg.eigvalsh(mat).min())
        cons["min_eigenvalue"] = min(cons["min_eigenvalue"], eigmin)

    res = evolve(problem, rho0, t_grid, observer=observer)
    cons["hermitize_max_dev"] = res.hermitize_max_dev
    channels = {"intensity": chans["intensity"]}
    channels["intensity_per_atom"] = chans["intensity"] / per_n
    for name in names:
        if name == "intensity":
            continue
        channels[f"{name}_per_n"] = chans[name] / per_n
    return TimeSeries(t=t_grid, channels=channels), cons


def _run_free_decay_point(scenario: Scenario, index: int, jobs: int) -> PointRecord:
    params = _point_params(scenario, index)
    n = int(params["n_atoms"])
    gamma = float(params["gamma"])
    if gamma <= 0:
        raise ScenarioError("free_decay requires gamma > 0")
    t_max = default_t_max(scenario, n, gamma)
    t_grid = np.linspace(0.0, t_max, default_n_samples(scenario))
    basis = build_two_level_basis(n)
    problem = LindbladProblem(basis, HamiltonianSpec("none"), gamma)
    seed_key = [index]
    cons: dict = {}

    if scenario.solver == "master":
        weights = observable_weights(problem)
        series, cons = _master_series(problem, all_excited_state(basis), t_grid, weights, n)
    elif scenario.solver == "mcwf":
        psi0 = np.zeros(basis.dim, dtype=np.complex128)
        psi0[-1] = 1.0
        config = TrajectoryConfig(
            n_trajectories=default_trajectories(scenario, n),
            master_seed=scenario.master_seed,
            t_grid=t_grid,
            problem=problem,
            psi0=StateVector(basis, psi0),
        )
        ens = run_ensemble(config, jobs=jobs, spawn_prefix=(index,))
        series = _ensemble_series(ens, n, two_level=True)
        cons = {
            "max_jumps": int(ens.jump_counts.max()),
            "n_failures": len(ens.failures),
            "max_norm_dev": ens.max_norm_dev,
        }
    else:
        _, mf = mf_evolve(0.0, 0.0, gamma, n, scenario.tip_angle, t_grid)
        series = TimeSeries(
            t=t_grid,
            channels={
                "intensity": mf["intensity"],
                "intensity_per_atom": mf["intensity"] / n,
                "jz_per_n": mf["jz"] / n,
            },
        )

    summary = _pulse_summary(series, n)
    summary["mf_delay_time"] = mf_delay(gamma, n) if n >= 2 else float("nan")
    return PointRecord(index, params, summary, seed_key, series=series, conservation=cons)


def _ensemble_series(ens, n, two_level: bool) -> TimeSeries:
    channels = {
        "intensity": ens.means["intensity"],
        "intensity_per_atom": ens.means["intensity"] / n,
    }
    errors = {
        "intensity_se": ens.std_errors["intensity"],
        "intensity_per_atom_se": ens.std_errors["intensity"] / n,
    }
    if two_level:
        channels["jz_per_n"] = ens.means["jz"] / n
        errors["jz_per_n_se"] = ens.std_errors["jz"] / n
    else:
        for lvl in ("s", "e", "g"):
            channels[f"pop_{lvl}_per_n"] = ens.means[f"pop_{lvl}"] / n
            errors[f"pop_{lvl}_per_n_se"] = ens.std_errors[f"pop_{lvl}"] / n
    se = {k.removesuffix("_se"): v for k, v in errors.items()}
    ts = TimeSeries(t=ens.t_grid, channels=channels, std_errors=se)
    return ts


def _pulse_summary(series: TimeSeries, n: int) -> dict:
    ps = delay_time(series)
    return {
        "delay_time": ps.delay_time,
        "peak_time": ps.peak_time,
        "peak_intensity": ps.peak_value,
        "peak_intensity_per_atom": ps.peak_value / n,
        "at_boundary": ps.at_boundary,
    }


def _run_driven_steady_point(scenario: Scenario, index: int, jobs: int) -> PointRecord:
    params = _point_params(scenario, index)
    n = int(params["n_atoms"])
    gamma = float(params["gamma"])
    omega = float(params["omega"])
    if gamma <= 0:
        raise ScenarioError("driven_steady requires gamma > 0 at every sweep point")
    basis = build_two_level_basis(n)
    problem = LindbladProblem(
        basis, HamiltonianSpec("constant_drive", omega=omega, delta=0.0), gamma
    )
    rho = steady_state(problem)
    weights = observable_weights(problem)
    diag = np.real(np.diag(rho.matrix))
    intensity_val = float(weights["intensity"] @ diag)
    jz_val = float(weights["jz"] @ diag)
    mf = mf_steady(omega, gamma, n)
    report = validate(rho)
    summary = {
        "gamma": gamma,
        "gamma_n_over_omega": gamma * n / omega,
        "jz_per_n": jz_val / n,
        "intensity": intensity_val,
        "intensity_per_atom": intensity_val / n,
        "mf_jz_per_n": mf.j_z / n,
        "mf_intensity": gamma * mf.jp_jm,
        "mf_intensity_per_atom": gamma * mf.jp_jm / n,
        "mf_saturated": mf.saturated,
    }
    cons = {
        "max_trace_dev": report.trace,
        "min_eigenvalue": report.min_eigenvalue,
        "hermiticity": report.hermiticity,
    }
    return PointRecord(index, params, summary, [index], series=None, conservation=cons)


def _run_raman_point(scenario: Scenario, index: int, jobs: int) -> PointRecord:
    params = _point_params(scenario, index)
    n = int(params["n_atoms"])
    gamma = float(params["gamma"])
    omega0 = float(params["omega0"])
    delta = float(params["delta"])
    t_pulse = float(params["pulse_length"])
    t_max = default_t_max(scenario, n, gamma)
    t_grid = np.linspace(0.0, t_max, default_n_samples(scenario))
    basis = build_three_level_basis(n)
    problem = LindbladProblem(
        basis,
        HamiltonianSpec("raman_pulse", omega0=omega0, delta=delta, t_pulse=t_pulse),
        gamma,
    )
    psi0 = all_metastable_state(basis)
    cons: dict = {}

    if scenario.solver == "mcwf":
        n_traj = default_trajectories(scenario, n)
        config = TrajectoryConfig(
            n_trajectories=n_traj,
            master_seed=scenario.master_seed,
            t_grid=t_grid,
            problem=problem,
            psi0=psi0,
        )
        ens = run_ensemble(config, jobs=jobs, spawn_prefix=(index,), allow_failures=True)
        if len(ens.failures) > 0.1 * n_traj:
            raise ScenarioError(
                f"sweep point {index}: {len(ens.failures)}/{n_traj} trajectories failed"
            )
        series = _ensemble_series(ens, n, two_level=False)
        cons = {
            "max_jumps": int(ens.jump_counts.max()),
            "mean_jumps": float(ens.jump_counts.mean()),
            "n_failures": len(ens.failures),
            "max_norm_dev": ens.max_norm_dev,
        }
        n_traj_used = ens.n_trajectories
    else:
        weights = observable_weights(problem)
        series, cons = _master_series(problem, psi0.to_density(), t_grid, weights, n)
        cons["max_jumps"] = 0
        cons["mean_jumps"] = 0.0
        cons["n_failures"] = 0
        n_traj_used = 0

    ps = delay_time(series)
    se_peak = 0.0
    if "intensity" in series.std_errors:
        i_peak = int(np.argmax(series.channels["intensity"]))
        se_peak = float(series.std_errors["intensity"][i_peak]) / n
    summary = {
        "n_trajectories": n_traj_used,
        "peak_time": ps.peak_time,
        "peak_intensity_per_atom": ps.peak_value / n,
        "peak_intensity_per_atom_se": se_peak,
        "at_boundary": ps.at_boundary,
        "mean_jumps": cons.get("mean_jumps", 0.0),
        "max_jumps": cons.get("max_jumps", 0),
        "n_failures": cons.get("n_failures", 0),
    }
    return PointRecord(index, params, summary, [index], series=series, conservation=cons)


_POINT_RUNNERS = {
    "free_decay": _run_free_decay_point,
    "driven_steady": _run_driven_steady_point,
    "raman_pulse": _run_raman_point,
}


def run_scenario(scenario: Scenario, jobs: int = 1) -> RunRecord:
    """Execute a scenario (all sweep points) and return the full record.

    Sweep points run sequentially here; trajectory-level parallelism inside a
    point is controlled by ``jobs``.  Point ordering in the record follows the
    sweep index regardless of execution details.
    """
    start = time.perf_counter()
    n_points = len(scenario.sweep.values) if scenario.sweep else 1
    runner = _POINT_RUNNERS[scenario.kind]
    points = []
    for index in range(n_points):
        try:
            points.append(runner(scenario, index, jobs))
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(f"sweep point {index} failed: {exc}") from exc
    return RunRecord(
        scenario=scenario.to_dict(),
        version=__version__,
        wall_clock_seconds=time.perf_counter() - start,
        points=points,
    )


def run_free_decay(n_atoms, gamma, t_max=None, n_samples=None, **kw) -> RunRecord:
    return run_scenario(
        Scenario(kind="free_decay", n_atoms=n_atoms, gamma=gamma, t_max=t_max,
                 n_samples=n_samples, **kw)
    )


def run_driven_steady(n_atoms, omega, sweep: Sweep | None = None, **kw) -> RunRecord:
    return run_scenario(
        Scenario(kind="driven_steady", n_atoms=n_atoms, omega=omega, sweep=sweep, **kw)
    )


def run_raman_pulse(
    n_atoms, gamma, omega0, delta, pulse_length,
    n_trajectories=None, master_seed=0, sweep: Sweep | None = None, **kw,
) -> RunRecord:
    return run_scenario(
        Scenario(
            kind="raman_pulse", n_atoms=n_atoms, gamma=gamma, omega0=omega0,
            delta=delta, pulse_length=pulse_length, n_trajectories=n_trajectories,
            master_seed=master_seed, sweep=sweep, **kw,
        )
    )


# --- persistence --------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_run(record: RunRecord, out_dir) -> Path:
    """Write run.json, summary.csv and per-point series CSVs; returns out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = Scenario.from_dict(record.scenario)
    kind = scenario.kind

    with open(out / "run.json", "w") as fh:
        json.dump(record.to_dict(), fh, indent=1)
        fh.write("\n")

    sum_cols = SUMMARY_COLUMNS[kind]
    lines = [",".join(sum_cols)]
    for p in record.points:
        row = []
        for col in sum_cols:
            if col == "index":
                row.append(str(p.index))
            elif col in p.summary:
                row.append(_fmt(p.summary[col]))
            elif col in p.params:
                row.append(_fmt(p.params[col]))
            else:
                row.append("nan")
        lines.append(",".join(row))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")

    series_cols = SERIES_COLUMNS.get((kind, scenario.solver))
    if series_cols:
        for p in record.points:
            if p.series is None:
                continue
            rows = [",".join(series_cols)]
            data = {"t": p.series.t}
            data.update(p.series.channels)
            data.update({f"{k}_se": v for k, v in p.series.std_errors.items()})
            n_rows = p.series.t.size
            for i in range(n_rows):
                rows.append(",".join(_fmt(data[c][i]) for c in series_cols))
            (out / f"point_{p.index:03d}.csv").write_text("\n".join(rows) + "\n")
    return out


def load_run(out_dir) -> RunRecord:
    with open(Path(out_dir) / "run.json") as fh:
        return RunRecord.from_dict(json.load(fh))


# Scenario catalog: one documented command line per reproduced figure
# (panels that need two parameter sweeps chain two invocations).
FIGURE_CATALOG = {
    "fig1": (
        "superrad free-decay --n 20 --gamma 1 --sweep gamma:0.5:2:3:log --out {out}/fig1_gamma"
        " && superrad free-decay --n 20 --gamma 1 --sweep n:10:80:4:log --out {out}/fig1_n"
    ),
    "fig2": "superrad driven-steady --n 20 --omega 1 --sweep gamma:0.005:0.5:21:log --out {out}/fig2",
    "fig3": (
        "superrad raman-pulse --n 20 --gamma 1 --omega0 1 --delta 1 --pulse-length 5 --seed 7"
        " --sweep gamma:0.5:2:3:log --out {out}/fig3_gamma"
        " && superrad raman-pulse --n 20 --gamma 1 --omega0 1 --delta 1 --pulse-length 5 --seed 7"
        " --sweep n:10:30:3 --out {out}/fig3_n"
    ),
    "fig4": (
        "superrad raman-pulse --n 20 --gamma 1 --omega0 1 --delta 1 --pulse-length 5 --seed 11"
        " --sweep gamma:0.05:20:9:log --out {out}/fig4a_om1"
        " && superrad raman-pulse --n 20 --gamma 1 --omega0 2 --delta 1 --pulse-length 5 --seed 12"
        " --sweep gamma:0.05:20:9:log --out {out}/fig4a_om2"
        " && superrad raman-pulse --gamma 1 --omega0 1 --delta 1 --pulse-length 5 --seed 13"
        " --sweep n:2:30:29 --out {out}/fig4b_om1"
        " && superrad raman-pulse --gamma 1 --omega0 2 --delta 1 --pulse-length 5 --seed 14"
        " --sweep n:2:30:29 --out {out}/fig4b_om2"
    ),
}
