"""Figure rendering from superrad output directories.

Reads only the public artifacts (run.json, summary.csv, point_XXX.csv) —
no physics is recomputed here beyond unit/log axis transforms, and the
mean-field overlay curves come from the run records, never re-derived.

Expected input layout under the ``--in`` directory (produced by the
documented catalog commands, see the repository README):

    fig1_gamma/ fig1_n/                     free-decay sweeps     (figure 1)
    fig2/                                   driven-steady sweep   (figure 2)
    fig3_gamma/ fig3_n/                     Raman pulse sweeps    (figure 3)
    fig4a_om1/ fig4a_om2/ fig4b_om1/ fig4b_om2/  Raman resonance  (figure 4)

Rendering is deterministic: fixed backend, size, dpi and stripped metadata,
so identical inputs produce byte-identical image files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

DPI = 150


class FigureError(RuntimeError):
    pass


@dataclass
class FigureSpec:
    figure_id: int
    input_dir: Path
    output_path: Path


def _run_dir(base: Path, name: str) -> Path:
    path = base / name
    if not (path / "run.json").exists():
        raise FigureError(f"missing input run directory: {path}")
    return path


def load_record(run_dir: Path) -> dict:
    try:
        with open(run_dir / "run.json") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FigureError(f"malformed run record in {run_dir}: {exc}") from exc


def load_series(run_dir: Path, index: int) -> dict[str, list[float]]:
    path = run_dir / f"point_{index:03d}.csv"
    if not path.exists():
        raise FigureError(f"missing series file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise FigureError(f"empty series file: {path}")
    return {key: [float(r[key]) for r in rows] for key in rows[0]}


def summaries(record: dict) -> list[dict]:
    return [p["summary"] | p["params"] for p in record["points"]]


def _series_with_intensity(run_dir: Path, index: int) -> dict:
    series = load_series(run_dir, index)
    if "intensity" not in series or len(series["intensity"]) == 0:
        raise FigureError(f"series {run_dir}/point_{index:03d}.csv has no intensity channel")
    return series


def build_fig1(input_dir: Path):
    """Pulse shapes and delay times: 2x2 panels, dashed mean-field overlays
    in the delay panels."""
    d_gamma = _run_dir(input_dir, "fig1_gamma")
    d_n = _run_dir(input_dir, "fig1_n")
    rec_g = load_record(d_gamma)
    rec_n = load_record(d_n)

    fig, axes = plt.subplots(2, 2, figsize=(8, 6))
    (ax_a, ax_b), (ax_c, ax_d) = axes

    for p in rec_g["points"]:
        series = _series_with_intensity(d_gamma, p["index"])
        ax_a.plot(series["t"], series["intensity"], label=f"$\\gamma={p['params']['gamma']:g}$")
    ax_a.set_xlabel("$t$")
    ax_a.set_ylabel("$I(t)$")
    ax_a.legend(fontsize=8)
    ax_a.set_title("(a) pulses, N fixed")

    sm_g = summaries(rec_g)
    ax_b.plot([s["gamma"] for s in sm_g], [s["delay_time"] for s in sm_g], "o")
    ax_b.plot([s["gamma"] for s in sm_g], [s["mf_delay_time"] for s in sm_g], "k--",
              label="mean field")
    ax_b.set_xlabel("$\\gamma$")
    ax_b.set_ylabel("$t_{delay}$")
    ax_b.legend(fontsize=8)
    ax_b.set_title("(b) delay vs $\\gamma$")

    for p in rec_n["points"]:
        series = _series_with_intensity(d_n, p["index"])
        ax_c.plot(series["t"], series["intensity"], label=f"$N={int(p['params']['n_atoms'])}$")
    ax_c.set_xlabel("$t$")
    ax_c.set_ylabel("$I(t)$")
    ax_c.legend(fontsize=8)
    ax_c.set_title("(c) pulses, $\\gamma$ fixed")

    sm_n = summaries(rec_n)
    ax_d.plot([s["n_atoms"] for s in sm_n], [s["delay_time"] for s in sm_n], "o")
    ax_d.plot([s["n_atoms"] for s in sm_n], [s["mf_delay_time"] for s in sm_n], "k--",
              label="mean field")
    ax_d.set_xlabel("$N$")
    ax_d.set_ylabel("$t_{delay}$")
    ax_d.legend(fontsize=8)
    ax_d.set_title("(d) delay vs $N$")

    fig.tight_layout()
    return fig


def build_fig2(input_dir: Path):
    """Driven steady state: population imbalance and emitted intensity vs the
    rescaled emission rate, with dashed mean-field overlays; log x."""
    d = _run_dir(input_dir, "fig2")
    sm = summaries(load_record(d))
    xs = [s["gamma_n_over_omega"] for s in sm]

    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax_a.semilogx(xs, [s["jz_per_n"] for s in sm], "o")
    ax_a.semilogx(xs, [s["mf_jz_per_n"] for s in sm], "k--", label="mean field")
    ax_a.set_xlabel("$\\gamma N/\\Omega$")
    ax_a.set_ylabel("$\\langle J_z\\rangle/N$")
    ax_a.legend(fontsize=8)
    ax_a.set_title("(a) imbalance")

    ax_b.semilogx(xs, [s["intensity_per_atom"] for s in sm], "o")
    ax_b.semilogx(xs, [s["mf_intensity_per_atom"] for s in sm], "k--", label="mean field")
    ax_b.set_xlabel("$\\gamma N/\\Omega$")
    ax_b.set_ylabel("$I/N$")
    ax_b.legend(fontsize=8)
    ax_b.set_title("(b) intensity")

    fig.tight_layout()
    return fig


def _lambda_schematic(ax):
    # Three-level Lambda scheme: drive s->e, collective emission e->g.
    levels = {"s": (0.15, 0.35), "e": (0.5, 0.9), "g": (0.85, 0.05)}
    for name, (x, y) in levels.items():
        ax.hlines(y, x - 0.12, x + 0.12, color="k", lw=2)
        ax.text(x + 0.14, y, f"$|{name}\\rangle$", va="center")
    ax.annotate("", xy=(0.46, 0.88), xytext=(0.19, 0.37),
                arrowprops=dict(arrowstyle="->", color="tab:blue"))
    ax.text(0.22, 0.68, "$\\Omega(t)$", color="tab:blue")
    ax.annotate("", xy=(0.82, 0.07), xytext=(0.54, 0.88),
                arrowprops=dict(arrowstyle="->", color="tab:red"))
    ax.text(0.72, 0.5, "$\\gamma$", color="tab:red")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title("(a) scheme")


def build_fig3(input_dir: Path):
    """Raman pulses: schematic plus emitted pulses for several gamma and N."""
    d_gamma = _run_dir(input_dir, "fig3_gamma")
    d_n = _run_dir(input_dir, "fig3_n")
    rec_g = load_record(d_gamma)
    rec_n = load_record(d_n)

    fig, (ax_a, ax_b, ax_c) = plt.subplots(1, 3, figsize=(10.5, 3.2))
    _lambda_schematic(ax_a)

    for p in rec_g["points"]:
        series = _series_with_intensity(d_gamma, p["index"])
        ax_b.plot(series["t"], series["intensity"], label=f"$\\gamma={p['params']['gamma']:g}$")
    ax_b.set_xlabel("$t$")
    ax_b.set_ylabel("$I(t)$")
    ax_b.legend(fontsize=8)
    ax_b.set_title("(b) pulses vs $\\gamma$")

    for p in rec_n["points"]:
        series = _series_with_intensity(d_n, p["index"])
        ax_c.plot(series["t"], series["intensity"], label=f"$N={int(p['params']['n_atoms'])}$")
    ax_c.set_xlabel("$t$")
    ax_c.set_ylabel("$I(t)$")
    ax_c.legend(fontsize=8)
    ax_c.set_title("(c) pulses vs $N$")

    fig.tight_layout()
    return fig


def build_fig4(input_dir: Path):
    """Stochastic resonance: peak intensity per atom vs gamma (a) and vs N (b),
    two drive strengths per panel, solid guide lines."""
    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(8, 3.2))
    styles = {"om1": ("o", "tab:blue", "$\\Omega_0=1$"), "om2": ("s", "tab:red", "$\\Omega_0=2$")}

    for suffix, (marker, color, label) in styles.items():
        sm = summaries(load_record(_run_dir(input_dir, f"fig4a_{suffix}")))
        xs = [s["gamma"] for s in sm]
        ys = [s["peak_intensity_per_atom"] for s in sm]
        ax_a.semilogx(xs, ys, "-", color=color, lw=1)
        ax_a.semilogx(xs, ys, marker, color=color, label=label)
    ax_a.set_xlabel("$\\gamma$")
    ax_a.set_ylabel("peak $I/N$")
    ax_a.legend(fontsize=8)
    ax_a.set_title("(a) vs coupling rate")

    for suffix, (marker, color, label) in styles.items():
        sm = summaries(load_record(_run_dir(input_dir, f"fig4b_{suffix}")))
        xs = [s["n_atoms"] for s in sm]
        ys = [s["peak_intensity_per_atom"] for s in sm]
        ax_b.plot(xs, ys, "-", color=color, lw=1)
        ax_b.plot(xs, ys, marker, color=color, label=label)
    ax_b.set_xlabel("$N$")
    ax_b.set_ylabel("peak $I/N$")
    ax_b.legend(fontsize=8)
    ax_b.set_title("(b) vs atom number")

    fig.tight_layout()
    return fig


FIGURE_BUILDERS = {1: build_fig1, 2: build_fig2, 3: build_fig3, 4: build_fig4}


def render_figure(spec: FigureSpec) -> Path:
    """Build the requested figure and write a deterministic image file."""
    if spec.figure_id not in FIGURE_BUILDERS:
        raise FigureError(f"unknown figure id {spec.figure_id}")
    input_dir = Path(spec.input_dir)
    if not input_dir.is_dir():
        raise FigureError(f"input directory does not exist: {input_dir}")
    fig = FIGURE_BUILDERS[spec.figure_id](input_dir)
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return out


def script_main(figure_id: int, argv=None) -> int:
    """Shared CLI for the make_fig<k>.py scripts; exit 0/1/2 as the main CLI."""
    import argparse
    import sys

    parser = argparse.ArgumentParser(
        description=f"Render figure {figure_id} from a superrad output directory."
    )
    parser.add_argument("--in", dest="input_dir", required=True, help="output root of the runs")
    parser.add_argument("--out", dest="output_path", required=True, help="image file to write")
    args = parser.parse_args(argv)
    try:
        out = render_figure(FigureSpec(figure_id, Path(args.input_dir), Path(args.output_path)))
        print(f"wrote {out}")
        return 0
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
