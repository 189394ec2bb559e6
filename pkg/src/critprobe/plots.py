"""Deterministic SVG figures and a gnuplot script from the artifacts of a run."""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "svg.hashsalt": "critprobe",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "lines.markersize": 4,
    "figure.figsize": (5.0, 3.6),
    "axes.prop_cycle": matplotlib.cycler(color=["#08589e", "#d95f02", "#1b9e77", "#7570b3", "#e7298a"]),
}
SVG_META = {"Date": None, "Creator": "critprobe"}


def _rows(path: Path) -> list[dict]:
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)


def _loglog(focus: list[dict], fits: dict, out: Path, gp: list[str]) -> Path:
    keys = sorted({(r["label"], float(r["E"])) for r in focus})
    fig, ax = plt.subplots()
    blocks = []
    for label, E in keys:
        pts = sorted(((float(r["hbar"]), abs(complex(float(r["re_gamma"]), float(r["im_gamma"]))))
                      for r in focus if r["label"] == label and float(r["E"]) == E), reverse=True)
        h = np.array([p[0] for p in pts])
        g = np.array([p[1] for p in pts])
        keep = g > 0
        line = ax.loglog(h[keep], g[keep], "o", label=f"{label}, E={E:.4g}")[0]
        block = [f"# {label} E={E!r}"] + [f"{a!r} {b!r}" for a, b in zip(h[keep], g[keep])]
        f = fits.get((label, E))
        if f is not None:
            hh = np.geomspace(h.min(), h.max(), 50)
            model = abs(f["C"]) * hh ** f["alpha"] * np.log(1 / hh) ** f["m"]
            ax.loglog(hh, model, "-", color=line.get_color(),
                      label=f"fit: alpha={f['alpha']:.3f}" + (" x log" if f["m"] else ""))
        blocks.append("\n".join(block))
    ax.set_xlabel(r"$\hbar$")
    ax.set_ylabel(r"$|\gamma(E,\hbar,\varphi)|$")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, out / "gamma_loglog.svg")
    (out / "gamma_loglog.dat").write_text("\n\n\n".join(blocks) + "\n")
    gp += ["set output 'gamma_loglog_gp.svg'", "set logscale xy", "set xlabel 'hbar'", "set ylabel '|gamma|'",
           "plot for [i=0:%d] 'gamma_loglog.dat' index i with points title columnheader(1)" % (len(blocks) - 1),
           "unset logscale"]
    return out / "gamma_loglog.svg"


def _alpha_profile(grid: list[dict], slopes: list[dict], markers: list[float], out: Path, gp: list[str]) -> Path:
    fig, ax = plt.subplots()
    blocks = []
    for label in sorted({r["label"] for r in grid}):
        pts = sorted((float(r["E"]), float(r["alpha"])) for r in grid if r["label"] == label)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], ".", label=f"alpha ({label})")
        blocks.append("\n".join([f"# alpha {label}"] + [f"{a!r} {b!r}" for a, b in pts]))
    if slopes:
        pts = [(float(r["E"]), float(r["slope"])) for r in slopes if np.isfinite(float(r["slope"]))]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "-", lw=0.8, label="decay slope")
        blocks.append("\n".join(["# decay_slope"] + [f"{a!r} {b!r}" for a, b in pts]))
    for E in markers:
        ax.axvline(E, color="k", ls="--", lw=0.8)
    ax.set_xlabel("E")
    ax.set_ylabel(r"fitted order $\alpha$")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, out / "alpha_vs_E.svg")
    (out / "alpha_vs_E.dat").write_text("\n\n\n".join(blocks) + "\n")
    gp += ["set output 'alpha_vs_E_gp.svg'", "set xlabel 'E'", "set ylabel 'alpha'"]
    gp += [f"set arrow from {E!r}, graph 0 to {E!r}, graph 1 nohead dt 2" for E in markers]
    gp += ["plot for [i=0:%d] 'alpha_vs_E.dat' index i with linespoints title columnheader(1)" % (len(blocks) - 1)]
    return out / "alpha_vs_E.svg"


def _read_fits(path: Path) -> dict:
    out = {}
    for r in _rows(path):
        out[(r["label"], float(r["E"]))] = {"alpha": float(r["alpha"]), "m": int(r["logflag"]),
                                            "C": complex(float(r["re_C"]), float(r["im_C"]))}
    return out


def emit_plots(artifact_dir) -> list[Path]:
    """Log-log |gamma| vs hbar with fitted lines, and fitted alpha vs E with detected E_c.

    Inputs missing from the directory are listed in a warning and their plot is skipped.
    """
    d = Path(artifact_dir)
    out = d / "plots"
    made, missing = [], []
    focus_p, focus_fits_p = d / "focus_gamma.csv", d / "focus_fits.csv"
    grid_p, slopes_p, report_p = d / "grid_fits.csv", d / "slopes.csv", d / "report.json"
    gp = ["# gnuplot script; run from this directory", "set terminal svg size 500,360"]
    with plt.rc_context(STYLE):
        focus = _rows(focus_p) if focus_p.is_file() else []
        if focus:
            out.mkdir(exist_ok=True)
            fits = _read_fits(focus_fits_p) if focus_fits_p.is_file() else {}
            made.append(_loglog(focus, fits, out, gp))
        else:
            missing.append(focus_p.name)
        grid = _rows(grid_p) if grid_p.is_file() else []
        slopes = _rows(slopes_p) if slopes_p.is_file() else []
        if grid or slopes:
            out.mkdir(exist_ok=True)
            markers = []
            if report_p.is_file():
                markers = [r["E_c"] for r in json.loads(report_p.read_text())["reports"]]
            made.append(_alpha_profile(grid, slopes, markers, out, gp))
        else:
            missing.append(grid_p.name)
    if missing:
        warnings.warn(f"plots skipped, missing or empty inputs: {', '.join(missing)}", RuntimeWarning)
    if made:
        (out / "plots.gp").write_text("\n".join(gp) + "\n")
        made.append(out / "plots.gp")
    return made
