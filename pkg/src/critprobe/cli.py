"""probe: run sweep / detect / validate / weyl / classical experiments from an INI config."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .classical import auto_support, linearized_periods, period_bound, shortest_period
from .config import PARITIES, ConfigError, ExperimentConfig, load_config, parse_ladder
from .detect import (SCHEMA_VERSION, CalibrationTable, ProbeSettings, analyze_spectra, calibrate_max_constant,
                     ground_truth, multi_point)
from .plots import emit_plots
from .potential import find_critical_points
from .quantum import DEFAULT_PPW, Window, discretize_and_solve, oscillator_oracle
from .scaling import FITS_HEADER, FitError, classify_regular, fit_order
from .testfn import build_test_function
from .trace import SWEEP_HEADER, gamma, liouville_volume, weyl_check, weyl_prediction

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(RuntimeError):
    def __init__(self, module: str, op: str, cause: Exception, hint: str):
        super().__init__(f"[{module}.{op}] {type(cause).__name__}: {cause}\n  hint: {hint}")


@contextmanager
def stage(module: str, op: str, hint: str):
    try:
        yield
    except (ConfigError, NumericalFailure):
        raise
    except Exception as exc:  # every module error surfaces with its origin
        raise NumericalFailure(module, op, exc, hint) from exc


# ---------------------------------------------------------------------- text helpers

def _num(x):
    """JSON-safe float: repr-exact for finite values, None otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, complex):
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, np.ndarray):
        return _num(x.tolist())
    return x


def _json(obj) -> str:
    return json.dumps(_num(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv(header: str, rows, comments) -> str:
    lines = [f"# {c}" for c in comments] + [header]
    lines += [",".join(v if isinstance(v, str) else repr(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _sample_rows(samples, label=None):
    for g in samples:
        row = [float(g.E), float(g.hbar), float(g.value.real), float(g.value.imag), int(g.count), float(g.err_bound)]
        yield ([label] if label else []) + row


def _fit_row(label, f):
    return [label, float(f.E), float(f.alpha), str(f.m), float(f.C.real), float(f.C.imag), float(f.residual),
            str(int(f.ambiguous))]


class Artifacts:
    """Artifacts collected in memory and written in one go: complete on success, quarantined otherwise."""

    def __init__(self, cfg: ExperimentConfig, resolved: ExperimentConfig):
        self.cfg = resolved
        self.hash = resolved.config_hash()
        self.files: dict[str, str] = {}

    @property
    def stamp(self) -> list[str]:
        return [f"config_hash={self.hash}", f"critprobe={__version__}"]

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def write(self, root: Path) -> list[Path]:
        root.mkdir(parents=True, exist_ok=True)
        out = []
        for name in sorted(self.files):
            p = root / name
            p.write_text(self.files[name])
            out.append(p)
        return out


# ---------------------------------------------------------------------- shared steps

def _workers() -> int:
    try:
        cap = int(os.environ.get("PROBE_THREADS", "0"))
    except ValueError:
        cap = 0
    return max(1, cap or min(os.cpu_count() or 1, 8))


def solve_ladder(cfg: ExperimentConfig, pot, win: Window):
    order = 4 if cfg.order == "auto" else cfg.order
    if cfg.oracle:
        if cfg.potential != "harmonic":
            raise ConfigError("oracle spectra exist only for the harmonic potential")
        c = dict(cfg.params).get("c", 1.0)
        return [oscillator_oracle(c, h, win, cfg.n) for h in cfg.hbars]
    with stage("quantum", "discretize_and_solve", "enlarge L, shrink eps, or raise points_per_wavelength"):
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            return list(pool.map(lambda h: discretize_and_solve(pot, h, win, points_per_wavelength=float(cfg.ppw),
                                                                order=order), cfg.hbars))


def resolve(cfg: ExperimentConfig, pot, win: Window) -> ExperimentConfig:
    """Fill the 'auto' entries; the resolved config re-runs to the same artifacts."""
    changes = {"order": 4 if cfg.order == "auto" else cfg.order,
               "ppw": DEFAULT_PPW[cfg.n] if cfg.ppw == "auto" else cfg.ppw}
    if cfg.grid_step == "auto":
        changes["grid_step"] = float(min(cfg.hbars))
    if cfg.M == "auto" and cfg.mode in ("sweep", "detect", "validate"):
        with stage("classical", "auto_support", "set [testfn] M explicitly"):
            M, info = auto_support(pot, win, find_critical_points(pot))
        changes["M"] = float(M)
        print(f"probe: auto support M = {M!r} from " + ", ".join(f"{k}={v}" for k, v in sorted(info.items())),
              file=sys.stderr)
    return replace(cfg, **changes)


def _grid(cfg: ExperimentConfig, win: Window) -> np.ndarray:
    step = float(cfg.grid_step)
    count = int(np.ceil((win.E2 - win.E1) / step)) + 1
    return np.linspace(win.E1, win.E2, max(count, 2))


def _grid_products(art: Artifacts, labels, tables, energies):
    """Per-energy fits and the decay-slope profile of a sweep."""
    fits, slopes = [], []
    scales = [max((abs(g.value) for g in t), default=0.0) for t in tables]
    by_E = [{} for _ in tables]
    for i, t in enumerate(tables):
        for g in t:
            by_E[i].setdefault(g.E, []).append(g)
    for E in energies:
        E = float(E)
        best = math.inf
        for lab, groups, s in zip(labels, by_E, scales):
            samples = groups[E]
            rep = classify_regular(samples, scale=s)
            best = min(best, math.inf if rep.is_fast_decay else rep.slope)
            try:
                fits.append(_fit_row(lab, fit_order(samples)))
            except FitError:
                pass
        slopes.append([E, best])
    art.add("grid_fits.csv", _csv("label," + FITS_HEADER, fits, art.stamp))
    art.add("slopes.csv", _csv("E,slope", slopes, art.stamp))


# ---------------------------------------------------------------------- modes

def run_sweep(cfg, pot, win, ess, art: Artifacts):
    labels = list(cfg.parities)
    tfs = [build_test_function(float(cfg.M), cfg.j0, PARITIES[p]) for p in labels]
    energies = _grid(cfg, win)
    tables = []
    with stage("trace", "gamma_sweep", "check that the window holds the energy grid"):
        for lab, tf in zip(labels, tfs):
            t = [gamma(es, tf, float(E)) for E in energies for es in ess]
            tables.append(t)
            art.add(f"gamma_{lab}.csv", _csv(SWEEP_HEADER, _sample_rows(t), art.stamp + [f"testfn={lab}"]))
    _grid_products(art, labels, tables, energies)
    focus_E = list(cfg.plot_energies) or [win.E1, 0.5 * (win.E1 + win.E2), win.E2]
    snapped = sorted({float(energies[np.argmin(np.abs(energies - e))]) for e in focus_E})
    rows, frows = [], []
    for lab, t in zip(labels, tables):
        for E in snapped:
            s = [g for g in t if g.E == E]
            rows += list(_sample_rows(s, lab))
            try:
                frows.append(_fit_row(lab, fit_order(s)))
            except FitError:
                pass
    art.add("focus_gamma.csv", _csv("label," + SWEEP_HEADER, rows, art.stamp))
    art.add("focus_fits.csv", _csv("label," + FITS_HEADER, frows, art.stamp))


def _calibration(cfg: ExperimentConfig, art: Artifacts) -> tuple[CalibrationTable | None, dict]:
    table = CalibrationTable.load(cfg.resolve_path(cfg.calibration_table)) if cfg.calibration_table else None
    log = {}
    if cfg.reference:
        table = table or CalibrationTable()
        ref = cfg.build_reference()
        rwin = Window(*cfg.reference_window)
        ref_cfg = replace(cfg, potential=cfg.reference, params=cfg.reference_params, oracle=False)
        ess = solve_ladder(ref_cfg, ref, rwin)
        with stage("classical", "auto_support", "set [testfn] M explicitly"):
            M, _ = auto_support(ref, rwin, find_critical_points(ref))
        with stage("detect", "calibrate_max_constant", "the reference run must show a clean log signature"):
            an = analyze_spectra(ess, _settings(cfg, M))
            hit = [r for r in an.reports if abs(r.E_c - cfg.reference_E) <= min(cfg.hbars)]
            if not hit:
                raise ValueError(f"no critical value detected near the reference energy {cfg.reference_E}")
            rep = hit[0]
            truth = ground_truth(ref, find_critical_points(ref), rep.E_c, 2 * min(cfg.hbars))
            if truth is None:
                raise ValueError("reference potential has no critical point at the detected energy")
            log_tf = build_test_function(cfg.log_M, 0, "standard-even")
            from .detect import probe_fit
            lp = probe_fit("log", log_tf, [gamma(es, log_tf, rep.E_c) for es in ess])
            const = calibrate_max_constant(an.n, rep.k, lp, truth["A"], table, source=ref.label)
        log = {"reference": ref.label, "E_c": rep.E_c, "A_known": truth["A"], "constant": const, "k": rep.k,
               "n": an.n}
        art.add("calibration.json", _json({"schema": SCHEMA_VERSION, "config_hash": art.hash,
                                           "entries": table.entries, "run": log}))
    return table, log


def _settings(cfg: ExperimentConfig, M: float) -> ProbeSettings:
    return ProbeSettings(detect_M=float(M), detect_j0=cfg.j0, invert_M=cfg.invert_M, log_M=cfg.log_M,
                         confirm=cfg.confirm)


def _compare(rep, truth, hbar_min) -> dict:
    row = {"E_c_true": truth["E_c"], "E_c_found": rep.E_c, "k_true": truth["k"], "k_found": rep.k,
           "class_true": truth["kind"], "class_found": rep.kind, "A_true": truth["A"], "A_found": rep.A,
           "points": truth["points"]}
    row["E_ok"] = abs(rep.E_c - truth["E_c"]) <= hbar_min
    row["k_ok"] = rep.k == truth["k"]
    row["class_ok"] = rep.kind == truth["kind"]
    tol = 0.05 if truth["kind"] == "minimum" else 0.10
    row["A_rel_err"] = None if rep.A is None else abs(rep.A - truth["A"]) / truth["A"]
    row["A_ok"] = (rep.A is not None and not rep.up_to_constant and row["A_rel_err"] <= tol)
    row["multi_point_ok"] = rep.multi_point == (truth["points"] >= 2)
    return row


def run_detect(cfg, pot, win, ess, art: Artifacts, validate: bool = False):
    table, cal_log = _calibration(cfg, art)
    settings = _settings(cfg, cfg.M)
    with stage("detect", "analyze_spectra", "widen the ladder or the window margin eps"):
        an = analyze_spectra(ess, settings, table)
    hbar_min = min(cfg.hbars)
    with stage("potential", "find_critical_points", "check the box half-width L"):
        cps = find_critical_points(pot)
    for rep in an.reports:
        rep.multi_point = multi_point(cps, rep.E_c, hbar_min)
        if rep.multi_point:
            rep.notes.append("multi-point surface: A is the sum over the points at this level")
    labels = ("even", "odd")
    energies = np.array(sorted({g.E for g in an.sweeps[0]}))
    for lab, t in zip(labels, an.sweeps):
        art.add(f"gamma_{lab}.csv", _csv(SWEEP_HEADER, _sample_rows(t), art.stamp + [f"testfn={lab}"]))
    _grid_products(art, labels, an.sweeps, energies)

    focus, frows = [], []
    fits_at = {}
    for E_c, lab, f in an.fits:
        if f is not None:
            frows.append(_fit_row(lab, f))
            fits_at.setdefault(E_c, []).append(f)
    inv = {"even": build_test_function(cfg.invert_M, 0, "standard-even"),
           "odd": build_test_function(cfg.invert_M, 0, "odd"),
           "log": build_test_function(cfg.log_M, 0, "standard-even")}
    for rep in an.reports:
        for lab, tf in inv.items():
            focus += list(_sample_rows([gamma(es, tf, rep.E_c) for es in ess], lab))
    art.add("focus_gamma.csv", _csv("label," + SWEEP_HEADER, focus, art.stamp))
    art.add("focus_fits.csv", _csv("label," + FITS_HEADER, frows, art.stamp))
    art.add("fits.csv", _csv("label," + FITS_HEADER, frows, art.stamp))

    comparison = []
    if validate:
        truths = []
        for rep in an.reports:
            with stage("potential", "extract_germ", "germ must be homogeneous and sign-definite"):
                rep.truth = ground_truth(pot, cps, rep.E_c, 2 * hbar_min)
            if rep.truth is not None:
                comparison.append(_compare(rep, rep.truth, hbar_min))
                truths.append(rep.truth["E_c"])
        found = {round(t, 9) for t in truths}
        for cp in cps:
            if win.E1 <= cp.E_c <= win.E2 and cp.kind in ("minimum", "maximum", "unresolved") \
                    and round(cp.E_c, 9) not in found and all(abs(cp.E_c - t) > 2 * hbar_min for t in truths):
                comparison.append({"E_c_true": cp.E_c, "E_c_found": None, "class_true": cp.kind, "E_ok": False})
                found.add(round(cp.E_c, 9))
        keys = ["E_c_true", "E_c_found", "k_true", "k_found", "class_true", "class_found", "A_true", "A_found",
                "A_rel_err", "points", "E_ok", "k_ok", "class_ok", "A_ok", "multi_point_ok"]
        rows = [[_cell(r.get(k)) for k in keys] for r in comparison]
        art.add("comparison.csv", _csv(",".join(keys), rows, art.stamp))

    report = {
        "schema": SCHEMA_VERSION, "config_hash": art.hash, "mode": cfg.mode, "potential": pot.label,
        "n": an.n, "n_config": cfg.n,
        "ladder": {"hbar_max": cfg.ladder[0], "rho": cfg.ladder[1], "count": cfg.ladder[2]},
        "grid": {"E1": win.E1, "E2": win.E2, "eps": win.eps, "step": float(energies[1] - energies[0]),
                 "count": int(energies.size)},
        "support": {"M": cfg.M},
        "settings": {"detect_M": settings.detect_M, "detect_j0": settings.detect_j0,
                     "invert_M": settings.invert_M, "log_M": settings.log_M, "confirm": settings.confirm},
        "detection": {"bands": [{"lo": b.lo, "hi": b.hi, "clipped": b.clipped, "minima": list(b.minima)}
                                for b in an.detection.bands],
                      "candidates": list(an.detection.candidates),
                      "refinements": [{"candidate": c, "E_c": r.E_c, "alpha": r.alpha, "mismatch": r.mismatch,
                                       "accepted": ok} for c, r, ok in an.refinements]},
        "calibration": {"entries": table.entries if table else {}, "run": cal_log},
        "reports": [rep.to_dict() for rep in an.reports],
    }
    if validate:
        report["comparison"] = comparison
    art.add("report.json", _json(report))
    return report


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ";".join(str(x) for x in v)
    return str(v)


def run_weyl(cfg, pot, win, ess, art: Artifacts):
    tf = build_test_function(cfg.weyl_M, 0, "standard-even")
    with stage("potential", "find_critical_points", "check the box half-width L"):
        cvals = [cp.E_c for cp in find_critical_points(pot)]
    with stage("trace", "liouville_volume", "move [weyl] E away from critical values"):
        lv = liouville_volume(pot, cfg.weyl_E, critical_values=cvals, seed=cfg.seed)
    with stage("trace", "weyl_check", "use j0 = 0 and a smaller hbar"):
        rep = weyl_check(ess, tf, cfg.weyl_E, lv.value, pot.n)
    rows = []
    for es in sorted(ess, key=lambda e: -e.hbar):
        g = gamma(es, tf, cfg.weyl_E)
        pred = weyl_prediction(pot.n, es.hbar, tf.fhat0, lv.value)
        rows.append([float(es.hbar), float(g.value.real), float(pred), float(abs(g.value / pred - 1))])
    art.add("weyl.csv", _csv("hbar,gamma,weyl,deviation", rows, art.stamp))
    art.add("weyl.json", _json({"schema": SCHEMA_VERSION, "config_hash": art.hash, "E": rep.E, "n": rep.n,
                                "lvol": rep.lvol, "lvol_stderr": lv.stderr, "M": cfg.weyl_M,
                                "hbars": list(rep.hbars), "deviations": list(rep.deviations),
                                "deviation_at_smallest_hbar": rep.deviation}))


def run_classical(cfg, pot, win, art: Artifacts):
    with stage("classical", "period_bound", "check that V <= E2 + eps is non-empty"):
        pb = period_bound(pot, win)
    with stage("potential", "find_critical_points", "check the box half-width L"):
        cps = find_critical_points(pot)
    with stage("classical", "shortest_period", "reduce dt or raise t_max"):
        search = shortest_period(pot, win, pb)
    lin = [{"x0": cp.x0.tolist(), "E_c": cp.E_c, "kind": cp.kind, "periods": linearized_periods(cp)} for cp in cps]
    art.add("classical.json", _json({"schema": SCHEMA_VERSION, "config_hash": art.hash,
                                     "period_bound": {"a": pb.a, "T": pb.T, "b": pb.b, "region": pb.region},
                                     "linearized": lin, "shortest_orbit": search.shortest,
                                     "seeds": search.seeds, "t_max": search.t_max,
                                     "bound_respected": bool(search.shortest >= pb.T)}))
    rows = [[float(p), float(E), ";".join(repr(float(v)) for v in x)] for p, E, x in search.periods]
    art.add("orbits.csv", _csv("period,energy,seed", rows, art.stamp))


# ---------------------------------------------------------------------- entry points

def run_experiment(cfg: ExperimentConfig) -> tuple[int, list[Path]]:
    """Run one experiment; returns (exit status, written files)."""
    out = Path(cfg.out)
    art = None
    try:
        with stage("cli", "build_potential", "check [potential]"):
            pot = cfg.build_potential()
        win = Window(*cfg.window)
        resolved = resolve(cfg, pot, win)
        art = Artifacts(cfg, resolved)
        art.add("resolved_config.ini", f"# config_hash={art.hash}\n" + resolved.to_ini(with_out=False))
        ess = None if resolved.mode == "classical" else solve_ladder(resolved, pot, win)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if resolved.mode == "sweep":
                run_sweep(resolved, pot, win, ess, art)
            elif resolved.mode in ("detect", "validate"):
                run_detect(resolved, pot, win, ess, art, validate=resolved.mode == "validate")
            elif resolved.mode == "weyl":
                run_weyl(resolved, pot, win, ess, art)
            else:
                run_classical(resolved, pot, win, art)
    except NumericalFailure as exc:
        print(f"probe: numerical failure\n{exc}", file=sys.stderr)
        written = art.write(out / "quarantine") if art and art.files else []
        return EXIT_NUMERIC, written
    written = art.write(out)
    if resolved.mode in ("sweep", "detect", "validate"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            written += emit_plots(out)
    return EXIT_OK, written


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="probe", description=__doc__)
    ap.add_argument("mode", choices=["sweep", "detect", "validate", "weyl", "classical"])
    ap.add_argument("--config", required=True)
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--hbar-ladder", metavar="h0,rho,count")
    ap.add_argument("--override", action="append", default=[], metavar="section.key=value")
    args = ap.parse_args(argv)
    try:
        ladder = parse_ladder(args.hbar_ladder) if args.hbar_ladder else None
        cfg = load_config(args.config, overrides=args.override, mode=args.mode, out=args.out, seed=args.seed,
                          ladder=ladder)
        status, written = run_experiment(cfg)
    except ConfigError as exc:
        print(f"probe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in written:
        print(p)
    return status


if __name__ == "__main__":
    sys.exit(main())
