"""Inverse pipeline: locate critical energies, read off the germ degree, class and spherical average."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from math import gamma as gamma_fn
from pathlib import Path

import numpy as np
from scipy.special import beta as beta_fn, roots_jacobi

from .scaling import OrderFit, classify_regular, fit_order, FitError
from .testfn import TestFunction, build_test_function, parity_pair
from .trace import GammaSample, gamma

SCHEMA_VERSION = "1.0"


def sphere_area(n: int) -> float:
    """Surface measure of S^{n-1}: 2 for n=1, 2 pi for n=2."""
    return 2 * np.pi ** (n / 2) / gamma_fn(n / 2)


# ---------------------------------------------------------------- functionals of phi

def _cut_radius(tf: TestFunction, rel: float) -> float:
    a = np.abs(tf.phi)
    loud = np.nonzero(a >= rel * a.max())[0]
    return float(max(abs(tf.x[loud[0]]), abs(tf.x[loud[-1]])))


def half_line_moment(tf: TestFunction, p: float, side: int = 1, rel_cut: float = 1e-10) -> complex:
    """int_0^R s^p phi(side * s) ds, p > -1, R where |phi| falls below rel_cut of its peak.

    Gauss-Legendre on every tabulation cell; the first cell uses Gauss-Jacobi so the
    s^p endpoint behaviour is integrated exactly.
    """
    if not p > -1:
        raise ValueError("exponent must exceed -1")
    R = _cut_radius(tf, rel_cut)
    h = tf.dx
    cells = int(np.ceil(R / h))
    xg, wg = np.polynomial.legendre.leggauss(6)
    left = h * np.arange(1, cells)
    s = (left[:, None] + h * (xg[None, :] + 1) / 2).ravel()
    w = np.tile(wg * h / 2, cells - 1)
    body = np.sum(w * s ** p * tf(side * s))
    xj, wj = roots_jacobi(8, 0.0, p)          # weight (1+y)^p on [-1, 1]
    s0 = h * (xj + 1) / 2
    first = np.sum(wj * (h / 2) ** (p + 1) * tf(side * s0))
    return complex(body + first)


def min_functional(n: int, k: int, tf: TestFunction) -> complex:
    """int int_{u,v>0} phi(u^2 + v^2k) u^(n-1) v^(n-1) du dv.

    With p = u^2, q = v^2k and s = p + q this is
    B(n/2, n/2k) / 4k * int_0^inf s^(n/2 + n/2k - 1) phi(s) ds.
    """
    return beta_fn(n / 2, n / (2 * k)) / (4 * k) * half_line_moment(tf, n / 2 + n / (2 * k) - 1)


def predict_min_coefficient(n: int, k: int, tf: TestFunction, A: float) -> complex:
    """Leading coefficient of gamma at a minimum with germ average A."""
    return sphere_area(n) / (2 * np.pi) ** n * A * min_functional(n, k, tf)


@dataclass(frozen=True)
class Tnk:
    n: int
    k: int
    plus: complex
    minus: complex

    @property
    def power(self) -> float:
        return self.n * (self.k + 1) / (2 * self.k) - 1

    @property
    def log_case(self) -> bool:
        e = self.n * (self.k + 1) / (2 * self.k)
        return abs(e - round(e)) < 1e-12 and self.n % 2 == 1


def tnk_functional(n: int, k: int, tf: TestFunction) -> Tnk:
    """plus = int_0^inf t^p phi(t) dt, minus = int_0^inf t^p phi(-t) dt, p = n(k+1)/2k - 1."""
    p = n * (k + 1) / (2 * k) - 1
    return Tnk(n, k, half_line_moment(tf, p, +1), half_line_moment(tf, p, -1))


# ---------------------------------------------------------------- detection

class SpectralProbe:
    """gamma at arbitrary E for a fixed ladder of spectra and a tuple of test functions."""

    def __init__(self, eigensets, tfs):
        self.eigensets = sorted(eigensets, key=lambda es: -es.hbar)
        self.tfs = tuple(tfs)

    @property
    def hbar_min(self) -> float:
        return self.eigensets[-1].hbar

    @property
    def window(self):
        return self.eigensets[0].window

    def samples(self, E: float) -> list[list[GammaSample]]:
        return [[gamma(es, tf, E) for es in self.eigensets] for tf in self.tfs]

    def sweep(self, energies) -> list[list[GammaSample]]:
        """One flat table per test function, ordered by (E, descending hbar)."""
        out = [[] for _ in self.tfs]
        for E in energies:
            for i, s in enumerate(self.samples(float(E))):
                out[i].extend(s)
        return out


def energy_grid(win, hbar_min: float) -> np.ndarray:
    """Uniform grid over [E1, E2] with step at most hbar_min."""
    count = int(np.ceil((win.E2 - win.E1) / hbar_min)) + 1
    return np.linspace(win.E1, win.E2, max(count, 2))


def _by_energy(samples: list[GammaSample]) -> dict[float, list[GammaSample]]:
    groups: dict[float, list[GammaSample]] = {}
    for g in samples:
        groups.setdefault(g.E, []).append(g)
    return groups


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    clipped: bool           # touches an end of the energy grid
    minima: tuple           # energies of prominent decay-slope minima inside the band


@dataclass(frozen=True)
class Detection:
    energies: np.ndarray
    slopes: np.ndarray      # smallest decay slope over the test functions, inf where fast
    bands: tuple
    candidates: tuple


def _slope_profile(groups, scales, energies) -> np.ndarray:
    out = np.empty(len(energies))
    for i, E in enumerate(energies):
        reps = [classify_regular(g[E], scale=s) for g, s in zip(groups, scales)]
        out[i] = min(np.inf if r.is_fast_decay else r.slope for r in reps)
    return out


def detect_critical_energies(sweeps, probe: SpectralProbe | None = None, hbar_min: float | None = None,
                             prominence: float = 1.0, depth: float = 1.0) -> Detection:
    """Critical-energy candidates from a sweep of gamma over an energy grid.

    `sweeps` holds one sample table per test function; an energy is singular when
    any member fails the fast-decay test, so a parity pair covers the blind spots
    of either member.  Singular runs are merged into bands whose edges are bisected
    against the same predicate down to hbar_min / 2 (needs `probe`).  On a finite
    ladder a band can cover several critical values, so candidates are the minima
    of the decay slope inside each band that reach below `depth` and stand out by
    `prominence`; a band clipped by the grid end without such a minimum is the tail
    of a critical value outside [E1, E2] and yields nothing.  The exponent at an
    extremum is n(1/k - 1)/2 <= 0, so a band whose slope never reaches `depth` is
    a pre-asymptotic tail too, however it fragments.
    """
    from scipy.signal import find_peaks

    if sweeps and isinstance(sweeps[0], GammaSample):
        sweeps = [sweeps]
    groups = [_by_energy(s) for s in sweeps]
    scales = [max((abs(g.value) for g in s), default=0.0) for s in sweeps]
    energies = np.array(sorted(groups[0]))
    if energies.size == 0:
        return Detection(energies, energies.copy(), (), ())
    hbar_min = hbar_min or min(g.hbar for g in sweeps[0])
    slopes = _slope_profile(groups, scales, energies)
    singular = np.isfinite(slopes) & (slopes < 4.0)

    def singular_at(E):
        fresh = [_by_energy(s) for s in probe.sweep([E])]
        return bool(_slope_profile(fresh, scales, [E])[0] < 4.0)

    def edge(fast, slow):
        while abs(slow - fast) > hbar_min / 2:
            mid = 0.5 * (fast + slow)
            if singular_at(mid):
                slow = mid
            else:
                fast = mid
        return slow

    # prominence is measured on the profile with fast energies capped at the threshold
    capped = np.where(singular, slopes, 4.0)
    peaks, _ = find_peaks(-capped, prominence=prominence)
    peaks = [i for i in peaks if capped[i] <= depth]

    bands, candidates = [], []
    i = 0
    while i < energies.size:
        if not singular[i]:
            i += 1
            continue
        j = i
        while j + 1 < energies.size and singular[j + 1]:
            j += 1
        lo, hi = float(energies[i]), float(energies[j])
        if probe is not None:
            if i > 0:
                lo = edge(float(energies[i - 1]), lo)
            if j + 1 < energies.size:
                hi = edge(float(energies[j + 1]), hi)
        inside = tuple(float(energies[p]) for p in peaks if i <= p <= j)
        clipped = i == 0 or j == energies.size - 1
        bands.append(Band(lo, hi, clipped, inside))
        if inside:
            candidates.extend(inside)
        elif not clipped and slopes[i:j + 1].min() <= depth:
            candidates.append(0.5 * (lo + hi))
        i = j + 1
    return Detection(energies, slopes, tuple(bands), tuple(candidates))


# ---------------------------------------------------------------- refinement by scaling collapse

def _collapse_curves(eigensets, tf: TestFunction, E: float, u: np.ndarray) -> np.ndarray:
    rows = []
    for es in eigensets:
        s = (es.values[None, :] - (E + u[:, None] * es.hbar)) / es.hbar
        rows.append(-np.sum(tf.derivative(s), axis=1))     # hbar * d gamma / dE
    return np.array(rows)


def collapse_mismatch(eigensets, tf: TestFunction, E: float, span: float = 4.0, points: int = 41):
    """How badly hbar^(-alpha) hbar dgamma/dE at E + u hbar fails to collapse across hbar.

    Near a critical value gamma(E_c + u hbar) ~ hbar^alpha F(u) (plus a log term
    that the derivative removes), so the curves coincide only at E = E_c.  Returns
    (relative mismatch, best alpha).
    """
    from scipy.optimize import minimize_scalar

    u = np.linspace(-span, span, points)
    D = _collapse_curves(eigensets, tf, E, u)
    lh = np.log([es.hbar for es in eigensets])

    def mismatch(alpha):
        S = D * np.exp(-alpha * lh)[:, None]
        return float(np.sum(np.abs(S[1:] - S[:-1]) ** 2) / np.sum(np.abs(S) ** 2))

    res = minimize_scalar(mismatch, bounds=(-1.5, 1.5), method="bounded", options={"xatol": 1e-6})
    return float(res.fun), float(res.x)


@dataclass(frozen=True)
class Refinement:
    E_c: float
    alpha: float
    mismatch: float


def refine_critical_energy(eigensets, tf: TestFunction, E0: float, halfwidth: float,
                           rungs: int = 6) -> Refinement:
    """Minimise the collapse mismatch over [E0 - halfwidth, E0 + halfwidth].

    Only the `rungs` smallest hbar enter; the top of the ladder is furthest from
    the asymptotic regime.
    """
    from scipy.optimize import minimize_scalar

    ess = sorted(eigensets, key=lambda es: -es.hbar)[-rungs:]
    h = ess[-1].hbar
    win = ess[0].window
    lo, hi = max(E0 - halfwidth, win.E1), min(E0 + halfwidth, win.E2)
    grid = np.arange(lo, hi + 1e-12, h / 4)
    scores = [collapse_mismatch(ess, tf, E)[0] for E in grid]
    b = int(np.argmin(scores))
    a, c = grid[max(b - 1, 0)], grid[min(b + 1, grid.size - 1)]
    res = minimize_scalar(lambda E: collapse_mismatch(ess, tf, E)[0], bounds=(a, c), method="bounded",
                          options={"xatol": h * 1e-3})
    E_c = float(res.x) if res.fun <= scores[b] else float(grid[b])
    f, alpha = collapse_mismatch(ess, tf, E_c)
    return Refinement(E_c, alpha, f)


# ---------------------------------------------------------------- inversion

class InversionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProbeFit:
    """A test function, its gamma samples at E_c over the ladder, and the order fit (None if it failed)."""
    label: str
    tf: TestFunction
    samples: list
    fit: OrderFit | None
    note: str = ""

    def pinned_coefficient(self, alpha: float, log: bool = False) -> complex:
        """C with the exponent held at alpha: gamma hbar^(-alpha) at the smallest hbar."""
        g = min(self.samples, key=lambda s: s.hbar)
        scale = g.hbar ** -alpha / (np.log(1 / g.hbar) if log else 1.0)
        return complex(g.value * scale)


def probe_fit(label: str, tf: TestFunction, samples: list[GammaSample]) -> ProbeFit:
    try:
        return ProbeFit(label, tf, samples, fit_order(samples))
    except FitError as exc:
        return ProbeFit(label, tf, samples, None, str(exc))


def exponent_of(n: int, k: int) -> float:
    return n / 2 + n / (2 * k) - n


def degree_from_exponent(n: int, alpha: float) -> tuple[int, float]:
    if not 2 * alpha + n > 0:
        raise InversionError(f"exponent inconsistent with a sign-definite extremum: 2 alpha + n = {2 * alpha + n:.3g} <= 0")
    raw = n / (2 * alpha + n)
    return max(int(round(raw)), 1), float(raw)


def log_case(n: int, k: int) -> bool:
    e = n * (k + 1) / (2 * k)
    return n % 2 == 1 and abs(e - round(e)) < 1e-12


# calibration ---------------------------------------------------------------

@dataclass
class CalibrationTable:
    """Universal maximum-case constants keyed by (n, k), with the probe they were measured with."""
    entries: dict = field(default_factory=dict)

    @staticmethod
    def key(n: int, k: int) -> str:
        return f"{n},{k}"

    def get(self, n: int, k: int) -> dict | None:
        return self.entries.get(self.key(n, k))

    def put(self, n: int, k: int, entry: dict) -> None:
        self.entries = {**self.entries, self.key(n, k): dict(entry)}

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps({"schema": SCHEMA_VERSION, "entries": self.entries}, indent=2, sort_keys=True) + "\n")
        tmp.replace(path)

    @classmethod
    def load(cls, path) -> "CalibrationTable":
        data = json.loads(Path(path).read_text())
        return cls(dict(data.get("entries", {})))


def log_slope(samples: list[GammaSample]) -> tuple[complex, complex]:
    """gamma = a log(1/hbar) + b by least squares over the ladder; returns (a, b)."""
    h = np.array([g.hbar for g in samples])
    v = np.array([g.value for g in samples], dtype=complex)
    X = np.column_stack([np.log(1 / h), np.ones_like(h)])
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    return complex(coef[0]), complex(coef[1])


def max_functional(n: int, k: int, tf: TestFunction) -> complex:
    """S(S^{n-1}) / (2 pi)^n (T+ + T-): the phi-dependence of the maximum's log coefficient."""
    t = tnk_functional(n, k, tf)
    return sphere_area(n) / (2 * np.pi) ** n * (t.plus + t.minus)


def calibrate_max_constant(n: int, k: int, log_probe: ProbeFit, A_known: float,
                           table: CalibrationTable | None = None, source: str = "") -> float:
    """Universal constant of the maximum's log term from a run with known spherical average.

    constant = a / (A_known * S / (2 pi)^n * (T+ + T-)) with a the log(1/hbar) slope of gamma.
    """
    if not log_case(n, k):
        raise InversionError(f"only the log case is calibrated here; (n, k) = ({n}, {k}) is not one")
    fit = log_probe.fit
    if fit is None or fit.ambiguous or fit.m != 1:
        raise InversionError("reference run does not show an unambiguous log signature; calibration refused")
    a, _ = log_slope(log_probe.samples)
    const = float((a / (A_known * max_functional(n, k, log_probe.tf))).real)
    if table is not None:
        table.put(n, k, {"log": const, "M": log_probe.tf.M, "j0": log_probe.tf.j0,
                         "shape": log_probe.tf.shape, "ladder": [fit.ladder.hbar_max, fit.ladder.rho,
                                                                 fit.ladder.count], "source": source})
    return const


# report --------------------------------------------------------------------

@dataclass
class SingularityReport:
    E_c: float
    n: int
    alpha: float
    m: int
    k: int
    k_raw: float
    kind: str                       # minimum, maximum or ambiguous
    A: float | None
    up_to_constant: bool
    coefficients: dict              # label -> {"C": [re, im], "alpha": .., "m": .., ...}
    model_residuals: dict
    multi_point: bool = False
    notes: list = field(default_factory=list)
    truth: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _lsq_scale(C: np.ndarray, P: np.ndarray) -> tuple[float, float]:
    """Real A minimising |C - A P|; returns (A, |C - A P| / |C|)."""
    den = float(np.sum(np.abs(P) ** 2))
    if den == 0 or not np.any(C):
        return float("nan"), float("inf")
    A = float(np.real(np.vdot(P, C)) / den)
    return A, float(np.linalg.norm(C - A * P) / np.linalg.norm(C))


def invert_singularity(E_c: float, pair: list[ProbeFit], n: int, alpha: float,
                       log_probe: ProbeFit | None = None, calibration: CalibrationTable | None = None,
                       tol: float = 0.20) -> SingularityReport:
    """Degree, class and spherical average of the critical point(s) at E_c.

    k comes from alpha.  A clean log signature on the log probe means a maximum.
    Otherwise the coefficients of the parity pair, taken at the smallest hbar with
    the exponent pinned to the value k implies, are matched against the minimum
    model (predict_min_coefficient) and, when its constants are known, the
    maximum model; a model fits when one positive scale reproduces both members to
    within `tol`.  A member whose fit failed contributes its pinned coefficient
    all the same: a blind member carries the information that C vanishes.
    """
    k, k_raw = degree_from_exponent(n, alpha)
    a_k = exponent_of(n, k)
    notes = []
    coeffs = {}
    for p in pair + ([log_probe] if log_probe else []):
        f = p.fit
        coeffs[p.label] = {"C_pinned": [p.pinned_coefficient(a_k).real, p.pinned_coefficient(a_k).imag],
                           "alpha": None if f is None else f.alpha, "m": None if f is None else f.m,
                           "C_fit": None if f is None else [f.C.real, f.C.imag],
                           "residual": None if f is None else f.residual,
                           "ambiguous": None if f is None else f.ambiguous,
                           "M": p.tf.M, "j0": p.tf.j0, "shape": p.tf.shape, "note": p.note}
    if abs(k_raw - k) > 0.1:
        notes.append(f"n/(2 alpha + n) = {k_raw:.3f} is not within 0.1 of an integer")

    lf = log_probe.fit if log_probe else None
    is_log = lf is not None and lf.m == 1 and not lf.ambiguous
    m = 1 if is_log else 0
    residuals = {}
    kind, A, up_to = "ambiguous", None, False
    if is_log:
        kind = "maximum"
        if not log_case(n, k):
            notes.append(f"log signature at (n, k) = ({n}, {k}), where no log term is expected")
        a, _ = log_slope(log_probe.samples)
        base = max_functional(n, k, log_probe.tf)
        coeffs[log_probe.label]["log_slope"] = [a.real, a.imag]
        entry = calibration.get(n, k) if calibration else None
        if entry is not None:
            if abs(entry.get("M", log_probe.tf.M) - log_probe.tf.M) > 1e-12:
                notes.append(f"calibration measured with M={entry['M']}, log probe has M={log_probe.tf.M}")
            A = float((a / (entry["log"] * base)).real)
        else:
            A = float((a / base).real)
            up_to = True
    else:
        C = np.array([p.pinned_coefficient(a_k) for p in pair])
        P = np.array([predict_min_coefficient(n, k, p.tf, 1.0) for p in pair])
        A_min, r_min = _lsq_scale(C, P)
        residuals["minimum"] = r_min
        A_max, r_max = float("nan"), float("inf")
        entry = calibration.get(n, k) if calibration else None
        T = [tnk_functional(n, k, p.tf) for p in pair]
        S = sphere_area(n) / (2 * np.pi) ** n
        if entry is not None and "plus" in entry:
            Q = np.array([S * (entry["plus"] * t.plus + entry["minus"] * t.minus) for t in T])
            A_max, r_max = _lsq_scale(C, Q)
        elif n % 2 == 0:
            Q = np.array([S * t.minus for t in T])       # shape only: the constant is unknown
            A_max, r_max = _lsq_scale(C, Q)
            up_to = True
        residuals["maximum"] = r_max
        ok_min = r_min <= tol and A_min > 0
        ok_max = r_max <= tol and A_max > 0
        if ok_min and (not ok_max or r_min <= r_max):
            kind, A, up_to = "minimum", A_min, False
        elif ok_max:
            kind, A = "maximum", A_max
        else:
            up_to = False
            notes.append("neither model reproduces the parity-pair coefficients")
    return SingularityReport(E_c=float(E_c), n=n, alpha=float(alpha), m=m, k=k, k_raw=k_raw, kind=kind,
                             A=A, up_to_constant=up_to, coefficients=coeffs, model_residuals=residuals,
                             notes=notes)


# ---------------------------------------------------------------- blind pipeline

def infer_dimension(eigensets) -> int:
    """n from the growth of the level count, N ~ hbar^(-n)."""
    h = np.array([es.hbar for es in eigensets])
    N = np.array([max(len(es), 1) for es in eigensets], dtype=float)
    if h.size < 2:
        raise ValueError("need at least two spectra")
    slope = np.polyfit(np.log(h), np.log(N), 1)[0]
    return max(int(round(-slope)), 1)


@dataclass(frozen=True)
class ProbeSettings:
    detect_M: float
    detect_j0: int = 3
    invert_M: float = 0.45
    invert_j0: int = 0
    log_M: float = 0.2
    confirm: float = 0.01       # largest collapse mismatch accepted for a candidate


@dataclass(frozen=True, eq=False)
class Analysis:
    n: int
    detection: Detection
    refinements: tuple          # (candidate, Refinement, accepted)
    reports: tuple
    sweeps: tuple               # detection-pair sample tables
    fits: tuple                 # (E_c, label, OrderFit | None)


def analyze_spectra(eigensets, settings: ProbeSettings, calibration: CalibrationTable | None = None,
                    n: int | None = None) -> Analysis:
    """Detection, refinement and inversion from spectra alone."""
    ess = sorted(eigensets, key=lambda es: -es.hbar)
    n = n or infer_dimension(ess)
    det_pair = parity_pair(settings.detect_M, settings.detect_j0)
    probe = SpectralProbe(ess, det_pair)
    sweeps = probe.sweep(energy_grid(probe.window, probe.hbar_min))
    detection = detect_critical_energies(sweeps, probe)

    inv_pair = parity_pair(settings.invert_M, settings.invert_j0)
    log_tf = build_test_function(settings.log_M, 0, "standard-even")
    h = probe.hbar_min
    refinements, accepted = [], []
    for c in detection.candidates:
        r = refine_critical_energy(ess, inv_pair[1], c, 8 * h)
        ok = r.mismatch <= settings.confirm and all(abs(r.E_c - e.E_c) > h for e in accepted)
        refinements.append((c, r, ok))
        if ok:
            accepted.append(r)
    reports, fits = [], []
    for r in accepted:
        pair = [probe_fit(lab, tf, [gamma(es, tf, r.E_c) for es in ess])
                for lab, tf in zip(("even", "odd"), inv_pair)]
        log_p = probe_fit("log", log_tf, [gamma(es, log_tf, r.E_c) for es in ess])
        for p in pair + [log_p]:
            fits.append((r.E_c, p.label, p.fit))
        try:
            rep = invert_singularity(r.E_c, pair, n, r.alpha, log_p, calibration)
        except InversionError as exc:
            rep = SingularityReport(r.E_c, n, r.alpha, 0, 0, float("nan"), "ambiguous", None, False, {}, {},
                                    notes=[str(exc)])
        rep.notes.append(f"collapse mismatch {r.mismatch:.2e}")
        reports.append(rep)
    return Analysis(n, detection, tuple(refinements), tuple(reports), tuple(sweeps), tuple(fits))


# ---------------------------------------------------------------- ground truth (validation only)

def ground_truth(pot, critical_points, E: float, tol: float) -> dict | None:
    """Germ analysis of the critical points with |E_c - E| <= tol, for comparison with a report."""
    from .potential import extract_germ, resolve_kind, spherical_average

    near = [resolve_kind(pot, cp) for cp in critical_points if abs(cp.E_c - E) <= tol]
    if not near:
        return None
    germs = [extract_germ(pot, cp) for cp in near]
    kinds = sorted({cp.kind for cp in near})
    ks = sorted({g.k for g in germs})
    return {"E_c": float(np.mean([cp.E_c for cp in near])), "points": len(near),
            "x0": [cp.x0.tolist() for cp in near], "kind": kinds[0] if len(kinds) == 1 else "mixed",
            "k": ks[0] if len(ks) == 1 else ks, "A_each": [spherical_average(g) for g in germs],
            "A": float(sum(spherical_average(g) for g in germs))}


def multi_point(critical_points, E: float, tol: float) -> bool:
    """True when two or more critical points share the level E (within tol)."""
    return sum(abs(cp.E_c - E) <= tol for cp in critical_points) >= 2
