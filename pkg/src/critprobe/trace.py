"""The smoothed, scaled spectral sum gamma(E, hbar, phi) and the Weyl-law control."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .potential import Potential, find_critical_points
from .quantum import EigenSet
from .testfn import TestFunction


class SpectrumTooCoarse(ArithmeticError):
    pass


@dataclass(frozen=True)
class GammaSample:
    E: float
    hbar: float
    value: complex
    count: int
    err_bound: float


def _tail_mass(tf: TestFunction, d: float, side: int) -> float:
    """int |phi| over s > d (side=+1) or s < -d (side=-1), within the tabulation."""
    outer = side * tf.x > d
    return float(np.abs(tf.phi[outer]).sum() * tf.dx)


def gamma(es: EigenSet, tf: TestFunction, E: float) -> GammaSample:
    """sum_j phi((lambda_j - E) / hbar) over the eigenvalues in the window."""
    win = es.window
    if E not in win:
        raise ValueError(f"E={E} outside [{win.E1}, {win.E2}]")
    h = es.hbar
    if len(es) and es.err.max() >= 0.1 * h:
        raise SpectrumTooCoarse(f"spectrum too coarse for this hbar: eigenvalue error "
                                f"{es.err.max():.2e} >= 0.1 hbar = {0.1 * h:.2e}")
    if not len(es):
        return GammaSample(float(E), float(h), 0j, 0, 0.0)
    s = (np.sort(es.values) - E) / h
    vals = tf(s)
    value = complex(np.sum(vals))
    m = s.size
    beyond = np.abs(s) > tf.X
    err = m * tf.interp_tol
    err += float(np.sum(np.abs(tf.derivative(s)) * es.err) / h)
    err += beyond.sum() * tf.tail_bound
    # levels outside J(eps) are not summed; bound them by the mean level density
    density = m / ((win.hi - win.lo) / h)
    err += density * _tail_mass(tf, (win.hi - E) / h, +1)
    spacing = (win.hi - win.lo) / m
    if es.values.min() - win.lo < 3 * spacing:
        err += density * _tail_mass(tf, (E - win.lo) / h, -1)
    return GammaSample(float(E), float(h), value, m, float(err))


def gamma_sweep(eigensets: list[EigenSet], tf: TestFunction, energies) -> list[GammaSample]:
    """gamma over the grid energies x hbar, ordered by (E, descending hbar)."""
    ordered = sorted(eigensets, key=lambda es: -es.hbar)
    return [gamma(es, tf, float(E)) for E in energies for es in ordered]


SWEEP_HEADER = "E,hbar,re_gamma,im_gamma,count,err_bound"


def sweep_to_csv(samples: list[GammaSample], path, comments: list[str] | None = None) -> None:
    lines = [f"# {c}" for c in comments or []] + [SWEEP_HEADER]
    for g in samples:
        lines.append(f"{g.E!r},{g.hbar!r},{g.value.real!r},{g.value.imag!r},{g.count},{g.err_bound!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def sweep_from_csv(path) -> list[GammaSample]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line == SWEEP_HEADER:
            continue
        E, h, re, im, c, e = line.split(",")
        out.append(GammaSample(float(E), float(h), complex(float(re), float(im)), int(c), float(e)))
    return out


# ---------------------------------------------------------------- Liouville volume

@dataclass(frozen=True)
class LiouvilleVolume:
    value: float
    stderr: float


class CriticalEnergyError(ValueError):
    pass


def _strip_volume(pot: Potential, E: float, grid: np.ndarray) -> float:
    """int 2 sqrt(E - V)_+ dx with exact turning points; the cosine map tames sqrt edges."""
    v = pot.V(grid[:, None]) - E
    below = v < 0
    if not below.any():
        return 0.0
    total = 0.0
    edges = np.nonzero(np.diff(below.astype(int)))[0]
    starts = [grid[0]] if below[0] else []
    ends = []
    f = lambda s: float(pot.V(np.array([s]))) - E
    for i in edges:
        root = brentq(f, grid[i], grid[i + 1], xtol=1e-15)
        (starts if not below[i] else ends).append(root)
    if below[-1]:
        ends.append(grid[-1])
    for a, b in zip(starts, ends):
        def g(theta, a=a, b=b):
            x = a + (b - a) * (1 - np.cos(theta)) / 2
            return 2 * np.sqrt(max(E - float(pot.V(np.array([x]))), 0.0)) * (b - a) * np.sin(theta) / 2
        total += integrate.quad(g, 0, np.pi, epsabs=0, epsrel=1e-13, limit=200)[0]
    return total


def liouville_volume(pot: Potential, E: float, guard: float = 0.02, critical_values=None,
                     samples: int = 10_000_000, seed: int = 0) -> LiouvilleVolume:
    """d/dE Vol{xi^2 + V <= E} by a central difference of phase-space volumes.

    n=1: strip quadrature between exact turning points.  n=2: Monte Carlo over
    the box with common samples for E +- delta (momentum integrated in closed form).
    """
    if critical_values is None:
        critical_values = [cp.E_c for cp in find_critical_points(pot)]
    near = [c for c in critical_values if abs(E - c) < guard]
    if near:
        raise CriticalEnergyError(f"regular energies only: E={E} is within {guard} of critical value {near[0]}")
    if pot.n == 1:
        delta = 1e-4 * (1 + abs(E))
        grid = np.linspace(-pot.L, pot.L, 4001)
        value = (_strip_volume(pot, E + delta, grid) - _strip_volume(pot, E - delta, grid)) / (2 * delta)
        return LiouvilleVolume(float(value), 0.0)
    if pot.n != 2:
        raise ValueError("n in {1, 2} only")
    delta = 0.25 * guard
    rng = np.random.default_rng(seed)
    box = (2 * pot.L) ** 2
    chunk = 1_000_000
    vals = []
    for start in range(0, samples, chunk):
        x = rng.uniform(-pot.L, pot.L, size=(min(chunk, samples - start), 2))
        v = pot.V(x)
        vals.append(np.pi * (np.clip(E + delta - v, 0, None) - np.clip(E - delta - v, 0, None)) / (2 * delta))
    w = np.concatenate(vals) * box
    return LiouvilleVolume(float(w.mean()), float(w.std(ddof=1) / np.sqrt(w.size)))


@dataclass(frozen=True)
class WeylReport:
    E: float
    n: int
    lvol: float
    hbars: tuple
    deviations: tuple

    @property
    def deviation(self) -> float:
        return self.deviations[int(np.argmin(self.hbars))]


def weyl_prediction(n: int, hbar: float, fhat0: float, lvol: float) -> float:
    """Leading Weyl term of gamma: (2 pi hbar)^(1-n) fhat(0) LVol / 2 pi."""
    return (2 * np.pi * hbar) ** (1 - n) * fhat0 * lvol / (2 * np.pi)


def weyl_check(eigensets: list[EigenSet], tf: TestFunction, E: float, lvol: float, n: int) -> WeylReport:
    """Relative deviation of gamma from the Weyl term at each hbar."""
    if tf.j0 != 0 or tf.fhat0 == 0:
        raise ValueError("Weyl check needs a non-flat test function (j0 = 0, fhat(0) != 0)")
    hbars, devs = [], []
    for es in sorted(eigensets, key=lambda e: -e.hbar):
        g = gamma(es, tf, E)
        pred = weyl_prediction(n, es.hbar, tf.fhat0, lvol)
        hbars.append(es.hbar)
        devs.append(float(abs(g.value / pred - 1)))
    return WeylReport(float(E), n, float(lvol), tuple(hbars), tuple(devs))
