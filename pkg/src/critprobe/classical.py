"""Hamiltonian flow of p = xi^2 + V and the period lower bound 2 pi / a."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .potential import CriticalPoint, Potential
from .quantum import Window

# fourth-order composition of three leapfrog substeps
_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 / (2.0 - _CBRT2)


class DriftError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if self.x.shape != self.xi.shape:
            raise ValueError("position and momentum must have the same dimension")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point must be finite")


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    x: np.ndarray   # (steps + 1, n)
    xi: np.ndarray
    exited: bool
    drift: float

    def to_csv(self, path, comments: list[str] | None = None) -> None:
        n = self.x.shape[1]
        head = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)]
        lines = [f"# {c}" for c in comments or []] + [",".join(head)]
        for row in np.column_stack([self.t, self.x, self.xi]):
            lines.append(",".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n")


def energy(pot: Potential, x, xi) -> np.ndarray:
    return np.sum(np.asarray(xi) ** 2, axis=-1) + pot.V(x)


def leapfrog_step(pot: Potential, x, xi, dt):
    """Kick-drift-kick for x' = 2 xi, xi' = -grad V."""
    xi = xi - 0.5 * dt * pot.grad(x)
    x = x + 2.0 * dt * xi
    xi = xi - 0.5 * dt * pot.grad(x)
    return x, xi


def step(pot: Potential, x, xi, dt, order: int = 4):
    if order == 2:
        return leapfrog_step(pot, x, xi, dt)
    for w in (_W1, _W0, _W1):
        x, xi = leapfrog_step(pot, x, xi, w * dt)
    return x, xi


def _integrate(pot, x, xi, dt, steps, order):
    """Batched integration; x, xi of shape (batch, n).  Returns arrays (steps+1, batch, n)."""
    xs = np.empty((steps + 1,) + x.shape)
    xis = np.empty_like(xs)
    xs[0], xis[0] = x, xi
    for i in range(steps):
        x, xi = step(pot, x, xi, dt, order)
        xs[i + 1], xis[i + 1] = x, xi
    return xs, xis


def flow(pot: Potential, z0: PhasePoint, t: float, dt: float, order: int = 4,
         max_drift: float = 1e-6) -> Trajectory:
    """Integrate from z0 for time t (negative runs backwards).

    The default integrator composes three leapfrog substeps into a fourth-order
    symplectic step; order=2 gives plain leapfrog.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    steps = int(np.ceil(abs(t) / dt))
    h = np.sign(t) * abs(t) / steps if steps else 0.0
    x, xi = z0.x[None, :], z0.xi[None, :]
    p0 = float(energy(pot, x, xi)[0])
    ts, xs, xis = [0.0], [z0.x.copy()], [z0.xi.copy()]
    exited = False
    for i in range(steps):
        x, xi = step(pot, x, xi, h, order)
        if np.abs(x).max() > pot.L:
            exited = True
            break
        ts.append((i + 1) * h)
        xs.append(x[0].copy())
        xis.append(xi[0].copy())
    X, XI = np.array(xs), np.array(xis)
    drift = float(np.abs(energy(pot, X, XI) - p0).max() / (1 + abs(p0)))
    if drift > max_drift:
        raise DriftError(f"energy drift {drift:.2e} exceeds {max_drift:g}; reduce dt")
    return Trajectory(np.array(ts), X, XI, exited, drift)


@dataclass(frozen=True)
class PeriodBound:
    a: float
    T: float
    b: float
    region: dict


def _region_samples(pot: Potential, samples: int) -> np.ndarray:
    if pot.n == 1:
        return np.linspace(-pot.L, pot.L, samples)[:, None]
    per_axis = max(int(np.sqrt(samples)), 3)
    s = np.linspace(-pot.L, pot.L, per_axis)
    X, Y = np.meshgrid(s, s, indexing="ij")
    return np.stack([X, Y], axis=-1).reshape(-1, 2)


def period_bound(pot: Potential, win: Window, samples: int = 40001) -> PeriodBound:
    """a = max(2, b) with b the sup of ||d2V|| over {V <= E2 + eps}; T = 2 pi / a.

    The sampled sup is inflated by 5% of the sampled spread of ||d2V||, which
    guards the gaps between samples and leaves a constant Hessian untouched.
    """
    pts = _region_samples(pot, samples)
    inside = pot.V(pts) <= win.hi
    if not inside.any():
        raise ValueError(f"no point of the box has V <= {win.hi:g}: empty energy region")
    H = pot.hess(pts[inside])
    norms = np.abs(np.linalg.eigvalsh(H)).max(axis=-1)
    b = float(norms.max() + 0.05 * (norms.max() - norms.min()))
    a = max(2.0, b)
    sel = pts[inside]
    region = {"E_max": win.hi, "samples": int(pts.shape[0]), "inside": int(inside.sum()),
              "lower": sel.min(axis=0).tolist(), "upper": sel.max(axis=0).tolist()}
    return PeriodBound(a=a, T=2 * np.pi / a, b=b, region=region)


def linearized_periods(cp: CriticalPoint) -> list[float]:
    """T_i = 2 pi / sqrt(2 mu_i) at a nondegenerate minimum, else []."""
    if cp.kind != "minimum" or cp.degenerate or np.any(cp.mu <= 0):
        return []
    return sorted(float(2 * np.pi / np.sqrt(2 * m)) for m in cp.mu)


@dataclass(frozen=True)
class OrbitSearch:
    shortest: float
    periods: tuple      # (period, energy, seed position) triples
    seeds: int
    t_max: float


def _hermite_root(t0, t1, f0, f1, d0, d1):
    h = t1 - t0

    def cubic(t):
        s = (t - t0) / h
        h00, h10 = 2 * s ** 3 - 3 * s ** 2 + 1, s ** 3 - 2 * s ** 2 + s
        h01, h11 = -2 * s ** 3 + 3 * s ** 2, s ** 3 - s ** 2
        return h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1

    return brentq(cubic, t0, t1, xtol=1e-15)


def _turning_points(pot: Potential, E: float, grid: np.ndarray) -> list[float]:
    v = pot.V(grid[:, None]) - E
    out = []
    for i in np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]:
        out.append(brentq(lambda s: float(pot.V(np.array([s]))) - E, grid[i], grid[i + 1], xtol=1e-15))
    return out


def _closest_return(pot, x, xi, x0, dt, scale):
    """Minimise the distance back to (x0, 0) over one sub-step around a sample."""
    def gap(tau):
        y, eta = step(pot, x[None, :], xi[None, :], tau)
        return float(np.sqrt(np.sum((y[0] - x0) ** 2) + np.sum(eta[0] ** 2)) / scale)

    res = minimize_scalar(gap, bounds=(-dt, dt), method="bounded", options={"xatol": 1e-14})
    return float(res.x), float(res.fun)


def shortest_period(pot: Potential, win: Window, bound: PeriodBound | None = None,
                    energies: int = 12, directions: int = 16, dt: float | None = None,
                    t_max: float | None = None) -> OrbitSearch:
    """Shooting search for the shortest closed orbit with energy in J(eps).

    n=1: every bounded orbit closes; seeds sit at turning points (xi = 0) and the
    period is the time of the second zero of xi.  n=2: seeds (x0, 0) on rays;
    an orbit counts as closed when the phase-space distance back to the seed has
    a local minimum below 1e-6 of the orbit scale.
    """
    bound = bound or period_bound(pot, win)
    dt = dt or bound.T / 2000
    t_max = t_max or 20 * bound.T
    steps = int(np.ceil(t_max / dt))
    vmin = pot.grid_min()
    Es = np.linspace(max(win.lo, vmin), win.hi, energies + 2)[1:-1]
    seeds, seed_E = [], []
    if pot.n == 1:
        grid = np.linspace(-pot.L, pot.L, 4001)
        for E in Es:
            for x0 in _turning_points(pot, E, grid):
                if np.abs(pot.grad(np.array([x0]))).max() > 1e-8:
                    seeds.append([x0])
                    seed_E.append(E)
    else:
        theta = 2 * np.pi * np.arange(directions) / directions
        r = np.linspace(0, pot.L, 4001)
        for E in Es:
            for th in theta:
                eta = np.array([np.cos(th), np.sin(th)])
                v = pot.V(r[:, None] * eta) - E
                cross = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
                if cross.size:
                    i = cross[0]
                    rr = brentq(lambda s: float(pot.V(s * eta)) - E, r[i], r[i + 1], xtol=1e-15)
                    seeds.append(rr * eta)
                    seed_E.append(E)
    if not seeds:
        return OrbitSearch(np.inf, (), 0, t_max)
    X0 = np.array(seeds, dtype=float)
    XI0 = np.zeros_like(X0)
    xs, xis = _integrate(pot, X0, XI0, dt, steps, 4)
    t = dt * np.arange(steps + 1)
    found = []
    for j in range(X0.shape[0]):
        x, xi = xs[:, j], xis[:, j]
        if pot.n == 1:
            f = xi[:, 0]
            d = -pot.grad(x)[:, 0]
            nz = np.nonzero(f[1:-1] * f[2:] < 0)[0] + 1
            if nz.size >= 2:
                i = nz[1]
                found.append((_hermite_root(t[i], t[i + 1], f[i], f[i + 1], d[i], d[i + 1]),
                              seed_E[j], tuple(X0[j])))
        else:
            scale = np.abs(X0[j]).max() + np.sqrt(seed_E[j] - vmin + 1e-300)
            dist = np.sqrt(np.sum((x - X0[j]) ** 2, axis=1) + np.sum(xi ** 2, axis=1)) / scale
            inner = np.nonzero((dist[1:-1] < dist[:-2]) & (dist[1:-1] <= dist[2:])
                               & (dist[1:-1] < 0.05))[0] + 1
            for i in inner[t[inner] > 10 * dt]:
                tau, gap = _closest_return(pot, x[i], xi[i], X0[j], dt, scale)
                if gap < 1e-6:
                    found.append((t[i] + tau, seed_E[j], tuple(X0[j])))
                    break
    shortest = min((f[0] for f in found), default=np.inf)
    return OrbitSearch(float(shortest), tuple(found), X0.shape[0], t_max)


def auto_support(pot: Potential, win: Window, critical_points=(), factor: float = 0.9) -> tuple[float, dict]:
    """Fourier support for an admissible test function: factor * min(T_orbit, T_i).

    T_orbit is the shortest closed orbit found by shooting, or the Lipschitz
    bound 2 pi / a when the search finds none; it is never below 2 pi / a.
    """
    bound = period_bound(pot, win)
    search = shortest_period(pot, win, bound)
    T_orbit = max(search.shortest, bound.T) if np.isfinite(search.shortest) else bound.T
    Ti = [p for cp in critical_points for p in linearized_periods(cp)]
    T = min([T_orbit] + Ti)
    return factor * T, {"T_lipschitz": bound.T, "T_orbit": T_orbit, "T_linearized": Ti, "T": T}
