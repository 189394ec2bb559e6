"""Polynomial potentials, their critical points and homogeneous germs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb, gamma as gamma_fn
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

Terms = tuple[tuple[tuple[int, ...], float], ...]


def _eval_terms(terms: Terms, x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[:-1])
    for exps, c in terms:
        mono = np.full(x.shape[:-1], c, dtype=float)
        for i, e in enumerate(exps):
            if e:
                mono = mono * x[..., i] ** e
        out = out + mono
    return out


def _diff_terms(terms: Terms, i: int) -> Terms:
    out = []
    for exps, c in terms:
        if exps[i]:
            e = list(exps)
            e[i] -= 1
            out.append((tuple(e), c * exps[i]))
    return tuple(out)


def _shift_terms(terms: Terms, x0: np.ndarray) -> Terms:
    """Re-expand sum c x^e about x0 in powers of y = x - x0, constant dropped."""
    acc: dict[tuple[int, ...], float] = {}
    for exps, c in terms:
        parts = [[(a, comb(e, a) * x0[i] ** (e - a)) for a in range(e + 1)]
                 for i, e in enumerate(exps)]
        for combo in np.ndindex(*[len(p) for p in parts]):
            key = tuple(parts[i][j][0] for i, j in enumerate(combo))
            coef = c
            for i, j in enumerate(combo):
                coef *= parts[i][j][1]
            acc[key] = acc.get(key, 0.0) + coef
    return tuple((k, v) for k, v in sorted(acc.items()) if any(k) and v != 0.0)


@dataclass(frozen=True, eq=False)
class Potential:
    """V on the box [-L, L]^n.  Evaluators take arrays of shape (..., n)."""

    n: int
    L: float
    label: str
    terms: Terms
    _grad: tuple = field(repr=False, default=())
    _hess: tuple = field(repr=False, default=())

    def __post_init__(self):
        grad = tuple(_diff_terms(self.terms, i) for i in range(self.n))
        hess = tuple(tuple(_diff_terms(g, j) for j in range(self.n)) for g in grad)
        object.__setattr__(self, "_grad", grad)
        object.__setattr__(self, "_hess", hess)

    def V(self, x) -> np.ndarray:
        return _eval_terms(self.terms, np.asarray(x, dtype=float))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([_eval_terms(g, x) for g in self._grad], axis=-1)

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rows = [np.stack([_eval_terms(h, x) for h in row], axis=-1) for row in self._hess]
        return np.stack(rows, axis=-2)

    def local(self, x0) -> Callable[[np.ndarray], np.ndarray]:
        """y -> V(x0 + y) - V(x0), expanded exactly so small y loses no digits."""
        shifted = _shift_terms(self.terms, np.asarray(x0, dtype=float))
        return lambda y: _eval_terms(shifted, np.asarray(y, dtype=float))

    def with_box(self, L: float) -> "Potential":
        return Potential(self.n, float(L), self.label, self.terms)

    def boundary_min(self, samples: int = 2001) -> float:
        """inf of V over the boundary of the box (sampled)."""
        if self.n == 1:
            return float(min(self.V(np.array([[-self.L], [self.L]]))))
        s = np.linspace(-self.L, self.L, samples)
        edges = []
        for side in (-self.L, self.L):
            edges.append(np.column_stack([np.full_like(s, side), s]))
            edges.append(np.column_stack([s, np.full_like(s, side)]))
        return float(min(self.V(e).min() for e in edges))

    def grid_min(self, samples: int = 2001) -> float:
        s = np.linspace(-self.L, self.L, samples if self.n == 1 else min(samples, 801))
        if self.n == 1:
            return float(self.V(s[:, None]).min())
        X, Y = np.meshgrid(s, s, indexing="ij")
        return float(self.V(np.stack([X, Y], axis=-1)).min())


def polynomial(terms, n: int, L: float, label: str = "polynomial") -> Potential:
    clean = []
    for exps, c in terms:
        exps = tuple(int(e) for e in np.atleast_1d(exps))
        if len(exps) != n or min(exps) < 0:
            raise ValueError(f"exponent tuple {exps} does not match dimension {n}")
        clean.append((exps, float(c)))
    return Potential(n=n, L=float(L), label=label, terms=tuple(clean))


def load_polynomial(path, L: float, label: str | None = None) -> Potential:
    """Read lines `e1 ... en coefficient`; blank lines and # comments skipped."""
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        rows.append((tuple(int(p) for p in parts[:-1]), float(parts[-1])))
    if not rows:
        raise ValueError(f"{path}: no polynomial terms")
    n = len(rows[0][0])
    return polynomial(rows, n, L, label or Path(path).stem)


def harmonic(c: float = 1.0, n: int = 1, L: float | None = None) -> Potential:
    terms = [(tuple(2 if j == i else 0 for j in range(n)), c) for i in range(n)]
    return polynomial(terms, n, L or 5.0, f"harmonic(c={c:g},n={n})")


def quartic(c: float = 1.0, L: float | None = None) -> Potential:
    return polynomial([((4,), c)], 1, L or 3.0, f"quartic(c={c:g})")


def double_well(L: float | None = None) -> Potential:
    return polynomial([((4,), 1.0), ((2,), -2.0), ((0,), 1.0)], 1, L or 3.0, "double_well")


def anisotropic(c1: float = 1.0, c2: float = 2.0, L: float | None = None) -> Potential:
    return polynomial([((2, 0), c1), ((0, 2), c2)], 2, L or 4.0,
                      f"anisotropic(c1={c1:g},c2={c2:g})")


def barrier(h: float = 1.0, c: float = 1.0, d: float = 0.25, L: float | None = None) -> Potential:
    """h - c x^2 + d x^4: a maximum at 0 held up by a quartic wall."""
    return polynomial([((4,), d), ((2,), -c), ((0,), h)], 1, L or 4.0,
                      f"barrier(h={h:g},c={c:g},d={d:g})")


CATALOG = {
    "harmonic": harmonic,
    "quartic": quartic,
    "double_well": double_well,
    "anisotropic": anisotropic,
    "barrier": barrier,
}


def catalog(name: str, **params) -> Potential:
    try:
        return CATALOG[name](**params)
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; known: {sorted(CATALOG)}") from None


# ---------------------------------------------------------------- critical points

@dataclass(frozen=True, eq=False)
class CriticalPoint:
    x0: np.ndarray
    E_c: float
    mu: np.ndarray
    degenerate: bool
    kind: str  # minimum | maximum | saddle | unresolved

    def __repr__(self):
        loc = np.array2string(self.x0, precision=6)
        return f"CriticalPoint(x0={loc}, E_c={self.E_c:.6g}, kind={self.kind})"


def _classify(mu: np.ndarray) -> tuple[bool, str]:
    scale = max(1.0, float(np.abs(mu).max()))
    if np.abs(mu).min() < 1e-8 * scale:
        return True, "unresolved"
    if (mu > 0).all():
        return False, "minimum"
    if (mu < 0).all():
        return False, "maximum"
    return False, "saddle"


def _newton(pot: Potential, x: np.ndarray, max_iter: int = 600):
    for _ in range(max_iter):
        g = pot.grad(x)
        if not np.any(g):
            break
        step = np.linalg.lstsq(pot.hess(x), g, rcond=None)[0]
        if not np.all(np.isfinite(step)) or not np.any(step):
            break
        size = np.linalg.norm(step)
        if size > pot.L / 2:
            step *= pot.L / 2 / size
        x = x - step
        if np.abs(x).max() > pot.L:
            return None
        if size < 1e-15 * (1 + np.linalg.norm(x)):
            break
    return x


def find_critical_points(pot: Potential, seeds_per_axis: int = 9) -> list[CriticalPoint]:
    """Newton on grad V from a uniform seed grid, merged within 1e-6 L, sorted by E_c."""
    if seeds_per_axis < 3:
        raise ValueError("seeds_per_axis must be >= 3")
    h = 2 * pot.L / seeds_per_axis
    axis = -pot.L + h * (np.arange(seeds_per_axis) + 0.5)
    seeds = np.stack(np.meshgrid(*[axis] * pot.n, indexing="ij"), axis=-1).reshape(-1, pot.n)
    radius = 1e-6 * pot.L
    found: list[np.ndarray] = []
    for s in seeds:
        x = _newton(pot, s.copy())
        if x is None:
            continue
        H = pot.hess(x)
        if np.linalg.norm(pot.grad(x)) > 1e-10 * (1 + np.linalg.norm(H, 2)):
            continue
        if any(np.linalg.norm(x - y) < radius for y in found):
            continue
        found.append(x)
    if not found:
        warnings.warn(f"{pot.label}: Newton did not converge from any seed", RuntimeWarning)
        return []
    out = []
    for x in found:
        mu = np.linalg.eigvalsh(pot.hess(x))
        degenerate, kind = _classify(mu)
        out.append(CriticalPoint(x0=x, E_c=float(pot.V(x)), mu=mu, degenerate=degenerate, kind=kind))
    out.sort(key=lambda cp: (cp.E_c, tuple(cp.x0)))
    return out


# ---------------------------------------------------------------- germs

class GermError(ValueError):
    pass


def _sphere(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.array([[-1.0], [1.0]])
    theta = 2 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(theta), np.sin(theta)])


@dataclass(frozen=True, eq=False)
class Germ:
    """Leading homogeneous part V_2k of V - E_c at x0."""

    x0: np.ndarray
    degree: int
    sign: str  # positive-definite | negative-definite
    _local: Callable = field(repr=False)
    r0: float = 0.05
    levels: int = 6

    @property
    def k(self) -> int:
        return self.degree // 2

    @property
    def n(self) -> int:
        return self.x0.size

    def __call__(self, x) -> np.ndarray:
        """Richardson limit of s^-2k (V(x0 + s x) - E_c) as s -> 0, for x of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        norm = np.linalg.norm(x, axis=-1, keepdims=True)
        norm = np.where(norm > 0, norm, 1.0)
        table = []
        for i in range(self.levels):
            s = self.r0 / norm / 2 ** i
            row = [self._local(x * s) / s[..., 0] ** self.degree]
            for j in range(1, i + 1):
                prev = table[i - 1][j - 1]
                row.append((2 ** j * row[j - 1] - prev) / (2 ** j - 1))
            table.append(row)
        return table[-1][-1]


def extract_germ(pot: Potential, cp: CriticalPoint, directions: int = 16) -> Germ:
    """Degree from the log-log slope over r in [1e-3, 1e-1], coefficients by Richardson."""
    local = pot.local(cp.x0)
    etas = _sphere(pot.n, directions)
    r = np.logspace(-3, -1, 21)
    slopes = []
    for eta in etas:
        d = np.abs(local(r[:, None] * eta))
        if np.any(d == 0):
            raise GermError(f"V - E_c vanishes along direction {eta}: non-homogeneous germ")
        slopes.append(np.polyfit(np.log(r), np.log(d), 1)[0])
    slope = float(np.mean(slopes))
    degree = 2 * int(round(slope / 2))
    if degree < 2 or abs(slope - degree) > 0.1:
        raise GermError(f"log-log slope {slope:.3f} is not within 0.1 of an even integer: "
                        "non-homogeneous germ")
    germ = Germ(x0=np.array(cp.x0, dtype=float), degree=degree, sign="", _local=local)
    vals = germ(_sphere(pot.n, 64))
    if np.all(vals > 0):
        sign = "positive-definite"
    elif np.all(vals < 0):
        sign = "negative-definite"
    else:
        raise GermError("germ changes sign over the sphere: not an extremum germ")
    return Germ(x0=germ.x0, degree=degree, sign=sign, _local=local)


def resolve_kind(pot: Potential, cp: CriticalPoint) -> CriticalPoint:
    """Settle an 'unresolved' (degenerate) point from its germ sign."""
    if cp.kind != "unresolved":
        return cp
    try:
        g = extract_germ(pot, cp)
    except GermError:
        return cp
    kind = "minimum" if g.sign == "positive-definite" else "maximum"
    return CriticalPoint(cp.x0, cp.E_c, cp.mu, cp.degenerate, kind)


def _trapezoid_circle(f: Callable[[np.ndarray], np.ndarray], nodes: int) -> float:
    vals = f(_sphere(2, nodes))
    return float(vals.sum() * 2 * np.pi / nodes)


def spherical_average(g: Germ, n: int | None = None, rtol: float = 1e-8) -> float:
    """A = int over S^{n-1} of |V_2k(eta)|^(-n/2k)."""
    n = n or g.n
    p = -n / g.degree

    def weight(eta):
        v = np.abs(g(eta))
        if np.any(v < 1e-14):
            raise GermError("germ vanishes on sphere: not definite")
        return v ** p

    if n == 1:
        return float(weight(_sphere(1, 2)).sum())
    if n != 2:
        raise ValueError("spherical_average supports n in {1, 2}")
    nodes = 4096
    prev = _trapezoid_circle(weight, nodes)
    while True:
        nodes *= 2
        cur = _trapezoid_circle(weight, nodes)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        if nodes > 2 ** 20:
            raise ArithmeticError(f"sphere quadrature did not settle: {prev} vs {cur}")
        prev = cur


def gamma_identity_check(g: Germ, n: int | None = None, cutoff: float = 40.0) -> float:
    """|LHS - RHS| / RHS for int exp(-|V_2k|) = Gamma(n/2k) A / 2k."""
    n = n or g.n
    A = spherical_average(g, n)
    rhs = gamma_fn(n / g.degree) * A / g.degree

    def f(*x):
        v = abs(float(g(np.array(x)[None, :])[0]))
        return np.exp(-v) if v <= cutoff else 0.0

    if n == 1:
        reach = [(cutoff / abs(float(g(np.array([[s]]))[0]))) ** (1 / g.degree) for s in (-1.0, 1.0)]
        parts = [integrate.quad(f, -reach[0], 0.0, epsabs=0, epsrel=1e-12, limit=200, full_output=1),
                 integrate.quad(f, 0.0, reach[1], epsabs=0, epsrel=1e-12, limit=200, full_output=1)]
        lhs = sum(p[0] for p in parts)
        err = sum(p[1] for p in parts)
    elif n == 2:
        ring = np.abs(g(_sphere(2, 720)))
        R = float((cutoff / ring.min()) ** (1 / g.degree))
        lhs, err = integrate.dblquad(lambda y, x: f(x, y), -R, R, -R, R, epsabs=1e-12, epsrel=1e-10)
    else:
        raise ValueError("gamma_identity_check supports n in {1, 2}")
    if not np.isfinite(lhs) or err > 1e-6 * abs(lhs):
        raise ArithmeticError(f"quadrature did not converge: estimate {lhs} +/- {err}")
    return abs(lhs - rhs) / rhs
