"""Admissible test functions with compactly supported, flat Fourier transforms.

Convention: phi_hat(t) = int exp(i t x) phi(x) dx, so
phi(x) = (1/2pi) int exp(-i t x) phi_hat(t) dt.

phi_hat(t) = t**(2 j0) * g(t), where g is a smooth bump supported in [-M, M].
phi is tabulated on a uniform x-grid by a zero-padded FFT.  Far from the
origin the direct transform hits the roundoff floor of the FFT (about 1e-17
of the peak) while phi keeps decaying like exp(-c sqrt(M |x|)).  Beyond a
crossover radius the tabulation switches to the transform of the q-th
derivative of phi_hat divided by (i x)**q, which is the same function after
q integrations by parts but with a roundoff floor that falls off like x**-q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy.interpolate import CubicSpline

SHAPES = ("standard-even", "odd", "shifted")
PARITY = {"standard-even": "even", "odd": "odd", "shifted": "none"}

_IBP_ORDER = 8
_CROSSOVER = 100.0   # in units of 1/M
_TRIM = 1e-30        # tabulation dropped where |phi| < _TRIM * peak
_DECAY_LEVEL = 1e-8


def _bump_derivatives(u: np.ndarray, q: int) -> list[np.ndarray]:
    """Derivatives 0..q of exp(-1/(1-u^2)), zero outside |u| < 1.

    Uses g' = h' g with h = -1/(1-u^2) = -(1/(1-u) + 1/(1+u))/2, whose
    derivatives are closed form, and Leibniz on g^(n+1) = (h' g)^(n).
    """
    inside = np.abs(u) < 1
    um = u[inside]
    a, b = 1.0 - um, 1.0 + um
    hd = [None] + [-0.5 * factorial(k) * (a ** -(k + 1) + (-1) ** k * b ** -(k + 1))
                   for k in range(1, q + 1)]
    g = [np.exp(-1.0 / (a * b))]
    for n in range(q):
        acc = np.zeros_like(um)
        for k in range(n + 1):
            acc += comb(n, k) * hd[k + 1] * g[n - k]
        g.append(acc)
    out = []
    for gk in g:
        full = np.zeros_like(u, dtype=float)
        full[inside] = gk
        out.append(full)
    return out


def _geometry(M: float, shape: str) -> tuple[float, float]:
    if shape == "shifted":
        return M / 2, M / 2
    return 0.0, M


def _prefactor(M: float, j0: int, shape: str) -> np.polynomial.Polynomial:
    p = np.polynomial.Polynomial.basis(2 * j0)
    if shape == "odd":
        p = p * np.polynomial.Polynomial([0.0, 1.0 / M])
    return p


def fhat_derivatives(t, M: float, j0: int, shape: str, q: int) -> list[np.ndarray]:
    """phi_hat and its first q derivatives at t, exactly (no differencing)."""
    t = np.asarray(t, dtype=float)
    c, w = _geometry(M, shape)
    G = _bump_derivatives((t - c) / w, q)
    P = _prefactor(M, j0, shape)
    out = []
    for d in range(q + 1):
        acc = np.zeros_like(t)
        for i in range(d + 1):
            acc += comb(d, i) * P.deriv(i)(t) * G[d - i] / w ** (d - i)
        out.append(acc)
    return out


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Tabulated admissible phi together with its exact Fourier transform."""

    __test__ = False  # keep pytest from collecting this class

    M: float
    j0: int
    shape: str
    t: np.ndarray
    fhat: np.ndarray
    x: np.ndarray
    phi: np.ndarray
    decay_radius: float
    tail_bound: float
    interp_tol: float
    _spline: CubicSpline = field(repr=False)

    @property
    def parity(self) -> str:
        return PARITY[self.shape]

    @property
    def is_complex(self) -> bool:
        return self.shape != "standard-even"

    @property
    def X(self) -> float:
        return float(self.x[-1])

    @property
    def nodes(self) -> int:
        return self.t.size

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = self._spline(s)
        return np.where(np.abs(s) <= self.X, out, 0.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        out = self._spline(s, 1)
        return np.where(np.abs(s) <= self.X, out, 0.0)

    def fhat_at(self, t):
        return fhat_derivatives(t, self.M, self.j0, self.shape, 0)[0]

    @property
    def fhat0(self) -> float:
        return float(self.fhat_at(np.array([0.0]))[0])

    def l1_norm(self) -> float:
        return float(np.abs(self.phi).sum() * self.dx)

    def moment(self, j: int) -> complex:
        return complex(np.sum(self.x ** j * self.phi) * self.dx)

    def peak(self) -> float:
        return float(np.abs(self.phi).max())

    def forward_transform(self, t) -> np.ndarray:
        """phi_hat recomputed from the phi tabulation (round-trip check)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([np.sum(np.exp(1j * tk * self.x) * self.phi) * self.dx for tk in t])

    def scaled(self, factor: complex) -> "TestFunction":
        """factor * phi, sharing the grid."""
        return _assemble(self.M, self.j0, self.shape, self.t, self.fhat * factor,
                         self.x, self.phi * factor, self.interp_tol * abs(factor))

    def combine(self, other: "TestFunction", a: complex, b: complex) -> "TestFunction":
        """a phi + b phi_other for two functions tabulated on the same grid."""
        if not (np.array_equal(self.x, other.x) and np.array_equal(self.t, other.t)):
            raise ValueError("combine needs test functions on identical grids (see parity_pair)")
        if a == 0 and b == 0:
            raise ValueError("the zero combination is not a test function")
        shape = self.shape if self.shape == other.shape else "shifted"
        return _assemble(self.M, min(self.j0, other.j0), shape, self.t, a * self.fhat + b * other.fhat, self.x,
                         a * self.phi + b * other.phi, abs(a) * self.interp_tol + abs(b) * other.interp_tol)

    def export_table(self, path) -> None:
        """Write columns x, Re phi, Im phi."""
        data = np.column_stack([self.x, self.phi.real, self.phi.imag])
        np.savetxt(path, data, fmt="%.17g", header="x re_phi im_phi")


class GridError(ValueError):
    pass


def _dft(vals, t0, dt, x, m, L, shift=0.0):
    buf = np.zeros(L, dtype=complex)
    buf[: vals.size] = vals * np.exp(-1j * np.arange(vals.size) * dt * shift) if shift else vals
    F = np.fft.fft(buf)[m % L]
    return dt / (2 * np.pi) * np.exp(-1j * t0 * (x + shift)) * F


def _assemble(M, j0, shape, t, fhat, x, phi, interp_tol) -> TestFunction:
    a = np.abs(phi)
    pk = a.max()
    loud = np.nonzero(a > _DECAY_LEVEL * pk)[0]
    decay_radius = float(max(abs(x[loud[0]]), abs(x[loud[-1]])))
    tail_bound = float(max(a[0], a[-1]))
    spline = CubicSpline(x, phi)
    return TestFunction(M=float(M), j0=int(j0), shape=shape, t=t, fhat=fhat, x=x, phi=phi,
                        decay_radius=decay_radius, tail_bound=tail_bound,
                        interp_tol=float(interp_tol), _spline=spline)


def build_test_function(M: float, j0: int = 3, shape: str = "standard-even",
                        nodes: int = 4096, padding: int = 64) -> TestFunction:
    """Build phi with phi_hat = t^(2 j0) g(t), supp g in [-M, M].

    shape: 'standard-even' (g = exp(-1/(1-(t/M)^2))), 'odd' (times t/M) or
    'shifted' (bump centred at M/2 with half-width M/2).
    """
    if not M > 0:
        raise ValueError(f"support radius must be positive, got {M}")
    if j0 < 0 or int(j0) != j0:
        raise ValueError(f"flatness order must be a non-negative integer, got {j0}")
    if shape not in SHAPES:
        raise ValueError(f"unknown bump shape {shape!r}; expected one of {SHAPES}")
    if nodes < 4096:
        raise GridError(f"at least 4096 t-nodes required, got {nodes}; increase grid")
    if padding < 8:
        raise GridError(f"zero-padding factor must be >= 8, got {padding}")

    dt = 2 * M / nodes
    t = -M + dt * (np.arange(nodes) + 0.5)
    derivs = fhat_derivatives(t, M, j0, shape, _IBP_ORDER)
    fhat = derivs[0]

    L = nodes * padding
    m = np.arange(-L // 2, L // 2)
    dx = 2 * np.pi / (L * dt)
    x = m * dx

    direct = _dft(fhat, t[0], dt, x, m, L)
    spectrum = np.abs(direct) ** 2
    edge = np.abs(x) > 0.9 * x[-1]
    if spectrum[edge].sum() > 1e-10 * spectrum.sum():
        raise GridError("aliasing: energy in last 10% of spectrum exceeds 1e-10; increase grid")

    far = np.abs(x) >= _CROSSOVER / M
    with np.errstate(divide="ignore", invalid="ignore"):
        ibp = _dft(derivs[-1], t[0], dt, x, m, L) / (1j * x) ** _IBP_ORDER
    phi = np.where(far, ibp, direct)
    if shape == "standard-even":
        phi = phi.real + 0j
    elif shape == "odd":
        phi = 1j * phi.imag

    # interpolation tolerance measured against exact values at cell midpoints
    mid = x[:-1] + dx / 2
    exact_mid = _dft(fhat, t[0], dt, x, m, L, shift=dx / 2)[:-1]
    near = np.abs(mid) < _CROSSOVER / M
    probe_spline = CubicSpline(x, phi)
    interp_tol = float(np.abs(probe_spline(mid[near]) - exact_mid[near]).max())

    pk = np.abs(phi).max()
    keep = np.nonzero(np.abs(phi) > _TRIM * pk)[0]
    half = max(abs(m[keep[0]]), abs(m[keep[-1]])) + 2
    sel = np.abs(m) <= min(half, L // 2 - 1)
    return _assemble(M, j0, shape, t, fhat, x[sel], phi[sel], interp_tol)


def parity_pair(M: float, j0: int = 3, nodes: int = 4096, padding: int = 64):
    """(even phi_hat, odd phi_hat) variants on identical grids."""
    pair = [build_test_function(M, j0, shape, nodes, padding) for shape in ("standard-even", "odd")]
    half = min(tf.X for tf in pair)
    out = []
    for tf in pair:
        sel = np.abs(tf.x) <= half * (1 + 1e-12)
        out.append(_assemble(tf.M, tf.j0, tf.shape, tf.t, tf.fhat, tf.x[sel], tf.phi[sel], tf.interp_tol))
    return tuple(out)


@dataclass(frozen=True)
class Admissibility:
    support_ok: bool
    flat_ok: bool
    max_flatness_verified: int
    moments: tuple


def moment_ratios(tf: TestFunction, jmax: int) -> list[float]:
    """|int x^j phi| / (||phi||_1 M^-j) for j = 0..jmax; 1/M is the natural length."""
    n1 = tf.l1_norm()
    return [abs(tf.moment(j)) / n1 * tf.M ** j for j in range(jmax + 1)]


def check_admissibility(tf: TestFunction, T: float, tol: float = 1e-6) -> Admissibility:
    """support_ok iff M < T; flat_ok iff moments 0..2j0-1 vanish to tol."""
    ratios = moment_ratios(tf, 2 * tf.j0 + 2)
    verified = 0
    for r in ratios:
        if r > tol:
            break
        verified += 1
    return Admissibility(support_ok=tf.M < T, flat_ok=verified >= 2 * tf.j0,
                         max_flatness_verified=verified, moments=tuple(ratios))
