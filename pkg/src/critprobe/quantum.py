"""Eigenvalues of -hbar^2 Laplacian + V with Dirichlet walls, inside a spectral window."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.linalg import eig_banded, eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .potential import Potential


class BoxError(ValueError):
    pass


class ResolutionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Window:
    E1: float
    E2: float
    eps: float

    def __post_init__(self):
        if not self.E1 <= self.E2:
            raise ValueError(f"window needs E1 <= E2, got {self.E1} > {self.E2}")
        if not self.eps > 0:
            raise ValueError(f"window margin must be positive, got {self.eps}")

    @classmethod
    def around(cls, E1: float, E2: float, eps: float | None = None) -> "Window":
        """Default margin: 10% of the window width (0.1 for a degenerate window)."""
        if eps is None:
            eps = 0.1 * (E2 - E1) if E2 > E1 else 0.1
        return cls(float(E1), float(E2), float(eps))

    @property
    def lo(self) -> float:
        return self.E1 - self.eps

    @property
    def hi(self) -> float:
        return self.E2 + self.eps

    def __contains__(self, E) -> bool:
        return self.E1 <= E <= self.E2


@dataclass(frozen=True, eq=False)
class EigenSet:
    hbar: float
    values: np.ndarray
    err: np.ndarray
    window: Window
    record: dict = field(default_factory=dict)

    def __len__(self):
        return self.values.size

    def shifted(self, delta: float) -> "EigenSet":
        w = Window(self.window.E1 + delta, self.window.E2 + delta, self.window.eps)
        return EigenSet(self.hbar, self.values + delta, self.err, w, dict(self.record))

    def to_csv(self, path, comments: list[str] | None = None) -> None:
        w = self.window
        lines = [f"# {c}" for c in comments or []]
        lines.append(f"# window={w.E1!r},{w.E2!r},{w.eps!r}")
        lines.append("# record=" + ";".join(f"{k}={v}" for k, v in sorted(self.record.items())))
        lines.append("hbar,lambda,err_bound")
        h = repr(float(self.hbar))
        lines += [f"{h},{float(v)!r},{float(e)!r}" for v, e in zip(self.values, self.err)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "EigenSet":
        window, record, rows, hbar = None, {}, [], None
        for line in Path(path).read_text().splitlines():
            if line.startswith("# window="):
                window = Window(*(float(v) for v in line[9:].split(",")))
            elif line.startswith("# record="):
                body = line[9:]
                record = dict(kv.split("=", 1) for kv in body.split(";") if kv)
            elif line.startswith("#") or line.startswith("hbar,"):
                continue
            elif line.strip():
                h, v, e = line.split(",")
                hbar = float(h)
                rows.append((float(v), float(e)))
        if window is None:
            raise ValueError(f"{path}: missing window line")
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        if hbar is None:
            hbar = float(record.get("hbar", "nan"))
        return cls(hbar, arr[:, 0].copy(), arr[:, 1].copy(), window, record)


def phase_volume(pot: Potential, E: float, samples: int = 20001) -> float:
    """Vol{(x, xi): xi^2 + V(x) <= E}, xi integrated in closed form."""
    if pot.n == 1:
        x = np.linspace(-pot.L, pot.L, samples)
        f = 2 * np.sqrt(np.clip(E - pot.V(x[:, None]), 0, None))
        return float(np.trapezoid(f, x))
    s = np.linspace(-pot.L, pot.L, min(samples, 1601))
    X, Y = np.meshgrid(s, s, indexing="ij")
    f = np.pi * np.clip(E - pot.V(np.stack([X, Y], axis=-1)), 0, None)
    return float(np.trapezoid(np.trapezoid(f, s, axis=1), s))


def weyl_count(pot: Potential, hbar: float, win: Window) -> float:
    return (phase_volume(pot, win.hi) - phase_volume(pot, win.lo)) / (2 * np.pi * hbar) ** pot.n


def _solve_1d(Vx: np.ndarray, h: float, hbar: float, lo: float, hi: float, order: int):
    c = hbar ** 2 / h ** 2
    N = Vx.size
    if order == 2:
        return eigh_tridiagonal(2 * c + Vx, np.full(N - 1, -c), eigvals_only=True,
                                select="v", select_range=(lo, hi))
    ab = np.zeros((3, N))
    ab[0] = 2.5 * c + Vx
    ab[1, :-1] = -c * 4 / 3
    ab[2, :-2] = c / 12
    return eig_banded(ab, lower=True, eigvals_only=True, select="v", select_range=(lo, hi))


def _laplacian_1d(m: int, h: float, order: int) -> sparse.spmatrix:
    N = m - 1
    if order == 2:
        return sparse.diags([-np.ones(N - 1), 2 * np.ones(N), -np.ones(N - 1)], [-1, 0, 1]) / h ** 2
    return sparse.diags([np.full(N - 2, 1 / 12), np.full(N - 1, -4 / 3), np.full(N, 2.5),
                         np.full(N - 1, -4 / 3), np.full(N - 2, 1 / 12)], [-2, -1, 0, 1, 2]) / h ** 2


def _solve_2d(pot: Potential, m: int, hbar: float, lo: float, hi: float, order: int):
    h = 2 * pot.L / m
    s = -pot.L + h * np.arange(1, m)
    X, Y = np.meshgrid(s, s, indexing="ij")
    Vx = pot.V(np.stack([X, Y], axis=-1)).ravel()
    D = _laplacian_1d(m, h, order)
    I = sparse.identity(m - 1)
    H = (hbar ** 2 * (sparse.kron(D, I) + sparse.kron(I, D)) + sparse.diags(Vx)).tocsc()
    if H.shape[0] <= 2500:
        vals = np.linalg.eigvalsh(H.toarray())
        return vals[(vals >= lo) & (vals <= hi)]
    guess = int(1.3 * weyl_count(pot, hbar, Window(lo, hi, 1e-12))) + 12
    k = min(guess, H.shape[0] - 2)
    while True:
        vals = np.sort(eigsh(H, k=k, sigma=lo, which="LM", return_eigenvectors=False))
        if vals[-1] >= hi or k >= H.shape[0] - 2:
            return vals[(vals >= lo) & (vals <= hi)]
        k = min(int(k * 1.5) + 10, H.shape[0] - 2)


def _match(fine: np.ndarray, coarse: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Align sorted eigenvalue lists that may differ by a few entries at the ends."""
    best = None
    for off in range(-3, 4):
        i0, j0 = max(0, -off), max(0, off)
        cnt = min(fine.size - i0, coarse.size - j0)
        if cnt <= 0:
            continue
        d = np.abs(fine[i0:i0 + cnt] - coarse[j0:j0 + cnt]).max()
        if best is None or d < best[0] or (d == best[0] and cnt > best[3]):
            best = (d, i0, j0, cnt)
    if best is None:
        return fine[:0], coarse[:0]
    _, i0, j0, cnt = best
    return fine[i0:i0 + cnt], coarse[j0:j0 + cnt]


DEFAULT_PPW = {1: 20.0, 2: 12.0}


def discretize_and_solve(pot: Potential, hbar: float, win: Window, points_per_wavelength: float | None = None,
                         order: int = 4, refinements: int = 2, check_weyl: bool = True) -> EigenSet:
    """All eigenvalues in J(eps) with a grid-halving error estimate.

    The fine grid resolves the shortest de Broglie wavelength 2 pi hbar / sqrt(E2 + eps - min V)
    with `points_per_wavelength` points (default 20 for n=1, 12 for n=2, where the
    fourth-order stencil already meets the bound); a grid twice as coarse gives the Richardson
    correction and the stored error bound.  If that bound exceeds 0.01 hbar the
    grid is refined by 1.5x up to `refinements` times before giving up.
    """
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    if pot.n not in (1, 2):
        raise ValueError("only n in {1, 2} is supported")
    if order not in (2, 4):
        raise ValueError("stencil order must be 2 or 4")
    edge = pot.boundary_min()
    if not edge > win.hi:
        raise BoxError(f"box too small: V on boundary ({edge:.4g}) must exceed E2+eps ({win.hi:.4g}); "
                       "enlarge L")
    vmin = pot.grid_min()
    wavelength = 2 * np.pi * hbar / np.sqrt(max(win.hi - vmin, 1e-300))
    pad = max(10 * hbar, 0.02 * (win.hi - win.lo))
    lo, hi = win.lo - pad, win.hi + pad

    ppw = points_per_wavelength or DEFAULT_PPW[pot.n]
    for attempt in range(refinements + 1):
        m_coarse = int(np.ceil(2 * pot.L / (2 * wavelength / ppw)))
        m_fine = 2 * m_coarse
        if pot.n == 1:
            spectra = []
            for m in (m_fine, m_coarse):
                h = 2 * pot.L / m
                x = -pot.L + h * np.arange(1, m)
                spectra.append(_solve_1d(pot.V(x[:, None]), h, hbar, lo, hi, order))
        else:
            spectra = [_solve_2d(pot, m, hbar, lo, hi, order) for m in (m_fine, m_coarse)]
        fine, coarse = _match(*spectra)
        gain = 2.0 ** order - 1
        values = fine + (fine - coarse) / gain
        err = np.abs(fine - coarse) / gain
        keep = (values >= win.lo) & (values <= win.hi)
        values, err = values[keep], err[keep]
        if not err.size or err.max() <= 0.01 * hbar:
            break
        if attempt == refinements:
            raise ResolutionError(f"resolution insufficient for hbar={hbar:g}: eigenvalue error "
                                  f"{err.max():.2e} > 0.01 hbar; try N >= {2 * m_fine} points per axis")
        ppw *= 1.5
    record = {"n": pot.n, "L": pot.L, "N": m_fine - 1, "order": order,
              "points_per_wavelength": ppw, "label": pot.label}
    es = EigenSet(float(hbar), values, err, win, record)
    if check_weyl:
        est = weyl_count(pot, hbar, win)
        if est >= 20 and not 0.5 * est <= len(es) <= 2 * est:
            warnings.warn(f"eigenvalue count {len(es)} outside factor 2 of Weyl estimate {est:.1f}",
                          RuntimeWarning)
    return es


def oscillator_oracle(c: float, hbar: float, win: Window, n: int = 1) -> EigenSet:
    """Closed-form spectrum of -hbar^2 Laplacian + c|x|^2 restricted to J(eps)."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not c > 0:
        raise ValueError("c must be positive")
    step = hbar * np.sqrt(c)
    if n == 1:
        jmax = int(np.floor((win.hi / step - 1) / 2)) if win.hi > 0 else -1
        vals = step * (2 * np.arange(jmax + 1) + 1.0)
    else:
        jmax = int(np.floor(win.hi / (2 * step) - 1)) if win.hi > 0 else -1
        vals = np.repeat(2 * step * (np.arange(jmax + 1) + 1.0), np.arange(jmax + 1) + 1)
    vals = vals[(vals >= win.lo) & (vals <= win.hi)]
    record = {"n": n, "oracle": f"oscillator c={c!r}"}
    return EigenSet(float(hbar), vals, np.zeros_like(vals), win, record)
