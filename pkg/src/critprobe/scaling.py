"""hbar-order of gamma over a geometric ladder: power law, optionally times log(1/hbar)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trace import GammaSample


class FitError(ValueError):
    pass


class OscillatoryError(FitError):
    pass


@dataclass(frozen=True)
class Ladder:
    hbar_max: float
    rho: float
    count: int

    def values(self) -> list[float]:
        return [self.hbar_max * self.rho ** i for i in range(self.count)]

    @classmethod
    def of(cls, hbars) -> "Ladder":
        h = np.sort(np.asarray(hbars, dtype=float))[::-1]
        rho = float(np.exp(np.mean(np.diff(np.log(h))))) if h.size > 1 else 1.0
        return cls(float(h[0]), rho, int(h.size))


@dataclass(frozen=True)
class OrderFit:
    E: float
    alpha: float
    m: int
    C: complex
    residual: float
    ambiguous: bool
    ladder: Ladder
    alpha_err: float
    residual_alt: float   # residual of the model not selected


def _lsq(u: np.ndarray, y: np.ndarray):
    A = np.column_stack([u, np.ones_like(u)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    rms = float(np.sqrt(np.mean(r ** 2)))
    dof = max(u.size - 2, 1)
    se = float(np.sqrt(np.sum(r ** 2) / dof / np.sum((u - u.mean()) ** 2)))
    return float(coef[0]), float(coef[1]), rms, se


def _ordered(samples: list[GammaSample]):
    s = sorted(samples, key=lambda g: -g.hbar)
    h = np.array([g.hbar for g in s])
    v = np.array([g.value for g in s], dtype=complex)
    return s, h, v


def fit_order(samples: list[GammaSample], check_noise: bool = True, tie: float = 0.10) -> OrderFit:
    """Fit log|gamma| = alpha log hbar + m log log(1/hbar) + log|C|, m in {0, 1}.

    The model with the smaller RMS residual wins; residuals within `tie` of each
    other select m=0 and set the ambiguity flag.  The phase of C is taken from the
    sample at the smallest hbar.
    """
    if len(samples) < 6:
        raise FitError(f"need at least 6 ladder points, got {len(samples)}")
    if len({g.E for g in samples}) != 1:
        raise FitError("samples must share one energy")
    s, h, v = _ordered(samples)
    a = np.abs(v)
    if np.any(h >= 1):
        raise FitError("log(1/hbar) model needs hbar < 1")
    if check_noise:
        weak = [g.hbar for g in s if not abs(g.value) > 10 * g.err_bound]
        if weak:
            raise FitError(f"|gamma| not above 10x its error bound at hbar={weak}; see classify_regular")
    if np.any(a == 0):
        raise FitError("gamma vanishes on the ladder")
    flips = np.real(v[1:] * np.conj(v[:-1])) < 0
    monotone = np.all(np.diff(a) >= 0) or np.all(np.diff(a) <= 0)
    if flips.any() and not monotone:
        raise OscillatoryError("oscillatory, refine E: |gamma| is non-monotone with sign changes")
    u = np.log(h)
    y = np.log(a)
    fits = [_lsq(u, y), _lsq(u, y - np.log(np.log(1 / h)))]
    r0, r1 = fits[0][2], fits[1][2]
    ambiguous = abs(r0 - r1) <= tie * max(r0, r1)
    m = 0 if ambiguous or r0 <= r1 else 1
    alpha, c, res, se = fits[m]
    phase = v[-1] / a[-1]
    return OrderFit(E=float(s[0].E), alpha=alpha, m=m, C=complex(np.exp(c) * phase), residual=res,
                    ambiguous=bool(ambiguous), ladder=Ladder.of(h), alpha_err=se,
                    residual_alt=fits[1 - m][2])


@dataclass(frozen=True)
class DecayReport:
    E: float
    slope: float
    is_fast_decay: bool


def classify_regular(samples: list[GammaSample], scale: float | None = None,
                     threshold: float = 4.0) -> DecayReport:
    """Fast decay iff the log-log slope is >= threshold or gamma has sunk to the floor.

    The floor is 1e-10 of `scale` (the sweep maximum), raised to each sample's own
    error bound; only samples above it enter the slope.
    """
    if len(samples) < 6:
        raise FitError(f"need at least 6 ladder points, got {len(samples)}")
    s, h, v = _ordered(samples)
    a = np.abs(v)
    scale = float(a.max()) if scale is None else scale
    floor = np.maximum(1e-10 * scale, [g.err_bound for g in s])
    above = a > floor
    E = float(s[0].E)
    if not above[-1] or above.sum() < 3:
        return DecayReport(E, float("inf"), True)
    slope = float(np.polyfit(np.log(h[above]), np.log(a[above]), 1)[0])
    return DecayReport(E, slope, slope >= threshold)


FITS_HEADER = "E,alpha,logflag,re_C,im_C,residual,ambiguous"


def fits_to_csv(fits: list[OrderFit], path, comments: list[str] | None = None) -> None:
    lines = [f"# {c}" for c in comments or []] + [FITS_HEADER]
    for f in fits:
        lines.append(f"{f.E!r},{f.alpha!r},{f.m},{f.C.real!r},{f.C.imag!r},{f.residual!r},{int(f.ambiguous)}")
    Path(path).write_text("\n".join(lines) + "\n")
