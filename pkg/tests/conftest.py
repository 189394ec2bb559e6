import functools

import pytest

from critprobe.potential import barrier, double_well, harmonic, quartic
from critprobe.quantum import Window, discretize_and_solve

LADDER = [0.1 * 0.75 ** i for i in range(10)]
HBAR_MIN = LADDER[-1]

CASES = {
    "x2": (lambda: harmonic(1.0, 1), (-0.5, 0.5)),
    "x4": (lambda: quartic(1.0), (-0.5, 0.5)),
    "double_well": (lambda: double_well(L=2.6), (-0.5, 1.5)),
    "barrier": (lambda: barrier(), (-0.5, 1.5)),
    "x2_regular": (lambda: harmonic(1.0, 1), (0.3, 1.8)),
}


@functools.cache
def ladder_spectra(name: str):
    """(potential, window, eigensets) on the default ladder with margin 4."""
    make, (E1, E2) = CASES[name]
    pot = make()
    win = Window(E1, E2, 4.0)
    return pot, win, [discretize_and_solve(pot, h, win) for h in LADDER]


@pytest.fixture(scope="session")
def spectra():
    return ladder_spectra


@functools.cache
def support(name: str) -> float:
    from critprobe.classical import auto_support
    from critprobe.potential import find_critical_points

    pot, win, _ = ladder_spectra(name)
    return auto_support(pot, win, find_critical_points(pot))[0]


@functools.cache
def analysis(name: str):
    """Blind pipeline (no calibration) on a cached ladder."""
    from critprobe.detect import ProbeSettings, analyze_spectra

    _, _, ess = ladder_spectra(name)
    return analyze_spectra(ess, ProbeSettings(support(name)))


@pytest.fixture(scope="session")
def analyzed():
    return analysis
