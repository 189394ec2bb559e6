import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critprobe.quantum import Window, oscillator_oracle
from critprobe.scaling import FitError, OscillatoryError, classify_regular, fit_order
from critprobe.testfn import build_test_function
from critprobe.trace import GammaSample, gamma


def synthetic(alpha, C, m, hbars, noise=0.0, rng=None, E=0.0):
    h = np.asarray(hbars)
    y = C * h ** alpha * np.log(1 / h) ** m
    if noise:
        y = y * (1 + noise * rng.standard_normal(h.size))
    return [GammaSample(E, float(a), complex(b), 10, 0.0) for a, b in zip(h, y)]


LADDER8 = [0.1 * 0.7 ** i for i in range(8)]


def recovery_rate(trials=200, seed=0):
    rng = np.random.default_rng(seed)
    good_m = 0
    worst = 0.0
    for _ in range(trials):
        alpha = rng.uniform(-1, 1)
        C = rng.uniform(0.1, 10)
        m = int(rng.integers(0, 2))
        fit = fit_order(synthetic(alpha, C, m, LADDER8, 0.01, rng), check_noise=False)
        good_m += fit.m == m
        worst = max(worst, abs(fit.alpha - alpha))
    return good_m / trials, worst


def test_exact_recovery():
    for m in (0, 1):
        f = fit_order(synthetic(-0.25, 3.0, m, LADDER8))
        assert f.m == m and f.alpha == pytest.approx(-0.25, abs=1e-10)
        assert f.C.real == pytest.approx(3.0, rel=1e-9)


def test_noisy_recovery_rate():
    rate, worst = recovery_rate()
    assert rate >= 0.95
    assert worst <= 0.02


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-1, 1), C=st.floats(0.1, 10), seed=st.integers(0, 2 ** 31))
def test_ladder_invariance(alpha, C, seed):
    rng = np.random.default_rng(seed)
    lad = [0.1 * 0.8 ** i for i in range(12)]
    full = fit_order(synthetic(alpha, C, 0, lad, 0.005, rng), check_noise=False)
    sub = fit_order([g for i, g in enumerate(synthetic(alpha, C, 0, lad, 0.0)) if i % 2 == 0], check_noise=False)
    half = fit_order([s for i, s in enumerate(synthetic(alpha, C, 0, lad, 0.005, np.random.default_rng(seed)))
                      if i % 2 == 0], check_noise=False)
    assert abs(sub.alpha - alpha) < 1e-10
    if full.m == half.m:
        assert abs(half.alpha - full.alpha) <= 2 * max(full.alpha_err, half.alpha_err) + 1e-12


def test_fit_preconditions():
    with pytest.raises(FitError):
        fit_order(synthetic(0, 1, 0, LADDER8[:5]))
    noisy = [GammaSample(0.0, g.hbar, g.value, 1, 1.0) for g in synthetic(0, 1, 0, LADDER8)]
    with pytest.raises(FitError):
        fit_order(noisy)
    wild = [GammaSample(0.0, h, complex((-1) ** i * (1 + 0.5 * (i % 3))), 1, 0.0) for i, h in enumerate(LADDER8)]
    with pytest.raises(OscillatoryError):
        fit_order(wild)


def test_harmonic_regular_energy_is_fast():
    tf = build_test_function(2.8, 3)
    win = Window(0.5, 1.5, 4.0)
    samples = [gamma(oscillator_oracle(1.0, h, win), tf, 1.0) for h in LADDER8]
    assert classify_regular(samples).is_fast_decay


def test_harmonic_critical_energy_is_slow():
    # an even flat phi has zero half-line mass, so the odd member carries this singularity
    tf = build_test_function(2.8, 3, "odd")
    win = Window(0.0, 1.0, 4.0)
    samples = [gamma(oscillator_oracle(1.0, h, win), tf, 0.0) for h in LADDER8]
    rep = classify_regular(samples)
    assert not rep.is_fast_decay and abs(rep.slope) < 0.5


def test_all_zero_samples_are_fast():
    zeros = [GammaSample(0.5, h, 0j, 0, 0.0) for h in LADDER8]
    rep = classify_regular(zeros)
    assert rep.is_fast_decay
