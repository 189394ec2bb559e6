import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from critprobe.testfn import GridError, build_test_function, check_admissibility, moment_ratios, parity_pair


def _bump(t, M):
    u = t / M
    inside = np.abs(u) < 1
    out = np.zeros_like(t, dtype=float)
    out[inside] = np.exp(-1 / (1 - u[inside] ** 2))
    return out


def _phi_by_quadrature(x, M, j0, shape):
    """Inverse transform (1/2pi) int exp(-itx) fhat(t) dt by adaptive quadrature (independent of the FFT)."""
    if shape == "shifted":
        g = lambda t: _bump(np.array([t - M / 2]), M / 2)[0]
        lo, hi = 0.0, M
    else:
        g = lambda t: _bump(np.array([t]), M)[0] * ((t / M) if shape == "odd" else 1.0)
        lo, hi = -M, M
    f = lambda t: t ** (2 * j0) * g(t)
    re = integrate.quad(lambda t: f(t) * np.cos(t * x), lo, hi, limit=400, epsabs=1e-15)[0]
    im = integrate.quad(lambda t: -f(t) * np.sin(t * x), lo, hi, limit=400, epsabs=1e-15)[0]
    return complex(re, im) / (2 * np.pi)


def test_nonflat_even_member():
    tf = build_test_function(1.0, 0)
    assert not tf.is_complex and np.all(tf.phi.imag == 0)
    assert tf.fhat0 == pytest.approx(np.exp(-1), rel=1e-14)
    # int phi = phi_hat(0)
    assert tf.moment(0).real == pytest.approx(np.exp(-1), rel=1e-9)


def test_tabulation_matches_quadrature():
    for shape in ("standard-even", "odd", "shifted"):
        tf = build_test_function(1.0, 1, shape)
        mid = tf.x.size // 2
        for i in (mid, mid + 17, mid - 230, mid + 1500):
            x = float(tf.x[i])
            assert abs(tf.phi[i] - _phi_by_quadrature(x, 1.0, 1, shape)) <= 1e-9 * tf.peak()
        # between nodes the spline error stays within the recorded tolerance
        for x in (0.7, -11.3):
            assert abs(complex(tf(x)) - _phi_by_quadrature(x, 1.0, 1, shape)) <= 2 * tf.interp_tol


def test_flat_moments_vanish():
    tf = build_test_function(1.0, 2)
    r = moment_ratios(tf, 4)
    assert max(r[:4]) <= 1e-6
    assert r[4] > 1e-3


@settings(max_examples=8, deadline=None)
@given(M=st.floats(0.3, 3.0), j0=st.integers(0, 3))
def test_moment_flatness_duality(M, j0):
    tf = build_test_function(M, j0)
    r = moment_ratios(tf, 2 * j0)
    assert all(v <= 1e-6 for v in r[:2 * j0])
    assert r[2 * j0] > 1e-3


def test_shifted_member_is_complex_and_decays():
    tf = build_test_function(1.0, 2, "shifted")
    assert tf.is_complex and np.abs(tf.phi.imag).max() > 1e-3 * tf.peak()
    # the decay radius at 1e-8 of the peak, checked against direct quadrature on both sides of it
    R = tf.decay_radius
    assert abs(_phi_by_quadrature(0.9 * R, 1.0, 2, "shifted")) > 1e-8 * tf.peak() * 0.5
    far = np.abs(tf.x) > 1.05 * R
    assert np.abs(tf.phi[far]).max() < 1e-8 * tf.peak()


def test_fourier_round_trip():
    tf = build_test_function(1.0, 3)
    t = np.linspace(-0.99, 0.99, 41)
    fh = tf.fhat_at(t)
    assert np.abs(tf.forward_transform(t) - fh).max() <= 1e-9 * np.abs(fh).max()


def test_grid_independence():
    a = build_test_function(1.0, 3)
    b = build_test_function(1.0, 3, nodes=8192)
    x = np.linspace(-60, 60, 301)
    assert np.abs(a(x) - b(x)).max() <= 1e-8 * a.peak()


def test_admissibility_reports():
    assert check_admissibility(build_test_function(1.0, 0), np.pi).support_ok
    assert not check_admissibility(build_test_function(4.0, 0), np.pi).support_ok
    rep = check_admissibility(build_test_function(1.0, 3), 10.0)
    assert rep.flat_ok and rep.max_flatness_verified >= 6


def test_parity_pair_contract():
    ev, od = parity_pair(1.0, 3)
    assert np.all(ev.phi.imag == 0)
    assert np.abs(od.phi.real).max() <= 1e-10 * od.peak()
    assert (ev.M, ev.j0) == (od.M, od.j0) and np.array_equal(ev.x, od.x) and np.array_equal(ev.t, od.t)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_test_function(-1.0)
    with pytest.raises(ValueError):
        build_test_function(1.0, 0, "triangle")
    with pytest.raises(GridError):
        build_test_function(1.0, 0, nodes=1024)


def test_export_table(tmp_path):
    tf = build_test_function(1.0, 0, "odd")
    tf.export_table(tmp_path / "phi.txt")
    data = np.loadtxt(tmp_path / "phi.txt")
    assert np.array_equal(data[:, 0], tf.x) and np.array_equal(data[:, 2], tf.phi.imag)
