import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from critprobe.potential import (CATALOG, GermError, anisotropic, catalog, extract_germ, find_critical_points,
                                 gamma_identity_check, harmonic, load_polynomial, polynomial, quartic,
                                 resolve_kind, spherical_average)


def _germs(pot):
    out = []
    for cp in find_critical_points(pot):
        if cp.kind == "saddle":
            continue
        out.append(extract_germ(pot, resolve_kind(pot, cp)))
    return out


def test_harmonic_has_single_minimum():
    cps = find_critical_points(harmonic(1.0, 1, L=5.0))
    assert len(cps) == 1
    assert abs(cps[0].x0[0]) < 1e-10 and abs(cps[0].E_c) < 1e-14 and cps[0].kind == "minimum"


def test_double_well_critical_points():
    cps = find_critical_points(catalog("double_well", L=3.0))
    got = sorted((round(float(cp.x0[0]), 8), round(cp.E_c, 8), cp.kind) for cp in cps)
    assert got == [(-1.0, 0.0, "minimum"), (0.0, 1.0, "maximum"), (1.0, 0.0, "minimum")]


def test_linear_potential_has_no_critical_point():
    with pytest.warns(RuntimeWarning):
        assert find_critical_points(polynomial([((1,), 1.0)], 1, 2.0)) == []


def test_critical_points_stable_under_seed_doubling():
    for name in CATALOG:
        pot = catalog(name)
        a = find_critical_points(pot, 9)
        b = find_critical_points(pot, 18)
        assert len(a) == len(b), name
        for p, q in zip(a, b):
            assert np.allclose(p.x0, q.x0, atol=1e-6 * pot.L) and p.kind == q.kind


@pytest.mark.parametrize("pot,k", [(harmonic(1.0, 1), 1), (quartic(1.0), 2),
                                   (polynomial([((2,), 1.0), ((4,), 1.0)], 1, 3.0), 1)])
def test_germ_degree_and_values(pot, k):
    cp = resolve_kind(pot, find_critical_points(pot)[0])
    g = extract_germ(pot, cp)
    assert g.k == k and g.sign == "positive-definite"
    # direct small-r evaluation of the leading coefficient
    r = 1e-4
    for s in (-1.0, 1.0):
        direct = float(pot.V(np.array([[s * r]]))[0]) / r ** (2 * k)
        assert abs(float(g(np.array([[s]]))[0]) - 1.0) < 1e-8
        assert abs(direct - 1.0) < 1e-6


def test_indefinite_germ_is_rejected():
    pot = polynomial([((2, 0), 1.0), ((0, 2), -1.0)], 2, 2.0)
    cp = find_critical_points(pot)[0]
    with pytest.raises(GermError):
        extract_germ(pot, cp)


def test_germ_homogeneity():
    rng = np.random.default_rng(1)
    for name in CATALOG:
        for g in _germs(catalog(name)):
            eta = rng.normal(size=(100, g.n))
            eta /= np.linalg.norm(eta, axis=1, keepdims=True)
            base = g(eta)
            for r in (0.5, 2.0):
                err = np.abs(g(r * eta) - r ** g.degree * base)
                assert np.all(err <= 1e-8 * np.abs(base) * r ** g.degree), name


def test_spherical_average_closed_forms():
    g = extract_germ(harmonic(1.0, 1), find_critical_points(harmonic(1.0, 1))[0])
    assert spherical_average(g) == pytest.approx(2.0, rel=1e-12)
    for c in (0.5, 3.0):
        pot = polynomial([((4,), c)], 1, 3.0)
        g = extract_germ(pot, resolve_kind(pot, find_critical_points(pot)[0]))
        assert spherical_average(g) == pytest.approx(2 * c ** -0.25, rel=1e-10)


def test_anisotropic_average_against_quadrature():
    c1, c2 = 1.0, 2.0
    pot = anisotropic(c1, c2)
    g = extract_germ(pot, find_critical_points(pot)[0])
    oracle = integrate.quad(lambda th: 1 / (c1 * np.cos(th) ** 2 + c2 * np.sin(th) ** 2), 0, 2 * np.pi,
                            epsabs=0, epsrel=1e-13)[0]
    assert oracle == pytest.approx(2 * np.pi / np.sqrt(c1 * c2), rel=1e-12)
    assert spherical_average(g) == pytest.approx(oracle, rel=1e-8)


@settings(max_examples=6, deadline=None)
@given(c=st.sampled_from([0.5, 2.0, 10.0]), name=st.sampled_from(["harmonic", "quartic", "anisotropic"]))
def test_spherical_average_scaling(c, name):
    pot = catalog(name)
    scaled = polynomial([(e, c * v) for e, v in pot.terms], pot.n, pot.L)
    cp = resolve_kind(pot, find_critical_points(pot)[0])
    g = extract_germ(pot, cp)
    gs = extract_germ(scaled, resolve_kind(scaled, find_critical_points(scaled)[0]))
    assert spherical_average(gs) == pytest.approx(c ** (-pot.n / g.degree) * spherical_average(g), rel=1e-8)


def test_gamma_identity_gaussian():
    g = extract_germ(harmonic(1.0, 1), find_critical_points(harmonic(1.0, 1))[0])
    lhs = integrate.quad(lambda x: np.exp(-x * x), -np.inf, np.inf)[0]
    assert lhs == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    assert gamma_identity_check(g) <= 1e-8


def test_gamma_identity_isotropic_plane():
    pot = harmonic(1.0, 2)
    g = extract_germ(pot, find_critical_points(pot)[0])
    assert spherical_average(g) == pytest.approx(2 * np.pi, rel=1e-10)
    assert gamma_identity_check(g) <= 1e-6


def test_polynomial_file(tmp_path):
    p = tmp_path / "dw.txt"
    p.write_text("# double well\n4 1.0\n2 -2.0\n0 1.0\n")
    pot = load_polynomial(p, 3.0)
    x = np.linspace(-2, 2, 9)[:, None]
    assert np.allclose(pot.V(x), (x[:, 0] ** 2 - 1) ** 2)
    assert np.allclose(pot.grad(x)[:, 0], 4 * x[:, 0] * (x[:, 0] ** 2 - 1))
