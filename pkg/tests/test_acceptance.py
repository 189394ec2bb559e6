"""Acceptance criteria, one test each; every test prints a PASS/FAIL line with the measured numbers."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import HBAR_MIN, LADDER, ladder_spectra
from critprobe.classical import period_bound, shortest_period
from critprobe.cli import EXIT_OK, main
from critprobe.detect import predict_min_coefficient
from critprobe.potential import CATALOG, catalog, extract_germ, find_critical_points, harmonic, quartic, resolve_kind
from critprobe.potential import gamma_identity_check
from critprobe.quantum import Window, discretize_and_solve, oscillator_oracle
from critprobe.scaling import classify_regular, fit_order
from critprobe.testfn import build_test_function, parity_pair
from critprobe.trace import gamma, weyl_check
from test_scaling import recovery_rate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_harmonic_oracle(verdict):
    pot = harmonic(1.0, 1)
    worst, slowest = 0.0, 0.0
    for h in [h for h in LADDER if h >= 0.0075]:
        win = Window(0.0, 110 * h, 0.5)         # holds the lowest 55 levels
        t0 = time.perf_counter()
        es = discretize_and_solve(pot, h, win)
        slowest = max(slowest, time.perf_counter() - t0)
        got = es.values[es.values >= win.E1][:50]
        exact = h * (2 * np.arange(got.size) + 1)
        assert got.size == 50
        worst = max(worst, float(np.max(np.abs(got / exact - 1))))
    verdict(1, worst <= 1e-5 and slowest <= 5.0, f"max rel err {worst:.2e} (<= 1e-5), slowest solve {slowest:.2f} s (<= 5 s)")


def _ladder_fit(pot, tf, E=0.0):
    t0 = time.perf_counter()
    ess = [discretize_and_solve(pot, h, Window(-0.5, 0.5, 4.0)) for h in LADDER]
    fit = fit_order([gamma(es, tf, E) for es in ess])
    return fit, time.perf_counter() - t0, ess


def test_criterion_02_minimum_exponents(verdict):
    tf = parity_pair(0.45, 0)[0]
    f2, t2, _ = _ladder_fit(harmonic(1.0, 1), tf)
    f4, t4, _ = _ladder_fit(quartic(1.0), tf)
    ok = (abs(f2.alpha) <= 0.05 and f2.m == 0 and abs(f4.alpha + 0.25) <= 0.03 and f4.m == 0
          and max(t2, t4) <= 120)
    verdict(2, ok, f"x^2 alpha={f2.alpha:+.4f} m={f2.m}; x^4 alpha={f4.alpha:+.4f} m={f4.m}; "
                   f"ladders {t2:.0f} s / {t4:.0f} s")


def test_criterion_03_minimum_coefficient(verdict):
    tf = parity_pair(0.45, 0)[0]
    _, _, ess = ladder_spectra("x2")
    es = min(ess, key=lambda e: e.hbar)
    C = gamma(es, tf, 0.0).value * es.hbar ** 0
    P = predict_min_coefficient(1, 1, tf, 2.0)
    rel = abs(C / P - 1)
    h = 0.01
    wide = discretize_and_solve(harmonic(1.0, 1), h, Window(0.0, 1.0, 40 * h + 4.0))
    closed = sum(complex(tf(2 * j + 1)) for j in range(int(tf.X)))
    gap = abs(gamma(wide, tf, 0.0).value - closed)
    verdict(3, rel <= 0.02 and gap <= 1e-4, f"C/prediction - 1 = {rel:.2e} (<= 2%), |gamma - sum phi(2j+1)| = {gap:.1e}")


def test_criterion_04_maximum_log(verdict):
    _, _, ess = ladder_spectra("double_well")
    tf = build_test_function(0.2, 0, "standard-even")
    f = fit_order([gamma(es, tf, 1.0) for es in ess])
    gain = 1 - f.residual / f.residual_alt if f.m == 1 else 0.0
    verdict(4, f.m == 1 and gain >= 0.10 and f.ladder.count >= 8,
            f"m={f.m}, residual improvement {gain:.1%} over pure power, {f.ladder.count} ladder points")


def test_criterion_05_regular_suppression(verdict):
    _, _, ess = ladder_spectra("x2_regular")
    tf = build_test_function(2.8, 3)
    rep = classify_regular([gamma(es, tf, 1.0) for es in ess])
    verdict(5, rep.slope >= 4 and tf.M < np.pi, f"decay slope {rep.slope:.2f} (>= 4) with M={tf.M}")


def test_criterion_06_period_bound(verdict):
    win = Window(0.1, 2.0, 0.1)
    pot = harmonic(1.0, 1)
    pb = period_bound(pot, win)
    s = shortest_period(pot, win, pb)
    ok = pb.a == pytest.approx(2.0) and pb.T == pytest.approx(np.pi) and abs(s.shortest - np.pi) <= 1e-4
    others = []
    for name in sorted(CATALOG):
        p = catalog(name)
        w = Window(0.2, 1.5, 0.1)
        b = period_bound(p, w)
        found = shortest_period(p, w, b, energies=6, directions=8).shortest
        others.append(f"{name} {found:.3f}>={b.T:.3f}")
        ok &= found >= b.T
    verdict(6, ok, f"x^2 a={pb.a}, T={pb.T:.6f}, shortest {s.shortest:.8f}; " + ", ".join(others))


def test_criterion_07_weyl(verdict):
    tf = build_test_function(2.8, 0)
    _, _, ess = ladder_spectra("x2_regular")
    one = weyl_check([es for es in ess if es.hbar <= 0.01], tf, 1.0, np.pi, 1)
    win = Window(0.5, 1.5, 4.0)
    two = weyl_check([oscillator_oracle(1.0, h, win, n=2) for h in LADDER if h <= 0.02], tf, 1.0, np.pi ** 2, 2)
    verdict(7, one.deviation <= 0.02 and two.deviation <= 0.05,
            f"n=1 deviation {one.deviation:.2e} (<= 2%), n=2 oracle deviation {two.deviation:.2e} (<= 5%)")


@pytest.fixture(scope="module")
def validated(tmp_path_factory):
    base = tmp_path_factory.mktemp("validate")
    runs = {}
    for name in ("harmonic_validate", "quartic_validate", "double_well_validate"):
        out = base / name
        runs[name] = (main(["validate", "--config", str(CONFIGS / f"{name}.ini"), "--out", str(out)]), out)
    return runs


def test_criterion_08_inverse_pipeline(verdict, validated):
    ok, lines = True, []
    for name, (status, out) in validated.items():
        ok &= status == EXIT_OK
        rep = json.loads((out / "report.json").read_text())
        for row in rep["comparison"]:
            flags = [row.get(k) for k in ("E_ok", "k_ok", "class_ok", "A_ok", "multi_point_ok")]
            ok &= all(flags)
            lines.append(f"{name.split('_validate')[0]} E_c={row['E_c_true']:g}: found {row['E_c_found']}, "
                         f"k {row.get('k_found')}, {row.get('class_found')}, A err {row.get('A_rel_err')}")
        if name == "double_well_validate":
            low = [r for r in rep["reports"] if abs(r["E_c"]) <= HBAR_MIN]
            ok &= len(low) == 1 and low[0]["multi_point"] and abs(low[0]["A"] / 2.0 - 1) <= 0.10
    verdict(8, ok, "; ".join(lines))


def test_criterion_09_identities(verdict):
    worst = 0.0
    for name in sorted(CATALOG):
        pot = catalog(name)
        for cp in find_critical_points(pot):
            cp = resolve_kind(pot, cp)
            if cp.kind in ("minimum", "maximum"):
                worst = max(worst, gamma_identity_check(extract_germ(pot, cp)))
    rate, alpha_err = recovery_rate()
    verdict(9, worst <= 1e-6 and rate >= 0.95 and alpha_err <= 0.02,
            f"gamma identity worst {worst:.1e} (<= 1e-6); synthetic m rate {rate:.1%}, worst alpha err {alpha_err:.4f}")


def test_criterion_10_determinism(verdict, validated, tmp_path):
    _, first = validated["quartic_validate"]
    again = tmp_path / "again"
    status = main(["validate", "--config", str(CONFIGS / "quartic_validate.ini"), "--out", str(again)])

    def tree(root):
        return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}

    a, b = tree(first), tree(again)
    differ = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    verdict(10, status == EXIT_OK and not differ, f"{len(a)} files compared, differing: {differ or 'none'}")
