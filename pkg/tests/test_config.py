from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from critprobe.config import ConfigError, load_config, parse_ladder

CONFIGS = sorted(Path(__file__).resolve().parents[1].joinpath("configs").glob("*.ini"))

BASE = """
[experiment]
mode = sweep
[potential]
name = quartic
[window]
E1 = -0.3
E2 = 0.3
eps = 4
"""


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    cfg = load_config(path)
    again = load_config(text=cfg.to_ini())
    assert again == cfg
    assert again.to_ini() == cfg.to_ini()


def test_defaults():
    cfg = load_config(text=BASE)
    assert cfg.ladder == (0.1, 0.75, 10) and cfg.M == "auto" and cfg.parities == ("even", "odd")
    assert cfg.hbars[-1] == pytest.approx(0.1 * 0.75 ** 9)


def test_overrides_and_flags():
    cfg = load_config(text=BASE, overrides=["testfn.M=0.45", "testfn.j0=0", "window.E2=0.5"], seed=7,
                      ladder=parse_ladder("0.2,0.5,8"))
    assert cfg.M == 0.45 and cfg.j0 == 0 and cfg.window[1] == 0.5
    assert cfg.seed == 7 and cfg.ladder == (0.2, 0.5, 8)


@pytest.mark.parametrize("bad", [
    BASE.replace("E2 = 0.3", "E2 = -0.4"),                 # E1 > E2
    BASE.replace("quartic", "sextic"),
    BASE.replace("mode = sweep", "mode = everything"),
    BASE.replace("eps = 4", "eps = 0"),
    BASE.replace("E1 = -0.3", "E1 = low"),
    BASE.replace("[window]", "[elsewhere]"),
    BASE + "[testfn]\nM = -1\n",
    BASE + "[ladder]\ncount = 3\n",
    BASE + "[solver]\npoints_per_wavelength = 2\n",
    BASE.replace("mode = sweep", "mode = weyl"),           # weyl needs an energy
    BASE.replace("mode = sweep", "mode = detect") + "[testfn]\nparity = even\n",
    BASE + "[calibration]\nreference = barrier\nwindow = -0.5,1.5\nE = 1.0\n",
    BASE + "[calibration]\nreference = barrier\nwindow = -0.5,1.5,4\nE = 1.0\nwidth = 3\n",
    "[experiment\nmode = sweep",
])
def test_malformed_configs_are_rejected(bad):
    with pytest.raises(ConfigError):
        load_config(text=bad)


def test_bad_override_syntax():
    with pytest.raises(ConfigError):
        load_config(text=BASE, overrides=["M=3"])
    with pytest.raises(ConfigError):
        parse_ladder("0.1,0.75")


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("no/such/file.ini")


@settings(max_examples=25, deadline=None)
@given(a=st.text("abcdefgh/_-", min_size=1, max_size=12), b=st.text("abcdefgh/_-", min_size=1, max_size=12))
def test_hash_ignores_output_directory(a, b):
    x = load_config(text=BASE, out=a)
    y = load_config(text=BASE, out=b)
    assert x.config_hash() == y.config_hash()
    assert x.config_hash() != load_config(text=BASE, overrides=["testfn.j0=4"]).config_hash()
