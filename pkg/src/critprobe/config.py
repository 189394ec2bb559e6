"""INI experiment configuration: parsing, overrides, validation, resolved form and hash."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

from .potential import CATALOG, Potential, catalog, load_polynomial

MODES = ("sweep", "detect", "validate", "weyl", "classical")
PARITIES = {"even": "standard-even", "odd": "odd", "shifted": "shifted"}


class ConfigError(ValueError):
    pass


def _float_or_auto(text: str) -> float | str:
    text = text.strip()
    return "auto" if text.lower() == "auto" else float(text)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    potential: str                       # catalog name, or "file"
    params: tuple = ()                   # (key, value) pairs passed to the catalog constructor
    polynomial_file: str | None = None
    n: int = 1
    L: float | None = None
    window: tuple = (0.0, 1.0, 0.1)      # E1, E2, eps
    ladder: tuple = (0.1, 0.75, 10)      # hbar_max, rho, count
    grid_step: float | str = "auto"      # "auto": hbar_min
    M: float | str = "auto"              # detection support
    j0: int = 3
    parities: tuple = ("even", "odd")
    invert_M: float = 0.45
    log_M: float = 0.2
    confirm: float = 0.01
    ppw: float | str = "auto"           # "auto": 20 for n=1, 12 for n=2
    order: int | str = "auto"            # "auto": 4
    oracle: bool = False
    weyl_E: float | None = None
    weyl_M: float = 2.8
    calibration_table: str | None = None
    reference: str | None = None
    reference_params: tuple = ()
    reference_window: tuple | None = None
    reference_E: float | None = None
    plot_energies: tuple = ()
    out: str = "probe-out"
    seed: int = 0
    base_dir: str = field(default=".", compare=False)

    # ------------------------------------------------------------------ derived

    @property
    def hbars(self) -> list[float]:
        h0, rho, count = self.ladder
        return [h0 * rho ** i for i in range(int(count))]

    def resolve_path(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def build_potential(self) -> Potential:
        if self.potential == "file":
            if self.L is None:
                raise ConfigError("a polynomial file needs an explicit box half-width L")
            pot = load_polynomial(self.resolve_path(self.polynomial_file), self.L)
        else:
            kw = dict(self.params)
            if self.potential == "harmonic":
                kw["n"] = self.n
            try:
                pot = catalog(self.potential, L=self.L, **kw)
            except TypeError as exc:
                raise ConfigError(f"bad [potential] parameters for {self.potential}: {exc}") from None
        if pot.n != self.n:
            raise ConfigError(f"potential is {pot.n}-dimensional but n = {self.n}")
        return pot

    def build_reference(self) -> Potential:
        try:
            return catalog(self.reference, **dict(self.reference_params))
        except TypeError as exc:
            raise ConfigError(f"bad [calibration] parameters for {self.reference}: {exc}") from None

    # ------------------------------------------------------------------ checks

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.potential != "file" and self.potential not in CATALOG:
            raise ConfigError(f"unknown potential {self.potential!r}; known: {sorted(CATALOG)} or 'file'")
        if self.potential == "file":
            if not self.polynomial_file:
                raise ConfigError("potential = file needs [potential] file = <path>")
            if not self.resolve_path(self.polynomial_file).is_file():
                raise ConfigError(f"polynomial file not found: {self.polynomial_file}")
        if self.n not in (1, 2):
            raise ConfigError(f"n must be 1 or 2, got {self.n}")
        E1, E2, eps = self.window
        if not E1 <= E2:
            raise ConfigError(f"window needs E1 <= E2, got E1={E1} > E2={E2}")
        if not eps > 0:
            raise ConfigError(f"window eps must be positive, got {eps}")
        h0, rho, count = self.ladder
        if not (0 < h0 < 1 and 0 < rho < 1 and int(count) >= 6):
            raise ConfigError(f"ladder needs 0 < hbar_max < 1, 0 < rho < 1, count >= 6; got {self.ladder}")
        if self.grid_step != "auto" and not self.grid_step > 0:
            raise ConfigError("grid step must be positive or 'auto'")
        if self.ppw != "auto" and not self.ppw >= 4:
            raise ConfigError("points_per_wavelength must be >= 4 or 'auto'")
        if self.M != "auto" and not self.M > 0:
            raise ConfigError("M must be positive or 'auto'")
        if self.j0 < 0:
            raise ConfigError("j0 must be non-negative")
        if not self.parities or any(p not in PARITIES for p in self.parities):
            raise ConfigError(f"parity entries must be among {sorted(PARITIES)}")
        if self.mode in ("detect", "validate") and tuple(self.parities) != ("even", "odd"):
            raise ConfigError("detect and validate need the parity pair: parity = even,odd")
        if self.mode == "weyl" and self.weyl_E is None:
            raise ConfigError("mode weyl needs [weyl] E")
        if self.weyl_E is not None and not E1 <= self.weyl_E <= E2:
            raise ConfigError(f"[weyl] E = {self.weyl_E} lies outside the window")
        if self.calibration_table and not self.resolve_path(self.calibration_table).is_file():
            raise ConfigError(f"calibration table not found: {self.calibration_table}")
        if self.reference is not None:
            if self.reference not in CATALOG:
                raise ConfigError(f"unknown reference potential {self.reference!r}")
            if self.reference_window is None or self.reference_E is None:
                raise ConfigError("[calibration] reference needs window and E")
            if len(self.reference_window) != 3:
                raise ConfigError("[calibration] window wants E1,E2,eps")
            self.build_reference()
        self.build_potential()
        return self

    # ------------------------------------------------------------------ canonical text

    def to_ini(self, with_out: bool = True) -> str:
        """Canonical INI text; parsing it back gives an equal config."""
        r = repr
        lines = ["[experiment]", f"mode = {self.mode}", f"seed = {self.seed}"]
        lines += [f"out = {self.out}"] if with_out else []
        lines += ["", "[potential]"]
        if self.potential == "file":
            lines.append(f"file = {self.polynomial_file}")
        else:
            lines.append(f"name = {self.potential}")
        lines.append(f"n = {self.n}")
        if self.L is not None:
            lines.append(f"L = {r(float(self.L))}")
        lines += [f"{k} = {r(float(v))}" for k, v in self.params]
        E1, E2, eps = self.window
        h0, rho, count = self.ladder
        lines += ["", "[window]", f"E1 = {r(float(E1))}", f"E2 = {r(float(E2))}", f"eps = {r(float(eps))}",
                  "", "[ladder]", f"hbar_max = {r(float(h0))}", f"rho = {r(float(rho))}", f"count = {int(count)}",
                  "", "[grid]", f"step = {self.grid_step if self.grid_step == 'auto' else r(float(self.grid_step))}",
                  "", "[testfn]", f"M = {self.M if self.M == 'auto' else r(float(self.M))}", f"j0 = {self.j0}",
                  f"parity = {','.join(self.parities)}", f"invert_M = {r(float(self.invert_M))}",
                  f"log_M = {r(float(self.log_M))}", f"confirm = {r(float(self.confirm))}",
                  "", "[solver]", f"points_per_wavelength = {self.ppw if self.ppw == 'auto' else r(float(self.ppw))}", f"order = {self.order}",
                  f"oracle = {str(self.oracle).lower()}"]
        if self.weyl_E is not None:
            lines += ["", "[weyl]", f"E = {r(float(self.weyl_E))}", f"M = {r(float(self.weyl_M))}"]
        if self.calibration_table or self.reference:
            lines += ["", "[calibration]"]
            if self.calibration_table:
                lines.append(f"table = {self.calibration_table}")
            if self.reference:
                a, b, e = self.reference_window
                lines += [f"reference = {self.reference}",
                          f"window = {r(float(a))},{r(float(b))},{r(float(e))}",
                          f"E = {r(float(self.reference_E))}"]
                lines += [f"{k} = {r(float(v))}" for k, v in self.reference_params]
        if self.plot_energies:
            lines += ["", "[plots]", "energies = " + ",".join(r(float(e)) for e in self.plot_energies)]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        """Hash of everything that affects results; the output directory does not."""
        return hashlib.sha256(self.to_ini(with_out=False).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------- parsing

_PARAM_SKIP = {"name", "file", "n", "l"}


def _parse(parser: configparser.ConfigParser, base_dir: str) -> ExperimentConfig:
    def get(section, key, default=None):
        if parser.has_section(section) and parser.has_option(section, key):
            return parser.get(section, key).strip()
        return default

    try:
        pot_name = get("potential", "name")
        pot_file = get("potential", "file")
        if pot_name and pot_file:
            raise ConfigError("[potential] takes either name or file, not both")
        params = ()
        if parser.has_section("potential"):
            params = tuple(sorted((k, float(v)) for k, v in parser.items("potential") if k not in _PARAM_SKIP))
        w = parser["window"] if parser.has_section("window") else None
        if w is None:
            raise ConfigError("missing [window] section")
        window = (float(w["E1"]), float(w["E2"]), float(w.get("eps", "0.1")))
        ladder = (float(get("ladder", "hbar_max", "0.1")), float(get("ladder", "rho", "0.75")),
                  int(get("ladder", "count", "10")))
        ref_window = get("calibration", "window")
        ref_params = ()
        if parser.has_section("calibration"):
            ref_params = tuple(sorted(("L" if k == "l" else k, float(v)) for k, v in parser.items("calibration")
                                      if k not in {"table", "reference", "window", "e"}))
        energies = get("plots", "energies")
        L = get("potential", "L") or get("potential", "l")
        weyl_E = get("weyl", "E")
        order = get("solver", "order", "auto")
        cfg = ExperimentConfig(
            mode=get("experiment", "mode", ""),
            potential="file" if pot_file else (pot_name or ""),
            params=params,
            polynomial_file=pot_file,
            n=int(get("potential", "n", "1")),
            L=float(L) if L else None,
            window=window,
            ladder=ladder,
            grid_step=_float_or_auto(get("grid", "step", "auto")),
            M=_float_or_auto(get("testfn", "M", "auto")),
            j0=int(get("testfn", "j0", "3")),
            parities=tuple(p.strip() for p in get("testfn", "parity", "even,odd").split(",") if p.strip()),
            invert_M=float(get("testfn", "invert_M", "0.45")),
            log_M=float(get("testfn", "log_M", "0.2")),
            confirm=float(get("testfn", "confirm", "0.01")),
            ppw=_float_or_auto(get("solver", "points_per_wavelength", "auto")),
            order=order if order == "auto" else int(order),
            oracle=get("solver", "oracle", "false").lower() in ("1", "true", "yes", "on"),
            weyl_E=float(weyl_E) if weyl_E else None,
            weyl_M=float(get("weyl", "M", "2.8")),
            calibration_table=get("calibration", "table"),
            reference=get("calibration", "reference"),
            reference_params=ref_params,
            reference_window=tuple(float(v) for v in ref_window.split(",")) if ref_window else None,
            reference_E=float(get("calibration", "E")) if get("calibration", "E") else None,
            plot_energies=tuple(float(v) for v in energies.split(",")) if energies else (),
            out=get("experiment", "out", "probe-out"),
            seed=int(get("experiment", "seed", "0")),
            base_dir=base_dir,
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed config: {exc}") from None
    return cfg


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str.lower
    return parser


def apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, option = key.strip().split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option.strip().lower(), value.strip())


def load_config(path=None, text: str | None = None, overrides=(), mode: str | None = None,
                out: str | None = None, seed: int | None = None, ladder=None) -> ExperimentConfig:
    """Parse a config file (or text), apply command-line overrides, and validate."""
    parser = _new_parser()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = p.read_text()
        base = str(p.parent)
    else:
        base = "."
    try:
        parser.read_string(text or "")
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    apply_overrides(parser, overrides)
    cfg = _parse(parser, base)
    changes = {}
    if mode is not None:
        changes["mode"] = mode
    if out is not None:
        changes["out"] = out
    if seed is not None:
        changes["seed"] = seed
    if ladder is not None:
        changes["ladder"] = tuple(ladder)
    return replace(cfg, **changes).validate()


def parse_ladder(text: str) -> tuple:
    try:
        h0, rho, count = text.split(",")
        return float(h0), float(rho), int(count)
    except ValueError:
        raise ConfigError(f"--hbar-ladder wants h0,rho,count; got {text!r}") from None
