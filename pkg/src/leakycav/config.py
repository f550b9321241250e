"""Experiment configuration: INI files with dotted section names.

Example::

    [scheme]
    mode = replacement          ; replacement | coefficients | reflecting
    gamma = 1.0
    omega0 = 0.0
    a_internal = 0.3+0.1j

    [scheme.bs1]
    theta = 0.4
    mu = 0.1
    nu = 0.2
    ; [scheme.bs2] likewise; [scheme.bs3] also takes phi

    [state]
    kind = odd_cat              ; vacuum | coherent | odd_cat
    amplitude = 0.7

    [detection]
    eta_c = 0.95
    s = -1
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bs_network import BeamSplitterParams, ReplacementScheme, coefficients, reflecting_scheme
from .errors import ConfigError
from .fock_engine import N_MAX, TAIL_TOL, DensityMatrix, coherent_state, odd_cat_state
from .noise_model import CavityCoefficients, check_constraints

SCHEME_MODES = ("replacement", "coefficients", "reflecting")
STATE_KINDS = ("vacuum", "coherent", "odd_cat")


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self._items = parser[name] if parser.has_section(name) else None

    def _raw(self, key: str, default):
        if self._items is None or key not in self._items:
            if default is _REQUIRED:
                raise ConfigError(f"missing required field {self.name}.{key}")
            return default
        return self._items[key].strip()

    def float(self, key: str, default=None):
        return self._convert(key, default, float)

    def int(self, key: str, default=None):
        return self._convert(key, default, int)

    def complex(self, key: str, default=None):
        return self._convert(key, default, lambda v: complex(v.replace(" ", "")))

    def complex_list(self, key: str, default=None):
        return self._convert(key, default,
                             lambda v: tuple(complex(p.replace(" ", "")) for p in v.split(",")))

    def str(self, key: str, default=None):
        return self._raw(key, default)

    def _convert(self, key, default, kind):
        raw = self._raw(key, default)
        if not isinstance(raw, str):
            return raw
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"field {self.name}.{key}: cannot parse {raw!r}") from exc


_REQUIRED = object()


@dataclass(frozen=True)
class GridSpec:
    re_min: float = -1.5
    re_max: float = 1.5
    im_min: float = -1.5
    im_max: float = 1.5
    step: float = 0.15

    def points(self) -> list:
        def axis(lo, hi):
            n = int(round((hi - lo) / self.step))
            return lo + self.step * np.arange(n + 1)

        res = axis(self.re_min, self.re_max)
        ims = axis(self.im_min, self.im_max)
        # rounded so that printed coordinates are exact multiples of the step
        return [complex(round(x, 12), round(y, 12)) for x in res for y in ims]

    def as_dict(self) -> dict:
        return {"re_min": self.re_min, "re_max": self.re_max, "im_min": self.im_min,
                "im_max": self.im_max, "step": self.step}


@dataclass(frozen=True)
class ExperimentConfig:
    cavity: CavityCoefficients
    scheme: Optional[ReplacementScheme]
    scheme_mode: str
    state_kind: str = "vacuum"
    state_amplitude: complex = 0j
    n_max: int = N_MAX
    tail_tol: float = TAIL_TOL
    eta_c: float = 1.0
    s: float = -1.0
    r: float = 10.0
    beta: complex = 0j
    grid: GridSpec = field(default_factory=GridSpec)
    events: int = 170_000
    seed: int = 0
    out_dir: str = "."
    prefix: str = ""

    def state(self) -> DensityMatrix:
        dim = self.n_max + 1
        if self.state_kind == "vacuum":
            return DensityMatrix.vacuum(dim)
        if self.state_kind == "coherent":
            return coherent_state(self.state_amplitude, dim, self.tail_tol)
        return odd_cat_state(self.state_amplitude, dim, self.tail_tol)

    def echo(self) -> dict:
        return {
            "scheme_mode": self.scheme_mode,
            "state": {"kind": self.state_kind, "amplitude": str(self.state_amplitude),
                      "n_max": self.n_max, "tail_tol": self.tail_tol},
            "detection": {"eta_c": self.eta_c, "s": self.s, "r": self.r, "beta": str(self.beta)},
            "grid": self.grid.as_dict(),
            "sampling": {"events": self.events, "seed": self.seed},
        }


def _beam_splitter(parser, name: str, asymmetric: bool) -> BeamSplitterParams:
    sec = _Section(parser, name)
    theta = sec.float("theta", _REQUIRED)
    mu = sec.float("mu", 0.0)
    nu = sec.float("nu", 0.0)
    if asymmetric:
        return BeamSplitterParams.asymmetric(theta, mu, nu, sec.float("phi", 0.0))
    return BeamSplitterParams(theta, mu, nu)


def _cavity(parser):
    sec = _Section(parser, "scheme")
    mode = sec.str("mode", "replacement")
    if mode not in SCHEME_MODES:
        raise ConfigError(f"field scheme.mode: expected one of {SCHEME_MODES}, got {mode!r}")
    if mode == "coefficients":
        co = _Section(parser, "coefficients")
        c = CavityCoefficients(
            gamma_total=co.float("gamma_total", _REQUIRED),
            omega_cav=co.float("omega_cav", 0.0),
            t_c=co.complex("t_c", _REQUIRED), t_o=co.complex("t_o", _REQUIRED),
            r_o=co.complex("r_o", _REQUIRED),
            a_c=co.complex_list("a_c", _REQUIRED), a_o=co.complex_list("a_o", _REQUIRED))
        report = check_constraints(c)
        if not report.passed:
            raise ConfigError(
                "coefficients violate the commutator constraints (residuals "
                + ", ".join(f"{r:.2e}" for r in report.residuals) + ")")
        return c, None, mode
    if mode == "reflecting":
        scheme = reflecting_scheme(sec.float("eta_ext", _REQUIRED),
                                   sec.float("gamma_total", 1.0), sec.float("omega0", 0.0))
    else:
        scheme = ReplacementScheme(
            _beam_splitter(parser, "scheme.bs1", False),
            _beam_splitter(parser, "scheme.bs2", False),
            _beam_splitter(parser, "scheme.bs3", True),
            gamma=sec.float("gamma", _REQUIRED),
            omega0=sec.float("omega0", 0.0),
            a_internal=sec.complex("a_internal", 0j))
    return coefficients(scheme), scheme, mode


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    try:
        cavity, scheme, mode = _cavity(parser)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid scheme: {exc}") from exc

    st = _Section(parser, "state")
    kind = st.str("kind", "vacuum")
    if kind not in STATE_KINDS:
        raise ConfigError(f"field state.kind: expected one of {STATE_KINDS}, got {kind!r}")
    amplitude = st.complex("amplitude", _REQUIRED if kind != "vacuum" else 0j)

    det = _Section(parser, "detection")
    eta_c = det.float("eta_c", 1.0)
    if not 0.0 < eta_c <= 1.0:
        raise ConfigError(f"field detection.eta_c must lie in (0, 1], got {eta_c}")
    s = det.float("s", -1.0)
    if s >= 1:
        raise ConfigError(f"field detection.s must be < 1, got {s}")
    r = det.float("r", 10.0)
    if r <= 0:
        raise ConfigError(f"field detection.r must be positive, got {r}")

    gs = _Section(parser, "grid")
    grid = GridSpec(gs.float("re_min", -1.5), gs.float("re_max", 1.5),
                    gs.float("im_min", -1.5), gs.float("im_max", 1.5), gs.float("step", 0.15))
    if grid.step <= 0 or grid.re_max < grid.re_min or grid.im_max < grid.im_min:
        raise ConfigError("grid must have a positive step and nonempty ranges")

    sa = _Section(parser, "sampling")
    events = sa.int("events", 170_000)
    if events < 1:
        raise ConfigError("field sampling.events must be >= 1")
    seed = sa.int("seed", 0)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("field sampling.seed must be an unsigned 64-bit integer")

    out = _Section(parser, "output")
    return ExperimentConfig(
        cavity=cavity, scheme=scheme, scheme_mode=mode,
        state_kind=kind, state_amplitude=amplitude,
        n_max=st.int("n_max", N_MAX), tail_tol=st.float("tail_tol", TAIL_TOL),
        eta_c=eta_c, s=s, r=r, beta=det.complex("beta", 0j),
        grid=grid, events=events, seed=seed,
        out_dir=out.str("dir", "."), prefix=out.str("prefix", ""))


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
