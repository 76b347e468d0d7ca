"""Scenario files: a flat ``key = value`` format with ``[section]`` headers.

Grammar (one statement per line)::

    [section]            # model, params, initial, integration, sweep
    key = value          # value is a number or, in [model], a bare word/path
    # comment            # also ';'; a trailing '# ...' after a value is ignored

Sections and keys are case-sensitive, each key may appear once. ``[model]``
takes ``kind`` (required) and ``output``; ``[params]`` the parameter names of
the chosen model; ``[initial]`` the state coordinates plus an optional
``provenance`` tag; ``[integration]`` any of ``dt``, ``t_end``, ``epsilon``,
``projection_tol``, ``record_stride``; ``[sweep]`` ``gamma_lo``,
``gamma_hi`` and ``n_points`` (all three or none).

Every error carries the 1-based line number it refers to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Union

from .errors import ParameterError
from .integrate import IntegrationConfig, default_dt
from .model import SiriParams, SisParams, VanillaSiriParams

MODELS = ("sis", "siri", "siri-vanilla", "reduced-sis", "reduced-siri-strong", "reduced-siri-weak")

SIS_KEYS = ("beta_u", "beta_p", "alpha", "gamma", "c_P", "c_IU", "c_IP", "L")
SIRI_KEYS = SIS_KEYS + ("beta_hat_u", "beta_hat_p")
VANILLA_KEYS = ("beta", "beta_hat", "gamma")

PARAM_KEYS = {"sis": SIS_KEYS, "siri": SIRI_KEYS, "siri-vanilla": VANILLA_KEYS,
              "reduced-sis": SIS_KEYS, "reduced-siri-strong": SIRI_KEYS, "reduced-siri-weak": SIRI_KEYS}
INITIAL_KEYS = {"sis": ("y", "z_S", "z_I"), "siri": ("s", "y", "r", "z_S", "z_I", "z_R"),
                "siri-vanilla": ("s", "y", "r"), "reduced-sis": ("y",),
                "reduced-siri-strong": ("y", "r"), "reduced-siri-weak": ("y", "r")}
INTEGRATION_KEYS = ("dt", "t_end", "epsilon", "projection_tol", "record_stride")
SWEEP_KEYS = ("gamma_lo", "gamma_hi", "n_points")
SECTIONS = ("model", "params", "initial", "integration", "sweep")

Params = Union[SisParams, SiriParams, VanillaSiriParams]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ConfigSyntaxError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class MissingKeyError(ConfigError):
    pass


class InvariantError(ConfigError):
    def __init__(self, message: str, line: int, invariant: str):
        self.invariant = invariant
        super().__init__(message, line)


class MalformedNumberError(ConfigError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    params: Params
    initial: tuple[float, ...]
    integration: IntegrationConfig
    sweep: Optional[tuple[float, float, int]] = None
    output_path: Optional[str] = None
    provenance: Optional[str] = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        expected = SiriParams if PARAM_KEYS[self.model] is SIRI_KEYS else (
            VanillaSiriParams if self.model == "siri-vanilla" else SisParams)
        if type(self.params) is not expected:
            raise ValueError(f"model {self.model} needs {expected.__name__}, got {type(self.params).__name__}")
        if len(self.initial) != len(INITIAL_KEYS[self.model]):
            raise ValueError(f"model {self.model} needs initial {INITIAL_KEYS[self.model]}")


class _Entry:
    __slots__ = ("value", "line")

    def __init__(self, value: str, line: int):
        self.value, self.line = value, line


def _tokenize(text: str) -> tuple[dict[str, dict[str, _Entry]], dict[str, int]]:
    sections: dict[str, dict[str, _Entry]] = {}
    headers: dict[str, int] = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigSyntaxError(f"unterminated section header {raw.strip()!r}", n)
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise UnknownKeyError(f"unknown section [{current}]; expected one of {', '.join(SECTIONS)}", n)
            if current in headers:
                raise ConfigSyntaxError(f"section [{current}] appears twice", n)
            headers[current] = n
            sections[current] = {}
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigSyntaxError(f"expected 'key = value', got {raw.strip()!r}", n)
        if current is None:
            raise ConfigSyntaxError(f"key {key!r} outside any section", n)
        if key in sections[current]:
            raise ConfigSyntaxError(f"key {key!r} repeated in [{current}]", n)
        sections[current][key] = _Entry(value, n)
    return sections, headers


def _number(entry: _Entry, key: str, integer: bool = False):
    try:
        v = int(entry.value) if integer else float(entry.value)
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise MalformedNumberError(f"{key} = {entry.value!r} is not {kind}", entry.line) from None
    if not integer and not math.isfinite(v):
        raise MalformedNumberError(f"{key} = {entry.value!r} is not finite", entry.line)
    return v


def _take(section: dict[str, _Entry], name: str, allowed, required, header_line: int, optional=()):
    for key, e in section.items():
        if key not in allowed and key not in optional:
            raise UnknownKeyError(f"unknown key {key!r} in [{name}]; allowed: {', '.join(allowed + tuple(optional))}",
                                  e.line)
    for key in required:
        if key not in section:
            raise MissingKeyError(f"missing required key {key!r} in [{name}]", header_line)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document."""
    sections, headers = _tokenize(text)
    for name in ("model", "params", "initial"):
        if name not in sections:
            raise MissingKeyError(f"missing required section [{name}]", 0)

    model_sec = sections["model"]
    _take(model_sec, "model", ("kind", "output"), ("kind",), headers["model"])
    kind_e = model_sec["kind"]
    if kind_e.value not in MODELS:
        raise InvariantError(f"kind = {kind_e.value!r} is not one of {', '.join(MODELS)}", kind_e.line,
                             "kind ∈ models")
    kind = kind_e.value
    output = model_sec["output"].value if "output" in model_sec else None

    pkeys = PARAM_KEYS[kind]
    psec = sections["params"]
    _take(psec, "params", pkeys, pkeys, headers["params"])
    values = {k: _number(psec[k], k) for k in pkeys}
    cls = VanillaSiriParams if kind == "siri-vanilla" else SiriParams if pkeys is SIRI_KEYS else SisParams
    try:
        params = cls(**values)
    except ParameterError as exc:
        line = min(psec[f].line for f in exc.fields if f in psec)
        raise InvariantError(str(exc), line, exc.invariant) from None

    ikeys = INITIAL_KEYS[kind]
    isec = sections["initial"]
    _take(isec, "initial", ikeys, ikeys, headers["initial"], optional=("provenance",))
    initial = tuple(_number(isec[k], k) for k in ikeys)
    provenance = isec["provenance"].value if "provenance" in isec else None
    for k, v in zip(ikeys, initial):
        if not 0.0 <= v <= 1.0:
            raise InvariantError(f"{k} = {v} outside [0,1]", isec[k].line, f"{k} ∈ [0,1]")
    if "s" in ikeys and abs(sum(initial[:3]) - 1.0) > 1e-9:
        raise InvariantError(f"s + y + r = {sum(initial[:3])!r}, not 1", isec["s"].line, "s + y + r = 1")
    if kind.startswith("reduced-siri") and initial[0] + initial[1] > 1.0:
        raise InvariantError("y + r exceeds 1", isec["y"].line, "y + r ≤ 1")

    integration = _parse_integration(sections.get("integration", {}))
    sweep = _parse_sweep(sections.get("sweep"), headers.get("sweep", 0))
    return ScenarioConfig(kind, params, initial, integration, sweep, output, provenance)


def _parse_integration(sec: dict[str, _Entry]) -> IntegrationConfig:
    _take(sec, "integration", INTEGRATION_KEYS, (), 0)
    kw = {}
    for k in INTEGRATION_KEYS:
        if k in sec:
            kw[k] = _number(sec[k], k, integer=(k == "record_stride"))
    eps = kw.get("epsilon", 1.0)
    kw.setdefault("dt", default_dt(eps) if 0 < eps <= 1 else 0.05)
    try:
        return IntegrationConfig(**kw)
    except ValueError as exc:
        bad = next((k for k in INTEGRATION_KEYS if k in sec and k in str(exc)), None)
        line = sec[bad].line if bad else min((e.line for e in sec.values()), default=0)
        raise InvariantError(str(exc), line, str(exc)) from None


def _parse_sweep(sec, header_line: int):
    if sec is None:
        return None
    _take(sec, "sweep", SWEEP_KEYS, SWEEP_KEYS, header_line)
    lo, hi = _number(sec["gamma_lo"], "gamma_lo"), _number(sec["gamma_hi"], "gamma_hi")
    n = _number(sec["n_points"], "n_points", integer=True)
    if not 0 < lo < hi:
        raise InvariantError("need 0 < gamma_lo < gamma_hi", sec["gamma_lo"].line, "0 < gamma_lo < gamma_hi")
    if n < 2:
        raise InvariantError("n_points must be at least 2", sec["n_points"].line, "n_points ≥ 2")
    return (lo, hi, n)


def render(config: ScenarioConfig) -> str:
    """Inverse of :func:`parse_config`; floats use ``repr`` so the round
    trip is exact."""
    lines = ["[model]", f"kind = {config.model}"]
    if config.output_path is not None:
        lines.append(f"output = {config.output_path}")
    lines += ["", "[params]"]
    lines += [f"{f.name} = {getattr(config.params, f.name)!r}" for f in fields(config.params)]
    lines += ["", "[initial]"]
    lines += [f"{k} = {v!r}" for k, v in zip(INITIAL_KEYS[config.model], config.initial)]
    if config.provenance is not None:
        lines.append(f"provenance = {config.provenance}")
    lines += ["", "[integration]"]
    lines += [f"{k} = {getattr(config.integration, k)!r}" for k in INTEGRATION_KEYS]
    if config.sweep is not None:
        lines += ["", "[sweep]"]
        lines += [f"{k} = {v!r}" for k, v in zip(SWEEP_KEYS, config.sweep)]
    return "\n".join(lines) + "\n"
