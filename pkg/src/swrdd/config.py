"""
TOML run configuration and experiment presets.

Top-level keys map one to one onto :class:`RunConfig` fields; the
transmission operator lives in a ``[transmission]`` table::

    preset = "harmonic_neg"
    n_sub = 4
    algorithm = "new"
    krylov = "gmres"

    [transmission]
    family = "potential"
    order = 2
"""

import dataclasses
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .drivers import INITIAL_DATA, RunConfig
from .errors import InvalidOrder, ParseError
from .potentials import NAMED
from .transmission import TransmissionSpec

PRESETS = {
    "zero": {"potential": "zero", "u0": "gaussian"},
    "harmonic_neg": {"potential": "harmonic_neg", "u0": "gaussian"},
    "linear_tx": {"potential": "linear_tx", "u0": "gaussian"},
    "cubic_nls": {"potential": "cubic_nls", "u0": "soliton"},
}

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_TRANSMISSION_KEYS = {"family", "order", "p", "m"}
_ALIASES = {"n_subdomains": "n_sub", "N": "n_sub", "tol_outer": "tol", "out": "out_dir"}


def _typed(key, value):
    field = _FIELDS[key]
    default = field.default if field.default is not dataclasses.MISSING else None
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, str)
    if not ok:
        raise ParseError("key %r: expected %s, got %r" % (key, type(default).__name__, value))
    return value


def potential_key(value):
    """Validate a potential selector: preset name or an inline expression."""
    if not isinstance(value, str) or not value.strip():
        raise ParseError("key 'potential' is empty; give a name (%s) or 'expr:<V(x)>'"
                         % ", ".join(sorted(NAMED)))
    value = value.strip()
    if value.startswith("expr:") or value in NAMED:
        return value
    raise ParseError("key 'potential': unknown name %r" % value)


def build_config(values: dict, transmission: dict = None) -> RunConfig:
    """Apply a preset (if any), then explicit values, onto the defaults."""
    values = dict(values)
    preset = values.pop("preset", None)
    merged = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ParseError("key 'preset': unknown preset %r (known: %s)"
                             % (preset, ", ".join(sorted(PRESETS))))
        merged.update(PRESETS[preset])
    for key, value in values.items():
        key = _ALIASES.get(key, key)
        if key not in _FIELDS or key == "transmission":
            raise ParseError("unknown key %r" % key)
        merged[key] = _typed(key, value)
    if "potential" in merged or "potential" in values:
        merged["potential"] = potential_key(merged.get("potential"))
        if merged["potential"].startswith("expr:"):
            try:
                RunConfig(potential=merged["potential"]).make_potential()
            except Exception as exc:
                raise ParseError("key 'potential': cannot parse expression (%s)" % exc)
    if "u0" in merged and merged["u0"] not in INITIAL_DATA:
        raise ParseError("key 'u0': unknown initial datum %r" % merged["u0"])
    tr = dict(transmission or {})
    unknown = set(tr) - _TRANSMISSION_KEYS
    if unknown:
        raise ParseError("unknown key(s) in [transmission]: %s" % ", ".join(sorted(unknown)))
    try:
        merged["transmission"] = TransmissionSpec(**tr)
    except (InvalidOrder, TypeError) as exc:
        raise ParseError("[transmission]: %s" % exc)
    for key in ("T", "dt", "dx", "tol"):
        if key in merged and not merged[key] > 0:
            raise ParseError("key %r must be positive (got %r)" % (key, merged[key]))
    for key in ("n_sub", "maxit", "restart", "threads", "maxit_fp"):
        if key in merged and merged[key] < 1:
            raise ParseError("key %r must be >= 1 (got %r)" % (key, merged[key]))
    try:
        cfg = RunConfig(**merged)
        cfg.n_steps
    except ValueError as exc:
        raise ParseError(str(exc))
    return cfg


def parse_config_text(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        where = ""
        if getattr(exc, "lineno", None):
            where = " at line %d, column %d" % (exc.lineno, exc.colno)
        raise ParseError("invalid TOML%s: %s" % (where, getattr(exc, "msg", exc)))
    transmission = data.pop("transmission", None)
    if transmission is not None and not isinstance(transmission, dict):
        raise ParseError("key 'transmission' must be a table")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ParseError("unknown table [%s]" % key)
    return build_config(data, transmission)


def parse_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError("cannot read %s: %s" % (path, exc))
    try:
        return parse_config_text(text)
    except ParseError as exc:
        raise ParseError("%s: %s" % (path, exc))


def config_to_dict(cfg: RunConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["transmission"] = dataclasses.asdict(cfg.transmission)
    return out
