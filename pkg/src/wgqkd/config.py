"""Scenario configuration files.

Grammar (one entry per line)::

    line    := blank | comment | entry
    comment := '#' anything
    entry   := key '=' value [ '#' comment ]
    key     := section ('.' name)+          e.g. channel.alpha_db_per_km

Keys are case-sensitive; values are stripped of surrounding whitespace.
A key may appear only once.  Recognized keys:

    run.mode              sweep | max-distance | source-stats | estimate |
                          fig1 | fig2 | fig3a | fig3b
    channel.<field>       alpha_db_per_km, eta_bob, y0, e0, ed
    protocol.<field>      q, f
    estimator.method      lp | analytic
    estimator.n_cut       integer
    wcs.optimize          true | false  (re-optimize WCS μ, ν per distance)
    source.<label>.role   signal | weak-decoy | vacuum-decoy
    source.<label>.kind   wcs | hsps-table | tlss | vacuum
    source.<label>.mu     (wcs)
    source.<label>.path   (hsps-table; relative to the config file, or
                          ``pkgdata:<name>`` for tables shipped with the package)
    source.<label>.nbar, .sigma, .purcell   (tlss; rates in units of Γ)
    sweep.l_km            'start:stop:step' (inclusive) or comma list
    sweep.tol_km          bisection tolerance for max-distance
    measurement.path      table for estimate mode: 'label Q E uncertainty' per line
    figure.<param>        figure-specific grids (see wgqkd.figures)
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams
from .errors import ConfigParseError
from .keyrate import ProtocolParams, Scenario
from .sources import DEFAULT_N_CUT, KINDS, ROLES, SourceStateSpec, table_path

log = logging.getLogger(__name__)

MODES = ("sweep", "max-distance", "source-stats", "estimate", "fig1", "fig2", "fig3a", "fig3b")

_CHANNEL_KEYS = ("alpha_db_per_km", "eta_bob", "y0", "e0", "ed")
_PROTOCOL_KEYS = ("q", "f")
_SOURCE_KEYS = {"role", "kind", "mu", "path", "nbar", "sigma", "purcell"}
_KIND_PARAMS = {"wcs": ("mu",), "hsps-table": ("path",), "tlss": ("nbar", "sigma", "purcell"),
                "vacuum": ()}


def fmt(v) -> str:
    """Canonical text for a config value (floats round-trip exactly)."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(fmt(x) for x in v)
    return str(v)


def parse_text(text: str) -> dict:
    """Split config text into ``{key: (value, line_number)}``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or any(not part for part in key.split(".")):
            raise ConfigParseError("malformed key", line=lineno, key=key)
        if key in out:
            raise ConfigParseError("duplicate key", line=lineno, key=key)
        out[key] = (value, lineno)
    return out


@dataclass
class ScenarioConfig:
    mode: str = "sweep"
    channel: ChannelParams = field(default_factory=ChannelParams)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    estimator: str = "lp"
    n_cut: int = DEFAULT_N_CUT
    optimize_wcs: bool = False
    sources: list = field(default_factory=list)
    l_km: tuple = tuple(float(x) for x in range(0, 151, 10))
    tol_km: float = 0.1
    measurement_path: str = ""
    figure: dict = field(default_factory=dict)

    def scenario(self) -> Scenario:
        return Scenario(tuple(self.sources), self.channel, self.protocol, self.estimator,
                        self.n_cut, self.optimize_wcs)

    def echo(self) -> list:
        """Every parameter as ``(key, text)``, in a fixed order."""
        items = [("run.mode", self.mode)]
        items += [(f"channel.{k}", fmt(getattr(self.channel, k))) for k in _CHANNEL_KEYS]
        items += [(f"protocol.{k}", fmt(getattr(self.protocol, k))) for k in _PROTOCOL_KEYS]
        items += [("estimator.method", self.estimator), ("estimator.n_cut", fmt(self.n_cut)),
                  ("wcs.optimize", fmt(self.optimize_wcs))]
        for s in self.sources:
            items += [(f"source.{s.label}.role", s.role), (f"source.{s.label}.kind", s.kind)]
            for k in _KIND_PARAMS[s.kind]:
                items.append((f"source.{s.label}.{k}", fmt(s.params[k])))
        if self.mode in ("sweep",):
            items.append(("sweep.l_km", fmt(list(self.l_km))))
        if self.mode == "max-distance":
            items.append(("sweep.tol_km", fmt(self.tol_km)))
        if self.mode == "estimate":
            items.append(("measurement.path", self.measurement_path))
        for k in sorted(self.figure):
            items.append((f"figure.{k}", fmt(self.figure[k])))
        return items

    def text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.echo())

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()[:16]


def _float(entries, key, default):
    if key not in entries:
        return default
    value, line = entries[key]
    try:
        return float(value)
    except ValueError:
        raise ConfigParseError(f"not a number: {value!r}", line=line, key=key) from None


def _int(entries, key, default):
    if key not in entries:
        return default
    value, line = entries[key]
    try:
        return int(value)
    except ValueError:
        raise ConfigParseError(f"not an integer: {value!r}", line=line, key=key) from None


def _bool(entries, key, default):
    if key not in entries:
        return default
    value, line = entries[key]
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise ConfigParseError(f"not a boolean: {value!r}", line=line, key=key)


def parse_grid(value: str) -> tuple:
    """'0:150:10' (inclusive) or '0,20,50'."""
    value = value.strip()
    if ":" in value:
        start, stop, step = (float(x) for x in value.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9))
        return tuple(float(np.round(start + i * step, 10)) for i in range(n + 1))
    return tuple(float(x) for x in value.split(",") if x.strip())


def _grid(entries, key, default):
    if key not in entries:
        return default
    value, line = entries[key]
    try:
        return parse_grid(value)
    except ValueError as exc:
        raise ConfigParseError(f"bad grid {value!r}: {exc}", line=line, key=key) from None


def resolve_path(value: str, base_dir: Path) -> str:
    if value.startswith("pkgdata:"):
        return value
    p = Path(value)
    return str(p if p.is_absolute() else (base_dir / p).resolve())


def _sources(entries, base_dir):
    labels = []
    for key in entries:
        if key.startswith("source."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _SOURCE_KEYS:
                raise ConfigParseError("unknown source field", line=entries[key][1], key=key)
            if parts[1] not in labels:
                labels.append(parts[1])
    out = []
    for label in labels:
        pre = f"source.{label}."
        get = lambda k: entries.get(pre + k, (None, None))
        role, rline = get("role")
        kind, kline = get("kind")
        if role not in ROLES:
            raise ConfigParseError(f"role must be one of {ROLES}", line=rline, key=pre + "role")
        if role == "vacuum-decoy" and kind is None:
            kind = "vacuum"
        if kind not in KINDS:
            raise ConfigParseError(f"kind must be one of {KINDS}", line=kline, key=pre + "kind")
        params = {}
        for k in _KIND_PARAMS[kind]:
            if k == "purcell" and pre + k not in entries:
                params[k] = math.inf
                continue
            if pre + k not in entries:
                raise ConfigParseError(f"missing parameter for kind {kind}", line=kline, key=pre + k)
            if k == "path":
                value, line = entries[pre + k]
                path = resolve_path(value, base_dir)
                if not table_path(path).is_file():
                    raise ConfigParseError(f"table file not found: {table_path(path)}", line=line,
                                           key=pre + k)
                params[k] = path
            else:
                params[k] = _float(entries, pre + k, None)
        try:
            out.append(SourceStateSpec(role, kind, params, label))
        except ValueError as exc:
            raise ConfigParseError(str(exc), line=rline, key=pre + "role") from None
    return out


def config_from_entries(entries: dict, base_dir=".") -> ScenarioConfig:
    base_dir = Path(base_dir)
    known_sections = ("run", "channel", "protocol", "estimator", "wcs", "source", "sweep",
                      "measurement", "figure", "output")
    for key, (_, line) in entries.items():
        if key.split(".")[0] not in known_sections:
            raise ConfigParseError("unknown section", line=line, key=key)
    mode = entries.get("run.mode", ("sweep", None))
    if mode[0] not in MODES:
        raise ConfigParseError(f"mode must be one of {MODES}", line=mode[1], key="run.mode")
    cfg = ScenarioConfig(mode=mode[0])
    try:
        cfg.channel = ChannelParams(**{k: _float(entries, f"channel.{k}", getattr(cfg.channel, k))
                                       for k in _CHANNEL_KEYS})
        cfg.protocol = ProtocolParams(**{k: _float(entries, f"protocol.{k}", getattr(cfg.protocol, k))
                                         for k in _PROTOCOL_KEYS})
    except ValueError as exc:
        raise ConfigParseError(str(exc)) from None
    for key in entries:
        sec = key.split(".")[0]
        if sec in ("channel", "protocol") and key.split(".", 1)[1] not in (
                _CHANNEL_KEYS if sec == "channel" else _PROTOCOL_KEYS):
            raise ConfigParseError("unknown parameter", line=entries[key][1], key=key)
    est = entries.get("estimator.method", ("lp", None))
    if est[0] not in ("lp", "analytic"):
        raise ConfigParseError("estimator must be lp or analytic", line=est[1], key="estimator.method")
    cfg.estimator = est[0]
    cfg.n_cut = _int(entries, "estimator.n_cut", cfg.n_cut)
    cfg.optimize_wcs = _bool(entries, "wcs.optimize", False)
    cfg.sources = _sources(entries, base_dir)
    cfg.l_km = _grid(entries, "sweep.l_km", cfg.l_km)
    cfg.tol_km = _float(entries, "sweep.tol_km", cfg.tol_km)
    if "measurement.path" in entries:
        value, line = entries["measurement.path"]
        cfg.measurement_path = resolve_path(value, base_dir)
        if not table_path(cfg.measurement_path).is_file():
            raise ConfigParseError(f"measurement file not found: {cfg.measurement_path}",
                                   line=line, key="measurement.path")
    elif cfg.mode == "estimate":
        raise ConfigParseError("estimate mode needs measurement.path", key="measurement.path")
    cfg.figure = {k.split(".", 1)[1]: v for k, (v, _) in entries.items() if k.startswith("figure.")}

    if cfg.mode in ("sweep", "max-distance", "estimate", "source-stats") and not cfg.optimize_wcs:
        signals = [s for s in cfg.sources if s.role == "signal"]
        if len(signals) != 1:
            raise ConfigParseError(f"exactly one signal state required, found {len(signals)}",
                                   key="source.*.role")
        if not any(s.role == "vacuum-decoy" for s in cfg.sources):
            log.warning("no vacuum decoy configured; adding one")
            cfg.sources.append(SourceStateSpec("vacuum-decoy", "vacuum", {}, "vacuum"))
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc.strerror}") from None
    return config_from_entries(parse_text(text), path.parent)


def loads(text: str, base_dir=".") -> ScenarioConfig:
    return config_from_entries(parse_text(text), base_dir)
