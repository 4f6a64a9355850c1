"""Scenario execution and figure reproduction, producing CSV tables."""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import channel as ch
from .config import ScenarioConfig, config_from_entries, fmt, parse_grid, parse_text
from .errors import NoPositiveRate
from .estimator import build_lp, solve_bounds_lp
from .keyrate import Scenario, key_rate, max_distance, sweep_distance
from .scattering import EmitterSpec, PulseSpec, count_channel_distributions
from .sources import (SourceStateSpec, distribution_stats, matched_poisson, tlss_distribution,
                      tlss_states, table_path)

log = logging.getLogger(__name__)


@dataclass
class OutputTable:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: list = field(default_factory=list)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row {r!r} does not match columns {self.columns}")

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        out = io.StringIO()
        for k, v in self.metadata:
            out.write(f"# {k} = {v}\n")
        out.write(",".join(self.columns) + "\n")
        for r in self.rows:
            out.write(",".join(_cell(x) for x in r) + "\n")
        return out.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_csv())


def _cell(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return fmt(x)
    return str(x)


def read_csv(path):
    """Parse a table written by :meth:`OutputTable.write`.

    Returns ``(metadata entries, columns, rows)`` with rows as strings.
    """
    meta, columns, rows = {}, None, []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.startswith("# "):
            k, v = line[2:].split(" = ", 1)
            meta[k] = (v, lineno)
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, columns, rows


def config_from_csv(path) -> tuple[ScenarioConfig, str]:
    """Rebuild the config (and table name) echoed in a CSV header."""
    meta, _, _ = read_csv(path)
    table = meta["wgqkd.table"][0]
    entries = {k: v for k, v in meta.items() if not k.startswith("wgqkd.")}
    return config_from_entries(entries, Path(path).parent), table


# --- figures -------------------------------------------------------------------

FIGURE_DEFAULTS = {
    "fig1": """
        figure.gamma_over_sigma = 0.2,0.5,1,2,5,10
        figure.nbar = 1.0
        figure.purcell = 20.0
        figure.inset_sigma = 0.5
        figure.inset_n = 6
    """,
    "fig2": """
        figure.l_km = 0:160:5
        figure.sigma = 0.5
        figure.purcell = 20.0
        figure.nbar_signal = 1.0
        figure.nbar_decoy = 0.02
        figure.hsps_signal = pkgdata:hsps_signal.txt
        figure.hsps_decoy = pkgdata:hsps_decoy.txt
        figure.tol_km = 0.1
    """,
    "fig3a": """
        figure.l_km = 0:160:5
        figure.sigma_curves = 5,2,1,0.5
        figure.lmax_gamma_over_sigma = 0.2,0.5,1,2,5,10
        figure.purcell = 20.0
        figure.nbar_signal = 1.0
        figure.nbar_decoy = 0.02
        figure.tol_km = 0.1
    """,
    "fig3b": """
        figure.l_km = 0:160:5
        figure.purcell_curves = 2,5,10,20
        figure.lmax_purcell = 2,5,10,20,50
        figure.sigma = 0.5
        figure.nbar_signal = 1.0
        figure.nbar_decoy = 0.02
        figure.tol_km = 0.1
    """,
}


def figure_config(fig_id: str, overrides: str = "") -> ScenarioConfig:
    """Default configuration for ``fig_id``; ``overrides`` is config text."""
    if fig_id not in FIGURE_DEFAULTS:
        raise ValueError(f"unknown figure {fig_id!r}")
    entries = parse_text(f"run.mode = {fig_id}\n" + FIGURE_DEFAULTS[fig_id])
    for k, v in parse_text(overrides).items():
        entries[k] = v
    return config_from_entries(entries)


def _fl(cfg, key):
    return float(cfg.figure[key])


def _grid(cfg, key):
    return parse_grid(cfg.figure[key])


def _tlss_scenario(cfg, sigma, purcell):
    states = tlss_states(sigma, purcell, _fl(cfg, "nbar_signal"), _fl(cfg, "nbar_decoy"))
    return Scenario(tuple(states), cfg.channel, cfg.protocol, cfg.estimator, cfg.n_cut)


def _fig1(cfg):
    nbar, purcell = _fl(cfg, "nbar"), _fl(cfg, "purcell")
    emitter = EmitterSpec.from_purcell(purcell)
    rows = []
    for g in _grid(cfg, "gamma_over_sigma"):
        d = tlss_distribution(emitter, PulseSpec(nbar, 1.0 / g), cfg.n_cut)
        cs = matched_poisson(d, cfg.n_cut)
        st = distribution_stats(d)
        rows.append((g, st.mean, d[0], d[1], d.multiphoton_mass(), cs[0], cs[1],
                     cs.multiphoton_mass(), st.mandel_q))
    main = OutputTable("fig1", ["gamma_over_sigma", "mean", "P0_2lss", "P1_2lss", "Pmulti_2lss",
                                "P0_cs", "P1_cs", "Pmulti_cs", "mandel_q_2lss"], rows)
    d = tlss_distribution(emitter, PulseSpec(nbar, _fl(cfg, "inset_sigma")), cfg.n_cut)
    cs = matched_poisson(d, cfg.n_cut)
    inset = OutputTable("fig1_inset", ["n", "P_2lss", "P_cs"],
                        [(n, d[n], cs[n]) for n in range(int(_fl(cfg, "inset_n")) + 1)])
    return [main, inset]


def _lmax_or_zero(scenario, tol):
    try:
        return max_distance(scenario, tol)
    except NoPositiveRate as exc:
        log.info("no positive rate: %s", exc)
        return 0.0


def _fig2(cfg):
    l_km = _grid(cfg, "l_km")
    tol = _fl(cfg, "tol_km")
    wcs = Scenario((), cfg.channel, cfg.protocol, cfg.estimator, cfg.n_cut, optimize_wcs=True)
    hsps = Scenario((
        SourceStateSpec("signal", "hsps-table", {"path": cfg.figure["hsps_signal"]}),
        SourceStateSpec("weak-decoy", "hsps-table", {"path": cfg.figure["hsps_decoy"]}),
        SourceStateSpec("vacuum-decoy", "vacuum"),
    ), cfg.channel, cfg.protocol, cfg.estimator, cfg.n_cut)
    tl = _tlss_scenario(cfg, _fl(cfg, "sigma"), _fl(cfg, "purcell"))
    pw = sweep_distance(wcs, l_km)
    ph = sweep_distance(hsps, l_km)
    pt = sweep_distance(tl, l_km)
    rates = OutputTable("fig2_rates", ["l_km", "R_wcs", "mu_wcs", "nu_wcs", "R_hsps", "R_2lss"],
                        [(l, a.rate, a.mu, a.nu, b.rate, c.rate)
                         for l, a, b, c in zip(l_km, pw, ph, pt)])
    lmax = OutputTable("fig2_lmax", ["source", "l_max_km"],
                       [(name, _lmax_or_zero(s, tol))
                        for name, s in (("wcs", wcs), ("hsps", hsps), ("2lss", tl))])
    return [rates, lmax]


def _fig3(cfg, curves_key, param, curve_scen, lmax_key, lmax_scen):
    l_km = _grid(cfg, "l_km")
    tol = _fl(cfg, "tol_km")
    curves = _grid(cfg, curves_key)
    sweeps = [sweep_distance(curve_scen(v), l_km) for v in curves]
    cols = ["l_km"] + [f"R_{param}_{fmt(v)}" for v in curves]
    rates = OutputTable(f"{cfg.mode}_rates", cols,
                        [(l,) + tuple(s[i].rate for s in sweeps) for i, l in enumerate(l_km)])
    lmax = OutputTable(f"{cfg.mode}_lmax", [lmax_key, "l_max_km"],
                       [(v, _lmax_or_zero(lmax_scen(v), tol)) for v in _grid(cfg, "lmax_" + lmax_key)])
    return [rates, lmax]


def _fig3a(cfg):
    purcell = _fl(cfg, "purcell")
    return _fig3(cfg, "sigma_curves", "sigma", lambda s: _tlss_scenario(cfg, s, purcell),
                 "gamma_over_sigma", lambda g: _tlss_scenario(cfg, 1.0 / g, purcell))


def _fig3b(cfg):
    sigma = _fl(cfg, "sigma")
    scen = lambda p: _tlss_scenario(cfg, sigma, p)
    return _fig3(cfg, "purcell_curves", "P", scen, "purcell", scen)


# --- scenario modes --------------------------------------------------------------

def _sweep(cfg):
    scen = cfg.scenario()
    pts = sweep_distance(scen, cfg.l_km)
    cols = ["l_km", "R", "Q_s", "E_s", "Y1_lower", "e1_upper"]
    rows = [(p.distance_km, p.rate, p.q_s, p.e_s, p.y1_lower, p.e1_upper) for p in pts]
    if cfg.optimize_wcs:
        cols += ["mu", "nu"]
        rows = [r + (p.mu, p.nu) for r, p in zip(rows, pts)]
    return [OutputTable("sweep", cols, rows)]


def _max_distance(cfg):
    return [OutputTable("max_distance", ["l_max_km"], [(max_distance(cfg.scenario(), cfg.tol_km),)])]


def _source_stats(cfg):
    rows = []
    for s in cfg.sources:
        d = s.resolve(cfg.n_cut)
        st = distribution_stats(d)
        rows.append((s.label, s.role, s.kind, st.mean, st.variance, st.mandel_q,
                     d[0], d[1], st.multiphoton_mass, d.tail_mass))
    return [OutputTable("source_stats", ["label", "role", "kind", "mean", "variance", "mandel_q",
                                         "P0", "P1", "Pmulti", "tail"], rows)]


def read_measurements(path):
    """``label Q E uncertainty`` per line, ``#`` comments allowed."""
    out = {}
    for lineno, raw in enumerate(table_path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) not in (3, 4):
            raise ValueError(f"{path}:{lineno}: expected 'label Q E [uncertainty]'")
        label, q, e = line[0], float(line[1]), float(line[2])
        u = float(line[3]) if len(line) == 4 else 0.0
        if label in out:
            raise ValueError(f"{path}:{lineno}: label {label!r} repeated")
        out[label] = (q, e, u)
    return out


def _estimate(cfg):
    meas = read_measurements(cfg.measurement_path)
    obs = []
    signal = None
    for s in cfg.sources:
        d = s.resolve(cfg.n_cut)
        if s.label not in meas:
            raise ValueError(f"no measurement for source {s.label!r}")
        q, e, u = meas[s.label]
        obs.append(ch.Observation(d, q, e, u, s.label))
        if s.role == "signal":
            signal = obs[-1]
    bounds = solve_bounds_lp(build_lp(obs, cfg.n_cut))
    rate = key_rate(signal.gain, signal.qber, signal.distribution[1], bounds, cfg.protocol)
    return [OutputTable("estimate", ["Q_s", "E_s", "Y1_lower", "e1_upper", "Q1_lower", "R"],
                        [(signal.gain, signal.qber, bounds.y1_lower, bounds.e1_upper,
                          signal.distribution[1] * bounds.y1_lower, rate)])]


_MODES = {"sweep": _sweep, "max-distance": _max_distance, "source-stats": _source_stats,
          "estimate": _estimate, "fig1": _fig1, "fig2": _fig2, "fig3a": _fig3a, "fig3b": _fig3b}


def run_scenario(cfg: ScenarioConfig) -> list[OutputTable]:
    """Run the configured mode; every table carries the full parameter echo."""
    tables = _MODES[cfg.mode](cfg)
    for t in tables:
        t.metadata = [("wgqkd.version", __version__), ("wgqkd.table", t.name),
                      ("wgqkd.config_hash", cfg.digest())] + cfg.echo()
    return tables


def reproduce_figure(fig_id: str, overrides: str = "") -> list[OutputTable]:
    return run_scenario(figure_config(fig_id, overrides))


def trace_rows(cfg: ScenarioConfig, every: int = 10):
    """Per-step hierarchy traces for every tlss source, keyed by label."""
    from .scattering import SimGrid, trace_history
    out = {}
    for s in cfg.sources:
        if s.kind != "tlss":
            continue
        emitter = EmitterSpec.from_purcell(float(s.params["purcell"]))
        pulse = PulseSpec(float(s.params["nbar"]), float(s.params["sigma"]))
        res = count_channel_distributions(emitter, pulse)
        grid = SimGrid(res.grid.t_start, res.grid.t_end, res.grid.step * 2, res.grid.n_max)
        rec = trace_history(emitter, pulse, grid, every)
        n = grid.n_max
        cols = ["t"] + [f"tr_rho{k}" for k in range(n + 1)] + ["tr_rho_over", "excitation"]
        out[s.label] = OutputTable(f"trace_{s.label}", cols, [tuple(r) for r in rec])
    return out
