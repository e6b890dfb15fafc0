"""Experiment orchestration: config file parsing, single runs, sweeps.

Config files are flat ``key = value`` text (``#`` comments, lists separated
by commas, bumps by semicolons); the full schema is documented in the
README.  A single run executes every configured protocol on one deployment
and field, then writes the trace, energy, ratio, SNR, and compression tables
plus the closed-form report and a manifest sufficient to reproduce the run.

Seeding: the master seed drives the deployment directly; derived streams are
keyed as (master, 1) for the field and (master, 2) for measurement matrices,
and every sweep point gets its own master seed from the configured seed
list, so runs and sweep points never share RNG state.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, replace

from . import analytics, cs, protocols
from .deployment import ConfigError, DeployConfig, deploy_and_build, serialize_tree
from .field import FieldConfig, GaussianBump, sample_field

log = logging.getLogger("hdacs")

TOOL_VERSION = "0.1.0"

FIELD_STREAM = 1
MEASUREMENT_STREAM = 2


@dataclass(frozen=True)
class ExperimentConfig:
    node_count: int = 400
    cluster_factor: int = 4
    levels: int | None = None
    unit_area: float = 1.0
    placement: str = "uniform"
    seed: int = 1
    round_index: int = 0
    base_level: float = 20.0
    bumps: tuple = ()
    noise_halfwidth: float = 0.0
    truncation_alpha: float = 0.01
    sparsity: int | None = None
    protocols: tuple = ("HDACS", "NCS", "HCS")
    startup_energy: float = 1.0
    unit_cost: float = 1.0
    frame_mode: bool = False
    frame_size: int = 4
    strict_hcs: bool = False
    sweep_sizes: tuple = (300, 400, 500, 600, 700)
    sweep_factors: tuple = (4, 16)
    sweep_seeds: tuple = (1,)

    def __post_init__(self):
        if not self.protocols:
            raise ConfigError("protocols: list must not be empty")
        bad = [p for p in self.protocols if p not in protocols.Protocol.__members__]
        if bad:
            raise ConfigError(f"protocols: unknown entries {bad}")
        if not (0 < self.truncation_alpha <= 1):
            raise ConfigError("truncation_alpha: must be in (0, 1]")
        if self.sparsity is not None and self.sparsity < 1:
            raise ConfigError("sparsity: must be >= 1")
        if self.frame_size < 1:
            raise ConfigError("frame_size: must be >= 1")
        if not self.sweep_sizes or not self.sweep_factors or not self.sweep_seeds:
            raise ConfigError("sweep lists must not be empty")
        if min(self.startup_energy, self.unit_cost) <= 0:
            raise ConfigError("energy constants must be positive")

    @property
    def effective_sparsity(self):
        """Explicit override, else the truncation fraction applied to the
        whole network."""
        if self.sparsity is not None:
            return self.sparsity
        return max(1, math.ceil(self.truncation_alpha * self.node_count))

    def deploy_config(self):
        return DeployConfig(
            node_count=self.node_count,
            cluster_factor=self.cluster_factor,
            unit_area=self.unit_area,
            seed=self.seed,
            levels=self.levels,
            placement=self.placement,
        )

    def field_config(self):
        return FieldConfig(
            base_level=self.base_level,
            bumps=self.bumps,
            noise_halfwidth=self.noise_halfwidth,
            truncation_alpha=self.truncation_alpha,
            seed=(self.seed, FIELD_STREAM),
        )


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

_INT_KEYS = {"node_count", "cluster_factor", "levels", "seed", "round_index", "sparsity", "frame_size"}
_FLOAT_KEYS = {"unit_area", "base_level", "noise_halfwidth", "truncation_alpha", "startup_energy", "unit_cost"}
_BOOL_KEYS = {"frame_mode", "strict_hcs"}
_STR_KEYS = {"placement"}
_INT_LIST_KEYS = {"sweep_sizes", "sweep_factors", "sweep_seeds"}
_STR_LIST_KEYS = {"protocols"}


def parse_config(text):
    """Parse the key = value schema into an ExperimentConfig; unknown keys
    and malformed values raise ConfigError naming the offending field."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _BOOL_KEYS:
                values[key] = _BOOL[val.lower()]
            elif key in _STR_KEYS:
                values[key] = val
            elif key in _INT_LIST_KEYS:
                values[key] = tuple(int(v) for v in val.split(",") if v.strip())
            elif key in _STR_LIST_KEYS:
                values[key] = tuple(v.strip().upper() for v in val.split(",") if v.strip())
            elif key == "bumps":
                values[key] = _parse_bumps(val)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ConfigError:
            raise
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{key}: cannot parse {val!r} ({exc})") from None
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _parse_bumps(val):
    bumps = []
    for part in val.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = [float(v) for v in part.split(",")]
        if len(fields) != 4:
            raise ConfigError(
                f"bumps: each entry needs 'cx,cy,width,amplitude', got {part!r}"
            )
        bumps.append(GaussianBump(*fields))
    return tuple(bumps)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def _write_atomic(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(value):
    """Shortest round-trip decimal form of a scalar (plain floats only)."""
    return repr(float(value))


def _run_protocols(cfg, tree, values, thresholds):
    seed = (cfg.seed, MEASUREMENT_STREAM)
    traces = {}
    for name in cfg.protocols:
        if name == "HDACS":
            traces[name] = protocols.run_hdacs(tree, values, thresholds, seed)
        elif name == "NCS":
            traces[name] = protocols.run_ncs(tree, values, thresholds, seed)
        else:
            traces[name] = protocols.run_hcs(
                tree, values, thresholds, seed, strict=cfg.strict_hcs
            )
    return traces


def _analytic_params(cfg, tree):
    return analytics.AnalyticParams(
        node_count=cfg.node_count,
        cluster_factor=cfg.cluster_factor,
        levels=tree.depth,
        sparsity=cfg.effective_sparsity,
        startup_energy=cfg.startup_energy,
        unit_cost=cfg.unit_cost,
        unit_area=cfg.unit_area,
    )


def run_experiment(cfg, out_dir):
    """Execute every configured protocol on one deployment; returns the
    manifest dict after writing all output files."""
    start = time.time()
    os.makedirs(out_dir, exist_ok=True)
    log.info("run: N=%d n=%d seed=%d", cfg.node_count, cfg.cluster_factor, cfg.seed)

    nodes, tree = deploy_and_build(cfg.deploy_config(), cfg.round_index)
    values = sample_field(cfg.field_config(), nodes)
    thresholds = protocols.Thresholds.from_tree(
        tree, cfg.effective_sparsity, cfg.frame_size
    )
    traces = _run_protocols(cfg, tree, values, thresholds)
    params = _analytic_params(cfg, tree)

    outputs = {}

    def emit(name, text):
        path = os.path.join(out_dir, name)
        _write_atomic(path, text)
        outputs[name] = path

    emit("tree.txt", serialize_tree(tree))
    emit(
        "field.tsv",
        "node\tvalue\n" + "".join(f"{i}\t{_fmt(v)}\n" for i, v in enumerate(values)),
    )

    reports = {}
    for name, trace in traces.items():
        emit(f"trace_{name}.tsv", protocols.serialize_trace(trace))
        emit(f"measurements_{name}.tsv", protocols.serialize_measurements(trace))
        rep = analytics.per_node_energy(trace, params, cfg.frame_mode, cfg.frame_size)
        reports[name] = rep
        emit(
            f"energy_{name}.tsv",
            "node\trole\tunits\tframes\tenergy\n"
            + "".join(
                f"{i}\t{trace.node_role[i]}\t{trace.node_units[i]}\t"
                f"{trace.node_frames[i]}\t{_fmt(rep.node_energy[i])}\n"
                for i in range(cfg.node_count)
            ),
        )

    gamma_lines = ["protocol\tlevel\tgamma"]
    for name, trace in traces.items():
        for lvl, g in protocols.compression_ratios(trace).items():
            gamma_lines.append(f"{name}\t{lvl}\t{g!r}")
    emit("gamma.tsv", "\n".join(gamma_lines) + "\n")

    lower, upper = analytics.measurement_bounds(params)
    m_ncs, m_hcs = analytics.baseline_measurements(params)
    total_lines = ["protocol\ttotal_units\tceiling_slack\tbound_lower\tbound_upper\tbound_ncs\tbound_hcs"]
    for name, trace in traces.items():
        total_lines.append(
            f"{name}\t{trace.total_units}\t{analytics.ceiling_slack(trace)}\t"
            f"{_fmt(lower)}\t{_fmt(upper)}\t{_fmt(m_ncs)}\t{_fmt(m_hcs)}"
        )
    emit("totals.tsv", "\n".join(total_lines) + "\n")

    snr_lines = ["protocol\tsnr_db"]
    for name, trace in traces.items():
        snr_lines.append(f"{name}\t{cs.format_snr(cs.snr(values, trace.recovered))}")
    emit("snr.tsv", "\n".join(snr_lines) + "\n")

    if all(p in reports for p in ("HDACS", "NCS", "HCS")):
        table = analytics.ratio_table(
            reports["HDACS"], reports["NCS"], reports["HCS"], traces["HDACS"].node_role
        )
        lines = ["node\trole\tenergy_hdacs\tenergy_ncs\tenergy_hcs\tratio1\tratio2"]
        for i in range(cfg.node_count):
            lines.append(
                f"{i}\t{table['role'][i]}\t{_fmt(table['energy_hdacs'][i])}\t"
                f"{_fmt(table['energy_ncs'][i])}\t{_fmt(table['energy_hcs'][i])}\t"
                f"{_fmt(table['ratio1'][i])}\t{_fmt(table['ratio2'][i])}"
            )
        emit("ratios.tsv", "\n".join(lines) + "\n")

    emit("analytic_report.txt", analytics.report_text(analytics.build_report(params)))

    manifest = {
        "tool_version": TOOL_VERSION,
        "seed": cfg.seed,
        "config": _config_snapshot(cfg),
        "outputs": sorted(outputs),
        "duration_seconds": time.time() - start,
    }
    _write_atomic(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _config_snapshot(cfg):
    snap = {}
    for key, val in vars(cfg).items():
        if key == "bumps":
            snap[key] = [
                [b.center_x, b.center_y, b.width, b.amplitude] for b in val
            ]
        elif isinstance(val, tuple):
            snap[key] = list(val)
        else:
            snap[key] = val
    return snap


def config_from_snapshot(snap):
    """Rebuild an ExperimentConfig from a manifest snapshot (reproduction)."""
    values = dict(snap)
    values["bumps"] = tuple(GaussianBump(*b) for b in values.get("bumps", ()))
    for key in ("protocols", "sweep_sizes", "sweep_factors", "sweep_seeds"):
        if key in values:
            values[key] = tuple(values[key])
    return ExperimentConfig(**values)


def _sweep_levels(cfg, factor):
    """A configured depth override binds to the configured cluster factor
    only; other sweep factors fall back to the depth formula."""
    return cfg.levels if factor == cfg.cluster_factor else None


def _levels_for(cfg, size, factor):
    probe = DeployConfig(
        node_count=size, cluster_factor=factor, levels=_sweep_levels(cfg, factor)
    )
    return probe.depth


def sweep_experiment(cfg, out_dir):
    """Reproduce the four comparison tables plus per-seed simulated totals.

    (a) totals per method across cluster factors at the configured size;
    (b) totals per method across network sizes and factors;
    (c) per-level compression ratios per method (one simulated run each);
    (d) closed-form energy totals across sizes at the first factor.
    Analytic columns are seed-free; the simulated table cycles the sweep
    seeds with streams keyed by (master seed, 3, point index).
    """
    start = time.time()
    os.makedirs(out_dir, exist_ok=True)
    outputs = {}

    def emit(name, lines):
        path = os.path.join(out_dir, name)
        _write_atomic(path, "\n".join(lines) + "\n")
        outputs[name] = path

    k = cfg.effective_sparsity

    def analytic_row(size, factor):
        p = analytics.AnalyticParams(
            node_count=size,
            cluster_factor=factor,
            levels=_levels_for(cfg, size, factor),
            sparsity=k,
            startup_energy=cfg.startup_energy,
            unit_cost=cfg.unit_cost,
            unit_area=cfg.unit_area,
        )
        lower, upper = analytics.measurement_bounds(p)
        ncs, hcs = analytics.baseline_measurements(p)
        return p, lower, upper, ncs, hcs

    lines = ["factor\tmethod\tvalue"]
    for factor in cfg.sweep_factors:
        _, lower, upper, ncs, hcs = analytic_row(cfg.node_count, factor)
        for method, value in (
            ("HDACS_LOWER", lower),
            ("HDACS_UPPER", upper),
            ("HCS", hcs),
            ("NCS", ncs),
        ):
            lines.append(f"{factor}\t{method}\t{value!r}")
    emit("measurements_by_factor.tsv", lines)

    lines = ["size\tfactor\tmethod\tvalue"]
    for size in cfg.sweep_sizes:
        for factor in cfg.sweep_factors:
            _, lower, upper, ncs, hcs = analytic_row(size, factor)
            for method, value in (
                ("HDACS_LOWER", lower),
                ("HDACS_UPPER", upper),
                ("HCS", hcs),
                ("NCS", ncs),
            ):
                lines.append(f"{size}\t{factor}\t{method}\t{value!r}")
    emit("measurements_by_size.tsv", lines)

    lines = ["factor\tprotocol\tlevel\tgamma"]
    for factor in cfg.sweep_factors:
        point = replace(cfg, cluster_factor=factor, levels=_sweep_levels(cfg, factor))
        nodes, tree = deploy_and_build(point.deploy_config(), point.round_index)
        values = sample_field(point.field_config(), nodes)
        thresholds = protocols.Thresholds.from_tree(tree, k, cfg.frame_size)
        for name, trace in _run_protocols(point, tree, values, thresholds).items():
            for lvl, g in protocols.compression_ratios(trace).items():
                lines.append(f"{factor}\t{name}\t{lvl}\t{g!r}")
    emit("compression_by_level.tsv", lines)

    lines = ["size\tmethod\tvalue"]
    for size in cfg.sweep_sizes:
        p, *_ = analytic_row(size, cfg.sweep_factors[0])
        eb = analytics.energy_bounds(p)
        for method, value in (
            ("E_LOWER", eb.lower),
            ("E_UPPER", eb.upper),
            ("E_HCS", eb.hcs),
            ("E_NCS", eb.ncs),
        ):
            lines.append(f"{size}\t{method}\t{value!r}")
    emit("energy_by_size.tsv", lines)

    lines = ["seed\tsize\tfactor\tmethod\tunits\tenergy"]
    for seed in cfg.sweep_seeds:
        for size in cfg.sweep_sizes:
            for factor in cfg.sweep_factors:
                point = replace(
                    cfg, node_count=size, cluster_factor=factor, seed=seed,
                    levels=_sweep_levels(cfg, factor),
                )
                nodes, tree = deploy_and_build(point.deploy_config(), point.round_index)
                values = sample_field(point.field_config(), nodes)
                thresholds = protocols.Thresholds.from_tree(tree, k, cfg.frame_size)
                params = _analytic_params(point, tree)
                for name, trace in _run_protocols(point, tree, values, thresholds).items():
                    rep = analytics.per_node_energy(
                        trace, params, cfg.frame_mode, cfg.frame_size
                    )
                    lines.append(
                        f"{seed}\t{size}\t{factor}\t{name}\t{trace.total_units}\t{_fmt(rep.total)}"
                    )
    emit("simulated_totals.tsv", lines)

    manifest = {
        "tool_version": TOOL_VERSION,
        "seed": cfg.seed,
        "config": _config_snapshot(cfg),
        "outputs": sorted(outputs),
        "duration_seconds": time.time() - start,
    }
    _write_atomic(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    return manifest


ORACLE_TOLERANCE = 1e-12


def oracle_report(factor, levels):
    """Check every closed form against direct summation; returns (text, ok).

    The totals are checked on the exact-power model at unit sparsity, the
    setting all cross-method comparisons use.
    """
    pairs = [
        ("S1", analytics.series_s1, analytics.series_s1_direct),
        ("S2", analytics.series_s2, analytics.series_s2_direct),
        ("S1'", analytics.series_s1p, analytics.series_s1p_direct),
        ("S2'", analytics.series_s2p, analytics.series_s2p_direct),
    ]
    ok = True
    lines = []
    for name, closed, direct in pairs:
        a, b = closed(factor, levels), direct(factor, levels)
        good = abs(a - b) <= ORACLE_TOLERANCE * max(1.0, abs(b))
        ok &= good
        lines.append(
            f"{name} n={factor} T={levels} closed={a!r} direct={b!r} "
            f"{'PASS' if good else 'FAIL'}"
        )
    size = factor**levels
    p = analytics.AnalyticParams(
        node_count=size, cluster_factor=factor, levels=levels, sparsity=1
    )
    checks = [
        ("M_lower", analytics.measurement_bounds(p)[0], analytics.measurement_per_level_sum(p, "lower")),
        ("M_upper", analytics.measurement_bounds(p)[1], analytics.measurement_per_level_sum(p, "upper")),
        ("M_NCS", analytics.baseline_measurements(p)[0], analytics.measurement_per_level_sum(p, "ncs")),
        ("M_HCS", analytics.baseline_measurements(p)[1], analytics.measurement_per_level_sum(p, "hcs")),
        ("E_lower", analytics.energy_bounds(p).lower, analytics.energy_per_level_sum(p, "lower")),
        ("E_upper", analytics.energy_bounds(p).upper, analytics.energy_per_level_sum(p, "upper")),
        ("E_NCS", analytics.energy_bounds(p).ncs, analytics.energy_per_level_sum(p, "ncs")),
        ("E_HCS", analytics.energy_bounds(p).hcs, analytics.energy_per_level_sum(p, "hcs")),
    ]
    for name, closed, direct in checks:
        good = abs(closed - direct) <= 1e-9 * max(1.0, abs(direct))
        ok &= good
        lines.append(
            f"{name} N={size} n={factor} T={levels} closed={closed!r} "
            f"direct={direct!r} {'PASS' if good else 'FAIL'}"
        )
    return "\n".join(lines) + "\n", ok
