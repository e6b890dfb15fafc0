"""The three aggregation protocols executed over a cluster tree.

HDACS: bottom-level members hand raw samples to their head; every head
re-sparsifies its cluster signal (DCT + truncation) and forwards a number of
random measurements set by the per-cluster threshold ceil(K log2 N_i).
Heads above the bottom recover each transmitting child's block with the
model-based greedy decoder, re-assemble in canonical node order, and repeat.
The promoted child head is co-located with its parent, so exactly n - 1
children transmit per cluster and the top head transmits nothing.

NCS: compressive gathering along the same tree; every node forwards the
global measurement count ceil(K log2 N) (contributions combine additively,
so the payload never shrinks or grows), and the top head adds a final hop to
the co-located collection point.

HCS: raw forwarding below the global threshold, compressed forwarding at or
above it.  The default variant charges the global count for every upward
head transmission (matching the closed-form accounting); the strict variant
keeps a head raw while its accumulated sample count is below the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from enum import Enum

import numpy as np

from . import cs
from .field import dct_forward, dct_inverse, truncate_count


class Protocol(str, Enum):
    HDACS = "HDACS"
    NCS = "NCS"
    HCS = "HCS"


def payload_threshold(n_sensors, sparsity):
    """Measurement budget for a cluster of ``n_sensors`` samples."""
    if n_sensors < 1:
        raise ValueError("cluster must hold at least one sample")
    return math.ceil(sparsity * math.log2(n_sensors))


def frame_counts(units, frame_size):
    """Link-layer frames for a payload: ceil(units / frame size)."""
    if frame_size < 1:
        raise ValueError("frame size must be >= 1")
    if units < 0:
        raise ValueError("units must be >= 0")
    return -(-units // frame_size)


@dataclass(frozen=True)
class Thresholds:
    """Per-cluster and global payload budgets plus the frame size."""

    per_cluster: dict
    global_threshold: int
    sparsity: int
    frame_size: int = 1

    def __post_init__(self):
        if self.sparsity < 1:
            raise ValueError("sparsity must be >= 1")
        if self.frame_size < 1:
            raise ValueError("frame size must be >= 1")

    @classmethod
    def from_tree(cls, tree, sparsity, frame_size=1):
        per = {}
        for lvl in range(1, tree.depth + 1):
            for cl in tree.clusters(lvl):
                per[(lvl, cl.index)] = payload_threshold(cl.n_sensors, sparsity)
        return cls(
            per_cluster=per,
            global_threshold=payload_threshold(tree.config.node_count, sparsity),
            sparsity=sparsity,
            frame_size=frame_size,
        )


@dataclass(frozen=True)
class Transmission:
    protocol: str
    level: int
    cluster_index: int
    sender: int
    receiver: int  # -1 marks the final hop to the collection point
    units: int
    frames: int
    distance: float


@dataclass(frozen=True)
class ClusterFlow:
    """Payload into and out of one cluster head (outputs of non-transmitting
    top heads are the budget they compress to, kept for ratio reporting)."""

    level: int
    index: int
    units_in: int
    units_out: int


@dataclass
class AggregationTrace:
    protocol: Protocol
    rows: list[Transmission]
    node_units: np.ndarray
    node_frames: np.ndarray
    node_role: np.ndarray  # 0 = leaf, otherwise highest head level
    flows: list[ClusterFlow]
    recovered: np.ndarray
    diagnostics: dict = dataclass_field(default_factory=dict)
    measurement_log: list = dataclass_field(default_factory=list)
    strict_variant: bool = False

    @property
    def total_units(self):
        return int(sum(r.units for r in self.rows))

    @property
    def per_level_units(self):
        out = {}
        for r in self.rows:
            out[r.level] = out.get(r.level, 0) + r.units
        return out


def node_roles(tree):
    roles = np.zeros(tree.config.node_count, dtype=int)
    for lvl in range(1, tree.depth + 1):
        for cl in tree.clusters(lvl):
            roles[cl.head_id] = max(roles[cl.head_id], lvl)
    return roles


def _finish(protocol, tree, rows, flows, recovered, diagnostics, measurement_log=(),
            strict=False):
    rows.sort(key=lambda r: (r.level, r.cluster_index, r.sender))
    n = tree.config.node_count
    units = np.zeros(n, dtype=int)
    frames = np.zeros(n, dtype=int)
    for r in rows:
        units[r.sender] += r.units
        frames[r.sender] += r.frames
    return AggregationTrace(
        protocol=protocol,
        rows=rows,
        node_units=units,
        node_frames=frames,
        node_role=node_roles(tree),
        flows=sorted(flows, key=lambda f: (f.level, f.index)),
        recovered=recovered,
        diagnostics=diagnostics,
        measurement_log=sorted(measurement_log, key=lambda e: (e[0], e[1])),
        strict_variant=strict,
    )


def _output_units(n_sensors, budget):
    """Never inflate: fall back to raw when the budget is no smaller than the
    data itself (or degenerate)."""
    if budget < 1 or n_sensors < budget:
        return n_sensors, "raw"
    return budget, "measurements"


def _assemble(parent_ids, blocks):
    """Stitch child blocks into the parent's canonical (ascending id) vector."""
    out = np.empty(len(parent_ids))
    for ids, values in blocks:
        out[np.searchsorted(parent_ids, ids)] = values
    return out


def run_hdacs(tree, field_values, thresholds, seed, recovery=None):
    """Hierarchical aggregation with per-level thresholds.

    ``seed`` keys the measurement matrices: the matrix of cluster (level, l)
    regenerates from (seed, level, l), so any parent can decode any child.
    Recovery trouble at a head never aborts the run; the cluster is flagged
    in ``diagnostics`` and the degraded estimate propagates.
    """
    if recovery is None:
        recovery = cs.RecoveryConfig(model="dct_model")
    proto = Protocol.HDACS
    k_global = thresholds.sparsity
    rows, flows, diags, meas_log = [], [], {}, []
    estimates = {}  # (level, index) -> full-fidelity assembled block
    payloads = {}  # (level, index) -> ("raw", values) | ("measurements", Measurements)

    for lvl in range(1, tree.depth + 1):
        for cl in tree.clusters(lvl):
            if lvl == 1:
                ids = cl.sensor_ids
                assembled = field_values[ids]
                for m in cl.member_node_ids:
                    if m == cl.head_id:
                        continue
                    rows.append(
                        Transmission(
                            proto.value, 1, cl.index, m, cl.head_id, 1,
                            frame_counts(1, thresholds.frame_size),
                            tree.distance(m, cl.head_id),
                        )
                    )
                units_in = cl.n_sensors
            else:
                blocks = []
                units_in = 0
                for ch in tree.children_of(cl):
                    key = (lvl - 1, ch.index)
                    out_units, _ = _cluster_output(ch, thresholds)
                    units_in += out_units
                    if ch.head_id == cl.head_id:
                        blocks.append((ch.sensor_ids, estimates[key]))
                        continue
                    kind, payload = payloads[key]
                    rows.append(
                        Transmission(
                            proto.value, lvl, cl.index, ch.head_id, cl.head_id,
                            out_units,
                            frame_counts(out_units, thresholds.frame_size),
                            tree.distance(ch.head_id, cl.head_id),
                        )
                    )
                    if kind == "raw":
                        blocks.append((ch.sensor_ids, payload))
                    else:
                        meas_log.append((lvl - 1, ch.index, payload))
                        rec = cs.cosamp_dct_model(payload, payload.sparsity_hint, recovery)
                        diags[key] = {
                            "iterations": rec.iterations,
                            "residual": float(rec.residual_norms[-1]),
                            "degraded": rec.degraded,
                            "converged": rec.converged,
                        }
                        blocks.append((ch.sensor_ids, dct_inverse(rec.values)))
                assembled = _assemble(cl.sensor_ids, blocks)
            estimates[(lvl, cl.index)] = assembled

            out_units, mode = _cluster_output(cl, thresholds)
            flows.append(ClusterFlow(lvl, cl.index, units_in, out_units))
            if lvl == tree.depth:
                recovered = assembled
            elif mode == "raw":
                payloads[(lvl, cl.index)] = ("raw", assembled)
            else:
                k_here = min(k_global, cl.n_sensors)
                sparse = truncate_count(dct_forward(assembled), k_here)
                compressed = dct_inverse(sparse.coefficients)
                meas = cs.measure(compressed, out_units, (seed, lvl, cl.index))
                meas.sparsity_hint = max(sparse.sparsity, 1)
                payloads[(lvl, cl.index)] = ("measurements", meas)

    return _finish(proto, tree, rows, flows, recovered, diags, meas_log)


def _cluster_output(cl, thresholds):
    return _output_units(cl.n_sensors, thresholds.per_cluster[(cl.level, cl.index)])


def _upward_hops(tree):
    """(sender, receiver, level, cluster_index, distance) for every node's
    single upward transmission slot; the top head's slot points at the
    co-located collection point (receiver -1, distance 0)."""
    roles = node_roles(tree)
    hops = []
    for cl in tree.clusters(1):
        for m in cl.member_node_ids:
            if roles[m] == 0:
                hops.append((m, cl.head_id, 1, cl.index, tree.distance(m, cl.head_id)))
    for lvl in range(1, tree.depth + 1):
        n = tree.config.cluster_factor
        for cl in tree.clusters(lvl):
            if roles[cl.head_id] != lvl:
                continue
            if lvl == tree.depth:
                hops.append((cl.head_id, -1, lvl, cl.index, 0.0))
            else:
                parent = tree.levels[lvl + 1][cl.index // n]
                hops.append(
                    (cl.head_id, parent.head_id, lvl + 1, parent.index,
                     tree.distance(cl.head_id, parent.head_id))
                )
    return hops


def _global_recovery(tree, field_values, thresholds, seed, recovery):
    """Single top-level decode shared by NCS and HCS: contributions combine
    additively along the tree, so the collected vector equals Phi x."""
    m_g = thresholds.global_threshold
    n = tree.config.node_count
    meas = cs.measure(field_values, min(m_g, n), (seed, 0, 0))
    meas.sparsity_hint = thresholds.sparsity
    rec = cs.cosamp_dct_model(meas, thresholds.sparsity, recovery)
    diag = {
        "iterations": rec.iterations,
        "residual": float(rec.residual_norms[-1]),
        "degraded": rec.degraded,
        "converged": rec.converged,
    }
    return dct_inverse(rec.values), diag, meas


def run_ncs(tree, field_values, thresholds, seed, recovery=None):
    """Plain compressive gathering: every node transmits the global count."""
    if recovery is None:
        recovery = cs.RecoveryConfig(model="dct_model")
    proto = Protocol.NCS
    m_g = thresholds.global_threshold
    frames = frame_counts(m_g, thresholds.frame_size)
    rows = [
        Transmission(proto.value, lvl, idx, s, r, m_g, frames, d)
        for s, r, lvl, idx, d in _upward_hops(tree)
    ]
    flows = [
        ClusterFlow(lvl, cl.index, m_g, m_g)
        for lvl in range(1, tree.depth + 1)
        for cl in tree.clusters(lvl)
    ]
    recovered, diag, meas = _global_recovery(tree, field_values, thresholds, seed, recovery)
    return _finish(
        proto, tree, rows, flows, recovered, {(tree.depth, 0): diag},
        [(tree.depth, 0, meas)],
    )


def run_hcs(tree, field_values, thresholds, seed, recovery=None, strict=False):
    """Hybrid gathering with one global threshold.

    Default accounting: bottom-level members stay raw, every upward head
    transmission carries the global count.  ``strict=True`` keeps a head raw
    until the samples accumulated under it reach the threshold.
    """
    if recovery is None:
        recovery = cs.RecoveryConfig(model="dct_model")
    proto = Protocol.HCS
    m_g = thresholds.global_threshold
    roles = node_roles(tree)
    by_level = {
        lvl: {cl.head_id: cl for cl in tree.clusters(lvl)}
        for lvl in range(1, tree.depth + 1)
    }

    def head_payload(node, lvl):
        cl = by_level[lvl][node]
        if strict and cl.n_sensors < m_g:
            return cl.n_sensors
        return m_g

    rows = []
    for s, r, lvl, idx, d in _upward_hops(tree):
        if roles[s] == 0:
            units = 1
        elif r == -1:
            continue  # the top head holds the result; no final hop
        else:
            units = head_payload(s, roles[s])
        rows.append(
            Transmission(
                proto.value, lvl, idx, s, r, units,
                frame_counts(units, thresholds.frame_size), d,
            )
        )

    flows = []
    for lvl in range(1, tree.depth + 1):
        for cl in tree.clusters(lvl):
            out = cl.n_sensors if (strict and cl.n_sensors < m_g) else m_g
            if lvl == 1:
                units_in = cl.n_sensors
            else:
                units_in = sum(
                    (ch.n_sensors if (strict and ch.n_sensors < m_g) else m_g)
                    for ch in tree.children_of(cl)
                )
            flows.append(ClusterFlow(lvl, cl.index, units_in, out))

    if strict and tree.config.node_count < m_g:
        recovered, diag, meas_log = field_values.copy(), {"raw": True}, []
    else:
        recovered, diag, meas = _global_recovery(tree, field_values, thresholds, seed, recovery)
        meas_log = [(tree.depth, 0, meas)]
    return _finish(
        proto, tree, rows, flows, recovered, {(tree.depth, 0): diag}, meas_log,
        strict=strict,
    )


def compression_ratios(trace):
    """Per-level mean of transmitted over received payload at the heads."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for f in trace.flows:
        sums[f.level] = sums.get(f.level, 0.0) + f.units_out / f.units_in
        counts[f.level] = counts.get(f.level, 0) + 1
    return {lvl: sums[lvl] / counts[lvl] for lvl in sorted(sums)}


TRACE_COLUMNS = (
    "protocol", "level", "cluster", "sender", "receiver", "units", "frames", "distance",
)


def serialize_trace(trace):
    """Tab-separated rows in (level, cluster, sender) order; one line per
    transmission, stable across runs with identical seeds."""
    lines = ["\t".join(TRACE_COLUMNS)]
    for r in trace.rows:
        lines.append(
            f"{r.protocol}\t{r.level}\t{r.cluster_index}\t{r.sender}\t"
            f"{r.receiver}\t{r.units}\t{r.frames}\t{r.distance!r}"
        )
    return "\n".join(lines) + "\n"


def write_trace(trace, path):
    with open(path, "w") as fh:
        fh.write(serialize_trace(trace))


MEASUREMENT_COLUMNS = ("level", "cluster", "matrix_seed", "rows", "signal_length", "sparsity", "y")


def serialize_measurements(trace):
    """The measurement payloads exchanged between heads, one record per
    transmitted vector: enough metadata (seed, shape) to regenerate the
    matrix plus the measured values (space separated)."""
    lines = ["\t".join(MEASUREMENT_COLUMNS)]
    for lvl, idx, meas in trace.measurement_log:
        seed = ",".join(str(s) for s in meas.matrix_seed)
        y = " ".join(repr(float(v)) for v in meas.y)
        lines.append(
            f"{lvl}\t{idx}\t{seed}\t{len(meas.y)}\t{meas.signal_length}\t"
            f"{meas.sparsity_hint}\t{y}"
        )
    return "\n".join(lines) + "\n"
