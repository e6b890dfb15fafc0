"""Random 2D sensor deployment and the multi-resolution cluster hierarchy.

The region is a square partitioned into a regular grid of unit cells, one
cell per bottom-level cluster.  Cells merge upward in blocks of
sqrt(n) x sqrt(n) (valid because the cluster factor n is a power of 4) until
a single cluster covers the whole region at the top level.  Cluster indices
are canonical: the children of cluster ``l`` at level ``i`` are clusters
``l*n .. l*n + n - 1`` at level ``i - 1``, so sibling blocks are contiguous.

Head election promotes one child head per cluster, which is why exactly
``n - 1`` children transmit upward at every level above the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_REDRAWS = 32


class ConfigError(ValueError):
    """Invalid deployment parameters."""


class EmptyCellError(RuntimeError):
    """A bottom-level grid cell received no nodes."""


class DeploymentError(RuntimeError):
    """No valid deployment found within the redraw budget."""


def _power_of_four_exponent(n):
    a = 1
    v = 4
    while v < n:
        v *= 4
        a += 1
    if v != n:
        raise ConfigError(f"cluster factor must be a power of 4, got {n}")
    return a


@dataclass(frozen=True)
class DeployConfig:
    """Parameters of a deployment: region size is derived, not configured.

    ``levels`` overrides the default depth ``T = floor(log_n N)``; the
    override must still satisfy ``n**T <= N``.  ``placement`` is ``uniform``
    (nodes i.i.d. over the whole region) or ``balanced`` (equal per-cell
    quotas, uniform within each cell; remainder cells chosen by seed).
    """

    node_count: int
    cluster_factor: int = 4
    unit_area: float = 1.0
    seed: int = 0
    levels: int | None = None
    placement: str = "uniform"

    def __post_init__(self):
        if self.node_count < 1:
            raise ConfigError("node_count must be positive")
        _power_of_four_exponent(self.cluster_factor)
        if self.unit_area <= 0:
            raise ConfigError("unit_area must be positive")
        if self.placement not in ("uniform", "balanced"):
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.levels is not None and self.levels < 1:
            raise ConfigError("levels override must be a positive integer")
        t = self.depth
        if self.cluster_factor ** t > self.node_count:
            raise ConfigError(
                f"need at least n**T = {self.cluster_factor ** t} nodes, "
                f"got {self.node_count}"
            )

    @property
    def alpha(self):
        return _power_of_four_exponent(self.cluster_factor)

    @property
    def depth(self):
        """Hierarchy depth T: the override if given, else floor(log_n N)."""
        if self.levels is not None:
            return self.levels
        n, t, acc = self.cluster_factor, 0, 1
        while acc * n <= self.node_count:
            acc *= n
            t += 1
        if t < 1:
            raise ConfigError(
                f"{self.node_count} nodes cannot fill one cluster of {self.cluster_factor}"
            )
        return t

    @property
    def cell_count(self):
        return self.cluster_factor ** (self.depth - 1)

    @property
    def cells_per_side(self):
        return 2 ** (self.alpha * (self.depth - 1))

    @property
    def cell_side(self):
        return math.sqrt(self.unit_area)

    @property
    def region_side(self):
        return self.cells_per_side * self.cell_side


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float

    @property
    def position(self):
        return (self.x, self.y)


@dataclass
class Cluster:
    """One cluster: bottom level holds node ids, upper levels hold child ids.

    ``sensor_ids`` is the sorted list of all node ids under the cluster, the
    canonical ordering used to vectorize its signal.  ``distance_sum`` adds
    the head-to-transmitter distances (all non-head members at level 1, the
    ``n - 1`` non-co-located child heads above).
    """

    level: int
    index: int
    member_node_ids: list[int] | None
    child_indices: list[int] | None
    sensor_ids: np.ndarray
    area: float
    box: tuple[float, float, float]  # x0, y0, side length
    head_id: int = -1
    distance_sum: float = 0.0

    @property
    def n_sensors(self):
        return int(len(self.sensor_ids))


@dataclass
class ClusterTree:
    config: DeployConfig
    positions: np.ndarray  # (N, 2), row index == node id
    levels: dict[int, list[Cluster]] = field(default_factory=dict)
    round_index: int = 0

    @property
    def depth(self):
        return self.config.depth

    @property
    def top(self):
        return self.levels[self.depth][0]

    def clusters(self, level):
        return self.levels[level]

    def children_of(self, cluster):
        if cluster.level < 2:
            return []
        below = self.levels[cluster.level - 1]
        return [below[j] for j in cluster.child_indices]

    def parent_head(self, level, index):
        """Head node id of the level ``level + 1`` cluster containing cluster
        ``index`` of ``level``; None for the top cluster."""
        if level >= self.depth:
            return None
        n = self.config.cluster_factor
        return self.levels[level + 1][index // n].head_id

    def distance(self, a, b):
        dx = self.positions[a, 0] - self.positions[b, 0]
        dy = self.positions[a, 1] - self.positions[b, 1]
        return math.hypot(dx, dy)


def deploy(config, attempt=0):
    """Draw node positions for one attempt; deterministic in (seed, attempt).

    Redraw attempts perturb the stream with ``seed XOR attempt`` so the retry
    loop in :func:`deploy_and_build` stays reproducible.
    """
    eff_seed = config.seed ^ attempt
    rng = np.random.default_rng(np.random.SeedSequence(eff_seed))
    n_nodes = config.node_count
    side = config.region_side
    if config.placement == "uniform":
        pts = rng.uniform(0.0, side, size=(n_nodes, 2))
    else:
        pts = _balanced_positions(config, rng)
    return [Node(i, float(pts[i, 0]), float(pts[i, 1])) for i in range(n_nodes)]


def _balanced_positions(config, rng):
    cells = config.cell_count
    cs = config.cell_side
    base, rem = divmod(config.node_count, cells)
    quotas = np.full(cells, base, dtype=int)
    if rem:
        quotas[rng.permutation(cells)[:rem]] += 1
    chunks = []
    for idx in range(cells):
        ix, iy = _cell_position(idx, config.alpha, config.depth - 1)
        local = rng.uniform(0.0, cs, size=(quotas[idx], 2))
        local[:, 0] += ix * cs
        local[:, 1] += iy * cs
        chunks.append(local)
    return np.concatenate(chunks, axis=0)


def _cell_index(ix, iy, alpha, digits):
    """Canonical index of grid cell (ix, iy): base-2**alpha digit interleave,
    most significant first, so sibling blocks are contiguous."""
    idx = 0
    for d in range(digits - 1, -1, -1):
        dx = (ix >> (alpha * d)) & ((1 << alpha) - 1)
        dy = (iy >> (alpha * d)) & ((1 << alpha) - 1)
        idx = (idx << (2 * alpha)) | (dy << alpha) | dx
    return idx


def _cell_position(idx, alpha, digits):
    """Inverse of :func:`_cell_index`."""
    ix = iy = 0
    for d in range(digits):
        chunk = (idx >> (2 * alpha * d)) & ((1 << (2 * alpha)) - 1)
        ix |= (chunk & ((1 << alpha) - 1)) << (alpha * d)
        iy |= (chunk >> alpha) << (alpha * d)
    return ix, iy


def build_hierarchy(nodes, config, round_index=0):
    """Assemble the cluster tree for one deployment.

    Raises :class:`EmptyCellError` if any bottom-level cell holds no node;
    see :func:`deploy_and_build` for the redraw policy.
    """
    n = config.cluster_factor
    depth = config.depth
    g = config.cells_per_side
    cs = config.cell_side
    positions = np.empty((config.node_count, 2))
    for nd in nodes:
        positions[nd.id, 0] = nd.x
        positions[nd.id, 1] = nd.y

    members = [[] for _ in range(config.cell_count)]
    for nd in nodes:
        ix = min(int(nd.x / cs), g - 1)
        iy = min(int(nd.y / cs), g - 1)
        members[_cell_index(ix, iy, config.alpha, depth - 1)].append(nd.id)

    tree = ClusterTree(config=config, positions=positions, round_index=round_index)
    level1 = []
    for idx, ids in enumerate(members):
        if not ids:
            raise EmptyCellError(f"bottom-level cell {idx} is empty")
        ids.sort()
        ix, iy = _cell_position(idx, config.alpha, depth - 1)
        level1.append(
            Cluster(
                level=1,
                index=idx,
                member_node_ids=ids,
                child_indices=None,
                sensor_ids=np.asarray(ids, dtype=int),
                area=config.unit_area,
                box=(ix * cs, iy * cs, cs),
            )
        )
    tree.levels[1] = level1

    for lvl in range(2, depth + 1):
        below = tree.levels[lvl - 1]
        count = n ** (depth - lvl)
        this = []
        for idx in range(count):
            kids = list(range(idx * n, idx * n + n))
            sensor_ids = np.sort(np.concatenate([below[j].sensor_ids for j in kids]))
            x0 = min(below[j].box[0] for j in kids)
            y0 = min(below[j].box[1] for j in kids)
            side = below[kids[0]].box[2] * (2 ** config.alpha)
            this.append(
                Cluster(
                    level=lvl,
                    index=idx,
                    member_node_ids=None,
                    child_indices=kids,
                    sensor_ids=sensor_ids,
                    area=config.unit_area * n ** (lvl - 1),
                    box=(x0, y0, side),
                )
            )
        tree.levels[lvl] = this

    return elect_heads(tree, round_index, config.seed)


def elect_heads(tree, round_index, seed):
    """Re-elect heads for a duty round; structure is kept, heads and the
    head-to-transmitter distance sums change.

    Bottom level: a uniformly random member of the cell.  Above: the head of
    a uniformly random child cluster, which makes head promotion explicit.
    Deterministic in (seed, round, level, cluster index).
    """
    for lvl in range(1, tree.depth + 1):
        for cl in tree.levels[lvl]:
            rng = np.random.default_rng(
                np.random.SeedSequence((seed, round_index, lvl, cl.index))
            )
            if lvl == 1:
                cl.head_id = cl.member_node_ids[rng.integers(len(cl.member_node_ids))]
            else:
                below = tree.levels[lvl - 1]
                pick = cl.child_indices[rng.integers(len(cl.child_indices))]
                cl.head_id = below[pick].head_id
    _recompute_distances(tree)
    tree.round_index = round_index
    return tree


def _recompute_distances(tree):
    for lvl in range(1, tree.depth + 1):
        for cl in tree.levels[lvl]:
            if lvl == 1:
                cl.distance_sum = float(
                    sum(
                        tree.distance(m, cl.head_id)
                        for m in cl.member_node_ids
                        if m != cl.head_id
                    )
                )
            else:
                cl.distance_sum = float(
                    sum(
                        tree.distance(ch.head_id, cl.head_id)
                        for ch in tree.children_of(cl)
                        if ch.head_id != cl.head_id
                    )
                )


def deploy_and_build(config, round_index=0):
    """Deployment with the bounded redraw policy for empty cells.

    Uniform placement can leave a cell empty; silently repairing the draw
    would bias the statistics, so the whole deployment is redrawn (up to
    MAX_REDRAWS) and failure after that is loud.
    """
    last = None
    for attempt in range(MAX_REDRAWS):
        nodes = deploy(config, attempt)
        try:
            return nodes, build_hierarchy(nodes, config, round_index)
        except EmptyCellError as exc:
            last = exc
    raise DeploymentError(
        f"no empty-cell-free deployment in {MAX_REDRAWS} redraws "
        f"(N={config.node_count}, cells={config.cell_count}): {last}"
    )


def coverage_stats(tree):
    """(P1, P2): chance weights of the placement constraints.

    P1 = n**T / N is the filled-cluster weight; P2 = n**(T-1) / N' spreads
    the N' = N - n**T remainder nodes over the bottom-level cells.  P2 is
    None when the node count is an exact power (no remainder).
    """
    cfg = tree.config
    n_t = cfg.cluster_factor ** cfg.depth
    p1 = n_t / cfg.node_count
    rem = cfg.node_count - n_t
    p2 = (cfg.cluster_factor ** (cfg.depth - 1)) / rem if rem > 0 else None
    return p1, p2


def serialize_tree(tree):
    """Canonical text form (schema documented in the README): a node section
    ``node <id> <x> <y>`` then one line per cluster,
    ``cluster <level> <index> <head> <n_sensors> <area> <distance_sum> <members...>``
    where members are node ids at level 1 and child cluster indices above.
    Identical (config, seed, round) inputs serialize byte-for-byte equal.
    """
    cfg = tree.config
    out = [
        "# hdacs cluster tree v1",
        f"nodes {cfg.node_count} factor {cfg.cluster_factor} depth {cfg.depth} "
        f"unit_area {cfg.unit_area!r} region_side {cfg.region_side!r} "
        f"round {tree.round_index}",
    ]
    for i in range(cfg.node_count):
        out.append(
            f"node {i} {float(tree.positions[i, 0])!r} {float(tree.positions[i, 1])!r}"
        )
    for lvl in range(1, tree.depth + 1):
        for cl in tree.levels[lvl]:
            members = cl.member_node_ids if lvl == 1 else cl.child_indices
            mem = " ".join(str(m) for m in members)
            out.append(
                f"cluster {lvl} {cl.index} {cl.head_id} {cl.n_sensors} "
                f"{cl.area!r} {cl.distance_sum!r} {mem}"
            )
    return "\n".join(out) + "\n"


def write_tree(tree, path):
    with open(path, "w") as fh:
        fh.write(serialize_tree(tree))
