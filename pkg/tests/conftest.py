import numpy as np
import pytest

from hdacs import deployment, field, protocols


@pytest.fixture(scope="session")
def exact_power_1024():
    """Balanced exact-power deployment: 1024 nodes, factor 4, depth 5."""
    cfg = deployment.DeployConfig(
        node_count=1024, cluster_factor=4, seed=7, placement="balanced"
    )
    nodes, tree = deployment.deploy_and_build(cfg)
    return cfg, nodes, tree


@pytest.fixture(scope="session")
def flat_run_1024(exact_power_1024):
    """All three protocols on a flat field over the exact-power tree."""
    _, nodes, tree = exact_power_1024
    values = field.sample_field(field.FieldConfig(base_level=5.0, seed=3), nodes)
    thresholds = protocols.Thresholds.from_tree(tree, 1, frame_size=4)
    seed = (7, 2)
    return {
        "tree": tree,
        "values": values,
        "thresholds": thresholds,
        "HDACS": protocols.run_hdacs(tree, values, thresholds, seed),
        "NCS": protocols.run_ncs(tree, values, thresholds, seed),
        "HCS": protocols.run_hcs(tree, values, thresholds, seed),
    }


@pytest.fixture(scope="session")
def preset_run_400():
    """The 400-node, depth-3 experiment preset on a flat field (unit frame
    economics: sparsity 1, frame size 4)."""
    cfg = deployment.DeployConfig(node_count=400, cluster_factor=4, seed=1, levels=3)
    nodes, tree = deployment.deploy_and_build(cfg)
    values = field.sample_field(field.FieldConfig(base_level=20.0, seed=5), nodes)
    thresholds = protocols.Thresholds.from_tree(tree, 1, frame_size=4)
    seed = (1, 2)
    return {
        "tree": tree,
        "nodes": nodes,
        "values": values,
        "thresholds": thresholds,
        "HDACS": protocols.run_hdacs(tree, values, thresholds, seed),
        "NCS": protocols.run_ncs(tree, values, thresholds, seed),
        "HCS": protocols.run_hcs(tree, values, thresholds, seed),
    }


def assert_close(a, b, tol, label=""):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{label}: {a!r} vs {b!r}"
