import itertools
import math

import numpy as np
import pytest

from hdacs.deployment import DeployConfig, deploy
from hdacs.field import (
    FieldConfig,
    GaussianBump,
    dct_forward,
    dct_inverse,
    estimate_sparsity,
    sample_field,
    truncate,
    truncate_count,
)


def naive_dct(x):
    """Direct O(N^2) orthonormal type-II DCT, the transform oracle."""
    n = len(x)
    out = np.empty(n)
    for k in range(n):
        scale = math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n)
        out[k] = scale * sum(
            x[j] * math.cos(math.pi * (2 * j + 1) * k / (2 * n)) for j in range(n)
        )
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        FieldConfig(noise_halfwidth=-0.1)
    with pytest.raises(ValueError):
        FieldConfig(truncation_alpha=0.0)
    with pytest.raises(ValueError):
        GaussianBump(0.0, 0.0, 0.0, 1.0)


def _nodes(n=32, seed=0):
    return deploy(DeployConfig(node_count=n, cluster_factor=4, seed=seed))


def test_flat_field_exact():
    values = sample_field(FieldConfig(base_level=5.0), _nodes())
    assert np.all(values == 5.0)


def test_noise_bounded_and_deterministic():
    cfg = FieldConfig(base_level=5.0, noise_halfwidth=0.1, seed=4)
    nodes = _nodes()
    values = sample_field(cfg, nodes)
    assert np.all((values >= 4.9) & (values <= 5.1))
    assert np.array_equal(values, sample_field(cfg, nodes))
    assert not np.array_equal(values, sample_field(FieldConfig(base_level=5.0, noise_halfwidth=0.1, seed=5), nodes))


def test_bump_raises_center_value():
    cfg = DeployConfig(node_count=16, cluster_factor=4, seed=1, levels=2)
    mid = cfg.region_side / 2
    from hdacs.deployment import Node

    nodes = [Node(0, mid, mid), Node(1, 0.01, 0.01)] + [
        Node(i, 0.02 * i, 0.01) for i in range(2, 16)
    ]
    f = FieldConfig(base_level=0.0, bumps=(GaussianBump(mid, mid, 0.3, 1.0),))
    values = sample_field(f, nodes)
    assert values[0] > values[1]
    assert values[0] == pytest.approx(1.0)


def test_dct_constant_is_dc_only():
    c = dct_forward(np.full(8, 3.0))
    assert c[0] == pytest.approx(3.0 * math.sqrt(8.0))
    assert np.all(c[1:] == 0.0)


def test_dct_round_trip_and_parseval():
    rng = np.random.default_rng(11)
    for n in (1, 2, 7, 16, 100):
        x = rng.standard_normal(n)
        c = dct_forward(x)
        assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(x), rel=1e-10)
        assert np.allclose(dct_inverse(c), x, rtol=1e-10, atol=1e-12)


def test_dct_against_naive_oracle():
    rng = np.random.default_rng(3)
    for n in (4, 9, 16):
        x = rng.standard_normal(n)
        assert np.allclose(dct_forward(x), naive_dct(x), atol=1e-10)
    e0 = np.zeros(4)
    e0[0] = 1.0
    assert np.allclose(dct_forward(e0), naive_dct(e0), atol=1e-12)


def test_naive_oracle_inverts():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(12)
    assert np.allclose(dct_inverse(naive_dct(x)), x, rtol=1e-10, atol=1e-12)


def test_dct_length_one_identity():
    assert dct_forward(np.array([2.5]))[0] == pytest.approx(2.5)
    assert dct_inverse(np.array([2.5]))[0] == pytest.approx(2.5)
    assert np.all(dct_forward(np.zeros(6)) == 0.0)


def test_truncate_counts():
    rng = np.random.default_rng(0)
    c = rng.standard_normal(1000)
    sp = truncate(c, 0.01)
    assert sp.sparsity == 10
    assert estimate_sparsity(sp) == 10
    assert np.all(sp.coefficients[np.setdiff1d(np.arange(1000), sp.support)] == 0.0)


def test_truncate_identity_alpha_one():
    c = np.array([1.0, 0.0, -2.0, 3.0])
    sp = truncate(c, 1.0)
    assert sp.support.tolist() == [0, 2, 3]  # zeros never enter the support
    assert np.array_equal(sp.coefficients, c)


def test_truncate_hand_case_and_ties():
    sp = truncate(np.array([3.0, -5.0, 0.1, 0.1]), 0.5)
    assert sp.support.tolist() == [0, 1]
    assert sp.sparsity == 2
    tie = truncate_count(np.array([1.0, -1.0, 1.0]), 2)
    assert tie.support.tolist() == [0, 1]  # ties break toward lower index


def test_truncate_zero_vector():
    sp = truncate(np.zeros(16), 0.25)
    assert sp.sparsity == 0
    assert estimate_sparsity(sp) == 0


def test_truncation_is_best_l2_approximation():
    rng = np.random.default_rng(9)
    for n, k in ((8, 2), (10, 3), (12, 4)):
        c = rng.standard_normal(n)
        sp = truncate_count(c, k)
        err = np.linalg.norm(c - sp.coefficients)
        best = min(
            np.linalg.norm(c - _mask(c, s)) for s in itertools.combinations(range(n), k)
        )
        assert err == pytest.approx(best, abs=1e-12)


def _mask(c, support):
    out = np.zeros_like(c)
    out[list(support)] = c[list(support)]
    return out


def test_flat_field_sparsifies_to_dc():
    nodes = _nodes(64, seed=2)
    values = sample_field(FieldConfig(base_level=7.5), nodes)
    sp = truncate(dct_forward(values), 0.05)
    assert sp.sparsity == 1
    assert sp.support.tolist() == [0]
    sp_min = truncate(dct_forward(values), 1.0 / 64)
    assert sp_min.sparsity == 1
