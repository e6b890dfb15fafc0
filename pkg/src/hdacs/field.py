"""Sensed data fields and the DCT sparsification pipeline.

Fields are smooth by construction (a flat base plus optional Gaussian bumps)
with bounded uniform noise, which is what makes per-cluster signals highly
compressible: the orthonormal DCT concentrates them in a few low-frequency
coefficients.  Signals are always vectorized in ascending node-id order so
every cluster head and the recovery code agree on coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft


@dataclass(frozen=True)
class GaussianBump:
    center_x: float
    center_y: float
    width: float
    amplitude: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bump width must be positive")


@dataclass(frozen=True)
class FieldConfig:
    base_level: float = 0.0
    bumps: tuple[GaussianBump, ...] = ()
    noise_halfwidth: float = 0.0
    truncation_alpha: float = 0.01
    seed: int | tuple = 0  # SeedSequence entropy: an int or a tuple of ints

    def __post_init__(self):
        if self.noise_halfwidth < 0:
            raise ValueError("noise_halfwidth must be >= 0")
        if not (0.0 < self.truncation_alpha <= 1.0):
            raise ValueError("truncation_alpha must be in (0, 1]")


def sample_field(config, nodes):
    """Per-node samples: base + bumps at the node position + uniform noise.

    Returns an array indexed by node id.  Deterministic given config.seed.
    """
    ordered = sorted(nodes, key=lambda nd: nd.id)
    xs = np.array([nd.x for nd in ordered])
    ys = np.array([nd.y for nd in ordered])
    values = np.full(len(ordered), float(config.base_level))
    for b in config.bumps:
        d2 = (xs - b.center_x) ** 2 + (ys - b.center_y) ** 2
        values += b.amplitude * np.exp(-d2 / (2.0 * b.width**2))
    if config.noise_halfwidth > 0:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
        values += rng.uniform(-config.noise_halfwidth, config.noise_halfwidth, len(ordered))
    return values


def dct_forward(x):
    """Orthonormal type-II DCT; Parseval holds, so norms carry over exactly."""
    return scipy.fft.dct(np.asarray(x, dtype=float), type=2, norm="ortho")


def dct_inverse(c):
    return scipy.fft.idct(np.asarray(c, dtype=float), type=2, norm="ortho")


@dataclass
class SparseCoefficients:
    """Truncated transform coefficients.

    ``support`` lists the indices of the surviving nonzero entries; every
    entry outside it is exactly zero.
    """

    coefficients: np.ndarray
    support: np.ndarray

    @property
    def sparsity(self):
        return int(len(self.support))


def _largest_magnitude_indices(values, k):
    """Indices of the k largest |values|, ties broken toward the lower index."""
    v = np.asarray(values)
    k = min(k, len(v))
    order = np.lexsort((np.arange(len(v)), -np.abs(v)))
    return order[:k]


def truncate_count(c, keep):
    """Keep exactly ``keep`` largest-magnitude coefficients, zero the rest."""
    c = np.asarray(c, dtype=float)
    kept = _largest_magnitude_indices(c, max(int(keep), 0))
    out = np.zeros_like(c)
    out[kept] = c[kept]
    support = np.sort(kept[out[kept] != 0.0])
    return SparseCoefficients(coefficients=out, support=support)


def truncate(c, alpha):
    """Fraction-driven truncation: keep the ceil(alpha * length) dominant
    coefficients.  The count rule (rather than a magnitude quantile) pins the
    resulting sparsity deterministically."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    c = np.asarray(c, dtype=float)
    return truncate_count(c, math.ceil(alpha * len(c)))


def estimate_sparsity(sparse):
    """Nonzero count of a truncated vector; feeds the per-cluster payload
    thresholds."""
    return sparse.sparsity
