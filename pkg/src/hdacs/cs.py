"""Random measurement operators and greedy sparse recovery.

Measurement matrices are i.i.d. Gaussian with variance 1/M and are never
transmitted: heads exchange only the (seed, M, N) metadata and regenerate
the matrix locally, so the PRNG (numpy PCG64 seeded through SeedSequence) is
part of the wire contract.

Two recovery variants are provided.  ``cosamp`` is the classic greedy loop
in the measured domain.  ``cosamp_dct_model`` assumes the signal is sparse
in the orthonormal DCT domain with energy concentrated at low frequencies,
and restricts support selection to a low-frequency band; it returns DCT
coefficients (invert with :func:`hdacs.field.dct_inverse`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels


class MeasurementError(ValueError):
    """Requested more measurements than signal samples."""


class RecoveryInfeasibleError(ValueError):
    """Target sparsity exceeds the measurement count."""


@dataclass(frozen=True)
class RecoveryConfig:
    max_iterations: int = 50
    tolerance: float = 1e-6  # relative residual halting threshold
    model: str = "plain"  # "plain" | "dct_model"
    model_band: int | None = None  # override of the low-frequency band size

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.model not in ("plain", "dct_model"):
            raise ValueError(f"unknown recovery model {self.model!r}")


@dataclass
class Measurements:
    """A measurement vector plus the metadata needed to regenerate its
    matrix on the receiving side."""

    y: np.ndarray
    matrix_seed: tuple
    signal_length: int
    sparsity_hint: int

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)


@dataclass
class RecoveryResult:
    values: np.ndarray
    iterations: int
    residual_norms: np.ndarray
    degraded: bool
    tolerance: float = RecoveryConfig.tolerance

    @property
    def converged(self):
        return bool(
            self.residual_norms[-1]
            <= self.tolerance * max(self.residual_norms[0], 1e-300)
        )


def normalize_seed(seed):
    """Flatten nested seed tuples into the tuple of ints fed to SeedSequence;
    this flat form is what travels in measurement metadata."""
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    out = []
    for part in seed:
        out.extend(normalize_seed(part))
    return tuple(out)


def generate_matrix(seed, m, n):
    """The seeded Gaussian measurement matrix: (m, n), entries N(0, 1/m)."""
    rng = np.random.default_rng(np.random.SeedSequence(normalize_seed(seed)))
    return rng.standard_normal((m, n)) / math.sqrt(m)


def measure(x, m, seed):
    """y = Phi x with the seeded matrix; linear in x for fixed (seed, m)."""
    x = np.asarray(x, dtype=float)
    if not (1 <= m <= len(x)):
        raise MeasurementError(
            f"measurement count {m} outside [1, {len(x)}]; transmit raw instead"
        )
    phi = generate_matrix(seed, m, len(x))
    return Measurements(
        y=phi @ x, matrix_seed=normalize_seed(seed), signal_length=len(x), sparsity_hint=0
    )


def _lstsq_rcond(m, n):
    return float(np.finfo(float).eps * max(m, n))


def _run(A, y, k, band, forced, cfg):
    return kernels.cosamp_loop(
        np.ascontiguousarray(A),
        np.asarray(y, dtype=float),
        int(k),
        int(band),
        int(forced),
        cfg.max_iterations,
        cfg.tolerance,
        _lstsq_rcond(*A.shape),
    )


def cosamp(measurements, k, cfg=RecoveryConfig()):
    """Greedy recovery in the measured domain.

    Per iteration: adjoint proxy of the residual, take the 2k strongest
    coordinates, merge with the current support, least-squares on the merge,
    prune to the k strongest, debias, update the residual.  Halts at the
    relative-residual tolerance, the iteration cap, or when an update stops
    improving (which keeps the recorded residuals non-increasing).
    """
    if k < 1:
        raise RecoveryInfeasibleError("sparsity must be >= 1")
    m = len(measurements.y)
    if k > m:
        raise RecoveryInfeasibleError(f"sparsity {k} exceeds measurement count {m}")
    phi = generate_matrix(measurements.matrix_seed, m, measurements.signal_length)
    x, iters, resids, degraded = _run(
        phi, measurements.y, k, measurements.signal_length, 0, cfg
    )
    return RecoveryResult(x, iters, resids, degraded, cfg.tolerance)


def default_model_band(k, n):
    """Low-frequency band searched by the model-based variant."""
    return min(n, max(4 * k, 16))


def cosamp_dct_model(measurements, k, cfg=RecoveryConfig(model="dct_model")):
    """Model-based variant for DCT-sparse smooth signals.

    The effective operator is Phi * inverse-DCT, so the unknowns are DCT
    coefficients.  Support candidates are restricted to the lowest-frequency
    band (``cfg.model_band`` or max(4k, 16)) and the k lowest frequencies
    are always part of the merged support, which makes recovery of strictly
    low-frequency signals exact even at very small measurement counts.
    Returns coefficients.
    """
    if k < 1:
        raise RecoveryInfeasibleError("sparsity must be >= 1")
    m = len(measurements.y)
    if k > m:
        raise RecoveryInfeasibleError(f"sparsity {k} exceeds measurement count {m}")
    n = measurements.signal_length
    phi = generate_matrix(measurements.matrix_seed, m, n)
    # Phi @ idct-matrix == row-wise forward DCT of Phi (orthonormal pair)
    A = scipy.fft.dct(phi, type=2, norm="ortho", axis=1)
    band = cfg.model_band if cfg.model_band is not None else default_model_band(k, n)
    band = min(max(int(band), k), n)
    x, iters, resids, degraded = _run(A, measurements.y, k, band, k, cfg)
    return RecoveryResult(x, iters, resids, degraded, cfg.tolerance)


def snr(original, recovered):
    """10 log10(signal power / recovery error power), in dB.

    Exact recovery has no finite value and is reported as math.inf (shown as
    the string ``exact`` in report files).  An all-zero original signal has
    no defined ratio.
    """
    original = np.asarray(original, dtype=float)
    recovered = np.asarray(recovered, dtype=float)
    if original.shape != recovered.shape:
        raise ValueError("signal length mismatch")
    sig = float(original @ original)
    if sig == 0.0:
        raise ValueError("SNR undefined for an all-zero signal")
    err = original - recovered
    err2 = float(err @ err)
    if err2 == 0.0:
        return math.inf
    return 10.0 * math.log10(sig / err2)


def format_snr(value):
    return "exact" if math.isinf(value) else repr(value)
