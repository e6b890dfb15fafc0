"""Pure-numpy greedy sparse recovery loop (fallback backend).

Mirrors the compiled extension step for step: same candidate selection and
tie-breaking, same rank-revealing least-squares driver, so the two backends
agree to floating-point noise.  Kept dependency-light on purpose: only the
iteration lives here, problem setup stays in :mod:`hdacs.cs`.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def _top_indices(values, k):
    # largest magnitude first, ties broken toward the lower index
    k = min(k, len(values))
    order = np.lexsort((np.arange(len(values)), -np.abs(values)))
    return order[:k]


def _solve(A, cols, y, rcond):
    sol, _, rank, _ = scipy.linalg.lstsq(
        A[:, cols], y, cond=rcond, lapack_driver="gelsy", check_finite=False
    )
    return sol, rank


def _merge_support(x, cand, forced, cap):
    """Merged support, capped at ``cap`` columns so the restricted solve
    stays well-posed.  Fill order: structured model indices (never dropped),
    the current estimate's support strongest first, then proxy candidates
    strongest first."""
    chosen: list[int] = []
    seen = set()

    def push(idx):
        if idx not in seen and len(chosen) < cap:
            seen.add(idx)
            chosen.append(idx)

    for idx in range(forced):
        push(idx)
    prev = np.flatnonzero(x)
    for pos in _top_indices(x[prev], len(prev)):
        push(int(prev[pos]))
    for idx in cand:
        push(int(idx))
    return np.sort(np.asarray(chosen, dtype=int))


def cosamp_loop(A, y, k, band, forced, max_iter, tol, rcond):
    """One full recovery: returns (estimate, iterations, residual_norms,
    degraded).

    Support candidates are drawn from the first ``band`` columns only and
    the first ``forced`` columns are always kept in the merged support (the
    structured low-frequency model; pass band = n, forced = 0 for the
    unstructured variant).  The residual history is non-increasing by
    construction: an update that would raise the residual is discarded and
    the loop stops.
    """
    A = np.ascontiguousarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    band = min(band, n)
    cap = max(m, k)
    x = np.zeros(n)
    ynorm = float(np.linalg.norm(y))
    resids = [ynorm]
    degraded = False
    if ynorm == 0.0:
        return x, 0, np.asarray(resids), False
    r = y.copy()
    for _ in range(max_iter):
        if resids[-1] <= tol * ynorm:
            break
        proxy = A.T @ r
        cand = _top_indices(proxy[:band], 2 * k)
        support = _merge_support(x, cand, forced, cap)
        sol, rank = _solve(A, support, y, rcond)
        if rank < len(support):
            degraded = True
        keep = np.sort(support[_top_indices(sol, k)])
        pruned, rank2 = _solve(A, keep, y, rcond)  # debias on the kept support
        if rank2 < len(keep):
            degraded = True
        x_new = np.zeros(n)
        x_new[keep] = pruned
        r_new = y - A @ x_new
        rnorm = float(np.linalg.norm(r_new))
        if not rnorm < resids[-1]:
            break
        x, r = x_new, r_new
        resids.append(rnorm)
    return x, len(resids) - 1, np.asarray(resids), degraded
