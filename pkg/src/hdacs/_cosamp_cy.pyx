# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy sparse recovery loop.

Same algorithm as `hdacs._cosamp_py`; the win is removing per-iteration
interpreter overhead, which dominates because the per-cluster problems are
tiny (tens of rows, a handful of support columns) but run thousands of times
per experiment.  Matrix products go through BLAS dgemv, the restricted
least-squares solve through LAPACK dgelsy (rank-revealing QR), matching the
driver used by the fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_blas cimport dgemv
from scipy.linalg.cython_lapack cimport dgelsy

cnp.import_array()


cdef int _top_indices(double* vals, int n, int k, int* out, unsigned char* taken) nogil:
    """First k indices ordered by (largest |value|, lowest index)."""
    cdef int picked = 0, i, best
    cdef double mag, best_mag
    if k > n:
        k = n
    for i in range(n):
        taken[i] = 0
    while picked < k:
        best = -1
        best_mag = -1.0
        for i in range(n):
            if taken[i]:
                continue
            mag = fabs(vals[i])
            if mag > best_mag:
                best_mag = mag
                best = i
        taken[best] = 1
        out[picked] = best
        picked += 1
    return picked


cdef inline void _isort(int* a, int n) nogil:
    cdef int i, j, v
    for i in range(1, n):
        v = a[i]
        j = i - 1
        while j >= 0 and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


def cosamp_loop(double[:, ::1] A, double[::1] y, int k, int band, int forced,
                int max_iter, double tol, double rcond):
    """Drop-in equivalent of the pure backend's ``cosamp_loop``."""
    cdef int m = A.shape[0]
    cdef int n = A.shape[1]
    cdef int i, j, it, t, rank, nkeep, npicked, nprev, pos
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef double ynorm = 0.0, rnorm, prev_norm
    cdef bint degraded = False

    if band > n:
        band = n
    cdef int cap = m if m > k else k
    if cap > n:
        cap = n

    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    for i in range(m):
        ynorm += y[i] * y[i]
    ynorm = sqrt(ynorm)
    resids = [ynorm]
    if ynorm == 0.0:
        return x_arr, 0, np.asarray(resids), False

    cdef int scratch_n = n if n > cap else cap
    cdef double* r = <double*> malloc(m * sizeof(double))
    cdef double* proxy = <double*> malloc(n * sizeof(double))
    cdef double* sub = <double*> malloc(m * cap * sizeof(double))
    cdef int ldb = m if m > cap else cap
    cdef double* bbuf = <double*> malloc(ldb * sizeof(double))
    cdef double* sol = <double*> malloc(cap * sizeof(double))
    cdef double* mags = <double*> malloc(scratch_n * sizeof(double))
    cdef int* cand = <int*> malloc((2 * k if k > 0 else 1) * sizeof(int))
    cdef int* supp = <int*> malloc(cap * sizeof(int))
    cdef int* keep = <int*> malloc(cap * sizeof(int))
    cdef int* sel = <int*> malloc(cap * sizeof(int))
    cdef int* prev = <int*> malloc(cap * sizeof(int))
    cdef int* order = <int*> malloc(cap * sizeof(int))
    cdef int* jpvt = <int*> malloc(cap * sizeof(int))
    cdef unsigned char* taken = <unsigned char*> malloc(scratch_n * sizeof(unsigned char))
    cdef unsigned char* inset = <unsigned char*> malloc(n * sizeof(unsigned char))

    # dgelsy workspace query at the largest subproblem size
    cdef double wq
    cdef int lwork = -1
    cdef int tq = cap
    cdef int info = 0
    dgelsy(&m, &tq, &inc, sub, &m, bbuf, &ldb, jpvt, &rcond, &rank, &wq, &lwork, &info)
    lwork = <int> wq
    cdef double* work = <double*> malloc(lwork * sizeof(double))

    try:
        for i in range(m):
            r[i] = y[i]

        for it in range(max_iter):
            prev_norm = resids[len(resids) - 1]
            if prev_norm <= tol * ynorm:
                break

            # proxy = A^T r; the C-contiguous (m, n) buffer is A^T in
            # Fortran order, so no transpose flag is needed.
            dgemv("N", &n, &m, &one, &A[0, 0], &n, r, &inc, &zero, proxy, &inc)

            npicked = _top_indices(proxy, band, 2 * k, cand, taken)

            # merged support: forced model indices, then the current
            # estimate strongest-first, then proxy candidates; cap columns
            for j in range(n):
                inset[j] = 0
            t = 0
            for j in range(forced):
                if t < cap and not inset[j]:
                    inset[j] = 1
                    supp[t] = j
                    t += 1
            nprev = 0
            for j in range(n):
                if x[j] != 0.0:
                    prev[nprev] = j
                    mags[nprev] = x[j]
                    nprev += 1
            nprev = _top_indices(mags, nprev, nprev, order, taken)
            for j in range(nprev):
                pos = prev[order[j]]
                if t < cap and not inset[pos]:
                    inset[pos] = 1
                    supp[t] = pos
                    t += 1
            for j in range(npicked):
                pos = cand[j]
                if t < cap and not inset[pos]:
                    inset[pos] = 1
                    supp[t] = pos
                    t += 1
            _isort(supp, t)

            rank = _lstsq(A, y, supp, t, m, sub, bbuf, ldb, sol, jpvt, &rcond, work, lwork)
            if rank < t:
                degraded = True

            nkeep = _top_indices(sol, t, k, keep, taken)
            for j in range(nkeep):
                sel[j] = supp[keep[j]]
            _isort(sel, nkeep)

            rank = _lstsq(A, y, sel, nkeep, m, sub, bbuf, ldb, sol, jpvt, &rcond, work, lwork)
            if rank < nkeep:
                degraded = True

            # candidate update and residual
            for i in range(m):
                r[i] = y[i]
            for j in range(nkeep):
                for i in range(m):
                    r[i] -= A[i, sel[j]] * sol[j]
            rnorm = 0.0
            for i in range(m):
                rnorm += r[i] * r[i]
            rnorm = sqrt(rnorm)

            if not rnorm < prev_norm:
                break  # no progress: keep the previous iterate

            for j in range(n):
                x[j] = 0.0
            for j in range(nkeep):
                x[sel[j]] = sol[j]
            resids.append(rnorm)

        return x_arr, len(resids) - 1, np.asarray(resids), bool(degraded)
    finally:
        free(r); free(proxy); free(sub); free(bbuf); free(sol); free(mags)
        free(cand); free(supp); free(keep); free(sel); free(prev); free(order)
        free(jpvt); free(taken); free(inset); free(work)


cdef int _lstsq(double[:, ::1] A, double[::1] y, int* cols, int t, int m,
                double* sub, double* bbuf, int ldb, double* sol,
                int* jpvt, double* rcond, double* work, int lwork):
    """min ||A[:, cols] z - y|| via dgelsy; fills sol, returns revealed rank."""
    cdef int i, j, rank = 0, info = 0
    cdef int nrhs = 1
    if t == 0:
        return 0
    for j in range(t):
        for i in range(m):
            sub[j * m + i] = A[i, cols[j]]
    for i in range(m):
        bbuf[i] = y[i]
    for i in range(m, ldb):
        bbuf[i] = 0.0
    for j in range(t):
        jpvt[j] = 0
    dgelsy(&m, &t, &nrhs, sub, &m, bbuf, &ldb, jpvt, rcond, &rank, work, &lwork, &info)
    for j in range(t):
        sol[j] = bbuf[j]
    return rank
