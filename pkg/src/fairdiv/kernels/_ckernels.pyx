# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels over int64 tables. Same contract as _pykernels.

Callers guarantee every row total stays below 2**30, so squared bundle
values scaled by small constants fit in a signed 64-bit integer.
"""

from libc.stdlib cimport malloc, free

ctypedef long long i64


cdef class IntTable:
    cdef i64* data
    cdef readonly int n
    cdef readonly int m

    def __cinit__(self, rows):
        rows = [list(r) for r in rows]
        self.n = len(rows)
        self.m = len(rows[0]) if rows else 0
        self.data = <i64*> malloc(max(1, self.n * self.m) * sizeof(i64))
        if self.data == NULL:
            raise MemoryError()
        cdef int i, g
        for i in range(self.n):
            for g in range(self.m):
                self.data[i * self.m + g] = rows[i][g]

    def __dealloc__(self):
        if self.data != NULL:
            free(self.data)


cdef void _stats(IntTable t, int* owner, i64* sums, i64* lo, i64* lo2, int* counts) noexcept nogil:
    cdef int n = t.n, m = t.m, nb = t.n + 1
    cdef int i, g, b, k
    cdef i64 v
    for b in range(nb):
        counts[b] = 0
    for g in range(m):
        counts[owner[g]] += 1
    for k in range(n * nb):
        sums[k] = 0
        lo[k] = -1
        lo2[k] = -1
    for i in range(n):
        for g in range(m):
            b = owner[g]
            k = i * nb + b
            v = t.data[i * m + g]
            sums[k] += v
            if lo[k] < 0 or v < lo[k]:
                lo2[k] = lo[k]
                lo[k] = v
            elif lo2[k] < 0 or v < lo2[k]:
                lo2[k] = v


cdef bint _is_beta_efx(IntTable t, int* owner, i64* sums, i64* lo, i64* lo2, int* counts,
                       i64 bsq_num, i64 bsq_den) noexcept nogil:
    cdef int n = t.n, nb = t.n + 1
    cdef int i, j
    cdef i64 a, b, lhs
    _stats(t, owner, sums, lo, lo2, counts)
    for i in range(n):
        a = sums[i * nb + i]
        lhs = bsq_num * a * a
        for j in range(n):
            if j == i or counts[j] < 2:
                continue
            b = sums[i * nb + j] - lo[i * nb + j]
            if b > 0 and lhs < bsq_den * b * b:
                return False
    return True


def bundle_stats(IntTable t, owner):
    cdef int n = t.n, m = t.m, nb = t.n + 1
    cdef int* own = <int*> malloc(max(1, m) * sizeof(int))
    cdef i64* sums = <i64*> malloc(max(1, n * nb) * sizeof(i64))
    cdef i64* lo = <i64*> malloc(max(1, n * nb) * sizeof(i64))
    cdef i64* lo2 = <i64*> malloc(max(1, n * nb) * sizeof(i64))
    cdef int* counts = <int*> malloc(nb * sizeof(int))
    cdef int i, b, g
    try:
        for g in range(m):
            own[g] = owner[g]
        _stats(t, own, sums, lo, lo2, counts)
        out_s, out_m, out_m2 = [], [], []
        for i in range(n):
            out_s.append([sums[i * nb + b] for b in range(nb)])
            out_m.append([lo[i * nb + b] if lo[i * nb + b] >= 0 else 0 for b in range(nb)])
            out_m2.append([lo[i * nb + b] + lo2[i * nb + b] if lo2[i * nb + b] >= 0 else 0
                           for b in range(nb)])
        return out_s, out_m, out_m2, [counts[b] for b in range(nb)]
    finally:
        free(own); free(sums); free(lo); free(lo2); free(counts)


def scan_efx(IntTable t, i64 bsq_num, i64 bsq_den, bint first_only):
    cdef int n = t.n, m = t.m, nb = t.n + 1
    if n == 0:
        return (1, ()) if m == 0 else (0, None)
    cdef int* own = <int*> malloc(max(1, m) * sizeof(int))
    cdef i64* sums = <i64*> malloc(n * nb * sizeof(i64))
    cdef i64* lo = <i64*> malloc(n * nb * sizeof(i64))
    cdef i64* lo2 = <i64*> malloc(n * nb * sizeof(i64))
    cdef int* counts = <int*> malloc(nb * sizeof(int))
    cdef long long count = 0
    cdef bint found = False
    cdef int g
    first = None
    try:
        for g in range(m):
            own[g] = 0
        while True:
            if _is_beta_efx(t, own, sums, lo, lo2, counts, bsq_num, bsq_den):
                count += 1
                if not found:
                    found = True
                    first = tuple([own[g] for g in range(m)])
                    if first_only:
                        return count, first
            g = m - 1
            while g >= 0 and own[g] == n - 1:
                own[g] = 0
                g -= 1
            if g < 0:
                return count, first
            own[g] += 1
    finally:
        free(own); free(sums); free(lo); free(lo2); free(counts)
