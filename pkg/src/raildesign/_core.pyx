# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation engine; contract-identical to ``_core_py``."""

from libc.stdlib cimport malloc, free

cdef long long FREE = -1


cdef class PropEngine:
    cdef int nvars, nrows
    cdef long long nnz
    cdef long long *row_ptr
    cdef int *row_col
    cdef long long *row_coef
    cdef long long *rhs
    cdef long long *w_ptr
    cdef int *w_row
    cdef long long *w_coef
    cdef signed char *values
    cdef long long *minact
    cdef long long *maxact
    cdef signed char *settled
    cdef int num_unsettled
    cdef long long *trail
    cdef long long trail_len
    cdef long long *queue
    cdef long long queue_cap

    def __cinit__(self, nvars, row_cols, row_coefs, row_rhs):
        cdef long long i, j, pos
        cdef int r, v
        self.nvars = nvars
        self.nrows = len(row_rhs)
        self.nnz = 0
        for cols in row_cols:
            self.nnz += len(cols)

        self.row_ptr = <long long *> malloc((self.nrows + 1) * sizeof(long long))
        self.row_col = <int *> malloc(max(self.nnz, 1) * sizeof(int))
        self.row_coef = <long long *> malloc(max(self.nnz, 1) * sizeof(long long))
        self.rhs = <long long *> malloc(max(self.nrows, 1) * sizeof(long long))
        self.w_ptr = <long long *> malloc((self.nvars + 1) * sizeof(long long))
        self.w_row = <int *> malloc(max(self.nnz, 1) * sizeof(int))
        self.w_coef = <long long *> malloc(max(self.nnz, 1) * sizeof(long long))
        self.values = <signed char *> malloc(max(self.nvars, 1) * sizeof(signed char))
        self.minact = <long long *> malloc(max(self.nrows, 1) * sizeof(long long))
        self.maxact = <long long *> malloc(max(self.nrows, 1) * sizeof(long long))
        self.settled = <signed char *> malloc(max(self.nrows, 1) * sizeof(signed char))
        self.trail = <long long *> malloc(max(self.nvars + self.nrows, 1) * sizeof(long long))
        self.queue_cap = self.nnz + self.nrows + 8
        self.queue = <long long *> malloc(self.queue_cap * sizeof(long long))

        pos = 0
        for r in range(self.nrows):
            self.row_ptr[r] = pos
            cols = row_cols[r]
            coefs = row_coefs[r]
            self.rhs[r] = row_rhs[r]
            for j in range(len(cols)):
                self.row_col[pos] = cols[j]
                self.row_coef[pos] = coefs[j]
                pos += 1
        self.row_ptr[self.nrows] = pos

        # watch lists as CSR over variables
        counts = [0] * self.nvars
        for i in range(self.nnz):
            counts[self.row_col[i]] += 1
        pos = 0
        for v in range(self.nvars):
            self.w_ptr[v] = pos
            pos += counts[v]
        self.w_ptr[self.nvars] = pos
        fill = [0] * self.nvars
        for r in range(self.nrows):
            for i in range(self.row_ptr[r], self.row_ptr[r + 1]):
                v = self.row_col[i]
                j = self.w_ptr[v] + fill[v]
                self.w_row[j] = r
                self.w_coef[j] = self.row_coef[i]
                fill[v] += 1

        self.trail_len = 0
        self.num_unsettled = self.nrows
        for v in range(self.nvars):
            self.values[v] = FREE
        cdef long long lo, hi, c
        for r in range(self.nrows):
            lo = 0
            hi = 0
            for i in range(self.row_ptr[r], self.row_ptr[r + 1]):
                c = self.row_coef[i]
                if c < 0:
                    lo += c
                else:
                    hi += c
            self.minact[r] = lo
            self.maxact[r] = hi
            if hi <= self.rhs[r]:
                self.settled[r] = 1
                self.num_unsettled -= 1
            else:
                self.settled[r] = 0

    def __dealloc__(self):
        free(self.row_ptr); free(self.row_col); free(self.row_coef); free(self.rhs)
        free(self.w_ptr); free(self.w_row); free(self.w_coef)
        free(self.values); free(self.minact); free(self.maxact); free(self.settled)
        free(self.trail); free(self.queue)

    # -- search interface ---------------------------------------------------

    def mark(self):
        return self.trail_len

    def backtrack(self, long long mark):
        cdef long long entry, i
        cdef int var, r
        cdef long long c
        cdef signed char val
        while self.trail_len > mark:
            self.trail_len -= 1
            entry = self.trail[self.trail_len]
            if entry < 0:
                r = <int> (-entry - 1)
                self.settled[r] = 0
                self.num_unsettled += 1
            else:
                var = <int> entry
                val = self.values[var]
                self.values[var] = FREE
                for i in range(self.w_ptr[var], self.w_ptr[var + 1]):
                    r = self.w_row[i]
                    c = self.w_coef[i]
                    if c > 0:
                        if val == 1:
                            self.minact[r] -= c
                        else:
                            self.maxact[r] += c
                    else:
                        if val == 0:
                            self.minact[r] += c
                        else:
                            self.maxact[r] -= c

    def value(self, int var):
        return self.values[var]

    def all_settled(self):
        return self.num_unsettled == 0

    def first_free(self, int start):
        cdef int v
        for v in range(start, self.nvars):
            if self.values[v] == FREE:
                return v
        return -1

    def propagate_root(self):
        cdef int r
        cdef long long qlen = 0
        for r in range(self.nrows):
            if self.minact[r] > self.rhs[r]:
                return False
            self.queue[qlen] = r
            qlen += 1
        return self._drain(qlen)

    def assign(self, int var, int val):
        if self.values[var] != FREE:
            return self.values[var] == val
        cdef long long qlen = 0
        qlen = self._fix(var, val, qlen)
        if qlen < 0:
            return False
        return self._drain(qlen)

    # -- internals ----------------------------------------------------------

    cdef long long _fix(self, int var, int val, long long qlen):
        """Returns new queue length, or -1-qlen' on conflict (all updates applied)."""
        cdef long long i, c
        cdef int r
        cdef bint ok = True
        self.values[var] = <signed char> val
        self.trail[self.trail_len] = var
        self.trail_len += 1
        for i in range(self.w_ptr[var], self.w_ptr[var + 1]):
            r = self.w_row[i]
            c = self.w_coef[i]
            if c > 0:
                if val == 1:
                    self.minact[r] += c
                    if self.minact[r] > self.rhs[r]:
                        ok = False
                    self.queue[qlen] = r
                    qlen += 1
                else:
                    self.maxact[r] -= c
                    if self.settled[r] == 0 and self.maxact[r] <= self.rhs[r]:
                        self.settled[r] = 1
                        self.num_unsettled -= 1
                        self.trail[self.trail_len] = -(<long long> r) - 1
                        self.trail_len += 1
            else:
                if val == 0:
                    self.minact[r] -= c
                    if self.minact[r] > self.rhs[r]:
                        ok = False
                    self.queue[qlen] = r
                    qlen += 1
                else:
                    self.maxact[r] += c
                    if self.settled[r] == 0 and self.maxact[r] <= self.rhs[r]:
                        self.settled[r] = 1
                        self.num_unsettled -= 1
                        self.trail[self.trail_len] = -(<long long> r) - 1
                        self.trail_len += 1
        if not ok:
            return -1
        return qlen

    cdef bint _drain(self, long long qlen):
        cdef long long slack, c, i
        cdef int r, v
        while qlen > 0:
            qlen -= 1
            r = <int> self.queue[qlen]
            slack = self.rhs[r] - self.minact[r]
            if slack < 0:
                return False
            for i in range(self.row_ptr[r], self.row_ptr[r + 1]):
                v = self.row_col[i]
                if self.values[v] != FREE:
                    continue
                c = self.row_coef[i]
                if c > 0:
                    if c > slack:
                        qlen = self._fix(v, 0, qlen)
                        if qlen < 0:
                            return False
                        slack = self.rhs[r] - self.minact[r]
                elif -c > slack:
                    qlen = self._fix(v, 1, qlen)
                    if qlen < 0:
                        return False
                    slack = self.rhs[r] - self.minact[r]
        return True
