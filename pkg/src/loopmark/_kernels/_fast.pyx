# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled kernels mirroring ``loopmark._kernels.pure`` (same classes, API,
and results; only the inner loops run in C).  See the pure module for the
algorithm notes.  Not thread-safe: scratch buffers are reused across calls.
"""

from libc.stdlib cimport free, malloc

import math

BACKEND_NAME = "compiled"

cdef double INF = math.inf


cdef int *_copy_ints(object values) except NULL:
    cdef Py_ssize_t n = len(values)
    cdef int *out = <int *> malloc((n if n > 0 else 1) * sizeof(int))
    cdef Py_ssize_t i
    if out == NULL:
        raise MemoryError()
    for i in range(n):
        out[i] = values[i]
    return out


cdef class RelaxationCore:
    cdef bint additive
    cdef int num_atoms
    cdef int num_actions
    cdef int *pre_counts
    cdef int *add_flat
    cdef int *add_off
    cdef int *cons_flat
    cdef int *cons_off
    cdef int *zero_pre
    cdef int zero_pre_len
    cdef int *goal
    cdef int goal_len
    cdef unsigned char *is_goal
    # scratch buffers reused across calls
    cdef double *cost
    cdef double *acc
    cdef int *unsat
    cdef double *heap_cost
    cdef int *heap_atom

    def __cinit__(self, mode, int num_atoms, pre_flat, pre_offsets,
                  add_flat, add_offsets, goal):
        cdef int a, k, atom, heap_cap
        cdef list goal_sorted
        if mode not in ("add", "max"):
            raise ValueError(f"unknown relaxation mode {mode!r}")
        self.additive = mode == "add"
        self.num_atoms = num_atoms
        self.num_actions = len(pre_offsets) - 1

        self.pre_counts = <int *> malloc((self.num_actions + 1) * sizeof(int))
        if self.pre_counts == NULL:
            raise MemoryError()
        for a in range(self.num_actions):
            self.pre_counts[a] = pre_offsets[a + 1] - pre_offsets[a]
        self.add_flat = _copy_ints(add_flat)
        self.add_off = _copy_ints(add_offsets)

        # Flatten the consumer lists (actions indexed by precondition atom).
        cdef int *counts = <int *> malloc((num_atoms + 1) * sizeof(int))
        if counts == NULL:
            raise MemoryError()
        for atom in range(num_atoms):
            counts[atom] = 0
        for k in range(len(pre_flat)):
            counts[<int> pre_flat[k]] += 1
        self.cons_off = <int *> malloc((num_atoms + 1) * sizeof(int))
        if self.cons_off == NULL:
            free(counts)
            raise MemoryError()
        self.cons_off[0] = 0
        for atom in range(num_atoms):
            self.cons_off[atom + 1] = self.cons_off[atom] + counts[atom]
            counts[atom] = 0
        self.cons_flat = <int *> malloc((self.cons_off[num_atoms] + 1) * sizeof(int))
        if self.cons_flat == NULL:
            free(counts)
            raise MemoryError()
        for a in range(self.num_actions):
            for k in range(pre_offsets[a], pre_offsets[a + 1]):
                atom = pre_flat[k]
                self.cons_flat[self.cons_off[atom] + counts[atom]] = a
                counts[atom] += 1
        free(counts)

        zero = [a for a in range(self.num_actions) if self.pre_counts[a] == 0]
        self.zero_pre = _copy_ints(zero)
        self.zero_pre_len = len(zero)

        goal_sorted = sorted(set(goal))
        self.goal = _copy_ints(goal_sorted)
        self.goal_len = len(goal_sorted)
        self.is_goal = <unsigned char *> malloc((num_atoms + 1) * sizeof(unsigned char))
        if self.is_goal == NULL:
            raise MemoryError()
        for atom in range(num_atoms):
            self.is_goal[atom] = 0
        for k in range(self.goal_len):
            self.is_goal[self.goal[k]] = 1

        self.cost = <double *> malloc((num_atoms + 1) * sizeof(double))
        self.acc = <double *> malloc((self.num_actions + 1) * sizeof(double))
        self.unsat = <int *> malloc((self.num_actions + 1) * sizeof(int))
        heap_cap = num_atoms + len(add_flat) + self.add_off[self.num_actions] + 8
        self.heap_cost = <double *> malloc(heap_cap * sizeof(double))
        self.heap_atom = <int *> malloc(heap_cap * sizeof(int))
        if (self.cost == NULL or self.acc == NULL or self.unsat == NULL
                or self.heap_cost == NULL or self.heap_atom == NULL):
            raise MemoryError()

    def __dealloc__(self):
        free(self.pre_counts)
        free(self.add_flat)
        free(self.add_off)
        free(self.cons_flat)
        free(self.cons_off)
        free(self.zero_pre)
        free(self.goal)
        free(self.is_goal)
        free(self.cost)
        free(self.acc)
        free(self.unsat)
        free(self.heap_cost)
        free(self.heap_atom)

    @property
    def mode(self):
        return "add" if self.additive else "max"

    cdef inline void _push(self, int *size, double c, int atom):
        cdef int i = size[0]
        cdef int parent
        size[0] = i + 1
        while i > 0:
            parent = (i - 1) >> 1
            if self.heap_cost[parent] <= c:
                break
            self.heap_cost[i] = self.heap_cost[parent]
            self.heap_atom[i] = self.heap_atom[parent]
            i = parent
        self.heap_cost[i] = c
        self.heap_atom[i] = atom

    cdef inline int _pop(self, int *size, double *c_out):
        cdef int atom = self.heap_atom[0]
        cdef int n, i, child
        cdef double c
        cdef int a
        c_out[0] = self.heap_cost[0]
        n = size[0] - 1
        size[0] = n
        if n > 0:
            c = self.heap_cost[n]
            a = self.heap_atom[n]
            i = 0
            child = 1
            while child < n:
                if child + 1 < n and self.heap_cost[child + 1] < self.heap_cost[child]:
                    child += 1
                if self.heap_cost[child] >= c:
                    break
                self.heap_cost[i] = self.heap_cost[child]
                self.heap_atom[i] = self.heap_atom[child]
                i = child
                child = 2 * i + 1
            self.heap_cost[i] = c
            self.heap_atom[i] = a
        return atom

    cdef void _sweep(self, const unsigned char[::1] mask, bint full):
        cdef int heap_size = 0
        cdef int i, k, a, atom, effect, goals_left
        cdef double c, fire
        for i in range(self.num_atoms):
            self.cost[i] = 0.0 if mask[i] else INF
        for a in range(self.num_actions):
            self.acc[a] = 0.0
            self.unsat[a] = self.pre_counts[a]
        for i in range(self.num_atoms):
            if mask[i]:
                self._push(&heap_size, 0.0, i)
        for k in range(self.zero_pre_len):
            a = self.zero_pre[k]
            for i in range(self.add_off[a], self.add_off[a + 1]):
                effect = self.add_flat[i]
                if 1.0 < self.cost[effect]:
                    self.cost[effect] = 1.0
                    self._push(&heap_size, 1.0, effect)
        goals_left = -1 if full else self.goal_len
        while heap_size > 0:
            atom = self._pop(&heap_size, &c)
            if c > self.cost[atom]:
                continue  # stale entry
            if goals_left >= 0 and self.is_goal[atom]:
                goals_left -= 1
                if goals_left == 0:
                    break
            for k in range(self.cons_off[atom], self.cons_off[atom + 1]):
                a = self.cons_flat[k]
                if self.additive:
                    self.acc[a] += c
                else:
                    self.acc[a] = c  # settled in nondecreasing order: c is the max
                self.unsat[a] -= 1
                if self.unsat[a] == 0:
                    fire = self.acc[a] + 1.0
                    for i in range(self.add_off[a], self.add_off[a + 1]):
                        effect = self.add_flat[i]
                        if fire < self.cost[effect]:
                            self.cost[effect] = fire
                            self._push(&heap_size, fire, effect)

    def costs(self, const unsigned char[::1] mask):
        """Full fixpoint: the relaxed cost of every atom (inf = unreachable)."""
        cdef int i
        if mask.shape[0] != self.num_atoms:
            raise ValueError("mask length does not match the atom count")
        self._sweep(mask, True)
        return [self.cost[i] for i in range(self.num_atoms)]

    def value(self, const unsigned char[::1] mask):
        """Aggregate goal cost: sum (add) or max (max); inf on a dead end."""
        cdef int k
        cdef double total = 0.0
        cdef double c
        if mask.shape[0] != self.num_atoms:
            raise ValueError("mask length does not match the atom count")
        self._sweep(mask, False)
        for k in range(self.goal_len):
            c = self.cost[self.goal[k]]
            if c == INF:
                return math.inf
            if self.additive:
                total += c
            elif c > total:
                total = c
        return total


cdef class SuccessorCore:
    cdef int num_atoms
    cdef int num_actions
    cdef int *pre_flat
    cdef int *pre_off
    cdef int *neg_flat
    cdef int *neg_off

    def __cinit__(self, int num_atoms, pre_flat, pre_offsets, neg_flat, neg_offsets):
        self.num_atoms = num_atoms
        self.num_actions = len(pre_offsets) - 1
        self.pre_flat = _copy_ints(pre_flat)
        self.pre_off = _copy_ints(pre_offsets)
        self.neg_flat = _copy_ints(neg_flat)
        self.neg_off = _copy_ints(neg_offsets)

    def __dealloc__(self):
        free(self.pre_flat)
        free(self.pre_off)
        free(self.neg_flat)
        free(self.neg_off)

    def applicable(self, const unsigned char[::1] mask):
        """Indices of applicable actions, ascending."""
        cdef list out = []
        cdef int a, k
        cdef bint ok
        if mask.shape[0] != self.num_atoms:
            raise ValueError("mask length does not match the atom count")
        for a in range(self.num_actions):
            ok = True
            for k in range(self.pre_off[a], self.pre_off[a + 1]):
                if mask[self.pre_flat[k]] == 0:
                    ok = False
                    break
            if ok:
                for k in range(self.neg_off[a], self.neg_off[a + 1]):
                    if mask[self.neg_flat[k]] != 0:
                        ok = False
                        break
            if ok:
                out.append(a)
        return out
