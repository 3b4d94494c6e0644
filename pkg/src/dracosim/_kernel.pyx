# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dissemination phase.

Mirrors ``World.run_dissemination`` event for event: the same initial
schedule, the same ``(time, seq)`` ordering and the same order of random
draws on the shared bit generator, so both backends produce identical
ledgers, buffers, neighbour tables and traces.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset
from numpy.random cimport bitgen_t

cnp.import_array()

# event kinds (engine.EventKind), strategies (ReplicationStrategyKind) and
# drop reasons (core.DropReason) share their numeric codes with Python
cdef enum:
    K_ADVERT = 0
    K_SENSE = 1
    K_DELIVER_ADVERT = 2
    K_DELIVER_DATA = 3
    K_FAILURE = 4
    K_LOST = 7

cdef enum:
    S_DRACO = 0
    S_GREEDY = 1
    S_RANDOM = 2

cdef enum:
    D_NO_CANDIDATE = 0
    D_BUFFER_FULL = 1
    D_RECIPIENT_DEAD = 2
    D_LINK_LOSS = 3


cdef struct Ev:
    double t
    long long seq
    int kind
    int actor
    long long a
    long long b
    long long c


cdef struct Heap:
    Ev *data
    Py_ssize_t size
    Py_ssize_t cap
    long long next_seq


cdef inline bint ev_less(Ev *x, Ev *y) nogil:
    if x.t < y.t:
        return True
    if x.t > y.t:
        return False
    return x.seq < y.seq


cdef int heap_push(Heap *h, double t, int kind, int actor, long long a, long long b, long long c) except -1:
    cdef Py_ssize_t i, parent
    cdef Ev tmp
    if h.size == h.cap:
        h.cap = h.cap * 2 if h.cap else 1024
        h.data = <Ev *> realloc(h.data, h.cap * sizeof(Ev))
        if h.data == NULL:
            raise MemoryError()
    i = h.size
    h.size += 1
    h.data[i].t = t
    h.data[i].seq = h.next_seq
    h.data[i].kind = kind
    h.data[i].actor = actor
    h.data[i].a = a
    h.data[i].b = b
    h.data[i].c = c
    h.next_seq += 1
    while i > 0:
        parent = (i - 1) >> 1
        if ev_less(&h.data[i], &h.data[parent]):
            tmp = h.data[i]
            h.data[i] = h.data[parent]
            h.data[parent] = tmp
            i = parent
        else:
            break
    return 0


cdef Ev heap_pop(Heap *h) nogil:
    cdef Ev top = h.data[0]
    cdef Ev tmp
    cdef Py_ssize_t i = 0, l, r, m
    h.size -= 1
    h.data[0] = h.data[h.size]
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < h.size and ev_less(&h.data[l], &h.data[m]):
            m = l
        if r < h.size and ev_less(&h.data[r], &h.data[m]):
            m = r
        if m == i:
            break
        tmp = h.data[i]
        h.data[i] = h.data[m]
        h.data[m] = tmp
        i = m
    return top


cdef class _Ints:
    """int64 column with a raw pointer for the hot loop."""
    cdef long long *p
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 4096
        self.n = 0
        self.p = <long long *> malloc(self.cap * sizeof(long long))
        if self.p == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.p)

    cdef int push(self, long long v) except -1:
        if self.n == self.cap:
            self.cap *= 2
            self.p = <long long *> realloc(self.p, self.cap * sizeof(long long))
            if self.p == NULL:
                raise MemoryError()
        self.p[self.n] = v
        self.n += 1
        return 0

    def values(self):
        out = np.empty(self.n, dtype=np.int64)
        cdef cnp.int64_t[::1] v = out
        cdef Py_ssize_t i
        for i in range(self.n):
            v[i] = self.p[i]
        return out


cdef class _Doubles:
    cdef double *p
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 4096
        self.n = 0
        self.p = <double *> malloc(self.cap * sizeof(double))
        if self.p == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.p)

    cdef int push(self, double v) except -1:
        if self.n == self.cap:
            self.cap *= 2
            self.p = <double *> realloc(self.p, self.cap * sizeof(double))
            if self.p == NULL:
                raise MemoryError()
        self.p[self.n] = v
        self.n += 1
        return 0

    def values(self):
        out = np.empty(self.n, dtype=np.float64)
        cdef double[::1] v = out
        cdef Py_ssize_t i
        for i in range(self.n):
            v[i] = self.p[i]
        return out


cdef struct Msg:
    long long item
    long long remaining
    long long hops


cdef class _Sim:
    # topology
    cdef int n
    cdef const cnp.int64_t[::1] off
    cdef const cnp.int64_t[::1] col
    cdef const cnp.int64_t[::1] rev
    cdef const double[::1] interval
    # parameters
    cdef int strategy
    cdef long long degree
    cdef long long capacity
    cdef double advert_interval, stale, hop_delay, drop_p, duration
    cdef bitgen_t *bg
    cdef bint tracing
    # node state
    cdef char *alive
    cdef long long *next_seq
    cdef long long *buf
    cdef long long *buf_len
    # neighbour table, one slot per directed edge
    cdef char *known
    cdef long long *t_non
    cdef long long *t_rm
    cdef double *t_heard
    # messages: header + three membership bitmaps of n+1 bytes each
    cdef Msg *msgs
    cdef char *flags
    cdef long long *free_ids
    cdef Py_ssize_t n_msgs, msg_cap, n_free
    # event queue
    cdef Heap heap
    cdef double now
    # outputs
    cdef _Ints it_owner, it_seq, copies
    cdef _Doubles it_time
    cdef _Ints p_item, p_holder, p_index, p_hops
    cdef _Doubles p_time
    cdef _Ints d_item, d_node, d_reason
    cdef _Doubles d_time
    cdef _Doubles tr_t
    cdef _Ints tr_seq, tr_kind, tr_actor
    cdef dict died_at

    def __cinit__(self):
        self.alive = NULL
        self.next_seq = NULL
        self.buf = NULL
        self.buf_len = NULL
        self.known = NULL
        self.t_non = NULL
        self.t_rm = NULL
        self.t_heard = NULL
        self.msgs = NULL
        self.flags = NULL
        self.free_ids = NULL
        self.heap.data = NULL
        self.heap.size = 0
        self.heap.cap = 0
        self.heap.next_seq = 0

    def __dealloc__(self):
        free(self.alive)
        free(self.next_seq)
        free(self.buf)
        free(self.buf_len)
        free(self.known)
        free(self.t_non)
        free(self.t_rm)
        free(self.t_heard)
        free(self.msgs)
        free(self.flags)
        free(self.free_ids)
        free(self.heap.data)

    cdef inline char *pv(self, long long m):
        return self.flags + m * 3 * (self.n + 1)

    cdef inline char *pr(self, long long m):
        return self.flags + (m * 3 + 1) * (self.n + 1)

    cdef inline char *cn(self, long long m):
        return self.flags + (m * 3 + 2) * (self.n + 1)

    cdef long long msg_alloc(self, long long item) except -1:
        cdef long long m
        if self.n_free > 0:
            self.n_free -= 1
            m = self.free_ids[self.n_free]
        else:
            if self.n_msgs == self.msg_cap:
                self.msg_cap = self.msg_cap * 2 if self.msg_cap else 64
                self.msgs = <Msg *> realloc(self.msgs, self.msg_cap * sizeof(Msg))
                self.flags = <char *> realloc(self.flags, self.msg_cap * 3 * (self.n + 1))
                self.free_ids = <long long *> realloc(self.free_ids, self.msg_cap * sizeof(long long))
                if self.msgs == NULL or self.flags == NULL or self.free_ids == NULL:
                    raise MemoryError()
            m = self.n_msgs
            self.n_msgs += 1
        memset(self.pv(m), 0, 3 * (self.n + 1))
        self.msgs[m].item = item
        self.msgs[m].remaining = self.degree
        self.msgs[m].hops = 0
        return m

    cdef inline void msg_free(self, long long m):
        self.free_ids[self.n_free] = m
        self.n_free += 1

    cdef inline double uniform(self):
        return self.bg.next_double(self.bg.state)

    cdef inline bint lost(self):
        return self.drop_p > 0.0 and self.uniform() < self.drop_p

    cdef inline bint fresh(self, long long p):
        return self.known[p] and self.now - self.t_heard[p] <= self.stale

    cdef int trace(self, Ev *e, int kind) except -1:
        if self.tracing:
            self.tr_t.push(e.t)
            self.tr_seq.push(e.seq)
            self.tr_kind.push(kind)
            self.tr_actor.push(e.actor)
        return 0

    cdef long long select(self, int i, long long m, bint owner):
        cdef long long p, j, best = -1, best_key = -1, count = 0, k
        cdef char *pvf = self.pv(m)
        cdef char *prf = self.pr(m)
        cdef char *cnf = self.cn(m)
        if self.strategy == S_DRACO:
            for p in range(self.off[i], self.off[i + 1]):
                if not self.fresh(p) or self.t_rm[p] <= 0:
                    continue
                j = self.col[p]
                if not owner and (pvf[j] or prf[j] or cnf[j]):
                    continue
                if self.t_non[p] > best_key:
                    best_key = self.t_non[p]
                    best = j
            if best >= 0 or owner:
                return best
            for p in range(self.off[i], self.off[i + 1]):
                if not self.fresh(p) or self.t_rm[p] <= 0:
                    continue
                j = self.col[p]
                if pvf[j] or prf[j]:
                    continue
                if self.t_non[p] > best_key:
                    best_key = self.t_non[p]
                    best = j
            return best
        if self.strategy == S_GREEDY:
            for p in range(self.off[i], self.off[i + 1]):
                if not self.fresh(p) or self.t_rm[p] <= 0:
                    continue
                j = self.col[p]
                if pvf[j]:
                    continue
                if self.t_rm[p] > best_key:
                    best_key = self.t_rm[p]
                    best = j
            return best
        # random
        for p in range(self.off[i], self.off[i + 1]):
            if self.fresh(p) and not pvf[self.col[p]]:
                count += 1
        if count == 0:
            return -1
        k = <long long> (self.uniform() * count)
        if k > count - 1:
            k = count - 1
        for p in range(self.off[i], self.off[i + 1]):
            if self.fresh(p) and not pvf[self.col[p]]:
                if k == 0:
                    return self.col[p]
                k -= 1
        return -1

    cdef int drop(self, long long item, long long node, int reason) except -1:
        self.d_item.push(item)
        self.d_node.push(node)
        self.d_reason.push(reason)
        self.d_time.push(self.now)
        return 0

    cdef int handle(self, int i, long long m, bint owner) except -1:
        cdef long long item = self.msgs[m].item
        cdef long long p, c
        cdef bint stored = self.buf_len[i] < self.capacity
        if stored:
            self.buf[i * self.capacity + self.buf_len[i]] = item
            self.buf_len[i] += 1
            self.copies.p[item] += 1
            self.p_item.push(item)
            self.p_holder.push(i)
            self.p_index.push(self.copies.p[item])
            self.p_time.push(self.now)
            self.p_hops.push(self.msgs[m].hops)
            self.msgs[m].remaining -= 1
            self.pv(m)[i] = 1
            self.pr(m)[i] = 1
        else:
            self.pv(m)[i] = 1
        if self.msgs[m].remaining <= 0:
            self.msg_free(m)
            return 0
        c = self.select(i, m, owner)
        if c < 0:
            self.drop(item, i, D_NO_CANDIDATE if stored else D_BUFFER_FULL)
            self.msg_free(m)
            return 0
        if stored:
            for p in range(self.off[i], self.off[i + 1]):
                self.cn(m)[self.col[p]] = 1
        self.msgs[m].hops += 1
        if self.lost():
            self.drop(item, c, D_LINK_LOSS)
            self.msg_free(m)
            return 0
        heap_push(&self.heap, self.now + self.hop_delay, K_DELIVER_DATA, <int> c, m, 0, 0)
        return 0

    cdef int on_advert(self, int i) except -1:
        cdef long long p, non = 0, rm = self.capacity - self.buf_len[i]
        cdef double at = self.now + self.hop_delay
        cdef double nxt
        for p in range(self.off[i], self.off[i + 1]):
            if self.fresh(p):
                non += 1
        for p in range(self.off[i], self.off[i + 1]):
            if not self.alive[self.col[p]] or self.lost():
                continue
            heap_push(&self.heap, at, K_DELIVER_ADVERT, <int> self.col[p], self.rev[p], non, rm)
        nxt = self.now + self.advert_interval
        if nxt <= self.duration:
            heap_push(&self.heap, nxt, K_ADVERT, i, 0, 0, 0)
        return 0

    cdef int on_sense(self, int i) except -1:
        cdef long long item = self.it_owner.n
        cdef long long m
        cdef double nxt
        self.it_owner.push(i)
        self.it_seq.push(self.next_seq[i])
        self.it_time.push(self.now)
        self.copies.push(0)
        self.next_seq[i] += 1
        m = self.msg_alloc(item)
        self.handle(i, m, True)
        nxt = self.now + self.interval[i]
        if nxt <= self.duration:
            heap_push(&self.heap, nxt, K_SENSE, i, 0, 0, 0)
        return 0

    cdef int run(self) except -1:
        cdef Ev e
        cdef long long p
        while self.heap.size > 0:
            e = heap_pop(&self.heap)
            self.now = e.t
            if not self.alive[e.actor]:
                if e.kind == K_DELIVER_DATA:
                    self.drop(self.msgs[e.a].item, e.actor, D_RECIPIENT_DEAD)
                    self.msg_free(e.a)
                if e.kind == K_DELIVER_DATA or e.kind == K_DELIVER_ADVERT:
                    self.trace(&e, K_LOST)
                continue
            self.trace(&e, e.kind)
            if e.kind == K_ADVERT:
                self.on_advert(e.actor)
            elif e.kind == K_SENSE:
                self.on_sense(e.actor)
            elif e.kind == K_DELIVER_ADVERT:
                p = e.a
                self.known[p] = 1
                self.t_non[p] = e.b
                self.t_rm[p] = e.c
                self.t_heard[p] = self.now
            elif e.kind == K_DELIVER_DATA:
                self.handle(e.actor, e.a, False)
            elif e.kind == K_FAILURE:
                self.alive[e.actor] = 0
                self.died_at[e.actor] = self.now
        return 0


def disseminate(int n, offsets, cols, rev, intervals, failure_times, int strategy, long long degree,
                long long capacity, double advert_interval, double stale_after, double hop_delay,
                double drop_probability, double duration, rng, bint trace=False):
    """Run the dissemination phase.

    ``offsets``/``cols`` are the CSR adjacency over ids 1..n (sorted rows),
    ``rev[p]`` is the slot of the row owner inside the row of ``cols[p]``,
    ``intervals`` and ``failure_times`` are indexed by node id (``inf`` for
    no scheduled failure). Returns a dict of plain numpy columns.
    """
    cdef _Sim s = _Sim()
    cdef Py_ssize_t i, edges
    cdef const double[::1] ft = np.ascontiguousarray(failure_times, dtype=np.float64)
    s.n = n
    s.off = np.ascontiguousarray(offsets, dtype=np.int64)
    s.col = np.ascontiguousarray(cols, dtype=np.int64)
    s.rev = np.ascontiguousarray(rev, dtype=np.int64)
    s.interval = np.ascontiguousarray(intervals, dtype=np.float64)
    s.strategy = strategy
    s.degree = degree
    s.capacity = capacity
    s.advert_interval = advert_interval
    s.stale = stale_after
    s.hop_delay = hop_delay
    s.drop_p = drop_probability
    s.duration = duration
    s.tracing = trace
    s.died_at = {}
    s.it_owner = _Ints(); s.it_seq = _Ints(); s.copies = _Ints(); s.it_time = _Doubles()
    s.p_item = _Ints(); s.p_holder = _Ints(); s.p_index = _Ints(); s.p_hops = _Ints()
    s.p_time = _Doubles()
    s.d_item = _Ints(); s.d_node = _Ints(); s.d_reason = _Ints(); s.d_time = _Doubles()
    s.tr_t = _Doubles(); s.tr_seq = _Ints(); s.tr_kind = _Ints(); s.tr_actor = _Ints()

    edges = s.col.shape[0]
    s.alive = <char *> malloc(n + 1)
    s.next_seq = <long long *> malloc((n + 1) * sizeof(long long))
    s.buf = <long long *> malloc((n + 1) * max(capacity, 1) * sizeof(long long))
    s.buf_len = <long long *> malloc((n + 1) * sizeof(long long))
    s.known = <char *> malloc(max(edges, 1))
    s.t_non = <long long *> malloc(max(edges, 1) * sizeof(long long))
    s.t_rm = <long long *> malloc(max(edges, 1) * sizeof(long long))
    s.t_heard = <double *> malloc(max(edges, 1) * sizeof(double))
    if (s.alive == NULL or s.next_seq == NULL or s.buf == NULL or s.buf_len == NULL
            or s.known == NULL or s.t_non == NULL or s.t_rm == NULL or s.t_heard == NULL):
        raise MemoryError()
    memset(s.alive, 1, n + 1)
    memset(s.next_seq, 0, (n + 1) * sizeof(long long))
    memset(s.buf_len, 0, (n + 1) * sizeof(long long))
    memset(s.known, 0, max(edges, 1))

    capsule = rng.bit_generator.capsule
    s.bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    for i in range(1, n + 1):
        heap_push(&s.heap, 0.0, K_ADVERT, <int> i, 0, 0, 0)
    for i in range(1, n + 1):
        if s.interval[i] <= duration:
            heap_push(&s.heap, s.interval[i], K_SENSE, <int> i, 0, 0, 0)
    for i in range(1, n + 1):
        if ft[i] != float("inf"):
            heap_push(&s.heap, ft[i], K_FAILURE, <int> i, 0, 0, 0)

    with rng.bit_generator.lock:
        s.run()

    buffers = {}
    for i in range(1, n + 1):
        buffers[i] = [s.buf[i * capacity + k] for k in range(s.buf_len[i])]
    known_rows = {}
    for i in range(1, n + 1):
        known_rows[i] = [
            (int(s.col[p]), s.t_non[p], s.t_rm[p], s.t_heard[p])
            for p in range(s.off[i], s.off[i + 1]) if s.known[p]
        ]
    return {
        "items": (s.it_owner.values(), s.it_seq.values(), s.it_time.values()),
        "placements": (s.p_item.values(), s.p_holder.values(), s.p_index.values(),
                       s.p_time.values(), s.p_hops.values()),
        "drops": (s.d_item.values(), s.d_node.values(), s.d_reason.values(), s.d_time.values()),
        "died_at": dict(s.died_at),
        "buffers": buffers,
        "n_att": known_rows,
        "next_seq": {i: s.next_seq[i] for i in range(1, n + 1)},
        "alive": {i: bool(s.alive[i]) for i in range(1, n + 1)},
        "end_time": s.now,
        "next_event_seq": s.heap.next_seq,
        "trace": (s.tr_t.values(), s.tr_seq.values(), s.tr_kind.values(), s.tr_actor.values())
                 if trace else None,
    }
