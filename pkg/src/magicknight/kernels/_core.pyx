# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernel.  Same contract and pruning rules as pure.py:
depth-first enumeration with line-sum pruning and a per-leaf stats
histogram; the inner loop runs without the GIL so worker threads search in
parallel."""

from libc.stdlib cimport calloc, free
from libc.string cimport memset

from .common import UnitResult

KERNEL_NAME = "compiled"


cdef struct St:
    int n, width, height, g_count
    # board tables
    int* kn_start
    int* kn_list
    int* wz_start
    int* wz_list
    unsigned char* adj        # knight adjacency matrix, n*n
    int* row_of
    int* col_of
    int* gmaps                # g_count * n
    signed char* npar         # required number parity per cell
    # search state
    unsigned char* visited
    int* path
    int* pos
    int* deg
    long long* row_sum
    int* row_left
    int* row_left_odd
    long long* col_sum
    int* col_left
    int* col_left_odd
    long long* kcap_row
    long long* kcap_col
    long long min_kcap
    int zero_cnt
    int zero_cell
    int* due                  # pinned visit number per cell (0 = none)
    int* number_due           # pinned cell+1 per visit number (0 = none)
    # options
    bint fs, fl, emperor, geo
    long long s_num, s_den, l_num, l_den
    long long total
    # undo stacks (indexed by placed number k)
    int* sv_zero_cnt
    int* sv_zero_cell
    long long* sv_kcap_r
    long long* sv_kcap_c
    long long* sv_minkcap
    int* sv_due_x1
    int* sv_due_v1
    int* sv_due_x2
    int* sv_due_v2
    # counters
    unsigned long long nodes, leaves
    unsigned long long pr_exact, pr_bound, pr_deadline, pr_isolated, pr_pin
    unsigned long long pr_subset
    # scratch for the subset bound (capacity 64 lines)
    double* sb_dens
    long long* sb_m
    long long* sb_mo
    long long* sb_need
    # scratch for the connectivity sweep
    int* cc_queue
    int* cc_seen
    int cc_stamp
    unsigned long long pr_split
    # histogram (open addressing, linear probe)
    unsigned int* hkeys
    unsigned long long* hvals
    long hcap, hsize
    # symmetry tallies
    long long* geo_open
    long long* geo_closed
    long long* nf_open
    long long* nf_closed
    # filter (encoded DNF) for collection
    int* fenc
    int fenc_len
    int collect_closure
    bint collect


cdef inline long long INF_FOR(St* s) noexcept nogil:
    return <long long> s.n + 1


cdef inline long long _parity_count(long long a, long long b, int parity) noexcept nogil:
    cdef long long first
    if a > b:
        return 0
    first = a if a % 2 == parity else a + 1
    if first > b:
        return 0
    return (b - first) // 2 + 1


cdef inline long long _init_kcap(long long num, long long den, long long m,
                                 long long inf) noexcept nogil:
    if m == 0:
        return inf
    return (num - den * (m * (m + 1) // 2)) // (den * m)


cdef long long _line_check(St* s, long long m, long long m_odd, long long need,
                           long long den, long long k) noexcept nogil:
    """Parity-aware bound check of a touched pinned line.
    Returns the line's deadline cap, or -1 when the line is dead."""
    cdef long long m_even, o_first, e_first, o_last, e_last, min_add, max_add
    cdef long long n = s.n
    if m == 0:
        return INF_FOR(s) if need == 0 else -1
    m_even = m - m_odd
    if m_odd > _parity_count(k + 1, n, 1) or m_even > _parity_count(k + 1, n, 0):
        return -1
    o_first = k + 1 if (k + 1) % 2 == 1 else k + 2
    e_first = k + 1 if (k + 1) % 2 == 0 else k + 2
    min_add = m_odd * (o_first + m_odd - 1) + m_even * (e_first + m_even - 1)
    if need < den * min_add:
        return -1
    o_last = n if n % 2 == 1 else n - 1
    e_last = n if n % 2 == 0 else n - 1
    max_add = m_odd * (o_last - m_odd + 1) + m_even * (e_last - m_even + 1)
    if need > den * max_add:
        return -1
    return (need - den * (m * (m + 1) // 2)) // (den * m)


cdef bint _subset_check(St* s, long long* sums, int* lefts, int* lefts_odd,
                        int count, long long num, long long den,
                        long long k) noexcept nogil:
    """Joint feasibility of the incomplete lines of one pinned direction:
    the most-starved lines compete for the same small numbers (prefix, lower
    bound) and the most-greedy for the same large ones (suffix)."""
    cdef int t = 0, i, j
    cdef long long m, need, cm, cmo, cn, me
    cdef long long o_first, e_first, o_last, e_last
    cdef long long n = s.n
    cdef double d
    for i in range(count):
        m = lefts[i]
        if m:
            need = num - sums[i] * den
            d = <double> need / <double> m
            j = t
            while j > 0 and s.sb_dens[j - 1] > d:
                s.sb_dens[j] = s.sb_dens[j - 1]
                s.sb_m[j] = s.sb_m[j - 1]
                s.sb_mo[j] = s.sb_mo[j - 1]
                s.sb_need[j] = s.sb_need[j - 1]
                j -= 1
            s.sb_dens[j] = d
            s.sb_m[j] = m
            s.sb_mo[j] = lefts_odd[i]
            s.sb_need[j] = need
            t += 1
    if t < 2:
        return True
    o_first = k + 1 if (k + 1) % 2 == 1 else k + 2
    e_first = k + 1 if (k + 1) % 2 == 0 else k + 2
    cm = 0
    cmo = 0
    cn = 0
    for i in range(t):
        cm += s.sb_m[i]
        cmo += s.sb_mo[i]
        cn += s.sb_need[i]
        me = cm - cmo
        if cn < den * (cmo * (o_first + cmo - 1) + me * (e_first + me - 1)):
            return False
    o_last = n if n % 2 == 1 else n - 1
    e_last = n if n % 2 == 0 else n - 1
    cm = 0
    cmo = 0
    cn = 0
    for i in range(t - 1, -1, -1):
        cm += s.sb_m[i]
        cmo += s.sb_mo[i]
        cn += s.sb_need[i]
        me = cm - cmo
        if cn > den * (cmo * (o_last - cmo + 1) + me * (e_last - me + 1)):
            return False
    return True


cdef int _register_due(St* s, int first, int step, int count, long long need,
                       long long den, int* out_x, int* out_v) noexcept nogil:
    """Pin the single open cell of a line (cells first, first+step, ...).
    Returns 0 = clash, 1 = already pinned identically, 2 = new pin."""
    cdef long long v
    cdef int i, c, x = -1
    if need % den:
        return 0
    v = need // den
    c = first
    for i in range(count):
        if not s.visited[c]:
            x = c
            break
        c += step
    if s.npar[x] != v % 2:
        return 0
    if s.due[x]:
        return 1 if s.due[x] == v else 0
    if s.number_due[v] and s.number_due[v] != x + 1:
        return 0
    s.due[x] = <int> v
    s.number_due[v] = x + 1
    out_x[0] = x
    out_v[0] = <int> v
    return 2


cdef bint _connected(St* s, int remaining) noexcept nogil:
    """True iff the unvisited cells form one knight-connected component."""
    cdef int i, head, tail, c, t, first = -1
    if remaining <= 1:
        return True
    for i in range(s.n):
        if not s.visited[i]:
            first = i
            break
    if first < 0:
        return True
    s.cc_stamp += 1
    cdef int stamp = s.cc_stamp
    s.cc_seen[first] = stamp
    s.cc_queue[0] = first
    head = 0
    tail = 1
    while head < tail:
        c = s.cc_queue[head]
        head += 1
        for i in range(s.kn_start[c], s.kn_start[c + 1]):
            t = s.kn_list[i]
            if not s.visited[t] and s.cc_seen[t] != stamp:
                s.cc_seen[t] = stamp
                s.cc_queue[tail] = t
                tail += 1
    return tail == remaining


cdef bint _hist_grow(St* s) noexcept nogil:
    cdef long newcap = s.hcap * 2
    cdef unsigned int* nk = <unsigned int*> calloc(newcap, sizeof(unsigned int))
    cdef unsigned long long* nv = <unsigned long long*> calloc(newcap, sizeof(unsigned long long))
    cdef long i, j
    if nk == NULL or nv == NULL:
        if nk != NULL:
            free(nk)
        if nv != NULL:
            free(nv)
        return False
    for i in range(s.hcap):
        if s.hvals[i]:
            j = <long> (s.hkeys[i] & (newcap - 1))
            while nv[j]:
                j = (j + 1) & (newcap - 1)
            nk[j] = s.hkeys[i]
            nv[j] = s.hvals[i]
    free(s.hkeys)
    free(s.hvals)
    s.hkeys = nk
    s.hvals = nv
    s.hcap = newcap
    return True


cdef inline bint _tally(St* s, unsigned int key) noexcept nogil:
    cdef long j = <long> (key & (s.hcap - 1))
    while s.hvals[j] and s.hkeys[j] != key:
        j = (j + 1) & (s.hcap - 1)
    if not s.hvals[j]:
        s.hkeys[j] = key
        s.hsize += 1
        if s.hsize * 2 > s.hcap:
            if not _hist_grow(s):
                return False
            return _tally(s, key)
        s.hvals[j] = 1
        return True
    s.hvals[j] += 1
    return True


cdef int _push(St* s, int c, int k) noexcept nogil:
    """Place number k at cell c.  Returns 0 if ok, else a prune reason
    (1 exact, 2 bound, 3 deadline, 4 isolated, 5 pin) after rolling back."""
    cdef int i, v, r, cl, reason, rd
    cdef int due_x = 0, due_v = 0
    cdef long long m, need, kcap, true_min, inf
    inf = INF_FOR(s)
    s.sv_zero_cnt[k] = s.zero_cnt
    s.sv_zero_cell[k] = s.zero_cell
    s.sv_minkcap[k] = s.min_kcap
    s.sv_due_x1[k] = -1
    s.sv_due_x2[k] = -1
    s.visited[c] = 1
    s.path[k - 1] = c
    s.pos[c] = k - 1
    if s.deg[c] == 0:
        s.zero_cnt -= 1
        if s.zero_cell == c:
            s.zero_cell = -1
    for i in range(s.kn_start[c], s.kn_start[c + 1]):
        v = s.kn_list[i]
        s.deg[v] -= 1
        if s.deg[v] == 0 and not s.visited[v]:
            s.zero_cnt += 1
            s.zero_cell = v

    reason = 0
    if s.due[c] and s.due[c] != k:
        reason = 5
    elif s.number_due[k] and s.number_due[k] != c + 1:
        reason = 5

    r = s.row_of[c]
    cl = s.col_of[c]
    s.row_sum[r] += k
    s.row_left[r] -= 1
    s.row_left_odd[r] -= s.npar[c]
    s.col_sum[cl] += k
    s.col_left[cl] -= 1
    s.col_left_odd[cl] -= s.npar[c]
    s.sv_kcap_r[k] = s.kcap_row[r]
    s.sv_kcap_c[k] = s.kcap_col[cl]
    if reason == 0 and s.fs:
        m = s.row_left[r]
        need = s.s_num - s.row_sum[r] * s.s_den
        kcap = _line_check(s, m, s.row_left_odd[r], need, s.s_den, k)
        s.kcap_row[r] = kcap if kcap >= 0 else inf
        if kcap < 0:
            reason = 1 if m == 0 else 2
        else:
            if kcap < s.min_kcap:
                s.min_kcap = kcap
            if m == 1:
                rd = _register_due(s, r * s.width, 1, s.width, need, s.s_den,
                                   &due_x, &due_v)
                if rd == 0:
                    reason = 5
                elif rd == 2:
                    s.sv_due_x1[k] = due_x
                    s.sv_due_v1[k] = due_v
    if reason == 0 and s.fl:
        m = s.col_left[cl]
        need = s.l_num - s.col_sum[cl] * s.l_den
        kcap = _line_check(s, m, s.col_left_odd[cl], need, s.l_den, k)
        s.kcap_col[cl] = kcap if kcap >= 0 else inf
        if kcap < 0:
            reason = 1 if m == 0 else 2
        else:
            if kcap < s.min_kcap:
                s.min_kcap = kcap
            if m == 1:
                rd = _register_due(s, cl, s.width, s.height, need, s.l_den,
                                   &due_x, &due_v)
                if rd == 0:
                    reason = 5
                elif rd == 2:
                    s.sv_due_x2[k] = due_x
                    s.sv_due_v2[k] = due_v
    if reason == 0 and (s.fs or s.fl) and k > s.min_kcap and k < s.n:
        # a stale line may have become unsatisfiable; rescan
        true_min = inf
        if s.fs:
            for i in range(s.height):
                if s.kcap_row[i] < true_min:
                    true_min = s.kcap_row[i]
        if s.fl:
            for i in range(s.width):
                if s.kcap_col[i] < true_min:
                    true_min = s.kcap_col[i]
        if k > true_min:
            reason = 3
        else:
            s.min_kcap = true_min
    if reason == 0 and s.fs and k < s.n and not _subset_check(
            s, s.row_sum, s.row_left, s.row_left_odd, s.height,
            s.s_num, s.s_den, k):
        reason = 6
    if reason == 0 and s.fl and k < s.n and not _subset_check(
            s, s.col_sum, s.col_left, s.col_left_odd, s.width,
            s.l_num, s.l_den, k):
        reason = 6
    if reason == 0 and not s.emperor and k < s.n:
        if s.zero_cnt >= 2:
            reason = 4
        elif s.zero_cnt == 1 and not s.adj[c * s.n + s.zero_cell]:
            reason = 4
        elif not _connected(s, s.n - k):
            reason = 7
    if reason:
        if reason == 1:
            s.pr_exact += 1
        elif reason == 2:
            s.pr_bound += 1
        elif reason == 3:
            s.pr_deadline += 1
        elif reason == 4:
            s.pr_isolated += 1
        elif reason == 6:
            s.pr_subset += 1
        elif reason == 7:
            s.pr_split += 1
        else:
            s.pr_pin += 1
        _pop(s, c, k)
    return reason


cdef void _pop(St* s, int c, int k) noexcept nogil:
    cdef int i, r, cl
    if s.sv_due_x1[k] >= 0:
        s.due[s.sv_due_x1[k]] = 0
        s.number_due[s.sv_due_v1[k]] = 0
    if s.sv_due_x2[k] >= 0:
        s.due[s.sv_due_x2[k]] = 0
        s.number_due[s.sv_due_v2[k]] = 0
    r = s.row_of[c]
    cl = s.col_of[c]
    s.row_sum[r] -= k
    s.row_left[r] += 1
    s.row_left_odd[r] += s.npar[c]
    s.col_sum[cl] -= k
    s.col_left[cl] += 1
    s.col_left_odd[cl] += s.npar[c]
    s.kcap_row[r] = s.sv_kcap_r[k]
    s.kcap_col[cl] = s.sv_kcap_c[k]
    for i in range(s.kn_start[c], s.kn_start[c + 1]):
        s.deg[s.kn_list[i]] += 1
    s.visited[c] = 0
    s.zero_cnt = s.sv_zero_cnt[k]
    s.zero_cell = s.sv_zero_cell[k]
    s.min_kcap = s.sv_minkcap[k]


cdef inline bint _eval_filter(St* s, int* stats) noexcept nogil:
    """Evaluate the encoded DNF filter against the 7 leaf stats."""
    cdef int pos = 1, ci, ai, n_atoms, stat, op, value, v
    cdef bint ok
    if s.fenc_len == 0:
        return True
    for ci in range(s.fenc[0]):
        n_atoms = s.fenc[pos]
        pos += 1
        ok = True
        for ai in range(n_atoms):
            stat = s.fenc[pos]
            op = s.fenc[pos + 1]
            value = s.fenc[pos + 2]
            pos += 3
            v = stats[stat]
            if op == 0:
                if v != value:
                    ok = False
            elif op == 1:
                if v < value:
                    ok = False
            else:
                if v > value:
                    ok = False
        if ok:
            return True
    return False


cdef int _leaf(St* s, int junction, int* stats) noexcept nogil:
    """Tally a completed placement.  Returns 1 when the caller should offer
    the leaf to the sink, 0 otherwise, -1 on allocation failure."""
    cdef int closed, s_mc, s_dist, s_consec, l_mc, l_dist, l_consec
    cdef int i, j, gi, a2, b2, dpos, n
    cdef long long v, mn, mx
    cdef bint fresh, ok
    cdef unsigned int key
    n = s.n
    s.leaves += 1
    if s.emperor and junction < 0:
        return 0
    closed = 1 if s.adj[s.path[n - 1] * n + s.path[0]] else 0

    s_mc = 0
    s_dist = 0
    mn = s.row_sum[0]
    mx = s.row_sum[0]
    for i in range(s.height):
        v = s.row_sum[i]
        if v * s.height == s.total:
            s_mc += 1
        if v < mn:
            mn = v
        if v > mx:
            mx = v
        fresh = True
        for j in range(i):
            if s.row_sum[j] == v:
                fresh = False
                break
        if fresh:
            s_dist += 1
    s_consec = 1 if mx - mn + 1 == s_dist else 0

    l_mc = 0
    l_dist = 0
    mn = s.col_sum[0]
    mx = s.col_sum[0]
    for i in range(s.width):
        v = s.col_sum[i]
        if v * s.width == s.total:
            l_mc += 1
        if v < mn:
            mn = v
        if v > mx:
            mx = v
        fresh = True
        for j in range(i):
            if s.col_sum[j] == v:
                fresh = False
                break
        if fresh:
            l_dist += 1
    l_consec = 1 if mx - mn + 1 == l_dist else 0

    key = <unsigned int> (closed | s_mc << 1 | s_dist << 7 | s_consec << 13
                          | l_mc << 14 | l_dist << 20 | l_consec << 26)
    if not _tally(s, key):
        return -1

    if s.geo:
        for gi in range(s.g_count):
            ok = True
            for i in range(n - 1):
                a2 = s.gmaps[gi * n + s.path[i]]
                b2 = s.gmaps[gi * n + s.path[i + 1]]
                dpos = s.pos[a2] - s.pos[b2]
                if dpos != 1 and dpos != -1 and not (
                    closed and (dpos == n - 1 or dpos == 1 - n)
                ):
                    ok = False
                    break
            if ok and closed:
                a2 = s.gmaps[gi * n + s.path[n - 1]]
                b2 = s.gmaps[gi * n + s.path[0]]
                dpos = s.pos[a2] - s.pos[b2]
                if dpos != 1 and dpos != -1 and dpos != n - 1 and dpos != 1 - n:
                    ok = False
            if ok:
                if closed:
                    s.geo_closed[gi] += 1
                else:
                    s.geo_open[gi] += 1
            ok = True
            for i in range(n):
                if s.gmaps[gi * n + s.path[i]] != s.path[i]:
                    ok = False
                    break
            if ok:
                if closed:
                    s.nf_closed[gi] += 1
                else:
                    s.nf_open[gi] += 1

    if not s.collect:
        return 0
    if s.collect_closure == 1 and closed:
        return 0
    if s.collect_closure == 2 and not closed:
        return 0
    stats[0] = closed
    stats[1] = s_mc
    stats[2] = s_dist
    stats[3] = s_consec
    stats[4] = l_mc
    stats[5] = l_dist
    stats[6] = l_consec
    if not _eval_filter(s, stats):
        return 0
    return 1


cdef int* _alloc_int(long count) except NULL:
    cdef int* p = <int*> calloc(count, sizeof(int))
    if p == NULL:
        raise MemoryError()
    return p


cdef long long* _alloc_ll(long count) except NULL:
    cdef long long* p = <long long*> calloc(count, sizeof(long long))
    if p == NULL:
        raise MemoryError()
    return p


def run_unit(topo, prefix, opts, sink=None, stop=None):
    """Search all completions of `prefix`; see kernels.common for the
    option and result contracts (mirrors kernels.pure.run_unit)."""
    if opts.bidirectional:
        return run_unit_bidi(topo, prefix, opts, sink, stop)
    cdef St s
    cdef int n = topo.n
    cdef int g_count = topo.group_order
    cdef int i, j, c, k, cur, nxt, nk, limit, depth, base, idx, start_parity
    cdef int junction = -1
    cdef int junction_at = opts.junction_at
    cdef bint is_wazir, advanced
    cdef unsigned long long budget = opts.node_budget
    cdef unsigned char* stop_ptr = NULL
    cdef int stats[8]
    cdef int rc
    cdef bint stopped = False, aborted = False
    cdef int* mv = NULL
    cdef unsigned char* wz_open_arr = NULL
    cdef unsigned char* came_wazir = NULL
    cdef int* fnext = NULL

    if stop is not None:
        stop_ptr = <unsigned char*> <bytearray> stop
    if len(prefix) == 0:
        raise ValueError("prefix must contain at least the start cell")

    memset(&s, 0, sizeof(St))
    s.n = n
    s.width = topo.width
    s.height = topo.height
    s.g_count = g_count
    s.total = <long long> n * (n + 1) // 2
    s.fs = opts.force_short
    s.fl = opts.force_long
    s.s_num = opts.short_num
    s.s_den = opts.short_den
    s.l_num = opts.long_num
    s.l_den = opts.long_den
    s.emperor = opts.emperor
    s.geo = opts.geo
    s.collect = opts.collect and sink is not None
    s.collect_closure = opts.collect_closure

    knight = topo.knight
    wazir = topo.wazir
    fenc = opts.filter_enc

    try:
        s.kn_start = _alloc_int(n + 1)
        s.wz_start = _alloc_int(n + 1)
        s.row_of = _alloc_int(n)
        s.col_of = _alloc_int(n)
        s.kn_start[0] = 0
        s.wz_start[0] = 0
        for i in range(n):
            s.kn_start[i + 1] = s.kn_start[i] + len(knight[i])
            s.wz_start[i + 1] = s.wz_start[i] + len(wazir[i])
            s.row_of[i] = topo.row_of[i]
            s.col_of[i] = topo.col_of[i]
        s.kn_list = _alloc_int(max(s.kn_start[n], 1))
        s.wz_list = _alloc_int(max(s.wz_start[n], 1))
        for i in range(n):
            for j in range(len(knight[i])):
                s.kn_list[s.kn_start[i] + j] = knight[i][j]
            for j in range(len(wazir[i])):
                s.wz_list[s.wz_start[i] + j] = wazir[i][j]
        s.adj = <unsigned char*> calloc(n * n, 1)
        if s.adj == NULL:
            raise MemoryError()
        for i in range(n):
            for j in range(s.kn_start[i], s.kn_start[i + 1]):
                s.adj[i * n + s.kn_list[j]] = 1
        s.gmaps = _alloc_int(g_count * n)
        for i in range(g_count):
            gm = topo.gmaps[i]
            for j in range(n):
                s.gmaps[i * n + j] = gm[j]

        s.visited = <unsigned char*> calloc(n, 1)
        s.npar = <signed char*> calloc(n, 1)
        if s.visited == NULL or s.npar == NULL:
            raise MemoryError()
        start_parity = (topo.col_of[prefix[0]] + topo.row_of[prefix[0]] + 1) % 2
        for i in range(n):
            s.npar[i] = <signed char> ((start_parity + s.col_of[i] + s.row_of[i]) % 2)
        s.path = _alloc_int(n)
        s.pos = _alloc_int(n)
        s.deg = _alloc_int(n)
        for i in range(n):
            s.deg[i] = s.kn_start[i + 1] - s.kn_start[i]
        s.row_sum = _alloc_ll(s.height)
        s.col_sum = _alloc_ll(s.width)
        s.row_left = _alloc_int(s.height)
        s.col_left = _alloc_int(s.width)
        s.row_left_odd = _alloc_int(s.height)
        s.col_left_odd = _alloc_int(s.width)
        s.kcap_row = _alloc_ll(s.height)
        s.kcap_col = _alloc_ll(s.width)
        for i in range(s.height):
            s.row_left[i] = s.width
            s.kcap_row[i] = _init_kcap(s.s_num, s.s_den, s.width, INF_FOR(&s)) \
                if s.fs else INF_FOR(&s)
        for i in range(s.width):
            s.col_left[i] = s.height
            s.kcap_col[i] = _init_kcap(s.l_num, s.l_den, s.height, INF_FOR(&s)) \
                if s.fl else INF_FOR(&s)
        for i in range(n):
            s.row_left_odd[s.row_of[i]] += s.npar[i]
            s.col_left_odd[s.col_of[i]] += s.npar[i]
        s.min_kcap = INF_FOR(&s)
        if s.fs or s.fl:
            for i in range(s.height):
                if s.kcap_row[i] < s.min_kcap:
                    s.min_kcap = s.kcap_row[i]
            for i in range(s.width):
                if s.kcap_col[i] < s.min_kcap:
                    s.min_kcap = s.kcap_col[i]

        s.zero_cnt = 0
        s.zero_cell = -1
        for i in range(n):
            if s.deg[i] == 0:
                s.zero_cnt += 1
                s.zero_cell = i
        if s.zero_cnt != 1:
            s.zero_cell = -1

        s.due = _alloc_int(n)
        s.number_due = _alloc_int(n + 2)
        s.sv_zero_cnt = _alloc_int(n + 2)
        s.sv_zero_cell = _alloc_int(n + 2)
        s.sv_kcap_r = _alloc_ll(n + 2)
        s.sv_kcap_c = _alloc_ll(n + 2)
        s.sv_minkcap = _alloc_ll(n + 2)
        s.sv_due_x1 = _alloc_int(n + 2)
        s.sv_due_v1 = _alloc_int(n + 2)
        s.sv_due_x2 = _alloc_int(n + 2)
        s.sv_due_v2 = _alloc_int(n + 2)
        s.sb_dens = <double*> calloc(64, sizeof(double))
        s.sb_m = _alloc_ll(64)
        s.sb_mo = _alloc_ll(64)
        s.sb_need = _alloc_ll(64)
        if s.sb_dens == NULL:
            raise MemoryError()

        s.hcap = 1 << 12
        s.hkeys = <unsigned int*> calloc(s.hcap, sizeof(unsigned int))
        s.hvals = <unsigned long long*> calloc(s.hcap, sizeof(unsigned long long))
        if s.hkeys == NULL or s.hvals == NULL:
            raise MemoryError()
        s.geo_open = <long long*> calloc(g_count, sizeof(long long))
        s.geo_closed = <long long*> calloc(g_count, sizeof(long long))
        s.nf_open = <long long*> calloc(g_count, sizeof(long long))
        s.nf_closed = <long long*> calloc(g_count, sizeof(long long))
        if s.geo_open == NULL or s.geo_closed == NULL or s.nf_open == NULL \
                or s.nf_closed == NULL:
            raise MemoryError()

        if fenc is not None:
            s.fenc_len = len(fenc)
            s.fenc = _alloc_int(max(s.fenc_len, 1))
            for i in range(s.fenc_len):
                s.fenc[i] = fenc[i]
        else:
            s.fenc_len = 0
            s.fenc = NULL

        mv = _alloc_int(n + 2)
        fnext = _alloc_int(n + 2)
        wz_open_arr = <unsigned char*> calloc(n + 2, 1)
        came_wazir = <unsigned char*> calloc(n + 2, 1)
        if wz_open_arr == NULL or came_wazir == NULL:
            raise MemoryError()

        # --- replay the prefix (GIL held; raises on malformed input) -----
        depth = 0
        for py_c in prefix:
            c = py_c
            if s.visited[c]:
                raise ValueError(f"prefix revisits cell {c}")
            if depth > 0:
                cur = s.path[depth - 1]
                if s.adj[cur * n + c]:
                    pass
                else:
                    is_wazir = False
                    for j in range(s.wz_start[cur], s.wz_start[cur + 1]):
                        if s.wz_list[j] == c:
                            is_wazir = True
                            break
                    if (s.emperor and junction < 0 and is_wazir
                            and (junction_at < 0 or depth == junction_at)):
                        junction = depth
                    else:
                        raise ValueError(
                            f"prefix step {depth}->{depth + 1} is not a legal move"
                        )
            s.nodes += 1
            if _push(&s, c, depth + 1):
                return _result(&s, aborted, stopped)
            depth += 1

        base = depth
        if depth == n:
            rc = _leaf(&s, junction, stats)
            if rc == 1:
                keep = sink(tuple([s.path[i] for i in range(n)]), junction)
                if keep is False:
                    stopped = True
            elif rc == -1:
                raise MemoryError()
            return _result(&s, aborted, stopped)

        mv[depth] = 0
        wz_open_arr[depth] = 1 if (s.emperor and junction < 0 and (
            junction_at < 0 or depth == junction_at)) else 0
        fnext[depth] = s.number_due[depth + 1] - 1

        # --- iterative DFS, GIL released ----------------------------------
        with nogil:
            while True:
                cur = s.path[depth - 1]
                nk = s.kn_start[cur + 1] - s.kn_start[cur]
                if fnext[depth] >= 0:
                    # the next number is pinned: its cell is the only move
                    limit = 0
                    if s.adj[cur * n + fnext[depth]]:
                        limit = 1
                    elif wz_open_arr[depth]:
                        for j in range(s.wz_start[cur], s.wz_start[cur + 1]):
                            if s.wz_list[j] == fnext[depth]:
                                limit = 1
                                break
                else:
                    limit = nk
                    if wz_open_arr[depth]:
                        limit += s.wz_start[cur + 1] - s.wz_start[cur]
                advanced = False
                while mv[depth] < limit:
                    idx = mv[depth]
                    mv[depth] += 1
                    if fnext[depth] >= 0:
                        nxt = fnext[depth]
                        is_wazir = not s.adj[cur * n + nxt]
                    else:
                        is_wazir = idx >= nk
                        if is_wazir:
                            nxt = s.wz_list[s.wz_start[cur] + idx - nk]
                        else:
                            nxt = s.kn_list[s.kn_start[cur] + idx]
                    if s.visited[nxt]:
                        continue
                    if budget and s.nodes >= budget:
                        aborted = True
                        break
                    if stop_ptr != NULL and stop_ptr[0]:
                        stopped = True
                        break
                    s.nodes += 1
                    k = depth + 1
                    if is_wazir:
                        junction = depth
                    if _push(&s, nxt, k) == 0:
                        if k == n:
                            rc = _leaf(&s, junction, stats)
                            if rc != 0:
                                with gil:
                                    if rc == -1:
                                        raise MemoryError()
                                    keep = sink(
                                        tuple([s.path[i] for i in range(n)]),
                                        junction,
                                    )
                                    if keep is False:
                                        stopped = True
                            _pop(&s, nxt, k)
                            if is_wazir:
                                junction = -1
                            if stopped:
                                break
                            continue
                        came_wazir[k] = 1 if is_wazir else 0
                        depth = k
                        mv[depth] = 0
                        wz_open_arr[depth] = 1 if (s.emperor and junction < 0 and (
                            junction_at < 0 or depth == junction_at)) else 0
                        fnext[depth] = s.number_due[depth + 1] - 1
                        advanced = True
                        break
                    if is_wazir:
                        junction = -1
                if aborted or stopped:
                    break
                if advanced:
                    continue
                if depth == base:
                    break
                c = s.path[depth - 1]
                _pop(&s, c, depth)
                if came_wazir[depth]:
                    junction = -1
                depth -= 1

        return _result(&s, aborted, stopped)
    finally:
        free(mv)
        free(fnext)
        free(wz_open_arr)
        free(came_wazir)
        free(s.kn_start)
        free(s.kn_list)
        free(s.wz_start)
        free(s.wz_list)
        free(s.adj)
        free(s.row_of)
        free(s.col_of)
        free(s.gmaps)
        free(s.npar)
        free(s.visited)
        free(s.path)
        free(s.pos)
        free(s.deg)
        free(s.row_sum)
        free(s.col_sum)
        free(s.row_left)
        free(s.col_left)
        free(s.row_left_odd)
        free(s.col_left_odd)
        free(s.kcap_row)
        free(s.kcap_col)
        free(s.due)
        free(s.number_due)
        free(s.sv_zero_cnt)
        free(s.sv_zero_cell)
        free(s.sv_kcap_r)
        free(s.sv_kcap_c)
        free(s.sv_minkcap)
        free(s.sv_due_x1)
        free(s.sv_due_v1)
        free(s.sv_due_x2)
        free(s.sv_due_v2)
        free(s.sb_dens)
        free(s.sb_m)
        free(s.sb_mo)
        free(s.sb_need)
        free(s.cc_queue)
        free(s.cc_seen)
        free(s.hkeys)
        free(s.hvals)
        free(s.geo_open)
        free(s.geo_closed)
        free(s.nf_open)
        free(s.nf_closed)
        free(s.fenc)


cdef _result(St* s, bint aborted, bint stopped):
    res = UnitResult()
    cdef long i
    hist = res.hist
    for i in range(s.hcap):
        if s.hvals[i]:
            hist[s.hkeys[i]] = s.hvals[i]
    res.nodes = s.nodes
    res.leaves = s.leaves
    prunes = res.prunes
    if s.pr_exact:
        prunes["line_exact"] = s.pr_exact
    if s.pr_bound:
        prunes["line_bound"] = s.pr_bound
    if s.pr_deadline:
        prunes["line_deadline"] = s.pr_deadline
    if s.pr_isolated:
        prunes["isolated"] = s.pr_isolated
    if s.pr_pin:
        prunes["pin"] = s.pr_pin
    if s.pr_subset:
        prunes["subset"] = s.pr_subset
    if s.pr_split:
        prunes["split"] = s.pr_split
    res.geo_edge_open = [s.geo_open[i] for i in range(s.g_count)]
    res.geo_edge_closed = [s.geo_closed[i] for i in range(s.g_count)]
    res.numfix_open = [s.nf_open[i] for i in range(s.g_count)]
    res.numfix_closed = [s.nf_closed[i] for i in range(s.g_count)]
    res.aborted = aborted
    res.stopped = stopped
    return res


# ----------------------------------------------------------------------
# Bidirectional engine: numbers placed 1, n, 2, n-1, ... with two heads
# that must join by a knight move in the middle.  Used for line-pinned
# searches; contract mirrors kernels.pure.run_unit_bidi.
# ----------------------------------------------------------------------

cdef struct Bidi:
    int one_cnt, one_a, one_b
    int* sv_zero
    int* sv_one_cnt
    int* sv_one_a
    int* sv_one_b
    int* sv_headA
    int* sv_headB
    int* sv_lo
    int* sv_hi
    int* sched_v
    unsigned char* sched_side
    unsigned long long pr_join


cdef bint _scan_dir_bidi(St* s, long long* sums, int* lefts, int* lefts_odd,
                         int count, long long num, long long den,
                         long long lo, long long hi,
                         int posA, int posB, int* line_pos) noexcept nogil:
    """Window feasibility of all incomplete lines of a pinned direction:
    per-line parity bounds (with the window shrunk by head travel time)
    plus joint prefix/suffix subset bounds.  A head shifts its line index
    by at most 2 per move and never by 0, so numbers cannot reach line i
    sooner than lo + d_A(i) nor later than hi - d_B(i)."""
    cdef long long o_avail = _parity_count(lo + 1, hi - 1, 1)
    cdef long long e_avail = _parity_count(lo + 1, hi - 1, 0)
    cdef long long o_first = lo + 1 if (lo + 1) % 2 == 1 else lo + 2
    cdef long long e_first = lo + 1 if (lo + 1) % 2 == 0 else lo + 2
    cdef long long o_last = hi - 1 if (hi - 1) % 2 == 1 else hi - 2
    cdef long long e_last = hi - 1 if (hi - 1) % 2 == 0 else hi - 2
    cdef int t = 0, i, j, delta
    cdef long long m, mo, me, need, cm, cmo, cn
    cdef long long llo, lhi, lof, lef, lol, lel, lo_add, hi_add
    cdef double d
    for i in range(count):
        m = lefts[i]
        if not m:
            continue
        mo = lefts_odd[i]
        me = m - mo
        if mo > o_avail or me > e_avail:
            return False
        need = num - sums[i] * den
        llo = lo
        lhi = hi
        if posA >= 0:
            delta = line_pos[posA] - i
            if delta < 0:
                delta = -delta
            llo = lo + (2 if delta == 0 else (delta + 1) // 2) - 1
        if posB >= 0:
            delta = line_pos[posB] - i
            if delta < 0:
                delta = -delta
            lhi = hi - (2 if delta == 0 else (delta + 1) // 2) + 1
        if llo != lo or lhi != hi:
            if lhi - llo <= m:
                return False
            if (mo > _parity_count(llo + 1, lhi - 1, 1)
                    or me > _parity_count(llo + 1, lhi - 1, 0)):
                return False
            lof = llo + 1 if (llo + 1) % 2 == 1 else llo + 2
            lef = llo + 1 if (llo + 1) % 2 == 0 else llo + 2
            lol = lhi - 1 if (lhi - 1) % 2 == 1 else lhi - 2
            lel = lhi - 1 if (lhi - 1) % 2 == 0 else lhi - 2
            lo_add = mo * (lof + mo - 1) + me * (lef + me - 1)
            hi_add = mo * (lol - mo + 1) + me * (lel - me + 1)
        else:
            lo_add = mo * (o_first + mo - 1) + me * (e_first + me - 1)
            hi_add = mo * (o_last - mo + 1) + me * (e_last - me + 1)
        if need < den * lo_add:
            return False
        if need > den * hi_add:
            return False
        d = <double> need / <double> m
        j = t
        while j > 0 and s.sb_dens[j - 1] > d:
            s.sb_dens[j] = s.sb_dens[j - 1]
            s.sb_m[j] = s.sb_m[j - 1]
            s.sb_mo[j] = s.sb_mo[j - 1]
            s.sb_need[j] = s.sb_need[j - 1]
            j -= 1
        s.sb_dens[j] = d
        s.sb_m[j] = m
        s.sb_mo[j] = mo
        s.sb_need[j] = need
        t += 1
    if t < 2:
        return True
    cm = 0
    cmo = 0
    cn = 0
    for i in range(t):
        cm += s.sb_m[i]
        cmo += s.sb_mo[i]
        cn += s.sb_need[i]
        me = cm - cmo
        if cn < den * (cmo * (o_first + cmo - 1) + me * (e_first + me - 1)):
            return False
    cm = 0
    cmo = 0
    cn = 0
    for i in range(t - 1, -1, -1):
        cm += s.sb_m[i]
        cmo += s.sb_mo[i]
        cn += s.sb_need[i]
        me = cm - cmo
        if cn > den * (cmo * (o_last - cmo + 1) + me * (e_last - me + 1)):
            return False
    return True


cdef int _register_due_bidi(St* s, int first, int step_sz, int count,
                            long long need, long long den, long long lo,
                            long long hi, int* out_x, int* out_v) noexcept nogil:
    """Pin the single open cell of a line; the number must fall in the open
    window.  Returns 0 = clash, 1 = pinned identically already, 2 = new."""
    cdef long long v
    cdef int i, c, x = -1
    if need % den:
        return 0
    v = need // den
    if v <= lo or v >= hi:
        return 0
    c = first
    for i in range(count):
        if not s.visited[c]:
            x = c
            break
        c += step_sz
    if s.npar[x] != v % 2:
        return 0
    if s.due[x]:
        return 1 if s.due[x] == v else 0
    if s.number_due[v] and s.number_due[v] != x + 1:
        return 0
    s.due[x] = <int> v
    s.number_due[v] = x + 1
    out_x[0] = x
    out_v[0] = <int> v
    return 2


cdef int _push_bidi(St* s, Bidi* b, int c, int v, int step,
                    long long lo, long long hi,
                    int headA, int headB) noexcept nogil:
    """Place number v at cell c; (lo, hi) is the open window and headA /
    headB the head cells after this placement.
    Returns 0 ok / prune reason (1 exact, 2 bound, 5 pin)."""
    cdef int i, t, r, cl, reason, rd
    cdef int due_x = 0, due_v = 0
    cdef long long m, need
    b.sv_zero[step] = s.zero_cnt
    b.sv_one_cnt[step] = b.one_cnt
    b.sv_one_a[step] = b.one_a
    b.sv_one_b[step] = b.one_b
    s.sv_due_x1[step] = -1
    s.sv_due_x2[step] = -1
    s.visited[c] = 1
    s.path[v - 1] = c
    s.pos[c] = v - 1
    if s.deg[c] == 0:
        s.zero_cnt -= 1
    elif s.deg[c] == 1:
        b.one_cnt -= 1
        if b.one_a == c:
            b.one_a = b.one_b
            b.one_b = -1
        elif b.one_b == c:
            b.one_b = -1
    for i in range(s.kn_start[c], s.kn_start[c + 1]):
        t = s.kn_list[i]
        s.deg[t] -= 1
        if not s.visited[t]:
            if s.deg[t] == 0:
                s.zero_cnt += 1
                b.one_cnt -= 1
                if b.one_a == t:
                    b.one_a = b.one_b
                    b.one_b = -1
                elif b.one_b == t:
                    b.one_b = -1
            elif s.deg[t] == 1:
                b.one_cnt += 1
                if b.one_a < 0:
                    b.one_a = t
                elif b.one_b < 0:
                    b.one_b = t

    reason = 0
    if s.npar[c] != v % 2:
        reason = 5
    elif s.due[c] and s.due[c] != v:
        reason = 5
    elif s.number_due[v] and s.number_due[v] != c + 1:
        reason = 5

    r = s.row_of[c]
    cl = s.col_of[c]
    s.row_sum[r] += v
    s.row_left[r] -= 1
    s.row_left_odd[r] -= s.npar[c]
    s.col_sum[cl] += v
    s.col_left[cl] -= 1
    s.col_left_odd[cl] -= s.npar[c]

    if reason == 0 and s.fs:
        m = s.row_left[r]
        need = s.s_num - s.row_sum[r] * s.s_den
        if m == 0:
            if need != 0:
                reason = 1
        elif m == 1:
            rd = _register_due_bidi(s, r * s.width, 1, s.width, need, s.s_den,
                                    lo, hi, &due_x, &due_v)
            if rd == 0:
                reason = 5
            elif rd == 2:
                s.sv_due_x1[step] = due_x
                s.sv_due_v1[step] = due_v
    if reason == 0 and s.fl:
        m = s.col_left[cl]
        need = s.l_num - s.col_sum[cl] * s.l_den
        if m == 0:
            if need != 0:
                reason = 1
        elif m == 1:
            rd = _register_due_bidi(s, cl, s.width, s.height, need, s.l_den,
                                    lo, hi, &due_x, &due_v)
            if rd == 0:
                reason = 5
            elif rd == 2:
                s.sv_due_x2[step] = due_x
                s.sv_due_v2[step] = due_v
    if reason == 0 and s.fs and not _scan_dir_bidi(
            s, s.row_sum, s.row_left, s.row_left_odd, s.height,
            s.s_num, s.s_den, lo, hi, headA, headB, s.row_of):
        reason = 2
    if reason == 0 and s.fl and not _scan_dir_bidi(
            s, s.col_sum, s.col_left, s.col_left_odd, s.width,
            s.l_num, s.l_den, lo, hi, headA, headB, s.col_of):
        reason = 2
    if reason:
        if reason == 1:
            s.pr_exact += 1
        elif reason == 2:
            s.pr_bound += 1
        else:
            s.pr_pin += 1
        _pop_bidi(s, b, c, v, step)
    return reason


cdef void _pop_bidi(St* s, Bidi* b, int c, int v, int step) noexcept nogil:
    cdef int i, r, cl
    if s.sv_due_x1[step] >= 0:
        s.due[s.sv_due_x1[step]] = 0
        s.number_due[s.sv_due_v1[step]] = 0
    if s.sv_due_x2[step] >= 0:
        s.due[s.sv_due_x2[step]] = 0
        s.number_due[s.sv_due_v2[step]] = 0
    r = s.row_of[c]
    cl = s.col_of[c]
    s.row_sum[r] -= v
    s.row_left[r] += 1
    s.row_left_odd[r] += s.npar[c]
    s.col_sum[cl] -= v
    s.col_left[cl] += 1
    s.col_left_odd[cl] += s.npar[c]
    for i in range(s.kn_start[c], s.kn_start[c + 1]):
        s.deg[s.kn_list[i]] += 1
    s.visited[c] = 0
    s.zero_cnt = b.sv_zero[step]
    b.one_cnt = b.sv_one_cnt[step]
    b.one_a = b.sv_one_a[step]
    b.one_b = b.sv_one_b[step]


cdef bint _degree_prune_bidi(St* s, Bidi* b, int headA, int headB,
                             int lo, int hi, int n_small,
                             int remaining) noexcept nogil:
    """Open cells may only borrow tour edges from the two current heads;
    a head that still owes numbers needs an open neighbour; the open
    region must be one component."""
    cdef int i, u, w
    cdef bint ua, ub, wa, wb
    if remaining <= 1:
        return False
    if lo < n_small and s.deg[headA] == 0:
        return True
    if hi > n_small + 1 and s.deg[headB] == 0:
        return True
    if s.zero_cnt > 0:
        return True
    if b.one_cnt >= 3:
        return True
    if not _connected(s, remaining):
        return True
    if b.one_cnt == 0:
        return False
    if b.one_a < 0 or (b.one_cnt == 2 and b.one_b < 0):
        # id slots were lost while the count was above 2; rescan
        b.one_a = -1
        b.one_b = -1
        for i in range(s.n):
            if not s.visited[i] and s.deg[i] == 1:
                if b.one_a < 0:
                    b.one_a = i
                else:
                    b.one_b = i
    if b.one_cnt == 1:
        u = b.one_a
        return not (s.adj[u * s.n + headA] or s.adj[u * s.n + headB])
    u = b.one_a
    w = b.one_b
    ua = s.adj[u * s.n + headA]
    ub = s.adj[u * s.n + headB]
    wa = s.adj[w * s.n + headA]
    wb = s.adj[w * s.n + headB]
    return not ((ua and wb) or (ub and wa))


def run_unit_bidi(topo, prefix, opts, sink=None, stop=None):
    """Bidirectional search unit; see kernels.pure.run_unit_bidi."""
    cdef St s
    cdef Bidi b
    cdef int n = topo.n
    cdef int g_count = topo.group_order
    cdef int n_small = (n + 1) // 2
    cdef int i, j, c, v, side, step, base, depth, start_parity
    cdef int headA = -1, headB = -1
    cdef int lo = 0, hi = n + 1
    cdef int w_lo, w_hi, pin, cand, nk, cur, sd, ld
    cdef unsigned long long budget = opts.node_budget
    cdef unsigned char* stop_ptr = NULL
    cdef int stats[8]
    cdef int rc
    cdef bint stopped = False, aborted = False, advanced
    cdef int* mv = NULL

    if opts.emperor:
        raise ValueError("bidirectional search does not support emperor tours")
    if len(prefix) == 0:
        raise ValueError("prefix must contain at least the start cell")
    if stop is not None:
        stop_ptr = <unsigned char*> <bytearray> stop

    memset(&s, 0, sizeof(St))
    memset(&b, 0, sizeof(Bidi))
    s.n = n
    s.width = topo.width
    s.height = topo.height
    s.g_count = g_count
    s.total = <long long> n * (n + 1) // 2
    s.fs = opts.force_short
    s.fl = opts.force_long
    s.s_num = opts.short_num
    s.s_den = opts.short_den
    s.l_num = opts.long_num
    s.l_den = opts.long_den
    s.emperor = False
    s.geo = opts.geo
    s.collect = opts.collect and sink is not None
    s.collect_closure = opts.collect_closure

    knight = topo.knight
    fenc = opts.filter_enc

    try:
        s.kn_start = _alloc_int(n + 1)
        s.wz_start = _alloc_int(n + 1)
        s.row_of = _alloc_int(n)
        s.col_of = _alloc_int(n)
        s.kn_start[0] = 0
        s.wz_start[0] = 0
        for i in range(n):
            s.kn_start[i + 1] = s.kn_start[i] + len(knight[i])
            s.wz_start[i + 1] = 0
            s.row_of[i] = topo.row_of[i]
            s.col_of[i] = topo.col_of[i]
        s.wz_start[n] = 0
        s.kn_list = _alloc_int(max(s.kn_start[n], 1))
        s.wz_list = _alloc_int(1)
        for i in range(n):
            for j in range(len(knight[i])):
                s.kn_list[s.kn_start[i] + j] = knight[i][j]
        s.adj = <unsigned char*> calloc(n * n, 1)
        if s.adj == NULL:
            raise MemoryError()
        for i in range(n):
            for j in range(s.kn_start[i], s.kn_start[i + 1]):
                s.adj[i * n + s.kn_list[j]] = 1
        s.gmaps = _alloc_int(g_count * n)
        for i in range(g_count):
            gm = topo.gmaps[i]
            for j in range(n):
                s.gmaps[i * n + j] = gm[j]

        s.visited = <unsigned char*> calloc(n, 1)
        s.npar = <signed char*> calloc(n, 1)
        if s.visited == NULL or s.npar == NULL:
            raise MemoryError()
        start_parity = (topo.col_of[prefix[0]] + topo.row_of[prefix[0]] + 1) % 2
        for i in range(n):
            s.npar[i] = <signed char> ((start_parity + s.col_of[i] + s.row_of[i]) % 2)
        s.path = _alloc_int(n)
        s.pos = _alloc_int(n)
        s.deg = _alloc_int(n)
        for i in range(n):
            s.deg[i] = s.kn_start[i + 1] - s.kn_start[i]
        s.row_sum = _alloc_ll(s.height)
        s.col_sum = _alloc_ll(s.width)
        s.row_left = _alloc_int(s.height)
        s.col_left = _alloc_int(s.width)
        s.row_left_odd = _alloc_int(s.height)
        s.col_left_odd = _alloc_int(s.width)
        s.kcap_row = _alloc_ll(s.height)
        s.kcap_col = _alloc_ll(s.width)
        for i in range(s.height):
            s.row_left[i] = s.width
        for i in range(s.width):
            s.col_left[i] = s.height
        for i in range(n):
            s.row_left_odd[s.row_of[i]] += s.npar[i]
            s.col_left_odd[s.col_of[i]] += s.npar[i]

        s.zero_cnt = 0
        b.one_cnt = 0
        b.one_a = -1
        b.one_b = -1
        for i in range(n):
            if s.deg[i] == 0:
                s.zero_cnt += 1
            elif s.deg[i] == 1:
                b.one_cnt += 1
                if b.one_a < 0:
                    b.one_a = i
                elif b.one_b < 0:
                    b.one_b = i

        s.due = _alloc_int(n)
        s.number_due = _alloc_int(n + 2)
        s.sv_due_x1 = _alloc_int(n + 2)
        s.sv_due_v1 = _alloc_int(n + 2)
        s.sv_due_x2 = _alloc_int(n + 2)
        s.sv_due_v2 = _alloc_int(n + 2)
        s.sb_dens = <double*> calloc(64, sizeof(double))
        s.sb_m = _alloc_ll(64)
        s.sb_mo = _alloc_ll(64)
        s.sb_need = _alloc_ll(64)
        if s.sb_dens == NULL:
            raise MemoryError()
        s.cc_queue = _alloc_int(n)
        s.cc_seen = _alloc_int(n)
        s.cc_stamp = 0
        b.sv_zero = _alloc_int(n + 2)
        b.sv_one_cnt = _alloc_int(n + 2)
        b.sv_one_a = _alloc_int(n + 2)
        b.sv_one_b = _alloc_int(n + 2)
        b.sv_headA = _alloc_int(n + 2)
        b.sv_headB = _alloc_int(n + 2)
        b.sv_lo = _alloc_int(n + 2)
        b.sv_hi = _alloc_int(n + 2)
        b.sched_v = _alloc_int(n + 2)
        b.sched_side = <unsigned char*> calloc(n + 2, 1)
        if b.sched_side == NULL:
            raise MemoryError()
        for step in range(1, n + 1):
            sd = (step + 1) // 2
            ld = step // 2
            if step % 2 == 1:
                if sd <= n_small:
                    b.sched_v[step] = sd
                    b.sched_side[step] = 0
                else:
                    b.sched_v[step] = n - ld
                    b.sched_side[step] = 1
            else:
                if ld <= n - n_small:
                    b.sched_v[step] = n + 1 - ld
                    b.sched_side[step] = 1
                else:
                    b.sched_v[step] = sd + 1
                    b.sched_side[step] = 0

        s.hcap = 1 << 12
        s.hkeys = <unsigned int*> calloc(s.hcap, sizeof(unsigned int))
        s.hvals = <unsigned long long*> calloc(s.hcap, sizeof(unsigned long long))
        if s.hkeys == NULL or s.hvals == NULL:
            raise MemoryError()
        s.geo_open = <long long*> calloc(g_count, sizeof(long long))
        s.geo_closed = <long long*> calloc(g_count, sizeof(long long))
        s.nf_open = <long long*> calloc(g_count, sizeof(long long))
        s.nf_closed = <long long*> calloc(g_count, sizeof(long long))
        if s.geo_open == NULL or s.geo_closed == NULL or s.nf_open == NULL \
                or s.nf_closed == NULL:
            raise MemoryError()
        if fenc is not None:
            s.fenc_len = len(fenc)
            s.fenc = _alloc_int(max(s.fenc_len, 1))
            for i in range(s.fenc_len):
                s.fenc[i] = fenc[i]
        else:
            s.fenc_len = 0
            s.fenc = NULL
        mv = _alloc_int(n + 2)

        # --- replay the prefix (GIL held) ------------------------------
        step = 0
        for py_c in prefix:
            step += 1
            c = py_c
            v = b.sched_v[step]
            side = b.sched_side[step]
            if s.visited[c]:
                raise ValueError(f"prefix revisits cell {c}")
            if side == 0 and headA >= 0 and not s.adj[headA * n + c]:
                raise ValueError(f"prefix placement {step} is not a knight move")
            if side == 1 and headB >= 0 and not s.adj[headB * n + c]:
                raise ValueError(f"prefix placement {step} is not a knight move")
            s.nodes += 1
            w_lo = v if side == 0 else lo
            w_hi = v if side == 1 else hi
            if _push_bidi(&s, &b, c, v, step, w_lo, w_hi,
                          c if side == 0 else headA,
                          c if side == 1 else headB):
                return _result_bidi(&s, &b, aborted, stopped)
            if side == 0:
                headA = c
                lo = v
            else:
                headB = c
                hi = v
            if headA >= 0 and headB >= 0 and step < n and _degree_prune_bidi(
                    &s, &b, headA, headB, lo, hi, n_small, n - step):
                s.pr_isolated += 1
                _pop_bidi(&s, &b, c, v, step)
                return _result_bidi(&s, &b, aborted, stopped)

        base = step
        if step == n:
            if s.adj[s.path[n_small - 1] * n + s.path[n_small]]:
                rc = _leaf(&s, -1, stats)
                if rc == 1:
                    keep = sink(tuple([s.path[i] for i in range(n)]), -1)
                    if keep is False:
                        stopped = True
                elif rc == -1:
                    raise MemoryError()
            return _result_bidi(&s, &b, aborted, stopped)

        depth = base + 1
        mv[depth] = 0

        # --- iterative DFS over placement steps, GIL released ----------
        with nogil:
            while True:
                v = b.sched_v[depth]
                side = b.sched_side[depth]
                pin = s.number_due[v] - 1
                advanced = False
                # candidate enumeration: pinned cell, anchor scan, or head moves
                while True:
                    cand = -1
                    if pin >= 0:
                        if mv[depth] == 0:
                            mv[depth] = 1
                            if side == 1 and headB < 0:
                                cand = pin
                            elif side == 0 and s.adj[headA * n + pin]:
                                cand = pin
                            elif side == 1 and headB >= 0 and s.adj[headB * n + pin]:
                                cand = pin
                            else:
                                break
                        else:
                            break
                    elif side == 1 and headB < 0:
                        while mv[depth] < n:
                            i = mv[depth]
                            mv[depth] += 1
                            if not s.visited[i] and s.npar[i] == v % 2:
                                cand = i
                                break
                        if cand < 0:
                            break
                    else:
                        cur = headA if side == 0 else headB
                        nk = s.kn_start[cur + 1] - s.kn_start[cur]
                        while mv[depth] < nk:
                            i = s.kn_list[s.kn_start[cur] + mv[depth]]
                            mv[depth] += 1
                            if not s.visited[i]:
                                cand = i
                                break
                        if cand < 0:
                            break
                    if cand < 0:
                        break
                    if budget and s.nodes >= budget:
                        aborted = True
                        break
                    if stop_ptr != NULL and stop_ptr[0]:
                        stopped = True
                        break
                    s.nodes += 1
                    w_lo = v if side == 0 else lo
                    w_hi = v if side == 1 else hi
                    if _push_bidi(&s, &b, cand, v, depth, w_lo, w_hi,
                                  cand if side == 0 else headA,
                                  cand if side == 1 else headB):
                        continue
                    b.sv_headA[depth] = headA
                    b.sv_headB[depth] = headB
                    b.sv_lo[depth] = lo
                    b.sv_hi[depth] = hi
                    if side == 0:
                        headA = cand
                        lo = v
                    else:
                        headB = cand
                        hi = v
                    if depth == n:
                        if s.adj[s.path[n_small - 1] * n + s.path[n_small]]:
                            rc = _leaf(&s, -1, stats)
                            if rc != 0:
                                with gil:
                                    if rc == -1:
                                        raise MemoryError()
                                    keep = sink(
                                        tuple([s.path[i] for i in range(n)]), -1)
                                    if keep is False:
                                        stopped = True
                        else:
                            b.pr_join += 1
                        headA = b.sv_headA[depth]
                        headB = b.sv_headB[depth]
                        lo = b.sv_lo[depth]
                        hi = b.sv_hi[depth]
                        _pop_bidi(&s, &b, cand, v, depth)
                        if stopped:
                            break
                        continue
                    if headA >= 0 and headB >= 0 and _degree_prune_bidi(
                            &s, &b, headA, headB, lo, hi, n_small, n - depth):
                        s.pr_isolated += 1
                        headA = b.sv_headA[depth]
                        headB = b.sv_headB[depth]
                        lo = b.sv_lo[depth]
                        hi = b.sv_hi[depth]
                        _pop_bidi(&s, &b, cand, v, depth)
                        continue
                    depth += 1
                    mv[depth] = 0
                    advanced = True
                    break
                if aborted or stopped:
                    break
                if advanced:
                    continue
                if depth == base + 1:
                    break
                depth -= 1
                v = b.sched_v[depth]
                c = s.path[v - 1]
                headA = b.sv_headA[depth]
                headB = b.sv_headB[depth]
                lo = b.sv_lo[depth]
                hi = b.sv_hi[depth]
                _pop_bidi(&s, &b, c, v, depth)

        return _result_bidi(&s, &b, aborted, stopped)
    finally:
        free(mv)
        free(s.kn_start)
        free(s.kn_list)
        free(s.wz_start)
        free(s.wz_list)
        free(s.adj)
        free(s.row_of)
        free(s.col_of)
        free(s.gmaps)
        free(s.npar)
        free(s.visited)
        free(s.path)
        free(s.pos)
        free(s.deg)
        free(s.row_sum)
        free(s.col_sum)
        free(s.row_left)
        free(s.col_left)
        free(s.row_left_odd)
        free(s.col_left_odd)
        free(s.kcap_row)
        free(s.kcap_col)
        free(s.due)
        free(s.number_due)
        free(s.sv_due_x1)
        free(s.sv_due_v1)
        free(s.sv_due_x2)
        free(s.sv_due_v2)
        free(s.sb_dens)
        free(s.sb_m)
        free(s.sb_mo)
        free(s.sb_need)
        free(s.cc_queue)
        free(s.cc_seen)
        free(s.hkeys)
        free(s.hvals)
        free(s.geo_open)
        free(s.geo_closed)
        free(s.nf_open)
        free(s.nf_closed)
        free(s.fenc)
        free(b.sv_zero)
        free(b.sv_one_cnt)
        free(b.sv_one_a)
        free(b.sv_one_b)
        free(b.sv_headA)
        free(b.sv_headB)
        free(b.sv_lo)
        free(b.sv_hi)
        free(b.sched_v)
        free(b.sched_side)


cdef _result_bidi(St* s, Bidi* b, bint aborted, bint stopped):
    res = _result(s, aborted, stopped)
    if b.pr_join:
        res.prunes["join"] = b.pr_join
    return res
