"""Pure-Python search kernel.

Depth-first enumeration of numbered tours, identical in contract to the
compiled kernel in _core.pyx: same pruning rules, same per-leaf stats
histogram, same work-unit semantics.  Used as the automatic fallback when
the extension is not built, and as a cross-check in the test suite.

Pruning, all count-preserving:
- isolated cell: an unvisited cell with no unvisited knight neighbours can
  only be the final cell, and only if the path head can reach it.
- forced-line bounds: when a direction is pinned to its magic constant, a
  touched line must remain completable from the unused numbers; number
  parity is tied to cell colour, so odd and even budgets bound separately.
- deadline: a pinned line that needs small numbers dies once the running
  number outgrows its cap, even while untouched.
- pinned singleton: a pinned line with one open cell fixes that cell's
  number exactly; clashes or mistimed arrivals prune immediately.
"""

from __future__ import annotations

from typing import Callable

from .common import KernelOptions, Topo, UnitResult, encode_stats, eval_encoded

KERNEL_NAME = "pure"

Sink = Callable[[tuple[int, ...], int], bool]


def _connected(visited: bytearray, knight, n: int, remaining: int) -> bool:
    """True iff the unvisited cells form one knight-connected component."""
    if remaining <= 1:
        return True
    first = -1
    for i in range(n):
        if not visited[i]:
            first = i
            break
    if first < 0:
        return True
    seen = {first}
    queue = [first]
    while queue:
        c = queue.pop()
        for t in knight[c]:
            if not visited[t] and t not in seen:
                seen.add(t)
                queue.append(t)
    return len(seen) == remaining


def _parity_count(a: int, b: int, parity: int) -> int:
    """How many integers in [a, b] have the given parity."""
    if a > b:
        return 0
    first = a if a % 2 == parity else a + 1
    if first > b:
        return 0
    return (b - first) // 2 + 1


def run_unit(
    topo: Topo,
    prefix: tuple[int, ...],
    opts: KernelOptions,
    sink: Sink | None = None,
    stop: bytearray | None = None,
) -> UnitResult:
    """Search all completions of `prefix` (cells in visit order) and tally
    a histogram of per-leaf profile stats.  See KernelOptions for switches."""
    if opts.bidirectional:
        return run_unit_bidi(topo, prefix, opts, sink, stop)
    n = topo.n
    knight = topo.knight
    wazir = topo.wazir
    knight_sets = topo.knight_sets
    row_of, col_of = topo.row_of, topo.col_of
    height, width = topo.height, topo.width
    total = n * (n + 1) // 2
    g_count = topo.group_order
    gmaps = topo.gmaps

    res = UnitResult()
    res.geo_edge_open = [0] * g_count
    res.geo_edge_closed = [0] * g_count
    res.numfix_open = [0] * g_count
    res.numfix_closed = [0] * g_count
    hist = res.hist
    prunes = res.prunes

    if not prefix:
        raise ValueError("prefix must contain at least the start cell")

    visited = bytearray(n)
    path = [0] * n
    pos = [0] * n  # pos[cell] = visit index, valid while visited
    deg = [len(knight[c]) for c in range(n)]
    row_sum = [0] * height
    row_left = [width] * height
    col_sum = [0] * width
    col_left = [height] * width

    fs, fl = opts.force_short, opts.force_long
    s_num, s_den = opts.short_num, opts.short_den
    l_num, l_den = opts.long_num, opts.long_den
    emperor = opts.emperor
    junction_at = opts.junction_at
    geo = opts.geo
    budget = opts.node_budget
    INF = n + 1

    # every knight or wazir step flips both cell colour and number parity,
    # so the start cell pins the number parity of every cell
    start_parity = (col_of[prefix[0]] + row_of[prefix[0]] + 1) % 2
    npar = [(start_parity + col_of[c] + row_of[c]) % 2 for c in range(n)]

    row_cells = [[c for c in range(n) if row_of[c] == r] for r in range(height)]
    col_cells = [[c for c in range(n) if col_of[c] == cl] for cl in range(width)]
    row_left_odd = [sum(npar[c] for c in cells) for cells in row_cells]
    col_left_odd = [sum(npar[c] for c in cells) for cells in col_cells]

    def init_kcap(num: int, den: int, m: int) -> int:
        # largest k such that the m smallest future numbers (k+1 .. k+m)
        # can still reach the line's remaining target
        return (num - den * (m * (m + 1) // 2)) // (den * m) if m else INF

    kcap_row = [init_kcap(s_num, s_den, width) if fs else INF for _ in range(height)]
    kcap_col = [init_kcap(l_num, l_den, height) if fl else INF for _ in range(width)]
    min_kcap = min(kcap_row + kcap_col) if (fs or fl) else INF

    initial_zeros = [c for c in range(n) if deg[c] == 0]
    zero_cnt = len(initial_zeros)
    zero_cell = initial_zeros[0] if zero_cnt == 1 else -1
    junction = -1  # step number whose move was the wazir step, -1 if none

    due = [0] * n  # pinned visit number per cell (0 = none)
    number_due = [0] * (n + 2)  # pinned cell+1 per visit number (0 = none)

    # per-depth undo slots
    sv_zero_cnt = [0] * (n + 1)
    sv_zero_cell = [0] * (n + 1)
    sv_kcap_r = [0] * (n + 1)
    sv_kcap_c = [0] * (n + 1)
    sv_minkcap = [0] * (n + 1)
    sv_due: list[tuple] = [()] * (n + 1)

    def prune(reason: str) -> None:
        prunes[reason] = prunes.get(reason, 0) + 1

    def line_check(m: int, m_odd: int, need: int, den: int, k: int) -> tuple[bool, int]:
        """Parity-aware bound check of a touched pinned line; returns
        (alive, deadline cap for the line)."""
        if m == 0:
            return need == 0, INF
        m_even = m - m_odd
        if m_odd > _parity_count(k + 1, n, 1) or m_even > _parity_count(k + 1, n, 0):
            return False, INF
        o_first = k + 1 if (k + 1) % 2 == 1 else k + 2
        e_first = k + 1 if (k + 1) % 2 == 0 else k + 2
        min_add = m_odd * (o_first + m_odd - 1) + m_even * (e_first + m_even - 1)
        if need < den * min_add:
            return False, INF
        o_last = n if n % 2 == 1 else n - 1
        e_last = n if n % 2 == 0 else n - 1
        max_add = m_odd * (o_last - m_odd + 1) + m_even * (e_last - m_even + 1)
        if need > den * max_add:
            return False, INF
        kcap = (need - den * (m * (m + 1) // 2)) // (den * m)
        return True, kcap

    def subset_check(sums, lefts, lefts_odd, num, den, k: int) -> bool:
        """Joint feasibility of the incomplete lines of one pinned direction:
        the most-starved lines compete for the same small numbers (prefix,
        lower bound) and the most-greedy for the same large ones (suffix)."""
        entries = []
        for i in range(len(sums)):
            m = lefts[i]
            if m:
                need = num - sums[i] * den
                entries.append((need / m, m, lefts_odd[i], need))
        if len(entries) < 2:
            return True
        entries.sort()
        o_first = k + 1 if (k + 1) % 2 == 1 else k + 2
        e_first = k + 1 if (k + 1) % 2 == 0 else k + 2
        cm = cmo = cn = 0
        for _, m, mo, need in entries:
            cm += m
            cmo += mo
            cn += need
            me = cm - cmo
            if cn < den * (cmo * (o_first + cmo - 1) + me * (e_first + me - 1)):
                return False
        o_last = n if n % 2 == 1 else n - 1
        e_last = n if n % 2 == 0 else n - 1
        cm = cmo = cn = 0
        for _, m, mo, need in reversed(entries):
            cm += m
            cmo += mo
            cn += need
            me = cm - cmo
            if cn > den * (cmo * (o_last - cmo + 1) + me * (e_last - me + 1)):
                return False
        return True

    def register_due(cells: list[int], need: int, den: int) -> tuple[bool, tuple]:
        """Pin the single open cell of a line to its exact number."""
        if need % den:
            return False, ()
        v = need // den
        x = -1
        for cc in cells:
            if not visited[cc]:
                x = cc
                break
        if npar[x] != v % 2:
            return False, ()
        if due[x]:
            return due[x] == v, ()
        if number_due[v] and number_due[v] != x + 1:
            return False, ()
        due[x] = v
        number_due[v] = x + 1
        return True, (x, v)

    def push(c: int, k: int) -> bool:
        """Place number k at cell c; on prune, state is rolled back."""
        nonlocal zero_cnt, zero_cell, min_kcap
        sv_zero_cnt[k] = zero_cnt
        sv_zero_cell[k] = zero_cell
        sv_minkcap[k] = min_kcap
        sv_due[k] = ()
        visited[c] = 1
        path[k - 1] = c
        pos[c] = k - 1
        if deg[c] == 0:
            zero_cnt -= 1
            if zero_cell == c:
                zero_cell = -1
        for v in knight[c]:
            deg[v] -= 1
            if deg[v] == 0 and not visited[v]:
                zero_cnt += 1
                zero_cell = v

        ok = True
        if due[c] and due[c] != k:
            prune("pin")
            ok = False
        elif number_due[k] and number_due[k] != c + 1:
            prune("pin")
            ok = False

        r, cl = row_of[c], col_of[c]
        row_sum[r] += k
        row_left[r] -= 1
        row_left_odd[r] -= npar[c]
        col_sum[cl] += k
        col_left[cl] -= 1
        col_left_odd[cl] -= npar[c]
        sv_kcap_r[k] = kcap_row[r]
        sv_kcap_c[k] = kcap_col[cl]
        added: list[tuple[int, int]] = []
        if ok and fs:
            m = row_left[r]
            need = s_num - row_sum[r] * s_den
            alive, kcap = line_check(m, row_left_odd[r], need, s_den, k)
            kcap_row[r] = kcap
            if not alive:
                prune("line_exact" if m == 0 else "line_bound")
                ok = False
            else:
                if kcap < min_kcap:
                    min_kcap = kcap
                if m == 1:
                    good, entry = register_due(row_cells[r], need, s_den)
                    if not good:
                        prune("pin")
                        ok = False
                    elif entry:
                        added.append(entry)
        if ok and fl:
            m = col_left[cl]
            need = l_num - col_sum[cl] * l_den
            alive, kcap = line_check(m, col_left_odd[cl], need, l_den, k)
            kcap_col[cl] = kcap
            if not alive:
                prune("line_exact" if m == 0 else "line_bound")
                ok = False
            else:
                if kcap < min_kcap:
                    min_kcap = kcap
                if m == 1:
                    good, entry = register_due(col_cells[cl], need, l_den)
                    if not good:
                        prune("pin")
                        ok = False
                    elif entry:
                        added.append(entry)
        if added:
            sv_due[k] = tuple(added)
        if ok and (fs or fl) and k > min_kcap and k < n:
            # a stale line may have become unsatisfiable; rescan
            true_min = INF
            if fs:
                true_min = min(true_min, min(kcap_row))
            if fl:
                true_min = min(true_min, min(kcap_col))
            if k > true_min:
                prune("line_deadline")
                ok = False
            else:
                min_kcap = true_min
        if ok and fs and k < n and not subset_check(
                row_sum, row_left, row_left_odd, s_num, s_den, k):
            prune("subset")
            ok = False
        if ok and fl and k < n and not subset_check(
                col_sum, col_left, col_left_odd, l_num, l_den, k):
            prune("subset")
            ok = False
        if ok and not emperor and k < n:
            if zero_cnt >= 2:
                prune("isolated")
                ok = False
            elif zero_cnt == 1 and zero_cell not in knight_sets[c]:
                prune("isolated")
                ok = False
            elif not _connected(visited, knight, n, n - k):
                prune("split")
                ok = False
        if not ok:
            pop(c, k)
        return ok

    def pop(c: int, k: int) -> None:
        nonlocal zero_cnt, zero_cell, min_kcap
        for x, v in sv_due[k]:
            due[x] = 0
            number_due[v] = 0
        r, cl = row_of[c], col_of[c]
        row_sum[r] -= k
        row_left[r] += 1
        row_left_odd[r] += npar[c]
        col_sum[cl] -= k
        col_left[cl] += 1
        col_left_odd[cl] += npar[c]
        kcap_row[r] = sv_kcap_r[k]
        kcap_col[cl] = sv_kcap_c[k]
        for v in knight[c]:
            deg[v] += 1
        visited[c] = 0
        zero_cnt = sv_zero_cnt[k]
        zero_cell = sv_zero_cell[k]
        min_kcap = sv_minkcap[k]

    fenc = opts.filter_enc
    want_closure = opts.collect_closure

    def leaf() -> bool:
        """Tally the completed tour; returns False if the sink said stop."""
        res.leaves += 1
        if emperor and junction < 0:
            return True  # a pure knight tour is not an emperor tour
        closed = 1 if path[n - 1] in knight_sets[path[0]] else 0

        s_mc = 0
        s_vals = set()
        for r in range(height):
            s = row_sum[r]
            if s * height == total:
                s_mc += 1
            s_vals.add(s)
        s_dist = len(s_vals)
        s_consec = 1 if max(s_vals) - min(s_vals) + 1 == s_dist else 0

        l_mc = 0
        l_vals = set()
        for cidx in range(width):
            s = col_sum[cidx]
            if s * width == total:
                l_mc += 1
            l_vals.add(s)
        l_dist = len(l_vals)
        l_consec = 1 if max(l_vals) - min(l_vals) + 1 == l_dist else 0

        key = encode_stats(closed, s_mc, s_dist, s_consec, l_mc, l_dist, l_consec)
        hist[key] = hist.get(key, 0) + 1

        if geo:
            for gi in range(g_count):
                gmap = gmaps[gi]
                ok = True
                for i in range(n - 1):
                    a2, b2 = gmap[path[i]], gmap[path[i + 1]]
                    dpos = pos[a2] - pos[b2]
                    if dpos != 1 and dpos != -1 and not (
                        closed and abs(dpos) == n - 1
                    ):
                        ok = False
                        break
                if ok and closed:
                    a2, b2 = gmap[path[n - 1]], gmap[path[0]]
                    dpos = pos[a2] - pos[b2]
                    if dpos != 1 and dpos != -1 and abs(dpos) != n - 1:
                        ok = False
                if ok:
                    if closed:
                        res.geo_edge_closed[gi] += 1
                    else:
                        res.geo_edge_open[gi] += 1
                if all(gmap[path[i]] == path[i] for i in range(n)):
                    if closed:
                        res.numfix_closed[gi] += 1
                    else:
                        res.numfix_open[gi] += 1

        if sink is not None:
            if want_closure == 1 and closed:
                return True
            if want_closure == 2 and not closed:
                return True
            if fenc is not None and not eval_encoded(
                fenc, (closed, s_mc, s_dist, s_consec, l_mc, l_dist, l_consec)
            ):
                return True
            return sink(tuple(path), junction)
        return True

    # --- replay the prefix ---------------------------------------------
    depth = 0
    for c in prefix:
        if visited[c]:
            raise ValueError(f"prefix revisits cell {c}")
        if depth > 0:
            prev = path[depth - 1]
            if c in knight_sets[prev]:
                pass
            elif (emperor and junction < 0 and c in wazir[prev]
                  and (junction_at < 0 or depth == junction_at)):
                junction = depth
            else:
                raise ValueError(f"prefix step {depth}->{depth + 1} is not a legal move")
        res.nodes += 1
        if not push(c, depth + 1):
            return res  # prefix itself is pruned: empty unit
        depth += 1

    base = depth
    if depth == n:
        leaf()
        return res

    # --- iterative DFS ---------------------------------------------------
    mv = [0] * (n + 1)
    wz_open = [False] * (n + 1)  # wazir move allowed when entering this frame
    came_wazir = [False] * (n + 2)
    fnext = [-1] * (n + 1)  # pinned next cell per frame (-1 = free choice)
    mv[depth] = 0
    wz_open[depth] = emperor and junction < 0 and (junction_at < 0 or depth == junction_at)
    fnext[depth] = number_due[depth + 1] - 1

    while True:
        cur = path[depth - 1]
        moves = knight[cur]
        nk = len(moves)
        if fnext[depth] >= 0:
            # the next number is pinned: the pinned cell is the only move
            limit = 1 if (fnext[depth] in knight_sets[cur]
                          or (wz_open[depth] and fnext[depth] in wazir[cur])) else 0
        else:
            limit = nk + (len(wazir[cur]) if wz_open[depth] else 0)
        advanced = False
        while mv[depth] < limit:
            i = mv[depth]
            mv[depth] += 1
            if fnext[depth] >= 0:
                nxt = fnext[depth]
                is_wazir = nxt not in knight_sets[cur]
            else:
                is_wazir = i >= nk
                nxt = wazir[cur][i - nk] if is_wazir else moves[i]
            if visited[nxt]:
                continue
            if budget and res.nodes >= budget:
                res.aborted = True
                return res
            if stop is not None and stop[0]:
                res.stopped = True
                return res
            res.nodes += 1
            k = depth + 1
            if is_wazir:
                junction = depth
            if push(nxt, k):
                if k == n:
                    came_wazir[k] = is_wazir
                    if not leaf():
                        res.stopped = True
                        return res
                    pop(nxt, k)
                    if is_wazir:
                        junction = -1
                    continue
                came_wazir[k] = is_wazir
                depth = k
                mv[depth] = 0
                wz_open[depth] = emperor and junction < 0 and (
                    junction_at < 0 or depth == junction_at)
                fnext[depth] = number_due[depth + 1] - 1
                advanced = True
                break
            if is_wazir:
                junction = -1
        if advanced:
            continue
        # frame exhausted: backtrack
        if depth == base:
            return res
        c = path[depth - 1]
        pop(c, depth)
        if came_wazir[depth]:
            junction = -1
        depth -= 1


def run_unit_bidi(
    topo: Topo,
    prefix: tuple[int, ...],
    opts: KernelOptions,
    sink: Sink | None = None,
    stop: bytearray | None = None,
) -> UnitResult:
    """Bidirectional variant for line-pinned searches: numbers are placed in
    the order 1, N, 2, N-1, ... with two path heads that must join by a
    knight move in the middle.  Every line's open cells draw from a number
    window shrinking at both ends, which is what makes magic-constrained
    search tractable.  The prefix lists cells in placement order."""
    n = topo.n
    knight = topo.knight
    knight_sets = topo.knight_sets
    row_of, col_of = topo.row_of, topo.col_of
    height, width = topo.height, topo.width
    total = n * (n + 1) // 2
    g_count = topo.group_order
    gmaps = topo.gmaps
    n_small = (n + 1) // 2

    res = UnitResult()
    res.geo_edge_open = [0] * g_count
    res.geo_edge_closed = [0] * g_count
    res.numfix_open = [0] * g_count
    res.numfix_closed = [0] * g_count
    hist = res.hist
    prunes = res.prunes

    if opts.emperor:
        raise ValueError("bidirectional search does not support emperor tours")
    if not prefix:
        raise ValueError("prefix must contain at least the start cell")

    fs, fl = opts.force_short, opts.force_long
    s_num, s_den = opts.short_num, opts.short_den
    l_num, l_den = opts.long_num, opts.long_den
    geo = opts.geo
    budget = opts.node_budget

    visited = bytearray(n)
    path = [0] * n     # path[v-1] = cell of number v
    pos = [0] * n
    deg = [len(knight[c]) for c in range(n)]
    row_sum = [0] * height
    row_left = [width] * height
    col_sum = [0] * width
    col_left = [height] * width

    start_parity = (col_of[prefix[0]] + row_of[prefix[0]] + 1) % 2
    npar = [(start_parity + col_of[c] + row_of[c]) % 2 for c in range(n)]
    row_left_odd = [0] * height
    col_left_odd = [0] * width
    for c in range(n):
        row_left_odd[row_of[c]] += npar[c]
        col_left_odd[col_of[c]] += npar[c]

    due = [0] * n
    number_due = [0] * (n + 2)

    # degree bookkeeping: cells with 0 or 1 unvisited neighbours
    zero_cnt = sum(1 for c in range(n) if deg[c] == 0)
    one_cnt = sum(1 for c in range(n) if deg[c] == 1)
    one_a = one_b = -1
    ones = [c for c in range(n) if deg[c] == 1]
    if len(ones) >= 1:
        one_a = ones[0]
    if len(ones) >= 2:
        one_b = ones[1]

    # per-step undo slots (indexed by placement step, 1-based)
    sv_zero = [0] * (n + 2)
    sv_one = [(0, -1, -1)] * (n + 2)
    sv_due: list[tuple] = [()] * (n + 2)

    def prune(reason: str) -> None:
        prunes[reason] = prunes.get(reason, 0) + 1

    def window_counts(a: int, b: int, parity: int) -> int:
        return _parity_count(a, b, parity)

    def scan_direction(sums, lefts, lefts_odd, num, den, lo, hi,
                       posA, posB, line_pos) -> bool:
        """All incomplete lines of a pinned direction must be completable
        from the open number window (lo, hi), jointly as well as alone.
        Per line, the window shrinks further by head travel time: a head
        changes its row or column index by at most 2 per move and cannot
        stand still, so numbers reach line i no sooner than lo + d_A(i)
        and no later than hi - d_B(i)."""
        o_avail = window_counts(lo + 1, hi - 1, 1)
        e_avail = window_counts(lo + 1, hi - 1, 0)
        o_first = lo + 1 if (lo + 1) % 2 == 1 else lo + 2
        e_first = lo + 1 if (lo + 1) % 2 == 0 else lo + 2
        o_last = hi - 1 if (hi - 1) % 2 == 1 else hi - 2
        e_last = hi - 1 if (hi - 1) % 2 == 0 else hi - 2
        entries = []
        for i in range(len(sums)):
            m = lefts[i]
            if not m:
                continue
            mo = lefts_odd[i]
            me = m - mo
            if mo > o_avail or me > e_avail:
                return False
            need = num - sums[i] * den
            llo, lhi = lo, hi
            if posA >= 0:
                delta = abs(line_pos[posA] - i)
                llo = lo + (2 if delta == 0 else (delta + 1) // 2) - 1
            if posB >= 0:
                delta = abs(line_pos[posB] - i)
                lhi = hi - (2 if delta == 0 else (delta + 1) // 2) + 1
            if llo != lo or lhi != hi:
                if lhi - llo <= m:  # fewer open numbers than open cells
                    return False
                lof = llo + 1 if (llo + 1) % 2 == 1 else llo + 2
                lef = llo + 1 if (llo + 1) % 2 == 0 else llo + 2
                lol = lhi - 1 if (lhi - 1) % 2 == 1 else lhi - 2
                lel = lhi - 1 if (lhi - 1) % 2 == 0 else lhi - 2
                if (mo > window_counts(llo + 1, lhi - 1, 1)
                        or me > window_counts(llo + 1, lhi - 1, 0)):
                    return False
                lo_add = mo * (lof + mo - 1) + me * (lef + me - 1)
                hi_add = mo * (lol - mo + 1) + me * (lel - me + 1)
            else:
                lo_add = mo * (o_first + mo - 1) + me * (e_first + me - 1)
                hi_add = mo * (o_last - mo + 1) + me * (e_last - me + 1)
            if need < den * lo_add or need > den * hi_add:
                return False
            entries.append((need / m, m, mo, need))
        if len(entries) >= 2:
            entries.sort()
            cm = cmo = cn = 0
            for _, m, mo, need in entries:
                cm += m
                cmo += mo
                cn += need
                me = cm - cmo
                if cn < den * (cmo * (o_first + cmo - 1) + me * (e_first + me - 1)):
                    return False
            cm = cmo = cn = 0
            for _, m, mo, need in reversed(entries):
                cm += m
                cmo += mo
                cn += need
                me = cm - cmo
                if cn > den * (cmo * (o_last - cmo + 1) + me * (e_last - me + 1)):
                    return False
        return True

    def register_due(cells, need, den, lo, hi) -> tuple[bool, tuple]:
        if need % den:
            return False, ()
        v = need // den
        if not lo < v < hi:
            return False, ()
        x = -1
        for cc in cells:
            if not visited[cc]:
                x = cc
                break
        if npar[x] != v % 2:
            return False, ()
        if due[x]:
            return due[x] == v, ()
        if number_due[v] and number_due[v] != x + 1:
            return False, ()
        due[x] = v
        number_due[v] = x + 1
        return True, (x, v)

    row_cells = [[c for c in range(n) if row_of[c] == r] for r in range(height)]
    col_cells = [[c for c in range(n) if col_of[c] == cl] for cl in range(width)]

    def push(c: int, v: int, step: int, lo: int, hi: int,
             cur_headA: int, cur_headB: int) -> bool:
        """Place number v at cell c (step = placements done so far + 1);
        cur_headA/cur_headB are the head cells after this placement."""
        nonlocal zero_cnt, one_cnt, one_a, one_b
        sv_zero[step] = zero_cnt
        sv_one[step] = (one_cnt, one_a, one_b)
        sv_due[step] = ()
        visited[c] = 1
        path[v - 1] = c
        pos[c] = v - 1
        if deg[c] == 0:
            zero_cnt -= 1
        elif deg[c] == 1:
            one_cnt -= 1
            if one_a == c:
                one_a, one_b = one_b, -1
            elif one_b == c:
                one_b = -1
        for t in knight[c]:
            deg[t] -= 1
            if not visited[t]:
                if deg[t] == 0:
                    # moves from the one-set to the zero-set
                    zero_cnt += 1
                    one_cnt -= 1
                    if one_a == t:
                        one_a, one_b = one_b, -1
                    elif one_b == t:
                        one_b = -1
                elif deg[t] == 1:
                    one_cnt += 1
                    if one_a < 0:
                        one_a = t
                    elif one_b < 0:
                        one_b = t

        ok = True
        if npar[c] != v % 2:
            prune("pin")
            ok = False
        elif due[c] and due[c] != v:
            prune("pin")
            ok = False
        elif number_due[v] and number_due[v] != c + 1:
            prune("pin")
            ok = False

        r, cl = row_of[c], col_of[c]
        row_sum[r] += v
        row_left[r] -= 1
        row_left_odd[r] -= npar[c]
        col_sum[cl] += v
        col_left[cl] -= 1
        col_left_odd[cl] -= npar[c]

        added = []
        if ok and fs:
            m = row_left[r]
            need = s_num - row_sum[r] * s_den
            if m == 0:
                if need != 0:
                    prune("line_exact")
                    ok = False
            elif m == 1:
                good, entry = register_due(row_cells[r], need, s_den, lo, hi)
                if not good:
                    prune("pin")
                    ok = False
                elif entry:
                    added.append(entry)
        if ok and fl:
            m = col_left[cl]
            need = l_num - col_sum[cl] * l_den
            if m == 0:
                if need != 0:
                    prune("line_exact")
                    ok = False
            elif m == 1:
                good, entry = register_due(col_cells[cl], need, l_den, lo, hi)
                if not good:
                    prune("pin")
                    ok = False
                elif entry:
                    added.append(entry)
        if added:
            sv_due[step] = tuple(added)
        if ok and fs and not scan_direction(row_sum, row_left, row_left_odd,
                                            s_num, s_den, lo, hi,
                                            cur_headA, cur_headB, row_of):
            prune("line_bound")
            ok = False
        if ok and fl and not scan_direction(col_sum, col_left, col_left_odd,
                                            l_num, l_den, lo, hi,
                                            cur_headA, cur_headB, col_of):
            prune("line_bound")
            ok = False
        if not ok:
            pop(c, v, step)
        return ok

    def pop(c: int, v: int, step: int) -> None:
        nonlocal zero_cnt, one_cnt, one_a, one_b
        for x, dv in sv_due[step]:
            due[x] = 0
            number_due[dv] = 0
        r, cl = row_of[c], col_of[c]
        row_sum[r] -= v
        row_left[r] += 1
        row_left_odd[r] += npar[c]
        col_sum[cl] -= v
        col_left[cl] += 1
        col_left_odd[cl] += npar[c]
        for t in knight[c]:
            deg[t] += 1
        visited[c] = 0
        zero_cnt = sv_zero[step]
        one_cnt, one_a, one_b = sv_one[step]

    def one_set_cells() -> list[int]:
        return [c for c in range(n) if not visited[c] and deg[c] == 1]

    def degree_prune(headA: int, headB: int, lo: int, hi: int,
                     remaining: int) -> bool:
        """True when the degree structure is already hopeless.  Open cells
        may only borrow tour edges from the two current heads; a head that
        still owes numbers needs an open neighbour; the open region must be
        one component."""
        nonlocal one_a, one_b
        if remaining <= 1:
            return False
        if lo < n_small and deg[headA] == 0:
            return True
        if hi > n_small + 1 and deg[headB] == 0:
            return True
        if zero_cnt > 0:
            return True
        if one_cnt >= 3:
            return True
        if not _connected(visited, knight, n, remaining):
            return True
        if one_cnt == 1:
            if one_a < 0:  # id slot lost while the count was above 2
                one_a = one_set_cells()[0]
            u = one_a
            return not (u in knight_sets[headA] or u in knight_sets[headB])
        if one_cnt == 2:
            if one_a < 0 or one_b < 0:
                one_a, one_b = one_set_cells()
            u, w = one_a, one_b
            ua, ub = u in knight_sets[headA], u in knight_sets[headB]
            wa, wb = w in knight_sets[headA], w in knight_sets[headB]
            return not ((ua and wb) or (ub and wa))
        return False

    fenc = opts.filter_enc
    want_closure = opts.collect_closure

    def leaf() -> bool:
        res.leaves += 1
        closed = 1 if path[n - 1] in knight_sets[path[0]] else 0
        s_mc = 0
        s_vals = set()
        for r in range(height):
            sv = row_sum[r]
            if sv * height == total:
                s_mc += 1
            s_vals.add(sv)
        s_dist = len(s_vals)
        s_consec = 1 if max(s_vals) - min(s_vals) + 1 == s_dist else 0
        l_mc = 0
        l_vals = set()
        for cidx in range(width):
            sv = col_sum[cidx]
            if sv * width == total:
                l_mc += 1
            l_vals.add(sv)
        l_dist = len(l_vals)
        l_consec = 1 if max(l_vals) - min(l_vals) + 1 == l_dist else 0
        key = encode_stats(closed, s_mc, s_dist, s_consec, l_mc, l_dist, l_consec)
        hist[key] = hist.get(key, 0) + 1
        if geo:
            for gi in range(g_count):
                gmap = gmaps[gi]
                ok = True
                for i in range(n - 1):
                    a2, b2 = gmap[path[i]], gmap[path[i + 1]]
                    dpos = pos[a2] - pos[b2]
                    if dpos != 1 and dpos != -1 and not (closed and abs(dpos) == n - 1):
                        ok = False
                        break
                if ok and closed:
                    a2, b2 = gmap[path[n - 1]], gmap[path[0]]
                    dpos = pos[a2] - pos[b2]
                    if dpos != 1 and dpos != -1 and abs(dpos) != n - 1:
                        ok = False
                if ok:
                    if closed:
                        res.geo_edge_closed[gi] += 1
                    else:
                        res.geo_edge_open[gi] += 1
                if all(gmap[path[i]] == path[i] for i in range(n)):
                    if closed:
                        res.numfix_closed[gi] += 1
                    else:
                        res.numfix_open[gi] += 1
        if sink is not None:
            if want_closure == 1 and closed:
                return True
            if want_closure == 2 and not closed:
                return True
            if fenc is not None and not eval_encoded(
                fenc, (closed, s_mc, s_dist, s_consec, l_mc, l_dist, l_consec)
            ):
                return True
            return sink(tuple(path), -1)
        return True

    def schedule(step: int) -> tuple[int, int]:
        """Number to place at 1-based placement `step`, and which head moves
        (0 = small side, 1 = large side)."""
        small_done = (step + 1) // 2
        large_done = step // 2
        if step % 2 == 1:  # odd steps place small numbers 1, 2, 3, ...
            if small_done <= n_small:
                return small_done, 0
            return n - (large_done), 1
        if large_done <= n - n_small:
            return n + 1 - large_done, 1
        return small_done + 1, 0

    # --- replay the prefix -------------------------------------------------
    headA = headB = -1
    lo, hi = 0, n + 1
    step = 0
    for c in prefix:
        step += 1
        v, side = schedule(step)
        if visited[c]:
            raise ValueError(f"prefix revisits cell {c}")
        if side == 0 and headA >= 0 and c not in knight_sets[headA]:
            raise ValueError(f"prefix placement {step} is not a knight move")
        if side == 1 and headB >= 0 and c not in knight_sets[headB]:
            raise ValueError(f"prefix placement {step} is not a knight move")
        res.nodes += 1
        w_lo = v if side == 0 else lo
        w_hi = v if side == 1 else hi
        nha = c if side == 0 else headA
        nhb = c if side == 1 else headB
        if not push(c, v, step, w_lo, w_hi, nha, nhb):
            return res
        if side == 0:
            headA, lo = c, v
        else:
            headB, hi = c, v
        if headA >= 0 and headB >= 0 and step < n and degree_prune(
                headA, headB, lo, hi, n - step):
            prunes["isolated"] = prunes.get("isolated", 0) + 1
            pop(c, v, step)
            return res

    base = step
    if step == n:
        if path[n_small - 1] in knight_sets[path[n_small]]:
            leaf()
        return res

    # --- iterative DFS over placement steps --------------------------------
    mv = [0] * (n + 2)
    sv_head = [(-1, -1, 0, 0)] * (n + 2)

    def candidates(step: int):
        v, side = schedule(step)
        pinned = number_due[v] - 1
        if side == 1 and headB < 0:
            if pinned >= 0:
                return v, side, (pinned,)
            return v, side, tuple(c for c in range(n) if npar[c] == v % 2)
        head = headA if side == 0 else headB
        if pinned >= 0:
            return v, side, (pinned,) if pinned in knight_sets[head] else ()
        return v, side, knight[head]

    cand_cache: list = [None] * (n + 2)
    depth = base + 1
    cand_cache[depth] = candidates(depth)
    mv[depth] = 0

    while True:
        v, side, cands = cand_cache[depth]
        advanced = False
        while mv[depth] < len(cands):
            c = cands[mv[depth]]
            mv[depth] += 1
            if visited[c]:
                continue
            if budget and res.nodes >= budget:
                res.aborted = True
                return res
            if stop is not None and stop[0]:
                res.stopped = True
                return res
            res.nodes += 1
            new_lo = v if side == 0 else lo
            new_hi = v if side == 1 else hi
            nha = c if side == 0 else headA
            nhb = c if side == 1 else headB
            if not push(c, v, depth, new_lo, new_hi, nha, nhb):
                continue
            sv_head[depth] = (headA, headB, lo, hi)
            if side == 0:
                headA, lo = c, v
            else:
                headB, hi = c, v
            if depth == n:
                if path[n_small - 1] in knight_sets[path[n_small]]:
                    if not leaf():
                        res.stopped = True
                        return res
                else:
                    prunes["join"] = prunes.get("join", 0) + 1
                headA, headB, lo, hi = sv_head[depth]
                pop(c, v, depth)
                continue
            if headA >= 0 and headB >= 0 and degree_prune(headA, headB, lo, hi,
                                                          n - depth):
                prunes["isolated"] = prunes.get("isolated", 0) + 1
                headA, headB, lo, hi = sv_head[depth]
                pop(c, v, depth)
                continue
            depth += 1
            cand_cache[depth] = candidates(depth)
            mv[depth] = 0
            advanced = True
            break
        if advanced:
            continue
        if depth == base + 1:
            return res
        depth -= 1
        c = path[cand_cache[depth][0] - 1]
        headA, headB, lo, hi = sv_head[depth]
        pop(c, cand_cache[depth][0], depth)
