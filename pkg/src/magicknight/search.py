"""Exhaustive tour enumeration: work splitting, symmetry-aware counting
(raw / arithmetic / geometric), magic-constraint pruning, the Warnsdorf
constructor and the Burnside cross-check."""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

from .board import BoardDims, Cell, knight_neighbors, magic_constants, symmetry_group
from .filters import Filter
from .kernels import KernelOptions, Topo, build_topo, decode_stats, run_unit
from .tour import Tour, frenicle_canonical, geometric_class, tour_from_path, validate_tour


class Closure(Enum):
    OPEN = "open"
    CLOSED = "closed"
    ANY = "any"


class Mode(Enum):
    RAW = "raw"
    ARITHMETIC = "arithmetic"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class SearchSpec:
    """What to enumerate: board, closure, optional filter, counting mode."""

    dims: BoardDims
    closure: Closure = Closure.ANY
    filt: Filter | None = None
    mode: Mode = Mode.ARITHMETIC
    limit: int | None = None

    def __post_init__(self) -> None:
        if self.dims.cells < 2:
            raise ValueError("board must have at least 2 cells")


@dataclass
class SearchStats:
    nodes: int = 0
    leaves: int = 0
    prunes: dict[str, int] = field(default_factory=dict)
    elapsed_ms: float = 0.0
    workers: int = 1
    units: int = 0
    raw_leaves_matching: int = 0
    closed_diagrams: int | None = None
    aborted: bool = False

    @property
    def pruned(self) -> int:
        return sum(self.prunes.values())


@dataclass
class SearchResult:
    count: int
    tours: list[Tour] | None
    stats: SearchStats


class SearchAborted(RuntimeError):
    """Raised when a resource limit interrupts a search; carries the partial
    stats so the caller never mistakes the partial count for an exact one."""

    def __init__(self, message: str, stats: SearchStats):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class WorkUnit:
    """A fixed search prefix (cells in visit order) plus the multiplicity its
    start cell carries under the symmetry reduction."""

    prefix: tuple[int, ...]
    weight: int = 1


_topo_cache = lru_cache(maxsize=32)(build_topo)


def _start_units(dims: BoardDims, restricted: bool) -> list[WorkUnit]:
    """One unit per start cell.  When restricted, only the row-major-least
    cell of each symmetry orbit is searched and its orbit size becomes the
    unit weight (every symmetry class of tours has a representative starting
    in this fundamental domain)."""
    n = dims.cells
    if not restricted:
        return [WorkUnit((c,), 1) for c in range(n)]
    group = symmetry_group(dims)
    units = []
    for c in range(n):
        orbit = {dims.index(g.apply(dims.cell(c), dims)) for g in group}
        if min(orbit) == c:
            units.append(WorkUnit((c,), len(orbit)))
    return units


def _expand_units(units: list[WorkUnit], topo: Topo, emperor: bool, target: int,
                  junction_at: int = -1) -> list[WorkUnit]:
    """Split by expanding shortest prefixes first until `target` units exist.
    The prefix tree is a disjoint, exhaustive partition of the search space;
    dead prefixes (no legal continuation) are dropped, which preserves the
    partition of the set of complete tours."""
    n = topo.n
    while len(units) < target:
        units.sort(key=lambda u: (len(u.prefix), u.prefix))
        u = units[0]
        if len(u.prefix) >= n:
            break
        cur = u.prefix[-1]
        seen = set(u.prefix)
        succ = [c for c in topo.knight[cur] if c not in seen]
        if emperor and not _prefix_junction(u.prefix, topo) and (
                junction_at < 0 or len(u.prefix) == junction_at):
            succ += [c for c in topo.wazir[cur] if c not in seen and c not in succ]
        units = units[1:] + [WorkUnit(u.prefix + (c,), u.weight) for c in succ]
        if not units or all(len(x.prefix) >= n for x in units):
            break
    return sorted(units, key=lambda u: (len(u.prefix), u.prefix))


def _prefix_junction(prefix: tuple[int, ...], topo: Topo) -> bool:
    """True if the prefix already used its wazir step."""
    for i in range(len(prefix) - 1):
        if prefix[i + 1] not in topo.knight_sets[prefix[i]]:
            return True
    return False


def _expand_to_depth(units: list[WorkUnit], topo: Topo, emperor: bool, depth: int,
                     junction_at: int = -1) -> list[WorkUnit]:
    """Expand every prefix to the given depth (dead prefixes are dropped)."""
    done: list[WorkUnit] = []
    frontier = list(units)
    while frontier:
        u = frontier.pop()
        if len(u.prefix) >= depth or len(u.prefix) >= topo.n:
            done.append(u)
            continue
        cur = u.prefix[-1]
        seen = set(u.prefix)
        succ = [c for c in topo.knight[cur] if c not in seen]
        if emperor and not _prefix_junction(u.prefix, topo) and (
                junction_at < 0 or len(u.prefix) == junction_at):
            succ += [c for c in topo.wazir[cur] if c not in seen and c not in succ]
        frontier.extend(WorkUnit(u.prefix + (c,), u.weight) for c in succ)
    return sorted(done, key=lambda u: (len(u.prefix), u.prefix))


def split_frontier_at_depth(spec: SearchSpec, depth: int, emperor: bool = False,
                            junction_at: int = -1) -> list[WorkUnit]:
    """Partition the search space into all live prefixes of the given depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    topo = _topo_cache(spec.dims)
    restricted = spec.mode is not Mode.RAW and _may_restrict(spec)
    units = _start_units(spec.dims, restricted)
    return _expand_to_depth(units, topo, emperor, depth, junction_at)


def split_frontier(spec: SearchSpec, target_units: int, emperor: bool = False,
                   junction_at: int = -1) -> list[WorkUnit]:
    """Partition the search space of `spec` into at least `target_units`
    disjoint prefix units (fewer only when the space is smaller)."""
    if target_units < 1:
        raise ValueError("target_units must be >= 1")
    topo = _topo_cache(spec.dims)
    restricted = spec.mode is not Mode.RAW and _may_restrict(spec)
    units = _start_units(spec.dims, restricted)
    if target_units <= len(units):
        return units
    return _expand_units(units, topo, emperor, target_units, junction_at)


def _bidi_schedule(step: int, n: int) -> tuple[int, int]:
    """1-based placement step -> (number, side): side 0 grows from number 1
    upward, side 1 from number n downward; they interleave 1, n, 2, n-1..."""
    n_small = (n + 1) // 2
    small_done = (step + 1) // 2
    large_done = step // 2
    if step % 2 == 1:
        if small_done <= n_small:
            return small_done, 0
        return n - large_done, 1
    if large_done <= n - n_small:
        return n + 1 - large_done, 1
    return small_done + 1, 0


def _bidi_successors(prefix: tuple[int, ...], topo: Topo) -> list[int]:
    """Legal cells for the next placement of a bidirectional prefix."""
    n = topo.n
    step = len(prefix) + 1
    v, side = _bidi_schedule(step, n)
    seen = set(prefix)
    start_parity = (topo.col_of[prefix[0]] + topo.row_of[prefix[0]] + 1) % 2
    if side == 1 and step == 2:
        want = v % 2
        return [c for c in range(n) if c not in seen
                and (start_parity + topo.col_of[c] + topo.row_of[c]) % 2 == want]
    head = -1
    for i in range(len(prefix) - 1, -1, -1):
        _, s_i = _bidi_schedule(i + 1, n)
        if s_i == side:
            head = prefix[i]
            break
    if head < 0:
        return []
    return [c for c in topo.knight[head] if c not in seen]


def _expand_units_bidi(units: list[WorkUnit], topo: Topo, target: int) -> list[WorkUnit]:
    while len(units) < target:
        units.sort(key=lambda u: (len(u.prefix), u.prefix))
        u = units[0]
        if len(u.prefix) >= topo.n:
            break
        succ = _bidi_successors(u.prefix, topo)
        units = units[1:] + [WorkUnit(u.prefix + (c,), u.weight) for c in succ]
        if not units or all(len(x.prefix) >= topo.n for x in units):
            break
    return sorted(units, key=lambda u: (len(u.prefix), u.prefix))


def _may_restrict(spec: SearchSpec) -> bool:
    """Start-cell symmetry reduction is valid when per-start counts are
    symmetric: always on oblongs (the group preserves line directions), and
    on squares only for direction-symmetric filters."""
    if not spec.dims.is_square:
        return True
    return spec.filt is None or spec.filt.is_swap_symmetric()


@dataclass
class _Merged:
    hist: dict[int, int] = field(default_factory=dict)
    whist: dict[int, int] = field(default_factory=dict)  # weighted by unit
    nodes: int = 0
    leaves: int = 0
    prunes: dict[str, int] = field(default_factory=dict)
    geo_open: list[int] = field(default_factory=list)
    geo_closed: list[int] = field(default_factory=list)
    numfix_open: list[int] = field(default_factory=list)
    numfix_closed: list[int] = field(default_factory=list)
    aborted: bool = False
    stopped: bool = False


def _run_units(
    topo: Topo,
    units: list[WorkUnit],
    opts: KernelOptions,
    threads: int,
    sink=None,
    stop: bytearray | None = None,
) -> _Merged:
    merged = _Merged(
        geo_open=[0] * topo.group_order,
        geo_closed=[0] * topo.group_order,
        numfix_open=[0] * topo.group_order,
        numfix_closed=[0] * topo.group_order,
    )
    lock = threading.Lock()

    def work(unit: WorkUnit) -> None:
        result = run_unit(topo, unit.prefix, opts, sink, stop)
        with lock:
            for key, cnt in result.hist.items():
                merged.hist[key] = merged.hist.get(key, 0) + cnt
                merged.whist[key] = merged.whist.get(key, 0) + cnt * unit.weight
            merged.nodes += result.nodes
            merged.leaves += result.leaves
            for k, v in result.prunes.items():
                merged.prunes[k] = merged.prunes.get(k, 0) + v
            for i in range(topo.group_order):
                merged.geo_open[i] += result.geo_edge_open[i] * unit.weight
                merged.geo_closed[i] += result.geo_edge_closed[i] * unit.weight
                merged.numfix_open[i] += result.numfix_open[i] * unit.weight
                merged.numfix_closed[i] += result.numfix_closed[i] * unit.weight
            merged.aborted |= result.aborted
            merged.stopped |= result.stopped

    if threads <= 1:
        for u in units:
            work(u)
            if merged.stopped:
                break
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, units))
    return merged


def _closure_sum(whist: dict[int, int], closure: Closure, filt: Filter | None) -> int:
    total = 0
    for key, cnt in whist.items():
        stats = decode_stats(key)
        if closure is Closure.OPEN and stats[0]:
            continue
        if closure is Closure.CLOSED and not stats[0]:
            continue
        if filt is not None and not filt.matches(stats):
            continue
        total += cnt
    return total


def _kernel_options(
    dims: BoardDims,
    force_short: bool,
    force_long: bool,
    *,
    emperor: bool = False,
    junction_at: int = -1,
    geo: bool = False,
    collect: bool = False,
    filter_enc: tuple[int, ...] | None = None,
    collect_closure: int = 0,
    node_budget: int = 0,
    bidirectional: bool = False,
) -> KernelOptions:
    consts = magic_constants(dims)
    return KernelOptions(
        force_short=force_short,
        short_num=consts.total,
        short_den=dims.height,
        force_long=force_long,
        long_num=consts.total,
        long_den=dims.width,
        emperor=emperor,
        junction_at=junction_at,
        geo=geo,
        collect=collect,
        filter_enc=filter_enc,
        collect_closure=collect_closure,
        node_budget=node_budget,
        bidirectional=bidirectional,
    )


def _exact_div(num: int, den: int, what: str) -> int:
    if num % den:
        raise AssertionError(f"{what}: {num} not divisible by {den}")
    return num // den


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def count_tours(
    spec: SearchSpec,
    threads: int | None = None,
    seed_units: int | None = None,
    node_budget: int = 0,
    emperor: bool = False,
    junction_at: int = -1,
    seed_depth: int | None = None,
) -> SearchResult:
    """Exact count of tours per the spec's mode.

    Raw counts directed numbered tours; Arithmetic counts symmetry classes
    (on square boards a direction-specific filter counts the classes with at
    least one member matching); Geometric additionally quotients by reversal
    and, for closed tours, cyclic renumbering.
    """
    threads = threads or default_threads()
    t0 = time.perf_counter()
    dims = spec.dims
    group_order = len(symmetry_group(dims))
    filt = spec.filt
    forces = filt.forces(dims) if filt is not None else (False, False)

    if spec.mode is Mode.GEOMETRIC and filt is not None:
        return _geometric_filtered(spec, threads, seed_units, node_budget, emperor, t0)

    use_bidi = (forces[0] or forces[1]) and not emperor
    if use_bidi:
        restricted = _may_restrict(spec)
        units = _expand_units_bidi(
            _start_units(dims, restricted), _topo_cache(dims),
            seed_units or max(threads * 8, 1))
    elif seed_depth is not None:
        units = split_frontier_at_depth(spec, seed_depth, emperor, junction_at)
    else:
        units = split_frontier(spec, seed_units or max(threads * 8, 1), emperor, junction_at)
    opts = _kernel_options(
        dims, forces[0], forces[1], emperor=emperor, junction_at=junction_at,
        geo=spec.mode is Mode.GEOMETRIC, node_budget=node_budget,
        bidirectional=use_bidi,
    )
    merged = _run_units(_topo_cache(dims), units, opts, threads)
    stats = _stats_from(merged, threads, len(units), t0)
    if merged.aborted:
        raise SearchAborted("node budget exceeded", stats)

    if spec.mode is Mode.RAW:
        count = _closure_sum(merged.whist, spec.closure, filt)
    elif spec.mode is Mode.ARITHMETIC:
        count = _arithmetic_count(spec, merged, group_order, threads, seed_units,
                                  node_budget, emperor)
    else:
        count = _geometric_count(spec, merged, group_order)

    if spec.closure in (Closure.ANY, Closure.CLOSED) and forces == (False, False):
        # closed numbered tours come 2N to a cycle diagram, so the raw
        # closed count from an unconstrained run yields the diagram count
        raw_closed = _closure_sum(merged.whist, Closure.CLOSED, None)
        stats.closed_diagrams = _exact_div(raw_closed, 2 * dims.cells, "closed diagrams")
    stats.raw_leaves_matching = _closure_sum(merged.whist, spec.closure, filt)
    return SearchResult(count=count, tours=None, stats=stats)


def _arithmetic_count(
    spec: SearchSpec,
    merged: _Merged,
    group_order: int,
    threads: int,
    seed_units: int | None,
    node_budget: int,
    emperor: bool,
) -> int:
    dims, filt = spec.dims, spec.filt
    if not dims.is_square or filt is None or filt.is_swap_symmetric():
        raw = _closure_sum(merged.whist, spec.closure, filt)
        return _exact_div(raw, group_order, "arithmetic count")
    # Square board, direction-specific filter: count classes with at least
    # one member matching.  The run was unrestricted, so raw(F) equals
    # raw(swap F) by the transpose bijection, and
    # raw(F or swap F) = 2*raw(F) - raw(F and swap F).
    raw_f = _closure_sum(merged.whist, spec.closure, filt)
    conj = filt.conjoin(filt.swapped())
    if conj.unsatisfiable:
        raw_conj = 0
    elif conj.forces(dims) == filt.forces(dims):
        raw_conj = _closure_sum(merged.whist, spec.closure, conj)
    else:
        sub = SearchSpec(dims, spec.closure, conj, Mode.RAW)
        raw_conj = count_tours(sub, threads, seed_units, node_budget, emperor).count
    return _exact_div(2 * raw_f - raw_conj, group_order, "arithmetic count")


def _geometric_count(spec: SearchSpec, merged: _Merged, group_order: int) -> int:
    """Burnside over the geometric quotient: open-tour path diagrams are
    fixed freely by reversal (2 numberings per diagram), closed-tour cycle
    diagrams by renumbering (2N numberings per diagram)."""
    n = spec.dims.cells
    count = 0
    if spec.closure in (Closure.ANY, Closure.OPEN):
        total = sum(merged.geo_open)
        count += _exact_div(total, 2 * group_order, "geometric open count")
    if spec.closure in (Closure.ANY, Closure.CLOSED):
        total = sum(merged.geo_closed)
        count += _exact_div(total, 2 * n * group_order, "geometric closed count")
    return count


def _geometric_filtered(
    spec: SearchSpec,
    threads: int,
    seed_units: int | None,
    node_budget: int,
    emperor: bool,
    t0: float,
) -> SearchResult:
    """Filtered geometric counting collects matching tours and dedups their
    geometric canonical forms (classes with at least one matching member)."""
    classes: set[tuple[int, ...]] = set()

    def sink(t: Tour) -> bool:
        classes.add(geometric_class(t).grid)
        return True

    unlimited = SearchSpec(spec.dims, spec.closure, spec.filt, spec.mode)
    res = enumerate_tours(unlimited, sink, threads=threads, seed_units=seed_units,
                          node_budget=node_budget, emperor=emperor,
                          canonicalize=False)
    res.stats.elapsed_ms = (time.perf_counter() - t0) * 1000
    return SearchResult(count=len(classes), tours=None, stats=res.stats)


def _stats_from(merged: _Merged, threads: int, units: int, t0: float) -> SearchStats:
    return SearchStats(
        nodes=merged.nodes,
        leaves=merged.leaves,
        prunes=dict(merged.prunes),
        elapsed_ms=(time.perf_counter() - t0) * 1000,
        workers=threads,
        units=units,
        aborted=merged.aborted,
    )


def enumerate_tours(
    spec: SearchSpec,
    sink: Callable[[Tour], bool | None],
    threads: int | None = None,
    seed_units: int | None = None,
    node_budget: int = 0,
    emperor: bool = False,
    junction_at: int = -1,
    canonicalize: bool = True,
    seed_depth: int | None = None,
) -> SearchResult:
    """Emit qualifying tours to `sink`; with canonicalize (the default and
    the Arithmetic-mode contract) each symmetry class is emitted exactly
    once, as its canonical representative.  sink returning False stops the
    search (used with spec.limit)."""
    threads = threads or default_threads()
    t0 = time.perf_counter()
    dims = spec.dims
    filt = spec.filt
    closure_code = {Closure.ANY: 0, Closure.OPEN: 1, Closure.CLOSED: 2}[spec.closure]

    filters_to_run = [filt]
    if filt is not None and dims.is_square and not filt.is_swap_symmetric():
        filters_to_run.append(filt.swapped())

    emitted: set[tuple[int, ...]] = set()
    count = 0
    stop = bytearray(1)
    lock = threading.Lock()
    merged_stats = SearchStats(workers=threads)

    def kernel_sink(path: tuple[int, ...], junction: int) -> bool:
        nonlocal count
        t = tour_from_path(dims, path)
        with lock:
            if canonicalize and spec.mode is not Mode.RAW:
                if spec.mode is Mode.GEOMETRIC:
                    rep = geometric_class(t)
                else:
                    rep = frenicle_canonical(t)
                if rep.grid in emitted:
                    return True
                emitted.add(rep.grid)
                out = rep
            else:
                out = t
            count += 1
            keep_going = sink(out)
            if keep_going is False or (spec.limit is not None and count >= spec.limit):
                stop[0] = 1
                return False
            return True

    # Restricted starts stay valid for emission: every class has a member
    # whose start cell lies in the fundamental domain.
    sub = SearchSpec(dims, spec.closure, filt, spec.mode)
    for f in filters_to_run:
        forces = f.forces(dims) if f is not None else (False, False)
        use_bidi = (forces[0] or forces[1]) and not emperor
        if use_bidi:
            units = _expand_units_bidi(
                _start_units(dims, _may_restrict(sub)), _topo_cache(dims),
                seed_units or max(threads * 8, 1))
        elif seed_depth is not None:
            units = split_frontier_at_depth(sub, seed_depth, emperor, junction_at)
        else:
            units = split_frontier(sub, seed_units or max(threads * 8, 1), emperor, junction_at)
        opts = _kernel_options(
            dims, forces[0], forces[1], emperor=emperor, junction_at=junction_at, collect=True,
            filter_enc=tuple(f.encode()) if f is not None else None,
            collect_closure=closure_code, node_budget=node_budget,
            bidirectional=use_bidi,
        )
        merged = _run_units(_topo_cache(dims), units, opts, threads, kernel_sink, stop)
        merged_stats.nodes += merged.nodes
        merged_stats.leaves += merged.leaves
        for k, v in merged.prunes.items():
            merged_stats.prunes[k] = merged_stats.prunes.get(k, 0) + v
        merged_stats.units += len(units)
        if merged.aborted:
            merged_stats.elapsed_ms = (time.perf_counter() - t0) * 1000
            raise SearchAborted("node budget exceeded", merged_stats)
        if stop[0]:
            break

    merged_stats.elapsed_ms = (time.perf_counter() - t0) * 1000
    emitted_count = len(emitted) if canonicalize and spec.mode is not Mode.RAW else count
    return SearchResult(count=emitted_count, tours=None, stats=merged_stats)


def count_with_filter(
    dims: BoardDims,
    closure: Closure,
    filt: Filter | None,
    mode: Mode = Mode.ARITHMETIC,
    threads: int | None = None,
) -> int:
    """Convenience wrapper assembling a SearchSpec."""
    return count_tours(SearchSpec(dims, closure, filt, mode), threads=threads).count


def burnside_check(dims: BoardDims, closure: Closure = Closure.ANY,
                   threads: int | None = None) -> dict:
    """Verify Arithmetic = average over the symmetry group of the number of
    raw tours each op fixes.  Numbered tours are never fixed by a nontrivial
    board symmetry, so the identity term carries everything; the check runs
    the fixed-point counts anyway and reports both sides."""
    if dims.cells > 40:
        raise ValueError(f"burnside_check needs raw enumeration; {dims} is too large")
    threads = threads or default_threads()
    topo = _topo_cache(dims)
    # unrestricted starts so each op's fixed-point count is measured directly
    units = _expand_units(_start_units(dims, restricted=False), topo, False,
                          max(threads * 4, 1))
    opts = _kernel_options(dims, False, False, geo=True)
    merged = _run_units(topo, units, opts, threads)
    group = symmetry_group(dims)

    per_op = []
    for i in range(len(group)):
        if closure is Closure.OPEN:
            per_op.append(merged.numfix_open[i])
        elif closure is Closure.CLOSED:
            per_op.append(merged.numfix_closed[i])
        else:
            per_op.append(merged.numfix_open[i] + merged.numfix_closed[i])
    fixed = {g.name: f for g, f in zip(group, per_op)}
    burnside = sum(per_op) / len(group)
    arithmetic = count_tours(SearchSpec(dims, closure, None, Mode.ARITHMETIC),
                             threads=threads).count
    return {
        "board": str(dims),
        "closure": closure.value,
        "arithmetic": arithmetic,
        "burnside_average": burnside,
        "fixed_by_op": fixed,
        "equal": arithmetic == burnside,
    }


def warnsdorf_construct(dims: BoardDims, start: Cell) -> Tour | None:
    """Greedy tour by the fewest-onward-moves rule, ties broken by lowest
    row-major target cell.  Deterministic; returns None when stuck."""
    if not dims.in_bounds(start):
        raise ValueError(f"start cell {start} out of bounds for {dims}")
    n = dims.cells
    nbrs = [
        [dims.index(t) for t in knight_neighbors(dims.cell(i), dims)] for i in range(n)
    ]
    visited = [False] * n
    cur = dims.index(start)
    visited[cur] = True
    path = [cur]
    while len(path) < n:
        best: int | None = None
        best_deg = 9
        for cand in nbrs[cur]:
            if visited[cand]:
                continue
            onward = sum(1 for t in nbrs[cand] if not visited[t])
            if onward < best_deg:
                best_deg, best = onward, cand
        if best is None:
            return None
        visited[best] = True
        path.append(best)
        cur = best
    tour = tour_from_path(dims, path)
    assert validate_tour(tour) is None
    return tour
