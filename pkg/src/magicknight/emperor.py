"""Two-knight emperor tours: numberings whose steps are knight moves except
exactly one single-step (wazir) junction.

Counting convention ("two_knight", the default): the junction sits at step
N/2, splitting the board between two knights of equal share, and classes are
counted up to board symmetry AND reversal, since reversing the numbering
merely swaps the two interchangeable knights.  This is the convention under
which the published 4x6 results come out as 3 magic and 6 quasi-magic tours.
The "free" convention places the junction anywhere and counts classes the
same way as knight tours (symmetry only, reverses distinct).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .board import BoardDims, symmetry_group
from .filters import Filter
from .search import Closure, Mode, SearchResult, SearchSpec, enumerate_tours
from .tour import Tour, transform_tour

MAX_EMPEROR_CELLS = 48

CONVENTIONS = ("two_knight", "free")


@dataclass(frozen=True)
class EmperorTour:
    """A numbering 1..N with exactly one wazir step; junction is the k whose
    step k -> k+1 is the wazir move."""

    dims: BoardDims
    grid: tuple[int, ...]
    junction: int

    def as_tour(self) -> Tour:
        """View the same grid as a Tour value (for line sums, classification
        and rendering; it will not pass validate_tour)."""
        return Tour(self.dims, self.grid)


def _step_kind(d: BoardDims, a: int, b: int) -> str:
    ca, cb = d.cell(a), d.cell(b)
    dc, dr = abs(ca.col - cb.col), abs(ca.row - cb.row)
    if (dc, dr) in ((1, 2), (2, 1)):
        return "knight"
    if dc + dr == 1:
        return "wazir"
    return "other"


def validate_emperor(t: EmperorTour) -> str | None:
    """None if the emperor invariants hold: a permutation, every step a
    knight or wazir move, exactly one wazir step, at the stated junction."""
    n = t.dims.cells
    seen = [False] * (n + 1)
    for v in t.grid:
        if not 1 <= v <= n:
            return f"value {v} outside 1..{n}"
        if seen[v]:
            return f"duplicate {v}"
        seen[v] = True
    path = t.as_tour().path()
    wazir_steps = []
    for k in range(n - 1):
        kind = _step_kind(t.dims, path[k], path[k + 1])
        if kind == "other":
            return f"step {k + 1}->{k + 2} is neither a knight nor a wazir move"
        if kind == "wazir":
            wazir_steps.append(k + 1)
    if not wazir_steps:
        return "zero wazir steps"
    if len(wazir_steps) > 1:
        return f"{len(wazir_steps)} wazir steps"
    if wazir_steps[0] != t.junction:
        return f"junction is {wazir_steps[0]}, not {t.junction}"
    return None


def emperor_from_grid(dims: BoardDims, grid: tuple[int, ...]) -> EmperorTour:
    """Build an EmperorTour from a numbering, deriving the junction; raises
    if the grid is not a valid emperor tour."""
    probe = EmperorTour(dims, grid, junction=0)
    path = probe.as_tour().path()
    wazir_steps = [
        k + 1
        for k in range(dims.cells - 1)
        if _step_kind(dims, path[k], path[k + 1]) == "wazir"
    ]
    t = EmperorTour(dims, grid, wazir_steps[0] if len(wazir_steps) == 1 else 0)
    problem = validate_emperor(t)
    if problem is not None:
        raise ValueError(f"not an emperor tour: {problem}")
    return t


def reverse_emperor(t: EmperorTour) -> EmperorTour:
    n = t.dims.cells
    return EmperorTour(t.dims, tuple(n + 1 - v for v in t.grid), n - t.junction)


def transform_emperor(g, t: EmperorTour) -> EmperorTour:
    return EmperorTour(t.dims, transform_tour(g, t.as_tour()).grid, t.junction)


def frenicle_canonical_emperor(t: EmperorTour) -> EmperorTour:
    """Least grid over the board's symmetry group (reversal excluded), as for
    knight tours; the junction step index is preserved by every symmetry."""
    best = min(transform_tour(g, t.as_tour()).grid for g in symmetry_group(t.dims))
    return EmperorTour(t.dims, best, t.junction)


def pair_canonical_emperor(t: EmperorTour) -> EmperorTour:
    """Least grid over symmetry images of the tour and of its reverse: the
    class key of the two_knight convention (unordered pair of knights)."""
    rev = reverse_emperor(t)
    best = min(
        min(transform_tour(g, t.as_tour()).grid for g in symmetry_group(t.dims)),
        min(transform_tour(g, rev.as_tour()).grid for g in symmetry_group(t.dims)),
    )
    return emperor_from_grid(t.dims, best)


def _guard(dims: BoardDims, convention: str) -> None:
    if dims.cells > MAX_EMPEROR_CELLS:
        raise ValueError(
            f"emperor search refused: {dims} has {dims.cells} cells,"
            f" above the exhaustive-search guard of {MAX_EMPEROR_CELLS}"
        )
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown emperor convention {convention!r}")
    if convention == "two_knight" and dims.cells % 2:
        raise ValueError(
            f"two_knight convention needs an even cell count, {dims} has {dims.cells}"
        )


def enumerate_emperor(
    dims: BoardDims,
    filt: Filter | None = None,
    closure: Closure = Closure.ANY,
    convention: str = "two_knight",
    limit: int | None = None,
    threads: int | None = None,
    sink: Callable[[EmperorTour], bool | None] | None = None,
) -> tuple[SearchResult, list[EmperorTour]]:
    """Enumerate emperor classes under the given convention, returning the
    search result and the canonical representatives sorted by grid."""
    _guard(dims, convention)
    two_knight = convention == "two_knight"
    junction_at = dims.cells // 2 if two_knight else -1
    found: dict[tuple[int, ...], EmperorTour] = {}

    def collect(t: Tour) -> bool | None:
        emp = emperor_from_grid(dims, t.grid)
        canon = pair_canonical_emperor(emp) if two_knight else frenicle_canonical_emperor(emp)
        if canon.grid not in found:
            found[canon.grid] = canon
            if sink is not None and sink(canon) is False:
                return False
            if limit is not None and len(found) >= limit:
                return False
        return True

    spec = SearchSpec(dims, closure, filt, Mode.ARITHMETIC)
    # the kernel emits one representative per arithmetic class; the pair
    # quotient of the two_knight convention is applied in `collect`
    res = enumerate_tours(spec, collect, threads=threads, emperor=True,
                          junction_at=junction_at, canonicalize=True)
    tours = [found[k] for k in sorted(found)]
    return SearchResult(count=len(tours), tours=None, stats=res.stats), tours


def count_emperor(
    dims: BoardDims,
    filt: Filter | None = None,
    closure: Closure = Closure.ANY,
    convention: str = "two_knight",
    threads: int | None = None,
) -> SearchResult:
    """Exact emperor-tour class count under the given convention."""
    res, _ = enumerate_emperor(dims, filt, closure, convention, threads=threads)
    return res
