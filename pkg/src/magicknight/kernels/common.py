"""Data shared by the search kernels: board topology tables, kernel options,
per-unit results and the packed stats-key encoding."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..board import BoardDims, Cell, knight_neighbors, symmetry_group, wazir_neighbors

MAX_SIDE = 63  # stats-key packing uses 6 bits per line count


@dataclass(frozen=True)
class Topo:
    """Flattened board tables consumed by both kernels."""

    n: int
    width: int
    height: int
    knight: tuple[tuple[int, ...], ...]
    wazir: tuple[tuple[int, ...], ...]
    knight_sets: tuple[frozenset[int], ...]
    row_of: tuple[int, ...]
    col_of: tuple[int, ...]
    gmaps: tuple[tuple[int, ...], ...]  # cell permutation per symmetry op
    group_order: int


def build_topo(dims: BoardDims) -> Topo:
    if dims.height > MAX_SIDE:
        raise ValueError(f"board {dims} too large (max side {MAX_SIDE})")
    n = dims.cells
    knight = tuple(
        tuple(dims.index(t) for t in knight_neighbors(dims.cell(i), dims)) for i in range(n)
    )
    wazir = tuple(
        tuple(dims.index(t) for t in wazir_neighbors(dims.cell(i), dims)) for i in range(n)
    )
    gmaps = tuple(
        tuple(dims.index(g.apply(dims.cell(i), dims)) for i in range(n))
        for g in symmetry_group(dims)
    )
    return Topo(
        n=n,
        width=dims.width,
        height=dims.height,
        knight=knight,
        wazir=wazir,
        knight_sets=tuple(frozenset(nbrs) for nbrs in knight),
        row_of=tuple(i // dims.width for i in range(n)),
        col_of=tuple(i % dims.width for i in range(n)),
        gmaps=gmaps,
        group_order=len(gmaps),
    )


@dataclass(frozen=True)
class KernelOptions:
    """Per-search switches.  Forced magic constants are passed as fractions
    (a line of sum s satisfies its constant iff s * den == num), so
    non-integral constants run honestly and prune everything."""

    force_short: bool = False
    short_num: int = 0
    short_den: int = 1
    force_long: bool = False
    long_num: int = 0
    long_den: int = 1
    emperor: bool = False
    junction_at: int = -1  # emperor only: wazir step allowed at this depth (-1 = any)
    bidirectional: bool = False  # grow the numbering from both ends (forced runs)
    geo: bool = False
    collect: bool = False
    filter_enc: tuple[int, ...] | None = None
    collect_closure: int = 0  # 0 any, 1 open only, 2 closed only
    node_budget: int = 0  # 0 = unlimited


@dataclass
class UnitResult:
    hist: dict[int, int] = field(default_factory=dict)
    nodes: int = 0
    leaves: int = 0
    prunes: dict[str, int] = field(default_factory=dict)
    geo_edge_open: list[int] = field(default_factory=list)
    geo_edge_closed: list[int] = field(default_factory=list)
    numfix_open: list[int] = field(default_factory=list)
    numfix_closed: list[int] = field(default_factory=list)
    aborted: bool = False
    stopped: bool = False


def encode_stats(closed: int, s_mc: int, s_dist: int, s_consec: int,
                 l_mc: int, l_dist: int, l_consec: int) -> int:
    return (closed | s_mc << 1 | s_dist << 7 | s_consec << 13
            | l_mc << 14 | l_dist << 20 | l_consec << 26)


def decode_stats(key: int) -> tuple[int, int, int, int, int, int, int]:
    return (key & 1, key >> 1 & 63, key >> 7 & 63, key >> 13 & 1,
            key >> 14 & 63, key >> 20 & 63, key >> 26 & 1)


def eval_encoded(enc: tuple[int, ...], stats: tuple[int, ...]) -> bool:
    """Evaluate a Filter.encode() DNF against a decoded stats tuple."""
    pos = 1
    for _ in range(enc[0]):
        n_atoms = enc[pos]
        pos += 1
        ok = True
        for _ in range(n_atoms):
            stat, op, value = enc[pos], enc[pos + 1], enc[pos + 2]
            pos += 3
            v = stats[stat]
            if op == 0:
                ok = ok and v == value
            elif op == 1:
                ok = ok and v >= value
            else:
                ok = ok and v <= value
        if ok:
            return True
    return False
