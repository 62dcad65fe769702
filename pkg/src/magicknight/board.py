"""Rectangular board geometry: knight/wazir moves, symmetries, magic constants."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple


class Cell(NamedTuple):
    """A board square, 0-based. col counts from the left, row from the top."""

    col: int
    row: int


@dataclass(frozen=True)
class BoardDims:
    """Board dimensions, normalized so width <= height.

    Inputs given the other way round are transposed on construction, so
    "4x18" and "18x4" denote the same board.  Short lines are the `height`
    rows of `width` cells each; long lines are the `width` columns of
    `height` cells each.
    """

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"board sides must be >= 1, got {self.width}x{self.height}")
        if self.width > self.height:
            w, h = self.height, self.width
            object.__setattr__(self, "width", w)
            object.__setattr__(self, "height", h)

    @property
    def cells(self) -> int:
        return self.width * self.height

    @property
    def is_square(self) -> bool:
        return self.width == self.height

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c.col < self.width and 0 <= c.row < self.height

    def index(self, c: Cell) -> int:
        """Row-major index of a cell."""
        return c.row * self.width + c.col

    def cell(self, index: int) -> Cell:
        row, col = divmod(index, self.width)
        return Cell(col, row)

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


_BOARD_RE = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


def parse_board(text: str) -> BoardDims:
    """Parse a "WxH" board string (case-insensitive 'x'), normalizing orientation."""
    m = _BOARD_RE.match(text)
    if not m:
        raise ValueError(f"bad board spec {text!r}, expected WxH like 4x18")
    return BoardDims(int(m.group(1)), int(m.group(2)))


KNIGHT_OFFSETS = ((-2, -1), (-2, 1), (-1, -2), (-1, 2), (1, -2), (1, 2), (2, -1), (2, 1))
WAZIR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))


def _neighbors(c: Cell, d: BoardDims, offsets) -> list[Cell]:
    if not d.in_bounds(c):
        raise ValueError(f"cell {c} out of bounds for {d}")
    found = [
        Cell(c.col + dc, c.row + dr)
        for dc, dr in offsets
        if 0 <= c.col + dc < d.width and 0 <= c.row + dr < d.height
    ]
    found.sort(key=d.index)  # deterministic row-major target order
    return found


def knight_neighbors(c: Cell, d: BoardDims) -> list[Cell]:
    """In-bounds knight moves from c, sorted row-major."""
    return _neighbors(c, d, KNIGHT_OFFSETS)


def wazir_neighbors(c: Cell, d: BoardDims) -> list[Cell]:
    """In-bounds single orthogonal steps from c, sorted row-major."""
    return _neighbors(c, d, WAZIR_OFFSETS)


class SymmetryOp(Enum):
    """Rectangle symmetries.  The first four act on any board; the rest
    (quarter turns and diagonal reflections) require a square board.

    Encoded as (transpose, flip columns, flip rows), applied in that order.
    """

    IDENTITY = (False, False, False)
    REFLECT_H = (False, True, False)   # mirror left-right
    REFLECT_V = (False, False, True)   # mirror top-bottom
    ROTATE180 = (False, True, True)
    REFLECT_DIAG = (True, False, False)
    ROTATE90 = (True, True, False)     # clockwise quarter turn
    ROTATE270 = (True, False, True)
    REFLECT_ANTI = (True, True, True)

    @property
    def requires_square(self) -> bool:
        return self.value[0]

    def apply(self, c: Cell, d: BoardDims) -> Cell:
        """Image of cell c under this symmetry of board d."""
        swap, flip_col, flip_row = self.value
        if swap and not d.is_square:
            raise ValueError(f"{self.name} requires a square board, got {d}")
        if not d.in_bounds(c):
            raise ValueError(f"cell {c} out of bounds for {d}")
        col, row = c
        if swap:
            col, row = row, col
        if flip_col:
            col = d.width - 1 - col
        if flip_row:
            row = d.height - 1 - row
        return Cell(col, row)

    def inverse(self) -> SymmetryOp:
        if self is SymmetryOp.ROTATE90:
            return SymmetryOp.ROTATE270
        if self is SymmetryOp.ROTATE270:
            return SymmetryOp.ROTATE90
        return self  # all other ops are involutions


def apply_symmetry(op: SymmetryOp, c: Cell, d: BoardDims) -> Cell:
    return op.apply(c, d)


def symmetry_group(d: BoardDims) -> tuple[SymmetryOp, ...]:
    """The board's symmetry group: order 4 for oblongs, 8 for squares."""
    if d.is_square:
        return tuple(SymmetryOp)
    return tuple(op for op in SymmetryOp if not op.requires_square)


@dataclass(frozen=True)
class MagicConstants:
    """Required line sums.  A constant is None when not an integer
    (in which case that direction can never be fully magic)."""

    total: int
    short_mc: int | None
    long_mc: int | None
    short_is_integral: bool
    long_is_integral: bool


def magic_constants(d: BoardDims) -> MagicConstants:
    """Magic constants of board d: total over height for the short (row)
    direction, total over width for the long (column) direction."""
    n = d.cells
    total = n * (n + 1) // 2
    short_ok = total % d.height == 0
    long_ok = total % d.width == 0
    return MagicConstants(
        total=total,
        short_mc=total // d.height if short_ok else None,
        long_mc=total // d.width if long_ok else None,
        short_is_integral=short_ok,
        long_is_integral=long_ok,
    )


class Feasibility(Enum):
    INFEASIBLE_ODD_SIDE = "InfeasibleOddSide"
    INFEASIBLE_SINGLY_EVEN_SIDES = "InfeasibleSinglyEvenSides"
    NOT_EXCLUDED = "NotExcluded"


@dataclass(frozen=True)
class FeasibilityVerdict:
    status: Feasibility
    reason: str


def magic_feasibility(d: BoardDims) -> FeasibilityVerdict:
    """Necessary-condition check for magic knight tours.

    NOT_EXCLUDED does not assert existence; it only means neither theorem
    rules the board out (4x8 is NOT_EXCLUDED yet has no magic tour).
    """
    if d.width % 2 == 1 or d.height % 2 == 1:
        return FeasibilityVerdict(
            Feasibility.INFEASIBLE_ODD_SIDE,
            "a side of odd length makes adjacent line sums alternate odd/even,"
            " so they cannot share one constant",
        )
    if d.width % 4 == 2 and d.height % 4 == 2:
        return FeasibilityVerdict(
            Feasibility.INFEASIBLE_SINGLY_EVEN_SIDES,
            "both sides are singly even (= 2 mod 4), which admits no magic"
            " knight tour",
        )
    return FeasibilityVerdict(
        Feasibility.NOT_EXCLUDED,
        "not excluded by the parity or singly-even theorems (existence not implied)",
    )
