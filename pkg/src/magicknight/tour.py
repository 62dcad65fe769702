"""Numbered tour grids: validation, symmetry images, canonical forms, line
sums and the plain-text tour format."""

from __future__ import annotations

from dataclasses import dataclass

from .board import BoardDims, Cell, SymmetryOp, knight_neighbors, symmetry_group


@dataclass(frozen=True)
class Tour:
    """A numbering 1..N of the board cells, row-major in `grid`.

    grid[i] is the visit number of cell i.  Construction only checks the
    length; use validate_tour for the permutation and knight-step checks.
    """

    dims: BoardDims
    grid: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.grid) != self.dims.cells:
            raise ValueError(
                f"expected {self.dims.cells} values for {self.dims}, got {len(self.grid)}"
            )

    def number_at(self, c: Cell) -> int:
        return self.grid[self.dims.index(c)]

    def path(self) -> list[int]:
        """Cell indices in visit order (inverse of the numbering)."""
        order = [0] * len(self.grid)
        for idx, num in enumerate(self.grid):
            order[num - 1] = idx
        return order

    def cell_of(self, number: int) -> Cell:
        return self.dims.cell(self.path()[number - 1])


@dataclass(frozen=True)
class LineSumProfile:
    short_sums: tuple[int, ...]  # row sums, top to bottom
    long_sums: tuple[int, ...]   # column sums, left to right


def tour_from_path(dims: BoardDims, path: list[int] | tuple[int, ...]) -> Tour:
    """Build a Tour from cell indices in visit order."""
    grid = [0] * dims.cells
    for step, idx in enumerate(path):
        grid[idx] = step + 1
    return Tour(dims, tuple(grid))


def _is_knight_step(d: BoardDims, a: int, b: int) -> bool:
    ca, cb = d.cell(a), d.cell(b)
    dc, dr = abs(ca.col - cb.col), abs(ca.row - cb.row)
    return (dc, dr) in ((1, 2), (2, 1))


def validate_tour(t: Tour) -> str | None:
    """None if both tour invariants hold, else a message naming the first
    duplicate value or the first non-knight step."""
    n = t.dims.cells
    seen = [False] * (n + 1)
    for v in t.grid:
        if not 1 <= v <= n:
            return f"value {v} outside 1..{n}"
        if seen[v]:
            return f"duplicate {v}"
        seen[v] = True
    path = t.path()
    for k in range(n - 1):
        if not _is_knight_step(t.dims, path[k], path[k + 1]):
            return f"step {k + 1}->{k + 2} is not a knight move"
    return None


def is_closed(t: Tour) -> bool:
    """True iff the cells numbered 1 and N are knight-adjacent."""
    path = t.path()
    return _is_knight_step(t.dims, path[0], path[-1])


def reverse_tour(t: Tour) -> Tour:
    """Renumber k -> N+1-k (run the same tour backwards)."""
    n = t.dims.cells
    return Tour(t.dims, tuple(n + 1 - v for v in t.grid))


def transform_tour(g: SymmetryOp, t: Tour) -> Tour:
    """Image of the tour under a board symmetry: cell g(c) gets c's number."""
    d = t.dims
    grid = [0] * d.cells
    for i, v in enumerate(t.grid):
        grid[d.index(g.apply(d.cell(i), d))] = v
    return Tour(d, tuple(grid))


def frenicle_canonical(t: Tour) -> Tour:
    """Arithmetic-class representative: the lexicographically least grid
    among all symmetry images.  Reversal is NOT quotiented out."""
    return min(
        (transform_tour(g, t) for g in symmetry_group(t.dims)),
        key=lambda x: x.grid,
    )


def geometric_class(t: Tour) -> Tour:
    """Geometric-class representative: least grid over symmetry images and
    reversal, and for closed tours additionally over all cyclic
    renumberings in both directions."""
    d = t.dims
    closed = is_closed(t)
    n = d.cells
    best: tuple[int, ...] | None = None
    for g in symmetry_group(d):
        base = transform_tour(g, t)
        p = base.path()
        variants = [p, p[::-1]]
        if closed:
            variants = [p[s:] + p[:s] for s in range(n)]
            rp = p[::-1]
            variants += [rp[s:] + rp[:s] for s in range(n)]
        for var in variants:
            grid = tour_from_path(d, var).grid
            if best is None or grid < best:
                best = grid
    assert best is not None
    return Tour(d, best)


def line_sums(t: Tour) -> LineSumProfile:
    w, h = t.dims.width, t.dims.height
    rows = [0] * h
    cols = [0] * w
    for i, v in enumerate(t.grid):
        rows[i // w] += v
        cols[i % w] += v
    return LineSumProfile(tuple(rows), tuple(cols))


class ParseError(ValueError):
    """Tour/fixture text error, carrying 1-based line and column."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


def _parse_grid_lines(lines: list[tuple[int, str]], w: int, h: int) -> tuple[int, ...]:
    """Read h rows of w integers from (lineno, text) pairs; values must be a
    permutation of 1..w*h."""
    n = w * h
    grid: list[int] = []
    if len(lines) < h:
        lineno = lines[-1][0] if lines else 0
        return_count = sum(len(text.split()) for _, text in lines)
        raise ParseError(f"expected {n} values, got {return_count}", lineno + 1)
    for row in range(h):
        lineno, text = lines[row]
        fields = text.split()
        if len(fields) != w:
            raise ParseError(f"expected {w} values in row, got {len(fields)}", lineno)
        for colno, field in enumerate(fields):
            try:
                v = int(field)
            except ValueError:
                raise ParseError(f"bad integer {field!r}", lineno, colno + 1) from None
            if not 1 <= v <= n:
                raise ParseError(f"values must be 1..{n}, got {v}", lineno, colno + 1)
            grid.append(v)
    if len(lines) > h:
        raise ParseError("unexpected extra grid line", lines[h][0])
    seen: set[int] = set()
    for idx, v in enumerate(grid):
        if v in seen:
            raise ParseError(f"duplicate value {v}", lines[idx // w][0])
        seen.add(v)
    return tuple(grid)


def _normalize(w: int, h: int, grid: tuple[int, ...]) -> tuple[BoardDims, tuple[int, ...]]:
    """Transpose a parsed W-wide, H-tall grid into canonical orientation."""
    if w <= h:
        return BoardDims(w, h), grid
    flipped = tuple(grid[c * w + r] for r in range(w) for c in range(h))
    return BoardDims(h, w), flipped


def parse_tour(text: str) -> Tour:
    """Parse the tour text format: comment lines starting '#', a `board WxH`
    header, then H lines of W integers.  Any orientation is accepted and
    normalized to width <= height."""
    if text and not text.endswith("\n"):
        raise ParseError("missing trailing newline", text.count("\n") + 1)
    content = [
        (i + 1, line)
        for i, line in enumerate(text.splitlines())
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not content:
        raise ParseError("empty input", 1)
    lineno, header = content[0]
    fields = header.split()
    if len(fields) != 2 or fields[0] != "board":
        raise ParseError("expected `board WxH` header", lineno)
    try:
        w_txt, _, h_txt = fields[1].lower().partition("x")
        w, h = int(w_txt), int(h_txt)
    except ValueError:
        raise ParseError(f"bad board spec {fields[1]!r}", lineno) from None
    if w < 1 or h < 1:
        raise ParseError(f"bad board spec {fields[1]!r}", lineno)
    grid = _parse_grid_lines(content[1:], w, h)
    dims, grid = _normalize(w, h, grid)
    return Tour(dims, grid)


def format_tour(t: Tour) -> str:
    """Emit the tour text format in canonical orientation, trailing newline
    included; parse_tour(format_tour(t)) == t."""
    w = t.dims.width
    lines = [f"board {t.dims}"]
    for row in range(t.dims.height):
        lines.append(" ".join(str(v) for v in t.grid[row * w : (row + 1) * w]))
    return "\n".join(lines) + "\n"


def render_tour(t: Tour, margins: bool = True) -> str:
    """ASCII grid with numbers aligned in columns, optionally with the
    row sums on the right and column sums underneath."""
    w, h = t.dims.width, t.dims.height
    prof = line_sums(t)
    cell_w = max(len(str(t.dims.cells)), *(len(str(s)) for s in prof.long_sums))
    out = []
    for row in range(h):
        cells = "  ".join(str(t.grid[row * w + c]).rjust(cell_w) for c in range(w))
        if margins:
            cells += f"   {prof.short_sums[row]}"
        out.append(cells)
    if margins:
        out.append("")
        out.append("  ".join(str(s).rjust(cell_w) for s in prof.long_sums))
    return "\n".join(out) + "\n"
