"""Fixture corpus: parse transcribed tour files and verify each against its
expected classification and printed line sums."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .classify import MagicClass, classify
from .emperor import EmperorTour, emperor_from_grid, validate_emperor
from .tour import ParseError, Tour, _normalize, _parse_grid_lines, line_sums, validate_tour

_HEADER_KEYS = ("board", "kind", "class", "short_sums", "long_sums", "source")


@dataclass(frozen=True)
class Fixture:
    """A transcribed tour plus the claims made about it at the source.

    expected_short_sums / expected_long_sums are in canonical orientation
    (short = the width-cell rows of the normalized board, top to bottom)."""

    id: str
    source: str
    kind: str  # "knight" | "emperor"
    tour: Tour
    expected_class: MagicClass
    expected_short_sums: tuple[int, ...] | None
    expected_long_sums: tuple[int, ...] | None

    @property
    def emperor(self) -> EmperorTour | None:
        if self.kind != "emperor":
            return None
        return emperor_from_grid(self.tour.dims, self.tour.grid)


@dataclass(frozen=True)
class FixtureResult:
    fixture_id: str
    passed: bool
    reasons: tuple[str, ...]


@dataclass(frozen=True)
class CorpusReport:
    results: tuple[FixtureResult, ...]
    status: str  # "pass" | "fail" | "nothing_verified"

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def failed(self) -> tuple[FixtureResult, ...]:
        return tuple(r for r in self.results if not r.passed)


def parse_fixture(text: str, fixture_id: str = "") -> Fixture:
    """Parse the fixture file format: the tour text format plus header lines
    `kind`, `class`, optional `short_sums`/`long_sums`, and `source`."""
    if text and not text.endswith("\n"):
        raise ParseError("missing trailing newline", text.count("\n") + 1)
    content = [
        (i + 1, line.strip())
        for i, line in enumerate(text.splitlines())
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not content:
        raise ParseError("empty input", 1)

    headers: dict[str, tuple[int, str]] = {}
    grid_lines: list[tuple[int, str]] = []
    for lineno, line in content:
        word = line.split(None, 1)[0]
        if not grid_lines and word in _HEADER_KEYS:
            if word in headers:
                raise ParseError(f"duplicate header {word!r}", lineno)
            headers[word] = (lineno, line[len(word):].strip())
            continue
        if line[0].isdigit() or line[0] == "-":
            grid_lines.append((lineno, line))
            continue
        raise ParseError(f"unknown header {word!r}", lineno)

    if "board" not in headers:
        raise ParseError("missing `board WxH` header", content[0][0])
    lineno, board_txt = headers["board"]
    try:
        w_txt, _, h_txt = board_txt.lower().partition("x")
        w, h = int(w_txt), int(h_txt)
    except ValueError:
        raise ParseError(f"bad board spec {board_txt!r}", lineno) from None

    kind = headers.get("kind", (0, "knight"))[1] or "knight"
    if kind not in ("knight", "emperor"):
        raise ParseError(f"unknown kind {kind!r}", headers["kind"][0])

    if "class" not in headers:
        raise ParseError("missing `class` header", content[0][0])
    lineno, token = headers["class"]
    try:
        expected = MagicClass.from_token(token)
    except ValueError:
        raise ParseError(f"unknown class {token!r}", lineno) from None

    def sums(key: str, expected_len: int) -> tuple[int, ...] | None:
        if key not in headers:
            return None
        lineno, txt = headers[key]
        try:
            values = tuple(int(v) for v in txt.split())
        except ValueError:
            raise ParseError(f"bad integer in {key}", lineno) from None
        if len(values) != expected_len:
            raise ParseError(
                f"{key} needs {expected_len} values, got {len(values)}", lineno
            )
        return values

    grid = _parse_grid_lines(grid_lines, w, h)
    dims, grid = _normalize(w, h, grid)
    tour = Tour(dims, grid)
    return Fixture(
        id=fixture_id,
        source=headers.get("source", (0, ""))[1],
        kind=kind,
        tour=tour,
        expected_class=expected,
        expected_short_sums=sums("short_sums", dims.height),
        expected_long_sums=sums("long_sums", dims.width),
    )


def format_fixture(f: Fixture) -> str:
    """Emit the fixture file format (canonical orientation)."""
    lines = [f"board {f.tour.dims}", f"kind {f.kind}", f"class {f.expected_class.token}"]
    if f.expected_short_sums is not None:
        lines.append("short_sums " + " ".join(map(str, f.expected_short_sums)))
    if f.expected_long_sums is not None:
        lines.append("long_sums " + " ".join(map(str, f.expected_long_sums)))
    if f.source:
        lines.append(f"source {f.source}")
    w = f.tour.dims.width
    for row in range(f.tour.dims.height):
        lines.append(" ".join(str(v) for v in f.tour.grid[row * w : (row + 1) * w]))
    return "\n".join(lines) + "\n"


def verify_fixture(f: Fixture) -> FixtureResult:
    """Check the tour validates (by kind), classifies as expected, and that
    recomputed line sums equal the transcribed ones where present."""
    reasons: list[str] = []
    if f.kind == "emperor":
        try:
            emp = emperor_from_grid(f.tour.dims, f.tour.grid)
            problem = validate_emperor(emp)
        except ValueError as exc:
            problem = str(exc)
    else:
        problem = validate_tour(f.tour)
    if problem is not None:
        reasons.append(f"invalid tour: {problem}")
    else:
        got = classify(f.tour).magic_class
        if got != f.expected_class:
            reasons.append(
                f"class mismatch: classified {got.token}, expected {f.expected_class.token}"
            )
        prof = line_sums(f.tour)
        if f.expected_short_sums is not None and prof.short_sums != f.expected_short_sums:
            reasons.append(
                f"short sums mismatch: computed {prof.short_sums},"
                f" transcribed {f.expected_short_sums}"
            )
        if f.expected_long_sums is not None and prof.long_sums != f.expected_long_sums:
            reasons.append(
                f"long sums mismatch: computed {prof.long_sums},"
                f" transcribed {f.expected_long_sums}"
            )
    return FixtureResult(f.id, not reasons, tuple(reasons))


def bundled_corpus_dir() -> Path:
    """Directory of the fixture corpus shipped with the package."""
    return Path(__file__).parent / "data" / "fixtures"


def load_corpus(directory: str | os.PathLike) -> list[Fixture]:
    path = Path(directory)
    if not path.is_dir():
        raise OSError(f"not a directory: {path}")
    fixtures = []
    for entry in sorted(path.iterdir()):
        if entry.suffix == ".tour" and entry.is_file():
            fixtures.append(parse_fixture(entry.read_text(), fixture_id=entry.stem))
    return fixtures


def verify_corpus(directory: str | os.PathLike) -> CorpusReport:
    """Verify every *.tour fixture in a directory (order-independent)."""
    fixtures = load_corpus(directory)
    results = tuple(verify_fixture(f) for f in fixtures)
    if not results:
        status = "nothing_verified"
    elif all(r.passed for r in results):
        status = "pass"
    else:
        status = "fail"
    return CorpusReport(results, status)
