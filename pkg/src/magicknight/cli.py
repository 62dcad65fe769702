"""Command-line front end.

Machine output is JSON on stdout (one object, or a JSON-lines stream);
human diagnostics go to stderr.  Exit codes: 0 success, 1 verification or
classification mismatch, 2 usage error, 3 resource-limit abort.  The one
exception to JSON output is `render`, which prints an ASCII grid.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .board import magic_feasibility, parse_board
from .classify import classify
from .emperor import CONVENTIONS, count_emperor, enumerate_emperor
from .filters import Filter, compile_filter
from .fixtures import bundled_corpus_dir, format_fixture, parse_fixture, verify_corpus
from .search import (
    Closure,
    Mode,
    SearchAborted,
    SearchSpec,
    count_tours,
    default_threads,
    enumerate_tours,
)
from .tour import ParseError, Tour, format_tour, line_sums, parse_tour, render_tour

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_ABORT = 3


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _say(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def _filter_from_args(args, dims) -> tuple[Filter | None, str | None]:
    parts = []
    if getattr(args, "klass", None):
        parts.append(f"class={args.klass}")
    if getattr(args, "filter", None):
        parts.append(args.filter)
    if not parts:
        return None, None
    text = " & ".join(parts)
    return compile_filter(text, dims), text


def _stats_obj(args, dims, filt_text, mode, count, stats) -> dict:
    return {
        "board": str(dims),
        "closure": args.closure,
        "filter": filt_text,
        "mode": mode,
        "count": count,
        "nodes": stats.nodes,
        "pruned": stats.pruned,
        "elapsed_ms": round(stats.elapsed_ms, 3),
        "workers": stats.workers,
    }


def _tour_record(t: Tour, kind: str = "knight", junction: int | None = None) -> dict:
    prof = line_sums(t)
    rec = {
        "board": str(t.dims),
        "kind": kind,
        "class": classify(t).magic_class.token,
        "grid": [
            list(t.grid[r * t.dims.width : (r + 1) * t.dims.width])
            for r in range(t.dims.height)
        ],
        "short_sums": list(prof.short_sums),
        "long_sums": list(prof.long_sums),
    }
    if junction is not None:
        rec["junction"] = junction
    return rec


def _write_tour_file(out_dir: Path, index: int, t: Tour, kind: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    from .fixtures import Fixture

    fx = Fixture(
        id=f"found-{index:04d}",
        source="search output",
        kind=kind,
        tour=t,
        expected_class=classify(t).magic_class,
        expected_short_sums=None,
        expected_long_sums=None,
    )
    (out_dir / f"{fx.id}.tour").write_text(format_fixture(fx))


def cmd_count(args) -> int:
    dims = parse_board(args.board)
    filt, filt_text = _filter_from_args(args, dims)
    spec = SearchSpec(dims, Closure(args.closure), filt, Mode(args.mode))
    try:
        res = count_tours(spec, threads=args.threads, node_budget=args.max_nodes,
                          seed_depth=args.seed_depth)
    except SearchAborted as exc:
        obj = _stats_obj(args, dims, filt_text, args.mode, None, exc.stats)
        obj["aborted"] = True
        _emit(obj)
        _say(f"aborted: {exc}")
        return EXIT_ABORT
    _emit(_stats_obj(args, dims, filt_text, args.mode, res.count, res.stats))
    return EXIT_OK


def cmd_search(args) -> int:
    dims = parse_board(args.board)
    filt, filt_text = _filter_from_args(args, dims)
    spec = SearchSpec(dims, Closure(args.closure), filt, Mode(args.mode),
                      limit=args.limit)
    out_dir = Path(args.out) if args.out else None
    found = 0

    def sink(t: Tour) -> None:
        nonlocal found
        found += 1
        _emit(_tour_record(t))
        if out_dir is not None:
            _write_tour_file(out_dir, found, t, "knight")

    try:
        res = enumerate_tours(spec, sink, threads=args.threads,
                              node_budget=args.max_nodes, seed_depth=args.seed_depth)
    except SearchAborted as exc:
        obj = _stats_obj(args, dims, filt_text, args.mode, None, exc.stats)
        obj["aborted"] = True
        _emit(obj)
        _say(f"aborted: {exc}")
        return EXIT_ABORT
    _emit(_stats_obj(args, dims, filt_text, args.mode, res.count, res.stats))
    return EXIT_OK


def cmd_classify(args) -> int:
    text = Path(args.infile).read_text()
    kind = "knight"
    if any(line.strip().startswith("kind") for line in text.splitlines()):
        fx = parse_fixture(text, fixture_id=Path(args.infile).stem)
        tour, kind = fx.tour, fx.kind
    else:
        tour = parse_tour(text)
    report = classify(tour)
    prof = report.profile
    _emit(
        {
            "board": str(tour.dims),
            "kind": kind,
            "class": report.magic_class.token,
            "short_sums": list(prof.short_sums),
            "long_sums": list(prof.long_sums),
            "off_direction_distinct_values": list(report.off_direction_distinct_values),
            "contains_mc": report.contains_mc,
        }
    )
    return EXIT_OK


def cmd_feasible(args) -> int:
    dims = parse_board(args.board)
    verdict = magic_feasibility(dims)
    _emit({"board": str(dims), "status": verdict.status.value, "reason": verdict.reason})
    return EXIT_OK


def cmd_emperor(args) -> int:
    dims = parse_board(args.board)
    filt, filt_text = _filter_from_args(args, dims)
    out_dir = Path(args.out) if args.out else None
    written = 0

    def sink(emp) -> None:
        nonlocal written
        written += 1
        if args.list or out_dir is not None:
            rec = _tour_record(emp.as_tour(), "emperor", emp.junction)
            if args.list:
                _emit(rec)
            if out_dir is not None:
                _write_tour_file(out_dir, written, emp.as_tour(), "emperor")

    try:
        res, tours = enumerate_emperor(
            dims, filt, Closure(args.closure), convention=args.convention,
            limit=args.limit, threads=args.threads, sink=sink,
        )
    except SearchAborted as exc:
        obj = _stats_obj(args, dims, filt_text, "arithmetic", None, exc.stats)
        obj["aborted"] = True
        _emit(obj)
        _say(f"aborted: {exc}")
        return EXIT_ABORT
    obj = _stats_obj(args, dims, filt_text, "arithmetic", res.count, res.stats)
    obj["convention"] = args.convention
    _emit(obj)
    return EXIT_OK


def cmd_verify(args) -> int:
    directory = args.fixtures or bundled_corpus_dir()
    report = verify_corpus(directory)
    for r in report.results:
        _emit({"id": r.fixture_id, "ok": r.passed, "reasons": list(r.reasons)})
    _emit(
        {
            "fixtures": report.total,
            "passed": report.total - len(report.failed),
            "failed": len(report.failed),
            "status": report.status,
        }
    )
    return EXIT_MISMATCH if report.status == "fail" else EXIT_OK


def cmd_render(args) -> int:
    text = Path(args.infile).read_text()
    if any(line.strip().startswith("kind") for line in text.splitlines()):
        tour = parse_fixture(text, fixture_id=Path(args.infile).stem).tour
    else:
        tour = parse_tour(text)
    sys.stdout.write(render_tour(tour, margins=not args.bare))
    return EXIT_OK


def _add_board(p) -> None:
    p.add_argument("--board", required=True, help="board size WxH, e.g. 4x18")


def _add_search_opts(p, mode: bool = True) -> None:
    p.add_argument("--closure", choices=["open", "closed", "any"], default="any")
    if mode:
        p.add_argument("--mode", choices=["raw", "arithmetic", "geometric"],
                       default="arithmetic")
    p.add_argument("--class", dest="klass", default=None,
                   help="class filter token (magic, semi_short, quasi_long, ...)")
    p.add_argument("--filter", default=None,
                   help="filter expression, e.g. 'distinct(long)=2 & mc_lines(short)>=13'")
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--seed-depth", type=int, default=None,
                   help="split the frontier at this prefix depth (default: by unit count)")
    p.add_argument("--max-nodes", type=int, default=0,
                   help="abort after this many search nodes (0 = unlimited)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="magicknight",
        description="Enumerate, classify and verify (magic) knight's tours"
        " on rectangular boards.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count tours exactly")
    _add_board(p)
    _add_search_opts(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("search", help="enumerate tours as JSON lines")
    _add_board(p)
    _add_search_opts(p)
    p.add_argument("--limit", type=int, default=None, help="stop after N tours")
    p.add_argument("--out", default=None, help="also write fixture files to this directory")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("classify", help="classify a tour file")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("feasible", help="magic-tour feasibility verdict for a board")
    _add_board(p)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("emperor", help="two-knight emperor tour search")
    _add_board(p)
    _add_search_opts(p, mode=False)
    p.add_argument("--convention", choices=list(CONVENTIONS), default="two_knight")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--list", action="store_true", help="emit each tour as a JSON line")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_emperor)

    p = sub.add_parser("verify", help="verify a fixture corpus")
    p.add_argument("--fixtures", default=None,
                   help="fixture directory (default: bundled corpus)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="print a tour as an ASCII grid")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--bare", action="store_true", help="omit the line-sum margins")
    p.set_defaults(func=cmd_render)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ParseError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
