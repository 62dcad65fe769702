"""Exhaustive search, classification and verification of knight's tours
(and two-knight emperor tours) with magic line-sum properties on
rectangular boards."""

from .board import (
    BoardDims,
    Cell,
    Feasibility,
    FeasibilityVerdict,
    MagicConstants,
    SymmetryOp,
    apply_symmetry,
    knight_neighbors,
    magic_constants,
    magic_feasibility,
    parse_board,
    symmetry_group,
    wazir_neighbors,
)
from .classify import (
    ClassificationReport,
    Direction,
    MagicClass,
    classify,
    distinct_value_count,
    sums_are_consecutive,
)
from .filters import Filter, class_filter, compile_filter
from .kernels import KERNEL_NAME
from .search import (
    Closure,
    Mode,
    SearchAborted,
    SearchResult,
    SearchSpec,
    WorkUnit,
    burnside_check,
    count_tours,
    count_with_filter,
    enumerate_tours,
    split_frontier,
    warnsdorf_construct,
)
from .tour import (
    LineSumProfile,
    ParseError,
    Tour,
    format_tour,
    frenicle_canonical,
    geometric_class,
    is_closed,
    line_sums,
    parse_tour,
    render_tour,
    reverse_tour,
    tour_from_path,
    transform_tour,
    validate_tour,
)

__version__ = "1.0.0"
