"""Exact Triangle: potential-adjusting reductions and solvers."""
from .adjust import (
    Orientation,
    PotentialAdjustment,
    ReductionOutput,
    check_tags,
    coverage,
    verify_potential_adjustment,
    verify_reduction_output,
)
from .lowdoubling import min_plus_low_doubling, solve_uniform_low_doubling
from .steps import (
    Knobs,
    flags_from_output,
    reduce_low_rank_to_low_doubling,
    reduce_low_rank_to_slice_uniform,
    reduce_low_rank_to_uniform_regular,
    reduce_slice_uniform_to_uniform,
    reduce_uniform_regular_to_low_doubling,
    solve_low_rank,
    split_uniform,
)
from .witnesses import list_witnesses_exact_triangle, list_witnesses_min_plus, repetitions

__all__ = [
    "Knobs",
    "Orientation",
    "PotentialAdjustment",
    "ReductionOutput",
    "check_tags",
    "coverage",
    "flags_from_output",
    "list_witnesses_exact_triangle",
    "list_witnesses_min_plus",
    "min_plus_low_doubling",
    "reduce_low_rank_to_low_doubling",
    "reduce_low_rank_to_slice_uniform",
    "reduce_low_rank_to_uniform_regular",
    "reduce_slice_uniform_to_uniform",
    "reduce_uniform_regular_to_low_doubling",
    "repetitions",
    "solve_low_rank",
    "solve_uniform_low_doubling",
    "split_uniform",
    "verify_potential_adjustment",
    "verify_reduction_output",
]
