"""Explicit saturated and irregular points on nested subshifts of finite type."""

from .shift import (ShiftSystem, SymbolStream, SystemError_, connector, glue_segments, is_mixing,
                    periodic_decomposition, primitivity_index, shadow_pseudo_orbit)
from .measures import (ConvexCombination, EmpiricalMeasure, MarkovMeasure, MeasureError, mix,
                       wstar_distance)
from .separation import (TypicalWordSet, certify_uniform_separation, count_words,
                         estimate_entropy_word_count, typical_words)
from .construct import (MeasureChain, NestedFamily, Schedule, ScheduleError, TargetPath, build_chain,
                        generate_point, mixing_route, separated_family_certificate, solve_schedule,
                        verify_tracking, verify_transitivity)
from .irregular import Observable, birkhoff_trace, classify_limit_set, irregular_target, spread

__version__ = "0.1.0"

__all__ = [
    "ShiftSystem", "SymbolStream", "SystemError_", "connector", "glue_segments", "is_mixing",
    "periodic_decomposition", "primitivity_index", "shadow_pseudo_orbit",
    "ConvexCombination", "EmpiricalMeasure", "MarkovMeasure", "MeasureError", "mix", "wstar_distance",
    "TypicalWordSet", "certify_uniform_separation", "count_words", "estimate_entropy_word_count",
    "typical_words",
    "MeasureChain", "NestedFamily", "Schedule", "ScheduleError", "TargetPath", "build_chain",
    "generate_point", "mixing_route", "separated_family_certificate", "solve_schedule",
    "verify_tracking", "verify_transitivity",
    "Observable", "birkhoff_trace", "classify_limit_set", "irregular_target", "spread",
]
