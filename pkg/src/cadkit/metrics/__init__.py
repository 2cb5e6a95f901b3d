from .chamfer import EmptyCloudError, chamfer, chamfer_bruteforce
from .compare import Tolerance, acc_cmd, acc_param, param_slot_count
from .report import (
    MetricReport,
    ambiguity_stats,
    evaluate_pair,
    evaluate_sets,
    invalid_ratio,
    program_is_valid,
)

__all__ = [
    "EmptyCloudError",
    "chamfer",
    "chamfer_bruteforce",
    "Tolerance",
    "acc_cmd",
    "acc_param",
    "param_slot_count",
    "MetricReport",
    "ambiguity_stats",
    "evaluate_pair",
    "evaluate_sets",
    "invalid_ratio",
    "program_is_valid",
]
