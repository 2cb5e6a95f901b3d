from .corrupt import (
    EditLog,
    NoEligibleEditError,
    ParamNoise,
    PermuteLoop,
    TooShortError,
    inject_errors,
    mask_for_completion,
)
from .dataset import (
    KEEP_RANGE,
    RATIO_RANGE,
    build_code_records,
    build_qa_records,
    load_program_dir,
)
from .records import (
    TASKS,
    TemplateMismatchError,
    build_record,
    load_records,
    prompt_templates,
    record_seed,
    write_records,
)
from .split import EmptyDatasetError, split_dataset

__all__ = [
    "EditLog",
    "NoEligibleEditError",
    "ParamNoise",
    "PermuteLoop",
    "TooShortError",
    "inject_errors",
    "mask_for_completion",
    "KEEP_RANGE",
    "RATIO_RANGE",
    "build_code_records",
    "build_qa_records",
    "load_program_dir",
    "TASKS",
    "TemplateMismatchError",
    "build_record",
    "load_records",
    "prompt_templates",
    "record_seed",
    "write_records",
    "EmptyDatasetError",
    "split_dataset",
]
