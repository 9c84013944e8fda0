"""leakward: resource-leak detection, specification inference, and automated
repair for the MiniJ language, validated by a tree-walking interpreter."""

from .checker import (
    CompileError,
    Warning,
    check_method,
    check_program,
    filter_constructor_first_writes,
    reject_final_writes,
)
from .cfg import AliasSets, Cfg, lower, must_alias
from .escape import EscapeResult, WrapperClassification, classify_wrapper, escapes, field_containment
from .inference import infer_specs, write_specs
from .interp import RuntimeReport, ValidationVerdict, run, validate_patch
from .libspec import LibrarySpec, load_library_spec
from .parser import parse
from .pipeline import (
    MetricsReport,
    PipelineConfig,
    PipelineReport,
    ShiftMap,
    WarningSetPair,
    build_shift_map,
    compute_metrics,
    run_pipeline,
)
from .printer import pretty_print
from .repair import Patch, RepairPlan, Unfixable, materialize, plan_fix, pre_close_eligible
from .specs import MustCallSet, SpecSet, must_call_of
from .transforms import EditLog, field_to_local, finalize_fields, inject_finalizers

__all__ = [
    "AliasSets",
    "Cfg",
    "CompileError",
    "EditLog",
    "EscapeResult",
    "LibrarySpec",
    "MetricsReport",
    "MustCallSet",
    "Patch",
    "PipelineConfig",
    "PipelineReport",
    "RepairPlan",
    "RuntimeReport",
    "ShiftMap",
    "SpecSet",
    "Unfixable",
    "ValidationVerdict",
    "Warning",
    "WarningSetPair",
    "WrapperClassification",
    "build_shift_map",
    "check_method",
    "check_program",
    "classify_wrapper",
    "compute_metrics",
    "escapes",
    "field_containment",
    "field_to_local",
    "filter_constructor_first_writes",
    "finalize_fields",
    "infer_specs",
    "inject_finalizers",
    "load_library_spec",
    "lower",
    "materialize",
    "must_alias",
    "must_call_of",
    "parse",
    "plan_fix",
    "pre_close_eligible",
    "pretty_print",
    "reject_final_writes",
    "run",
    "run_pipeline",
    "validate_patch",
    "write_specs",
]
