"""Defect of Artin-Schreier extensions through exponent bookkeeping on map germs."""

from .engine import (
    ExtensionState,
    GermType,
    Schedule,
    Trace,
    TransformStep,
    advance,
    analyze_tail,
    defect_verdict,
    distance_from_trace,
    run_schedule,
    switching_certificate,
    value_group_index,
)
from .synth import SwitchPlan, SynthParams, choose_step, synthesize
from .tower import build_independent_tower, stable_form_audit, worked_example
from .values import DistanceBound, Rat, fmt_rat, limit_of_decrement_series, rat

__version__ = "0.1.0"

__all__ = [
    "DistanceBound", "ExtensionState", "GermType", "Rat", "Schedule", "SwitchPlan",
    "SynthParams", "Trace", "TransformStep", "advance", "analyze_tail",
    "build_independent_tower", "choose_step", "defect_verdict", "distance_from_trace",
    "fmt_rat", "limit_of_decrement_series", "rat", "run_schedule", "stable_form_audit",
    "switching_certificate", "synthesize", "value_group_index", "worked_example",
]
