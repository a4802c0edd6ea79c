"""Two-region cycle simulator with 0/1/X values."""

from .compiler import CombLoopDetected, CompiledModel, Layout, LoopLimit, SimCompileError, compile_design, compile_expr
from .simulator import Cycle, Simulator, get_model, simulate
from .trace import TimeBeyondHorizon, Trace, UnknownSignal, export_vcd, vcd_text
from .values import Value, matches

__all__ = [
    "CombLoopDetected",
    "CompiledModel",
    "Cycle",
    "Layout",
    "LoopLimit",
    "SimCompileError",
    "Simulator",
    "TimeBeyondHorizon",
    "Trace",
    "UnknownSignal",
    "Value",
    "compile_design",
    "compile_expr",
    "export_vcd",
    "get_model",
    "matches",
    "query",
    "simulate",
    "vcd_text",
]


def query(trace: Trace, signal: str, time: int) -> Value:
    return trace.query(signal, time)
