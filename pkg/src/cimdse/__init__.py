"""Timed simulation and design-space exploration for SRAM compute-in-memory
macro arrays running GEMM workloads."""

__version__ = "0.1.0"

from .array_scheduler import GemmSpec, SimResult, Tiling, simulate, tile, trace
from .cost_model import Calibration, PpaEstimate, default_calibration, estimate, frequency, load_calibration, peak_throughput
from .design_space import ArrayConfig, Dataflow, DesignPoint, Interconnect, MacroConfig, SpaceSpec, enumerate_space, sample_space, validate
from .dse import CompareResult, EvaluatedPoint, ExploreResult, ParetoFront, compare_dataflows, dominates, explore, pareto_filter
from .macro_model import MacroTiming, block_cycles, compute_cycles, macro_timing, overlap_gain, weight_row_cycles
from .workload import GemmWorkload, ModelDesc, partition_cores, qkv_workload, simulate_workload

__all__ = [
    "ArrayConfig", "Calibration", "CompareResult", "Dataflow", "DesignPoint",
    "EvaluatedPoint", "ExploreResult", "GemmSpec", "GemmWorkload",
    "Interconnect", "MacroConfig", "MacroTiming", "ModelDesc", "ParetoFront",
    "PpaEstimate", "SimResult", "SpaceSpec", "Tiling",
    "block_cycles", "compare_dataflows", "compute_cycles",
    "default_calibration", "dominates", "enumerate_space", "estimate",
    "explore", "frequency", "load_calibration", "macro_timing",
    "overlap_gain", "pareto_filter", "partition_cores", "peak_throughput",
    "qkv_workload", "sample_space", "simulate", "simulate_workload", "tile",
    "trace", "validate", "weight_row_cycles",
]
