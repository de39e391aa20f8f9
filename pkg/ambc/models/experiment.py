from dataclasses import dataclass
from typing import Optional

from ambc.models.allocation import AllocationState, SolveStatus


@dataclass
class BenchmarkResult:
    """Equal time/power allocation with one optimized common reflection coefficient"""
    alpha_common: float
    objective: float
    status: SolveStatus
    state: Optional[AllocationState] = None
    iterations: int = 0


@dataclass
class ExperimentRecord:
    """One (sweep value, realization) pair of a Monte Carlo sweep"""
    scenario_id: str
    family: str
    sweep_var: str
    value: float
    value_index: int
    realization: int
    seed: int
    joint_q: Optional[float]
    bench_q: Optional[float]
    iterations: int
    joint_feasible: bool
    bench_feasible: bool
    termination: str = ""
