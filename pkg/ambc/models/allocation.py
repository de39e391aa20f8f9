from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional

import numpy as np


@dataclass(frozen=True)
class AllocationState:
    """Decision variables of the joint design plus the current objective"""
    tau: np.ndarray                 # backscatter time portions [M]
    alpha: np.ndarray               # power reflection coefficients [M]
    power: np.ndarray               # subcarrier powers [M x N], watts
    objective: float = 0.0          # min BD throughput Q, bps/Hz

    @property
    def num_bds(self) -> int:
        return self.tau.shape[0]

    def updated(self, **changes) -> "AllocationState":
        return replace(self, **changes)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INACCURATE = "optimal-inaccurate"     # solver gap not certified, constraints re-checked
    FALLBACK = "local-point"              # no solver result accepted, incumbent returned
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


class TerminationReason(str, Enum):
    CONVERGED = "converged"
    INFEASIBLE = "infeasible"
    ITERATION_CAP = "iteration-cap"
    MONOTONICITY_VIOLATION = "monotonicity-violation"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SubproblemResult:
    """Outcome of one block solve"""
    block: str
    status: SolveStatus
    values: Optional[np.ndarray] = None
    objective: float = 0.0
    iterations: int = 0
    max_residual: float = 0.0
    degenerate: bool = False
    duals: Optional[np.ndarray] = None
    message: str = ""
    solver: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.INACCURATE, SolveStatus.FALLBACK)


@dataclass
class IterationRecord:
    """One pass over the three blocks"""
    index: int
    objective: float
    tau: List[float]
    alpha: List[float]
    slot_power: List[float]                     # sum_k P_{m,k} per slot
    block_status: Dict[str, str]
    block_objectives: Dict[str, float]
    wall_time: float


@dataclass
class SolveTrace:
    iterations: List[IterationRecord]
    final_state: AllocationState
    converged: bool
    termination_reason: TerminationReason
    initial_objective: float = 0.0
    subproblems: List[SubproblemResult] = field(default_factory=list)

    @property
    def objectives(self) -> List[float]:
        return [record.objective for record in self.iterations]

    @property
    def num_iterations(self) -> int:
        return len(self.iterations)
