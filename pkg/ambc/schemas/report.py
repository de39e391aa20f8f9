from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from ambc.models.allocation import AllocationState, IterationRecord, SolveTrace

# Constraint families, in the order they are reported
CONSTRAINT_FAMILIES = (
    'bd_rate',          # per-BD throughput >= Q
    'lu_rate',          # LU throughput >= D
    'energy',           # harvested energy >= E_min, slack relative to E_min
    'power_budget',     # sum_m sum_k tau_m P_mk <= P_bar
    'time_budget',      # sum_m tau_m <= 1
    'power_box',        # 0 <= P_mk <= P_peak
    'time_nonneg',      # tau_m >= 0
    'reflection_box',   # 0 <= alpha_m <= 1
)


class ConstraintReport(BaseModel):
    """Metric values and signed slack of every constraint family"""
    bd_throughputs: List[float]
    lu_throughput: float
    harvested: List[float]
    power_used: float
    objective: float
    residuals: Dict[str, float]
    violated: List[str] = Field(default_factory=list)
    feasible: bool
    tolerance: float


class AllocationStateSchema(BaseModel):
    tau: List[float]
    alpha: List[float]
    power: List[List[float]]
    objective: float = 0.0
    seed: Optional[int] = None

    @classmethod
    def from_state(cls, state: AllocationState, seed: Optional[int] = None) -> 'AllocationStateSchema':
        return cls(
            tau=state.tau.tolist(),
            alpha=state.alpha.tolist(),
            power=state.power.tolist(),
            objective=float(state.objective),
            seed=seed,
        )

    def to_state(self) -> AllocationState:
        return AllocationState(
            tau=np.asarray(self.tau, dtype=float),
            alpha=np.asarray(self.alpha, dtype=float),
            power=np.asarray(self.power, dtype=float),
            objective=self.objective,
        )


class IterationSchema(BaseModel):
    index: int
    objective: float
    tau: List[float]
    alpha: List[float]
    slot_power: List[float]
    block_status: Dict[str, str]
    block_objectives: Dict[str, float]
    wall_time: float

    @classmethod
    def from_record(cls, record: IterationRecord) -> 'IterationSchema':
        return cls(**record.__dict__)


class SolveTraceSchema(BaseModel):
    converged: bool
    termination_reason: str
    num_iterations: int
    initial_objective: float
    objectives: List[float]
    iterations: List[IterationSchema]
    final_state: AllocationStateSchema
    seed: Optional[int] = None

    @classmethod
    def from_trace(cls, trace: SolveTrace, seed: Optional[int] = None) -> 'SolveTraceSchema':
        return cls(
            converged=trace.converged,
            termination_reason=trace.termination_reason.value,
            num_iterations=trace.num_iterations,
            initial_objective=trace.initial_objective,
            objectives=trace.objectives,
            iterations=[IterationSchema.from_record(record) for record in trace.iterations],
            final_state=AllocationStateSchema.from_state(trace.final_state, seed),
            seed=seed,
        )
