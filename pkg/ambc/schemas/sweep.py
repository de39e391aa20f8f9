from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ambc.schemas.scenario import ScenarioConfig

# Swept parameter name -> ScenarioConfig field
SWEEP_VARIABLES = {
    'D': 'd_req',
    'snr_db': 'snr_bar_db',
    'E_min': 'e_min',
    'P_peak': 'p_peak',
}

_SWEEP_ALIASES = {
    'd': 'D', 'd_req': 'D',
    'snr_db': 'snr_db', 'snr_bar_db': 'snr_db', 'snr': 'snr_db',
    'e_min': 'E_min',
    'p_peak': 'P_peak',
}


class SweepFamily(BaseModel):
    """One curve of a figure: a label plus field overrides on the base scenario"""
    label: str
    overrides: Dict[str, Any] = Field(default_factory=dict)


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario_id: str = 'custom'
    base: ScenarioConfig
    sweep_var: str
    values: List[float] = Field(..., min_length=1)
    realizations: int = Field(100, ge=1)
    base_seed: int = 0
    paired_seeds: bool = False
    bench_full_budget: bool = False
    families: List[SweepFamily] = Field(default_factory=list)

    @field_validator('sweep_var', mode='before')
    @classmethod
    def canonical_sweep_var(cls, value: Any) -> str:
        name = _SWEEP_ALIASES.get(str(value).strip().lower())
        if name is None:
            raise ValueError(f"sweep variable must be one of {sorted(SWEEP_VARIABLES)}, got {value!r}")
        return name

    @property
    def sweep_field(self) -> str:
        return SWEEP_VARIABLES[self.sweep_var]

    def family_configs(self) -> List[Tuple[str, ScenarioConfig]]:
        if not self.families:
            return [('', self.base)]
        return [(family.label, self.base.updated(**family.overrides)) for family in self.families]

    def config_for(self, config: ScenarioConfig, value: float) -> ScenarioConfig:
        return config.updated(**{self.sweep_field: value})
