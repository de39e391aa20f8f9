import math
from itertools import cycle, islice
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Defaults of per-BD vectors when a file does not list them
PER_BD_DEFAULTS = {
    'd_fap_bd': [2.5, 4.0],
    'd_bd_lu': [15.0],
    'e_min': [1e-5],
}


def _parse_vector(value: Any) -> Any:
    if isinstance(value, str):
        return [float(item) for item in value.split(',') if item.strip()]
    if isinstance(value, (int, float)):
        return [float(value)]
    return value


class ScenarioConfig(BaseModel):
    """All scalar parameters of one network scenario

    Field aliases are the names used in scenario files (M, N, P_bar, ...).
    Defaults reproduce the two-BD reference geometry at 20 dB.
    """
    model_config = ConfigDict(populate_by_name=True, frozen=True, extra='forbid')

    num_bds: int = Field(2, alias='M', ge=1, description="Number of BDs")
    num_subcarriers: int = Field(64, alias='N', ge=1, description="OFDM subcarriers")
    cp_length: int = Field(16, alias='N_cp', ge=0, description="Cyclic prefix length, not used in computations")
    paths_forward: int = Field(4, alias='L_f', ge=1)
    paths_backward: int = Field(4, alias='L_g', ge=1)
    paths_direct: int = Field(8, alias='L_h', ge=1)
    paths_interference: int = Field(6, alias='L_v', ge=1)
    d_fap_bd: List[float] = Field(alias='d_fap_bd', description="FAP-to-BD distances, m")
    d_fap_lu: float = Field(15.0, alias='d_fap_lu', gt=0, description="FAP-to-LU distance, m")
    d_bd_lu: List[float] = Field(alias='d_bd_lu', description="BD-to-LU distances, m")
    eta: float = Field(0.5, alias='eta', ge=0, le=1, description="Energy-harvesting efficiency")
    p_bar: float = Field(1.0, alias='P_bar', gt=0, description="Total power budget, W")
    p_peak: float = Field(20 / 128, alias='P_peak', gt=0, description="Per-subcarrier peak power, W")
    e_min: List[float] = Field(alias='E_min', description="Minimum harvested energy per BD, J per unit frame")
    d_req: float = Field(1.0, alias='D', ge=0, description="LU throughput requirement, bps/Hz")
    snr_bar_db: float = Field(20.0, alias='snr_bar_db', description="Average receive SNR at the FAP, dB")
    epsilon: float = Field(1e-4, alias='epsilon', gt=0, description="BCD convergence threshold")
    log_base: float = Field(2.0, alias='log_base', gt=1)
    rho: float = Field(math.exp(-1), alias='rho', gt=0, le=1, description="Power-delay profile decay factor")
    noise_power: Optional[float] = Field(None, alias='sigma2', gt=0, description="Noise variance override")

    @model_validator(mode='before')
    @classmethod
    def broadcast_per_bd(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        count = int(data.get('M', data.get('num_bds', 2)))
        for name, alias in (('d_fap_bd', 'd_fap_bd'), ('d_bd_lu', 'd_bd_lu'), ('e_min', 'E_min')):
            key = alias if alias in data else name if name in data else None
            if key is None:
                data[alias] = list(islice(cycle(PER_BD_DEFAULTS[name]), count))
                continue
            value = _parse_vector(data[key])
            if isinstance(value, list) and len(value) == 1 and count > 1:
                value = value * count
            data[key] = value
        return data

    @field_validator('log_base', mode='before')
    @classmethod
    def parse_log_base(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() == 'e':
            return math.e
        return value

    @model_validator(mode='after')
    def check_vectors(self) -> 'ScenarioConfig':
        for name in ('d_fap_bd', 'd_bd_lu', 'e_min'):
            values = getattr(self, name)
            if len(values) != self.num_bds:
                raise ValueError(f"{name} has {len(values)} entries, expected M={self.num_bds}")
        if min(self.d_fap_bd) <= 0 or min(self.d_bd_lu) <= 0:
            raise ValueError("distances must be strictly positive")
        if min(self.e_min) < 0:
            raise ValueError("E_min must be non-negative")
        if not math.isfinite(self.snr_bar_db):
            raise ValueError("snr_bar_db must be finite")
        return self

    @property
    def p_ave(self) -> float:
        """Equal per-subcarrier power of the benchmark scheme, P_bar / (M N)"""
        return self.p_bar / (self.num_bds * self.num_subcarriers)

    @property
    def e_min_array(self) -> np.ndarray:
        return np.asarray(self.e_min, dtype=float)

    @property
    def log_scale(self) -> float:
        """ln(base); divide natural logs by this to get the configured unit"""
        return math.log(self.log_base)

    def updated(self, **changes) -> 'ScenarioConfig':
        """Copy with changes applied by field name, re-validated"""
        data = self.model_dump()
        data.update(changes)
        return ScenarioConfig.model_validate(data)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)

    @classmethod
    def key_map(cls) -> Dict[str, str]:
        """Lower-cased file keys (aliases and field names) to field names"""
        keys = {}
        for name, info in cls.model_fields.items():
            keys[name.lower()] = name
            if info.alias:
                keys[info.alias.lower()] = name
        return keys
