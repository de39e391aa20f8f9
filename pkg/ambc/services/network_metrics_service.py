import logging
from typing import Optional

import numpy as np

from ambc.config import Config
from ambc.models.allocation import AllocationState
from ambc.models.channel import FrequencyGrid
from ambc.schemas.report import CONSTRAINT_FAMILIES, ConstraintReport
from ambc.schemas.scenario import ScenarioConfig
from ambc.services.channel_model_service import ChannelModelService
from ambc.utils.validators import Validators

logger = logging.getLogger(__name__)


class NetworkMetricsService:
    """Closed-form throughput, SNR and energy expressions of the network

    The per-slot helpers (bd_slot_rates, lu_slot_rates, energy_coefficients)
    hold alpha and P fixed and return the coefficients that multiply tau; every
    metric is assembled from them so the solvers and the checker agree exactly.
    """

    def __init__(self,
                 channel_service: Optional[ChannelModelService] = None,
                 tolerance: float = Config.FEASIBILITY_TOL):
        """Dependency Injection"""
        self.channel_service = channel_service or ChannelModelService()
        self.tolerance = tolerance

    def noise_power(self, config: ScenarioConfig) -> float:
        return self.channel_service.noise_power(config)

    # Coefficients with (alpha, P) frozen

    def bd_unit_snrs(self, alpha: np.ndarray, power: np.ndarray,
                     grid: FrequencyGrid, config: ScenarioConfig) -> np.ndarray:
        """gamma_m = alpha_m / sigma^2 * sum_k |F G|^2 P_mk"""
        noise = self.noise_power(config)
        return alpha * np.sum(grid.cascaded_gain * power, axis=1) / noise

    def bd_slot_rates(self, alpha: np.ndarray, power: np.ndarray,
                      grid: FrequencyGrid, config: ScenarioConfig) -> np.ndarray:
        """c_m such that R_m = tau_m c_m"""
        snr = self.bd_unit_snrs(alpha, power, grid, config)
        return np.log1p(snr) / config.log_scale / grid.num_subcarriers

    def lu_slot_rates(self, alpha: np.ndarray, power: np.ndarray,
                      grid: FrequencyGrid, config: ScenarioConfig) -> np.ndarray:
        """d_m such that the LU throughput is sum_m tau_m d_m"""
        noise = self.noise_power(config)
        interference = alpha[:, None] * grid.interference_gain * power + noise
        sinr = grid.direct_gain[None, :] * power / interference
        return np.sum(np.log1p(sinr), axis=1) / config.log_scale / grid.num_subcarriers

    def energy_coefficients(self, alpha: np.ndarray, power: np.ndarray,
                            grid: FrequencyGrid, config: ScenarioConfig) -> np.ndarray:
        """e[m, r] such that E_m = sum_r e[m, r] tau_r

        BD m absorbs the fraction 1 - alpha_m of its own slot and all of the others.
        """
        received = grid.forward_gain @ power.T            # [m, r] = sum_k |F_mk|^2 P_rk
        absorbed = np.ones_like(received)
        np.fill_diagonal(absorbed, 1.0 - alpha)
        return config.eta * received * absorbed

    # Metrics of a full state

    def harvested_energies(self, state: AllocationState, grid: FrequencyGrid,
                           config: ScenarioConfig) -> np.ndarray:
        return self.energy_coefficients(state.alpha, state.power, grid, config) @ state.tau

    def harvested_energy(self, state: AllocationState, grid: FrequencyGrid,
                         config: ScenarioConfig, m: int) -> float:
        Validators.require_index(m, state.num_bds)
        return float(self.harvested_energies(state, grid, config)[m])

    def bd_snrs(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig) -> np.ndarray:
        return self.bd_unit_snrs(state.alpha, state.power, grid, config)

    def bd_snr(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig, m: int) -> float:
        Validators.require_index(m, state.num_bds)
        return float(self.bd_snrs(state, grid, config)[m])

    def bd_throughputs(self, state: AllocationState, grid: FrequencyGrid,
                       config: ScenarioConfig) -> np.ndarray:
        return state.tau * self.bd_slot_rates(state.alpha, state.power, grid, config)

    def bd_throughput(self, state: AllocationState, grid: FrequencyGrid,
                      config: ScenarioConfig, m: int) -> float:
        Validators.require_index(m, state.num_bds)
        return float(self.bd_throughputs(state, grid, config)[m])

    def lu_throughput(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig) -> float:
        return float(state.tau @ self.lu_slot_rates(state.alpha, state.power, grid, config))

    def min_bd_throughput(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig) -> float:
        return float(np.min(self.bd_throughputs(state, grid, config)))

    def evaluate(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig) -> AllocationState:
        """Same state with its objective set to the true min BD throughput"""
        return state.updated(objective=self.min_bd_throughput(state, grid, config))

    def energy_slack(self, energy: np.ndarray, config: ScenarioConfig) -> np.ndarray:
        """(E_m - E_min,m) / E_min,m; plain E_m where the floor is 0"""
        floor = config.e_min_array
        return (energy - floor) / np.where(floor > 0.0, floor, 1.0)

    def lu_rate_upper_bound(self, grid: FrequencyGrid, config: ScenarioConfig) -> float:
        """No allocation beats full peak power on every subcarrier without interference"""
        noise = self.noise_power(config)
        return float(np.sum(np.log1p(grid.direct_gain * config.p_peak / noise))
                     / config.log_scale / grid.num_subcarriers)

    def check_feasibility(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig,
                          tolerance: Optional[float] = None) -> ConstraintReport:
        tolerance = self.tolerance if tolerance is None else tolerance
        count, subcarriers = grid.num_bds, grid.num_subcarriers
        Validators.require_shape('tau', state.tau, (count,))
        Validators.require_shape('alpha', state.alpha, (count,))
        Validators.require_shape('power', state.power, (count, subcarriers))

        rates = self.bd_throughputs(state, grid, config)
        lu_rate = self.lu_throughput(state, grid, config)
        energy = self.harvested_energies(state, grid, config)
        power_used = float(state.tau @ np.sum(state.power, axis=1))

        residuals = {
            'bd_rate': float(np.min(rates - state.objective)),
            'lu_rate': lu_rate - config.d_req,
            'energy': float(np.min(self.energy_slack(energy, config))),
            'power_budget': config.p_bar - power_used,
            'time_budget': 1.0 - float(np.sum(state.tau)),
            'power_box': float(min(np.min(state.power), np.min(config.p_peak - state.power))),
            'time_nonneg': float(np.min(state.tau)),
            'reflection_box': float(min(np.min(state.alpha), np.min(1.0 - state.alpha))),
        }
        violated = [name for name in CONSTRAINT_FAMILIES if residuals[name] < -tolerance]
        if violated:
            logger.debug(f"Constraint families violated: {', '.join(violated)}")

        return ConstraintReport(
            bd_throughputs=rates.tolist(),
            lu_throughput=lu_rate,
            harvested=energy.tolist(),
            power_used=power_used,
            objective=float(state.objective),
            residuals=residuals,
            violated=violated,
            feasible=not violated,
            tolerance=tolerance,
        )
