import numpy as np
import pytest

from ambc.models.channel import FrequencyGrid
from ambc.schemas.scenario import ScenarioConfig
from ambc.services.bcd_optimizer_service import BcdOptimizer
from ambc.services.channel_model_service import ChannelModelService
from ambc.services.network_metrics_service import NetworkMetricsService


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def synthetic_grid(rng: np.random.Generator, count: int, subcarriers: int) -> FrequencyGrid:
    """Unit-variance responses; pair with sigma2=1 for O(1) SNRs"""
    return FrequencyGrid(
        F=complex_normal(rng, (count, subcarriers)),
        G=complex_normal(rng, (count, subcarriers)),
        H=complex_normal(rng, subcarriers),
        V=complex_normal(rng, (count, subcarriers)),
    )


def synthetic_config(count: int, subcarriers: int, **changes) -> ScenarioConfig:
    data = {'M': count, 'N': subcarriers, 'sigma2': 1.0, 'P_bar': 1.0, 'P_peak': 1.0,
            'E_min': 0.0, 'D': 0.0, 'L_h': min(8, subcarriers), 'L_v': min(6, subcarriers),
            'L_f': min(4, subcarriers), 'L_g': min(4, subcarriers)}
    data.update(changes)
    return ScenarioConfig.model_validate(data)


@pytest.fixture
def reference_config() -> ScenarioConfig:
    """Two BDs at 2.5 m / 4 m, N=64, 20 dB, D=1, E_min=10 uJ, P_peak=20 P_ave"""
    return ScenarioConfig()


@pytest.fixture
def small_config() -> ScenarioConfig:
    """Same geometry with 16 subcarriers, for end-to-end tests that must stay fast"""
    return ScenarioConfig(N=16)


@pytest.fixture
def channel_service() -> ChannelModelService:
    return ChannelModelService()


@pytest.fixture
def metrics(channel_service) -> NetworkMetricsService:
    return NetworkMetricsService(channel_service)


@pytest.fixture
def optimizer(metrics) -> BcdOptimizer:
    return BcdOptimizer(metrics)


@pytest.fixture
def reference_grid(channel_service, reference_config) -> FrequencyGrid:
    return channel_service.realize(reference_config, 42)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
