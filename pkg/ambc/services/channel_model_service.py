import logging

import numpy as np

from ambc.models.channel import ChannelTapSet, FrequencyGrid
from ambc.schemas.scenario import ScenarioConfig
from ambc.utils.exceptions import DimensionError
from ambc.utils.validators import Validators

logger = logging.getLogger(__name__)

# Link order used for stream splitting: stream i of SeedSequence(seed).spawn(4)
LINKS = ('forward', 'backward', 'direct', 'interference')


class ChannelModelService:
    """Random multipath channels and their subcarrier responses

    Every link is independent Rayleigh fading: tap l is CN(0, p_l) with an
    exponentially decaying power-delay profile p_l = 1e-3 d^-2 rho^l anchored
    at the first path.
    """

    FIRST_PATH_GAIN = 1e-3

    def path_powers(self, distance: float, num_paths: int, decay: float) -> np.ndarray:
        """Expected power of each path of a link at the given distance"""
        return self.FIRST_PATH_GAIN * distance ** -2.0 * decay ** np.arange(num_paths)

    def sample_taps(self, config: ScenarioConfig, seed: int) -> ChannelTapSet:
        """Draw one channel realization; identical (config, seed) gives identical taps"""
        streams = np.random.SeedSequence(Validators.normalize_seed(seed)).spawn(len(LINKS))
        rngs = {link: np.random.Generator(np.random.PCG64(stream)) for link, stream in zip(LINKS, streams)}

        d_bd = np.asarray(config.d_fap_bd, dtype=float)
        d_bd_lu = np.asarray(config.d_bd_lu, dtype=float)

        forward = np.stack([self.path_powers(d, config.paths_forward, config.rho) for d in d_bd])
        backward = np.stack([self.path_powers(d, config.paths_backward, config.rho) for d in d_bd])
        direct = self.path_powers(config.d_fap_lu, config.paths_direct, config.rho)
        interference = np.stack([self.path_powers(d, config.paths_interference, config.rho) for d in d_bd_lu])

        taps = ChannelTapSet(
            forward_taps=self._complex_gaussian(rngs['forward'], forward),
            backward_taps=self._complex_gaussian(rngs['backward'], backward),
            direct_taps=self._complex_gaussian(rngs['direct'], direct),
            interference_taps=self._complex_gaussian(rngs['interference'], interference),
        )
        logger.debug(f"Sampled channels for seed {seed}")
        return taps

    def frequency_response(self, taps: ChannelTapSet, num_subcarriers: int) -> FrequencyGrid:
        """N-point DFT of every tap vector: F_{m,k} = sum_l f_{m,l} exp(-j 2 pi k l / N)"""
        for name in ('forward_taps', 'backward_taps', 'direct_taps', 'interference_taps'):
            array = getattr(taps, name)
            if array.shape[-1] > num_subcarriers:
                raise DimensionError(f"{name} has {array.shape[-1]} paths, more than N={num_subcarriers}")
            Validators.require_finite(name, array)
        count = taps.num_bds
        for name in ('backward_taps', 'interference_taps'):
            if getattr(taps, name).shape[0] != count:
                raise DimensionError(f"{name} rows do not match the {count} forward links")

        return FrequencyGrid(
            F=np.fft.fft(taps.forward_taps, n=num_subcarriers, axis=-1),
            G=np.fft.fft(taps.backward_taps, n=num_subcarriers, axis=-1),
            H=np.fft.fft(taps.direct_taps, n=num_subcarriers, axis=-1),
            V=np.fft.fft(taps.interference_taps, n=num_subcarriers, axis=-1),
        )

    def noise_power_from_snr(self, config: ScenarioConfig) -> float:
        """Noise variance that yields the configured average receive SNR at the FAP

        sigma^2 = P_bar * sum_l E|g_{1,l}|^2 E|f_{1,l}|^2 / 10^(snr/10)
        """
        distance = config.d_fap_bd[0]
        forward = self.path_powers(distance, config.paths_forward, config.rho)
        backward = self.path_powers(distance, config.paths_backward, config.rho)
        shared = min(config.paths_forward, config.paths_backward)
        cascaded = float(np.sum(forward[:shared] * backward[:shared]))
        return config.p_bar * cascaded / 10.0 ** (config.snr_bar_db / 10.0)

    def noise_power(self, config: ScenarioConfig) -> float:
        """Explicit override when configured, SNR-derived otherwise"""
        if config.noise_power is not None:
            return config.noise_power
        return self.noise_power_from_snr(config)

    def realize(self, config: ScenarioConfig, seed: int) -> FrequencyGrid:
        return self.frequency_response(self.sample_taps(config, seed), config.num_subcarriers)

    @staticmethod
    def _complex_gaussian(rng: np.random.Generator, powers: np.ndarray) -> np.ndarray:
        draws = rng.standard_normal(powers.shape + (2,))
        return (draws[..., 0] + 1j * draws[..., 1]) * np.sqrt(powers / 2.0)
