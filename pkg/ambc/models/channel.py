from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelTapSet:
    """Time-domain multipath taps of the four link families"""
    forward_taps: np.ndarray        # f: FAP -> BD m, [M x L_f]
    backward_taps: np.ndarray       # g: BD m -> FAP, [M x L_g]
    direct_taps: np.ndarray         # h: FAP -> LU, [L_h]
    interference_taps: np.ndarray   # v: BD m -> LU, [M x L_v]

    @property
    def num_bds(self) -> int:
        return self.forward_taps.shape[0]

    def scaled(self, factor: complex) -> "ChannelTapSet":
        return ChannelTapSet(
            forward_taps=self.forward_taps * factor,
            backward_taps=self.backward_taps * factor,
            direct_taps=self.direct_taps * factor,
            interference_taps=self.interference_taps * factor,
        )


@dataclass(frozen=True)
class FrequencyGrid:
    """Per-subcarrier complex responses F, G, H, V"""
    F: np.ndarray   # [M x N]
    G: np.ndarray   # [M x N]
    H: np.ndarray   # [N]
    V: np.ndarray   # [M x N]

    @property
    def num_bds(self) -> int:
        return self.F.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.F.shape[1]

    @property
    def forward_gain(self) -> np.ndarray:
        """|F_{m,k}|^2"""
        return np.abs(self.F) ** 2

    @property
    def cascaded_gain(self) -> np.ndarray:
        """|F_{m,k} G_{m,k}|^2, the backscatter link seen by the FAP"""
        return np.abs(self.F * self.G) ** 2

    @property
    def direct_gain(self) -> np.ndarray:
        """|H_k|^2"""
        return np.abs(self.H) ** 2

    @property
    def interference_gain(self) -> np.ndarray:
        """|F_{m,k} V_{m,k}|^2, the backscatter link seen by the LU"""
        return np.abs(self.F * self.V) ** 2
