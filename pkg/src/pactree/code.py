"""PAC code description and encoder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .construction import RateProfile
from .conv_transform import conv_encode, conv_tables, parse_octal
from .crc import CRC
from .polar_kernel import polar_transform


@dataclass
class PACCode:
    """Rate profile + convolutional generator (+ optional CRC).

    ``g = "1"`` gives a plain polar code.  With a CRC the last ``crc.r``
    information positions carry the check bits, so ``k_data = K - r``.
    """

    profile: RateProfile
    g: str = "133"
    crc: CRC | None = None
    gbits: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.gbits = parse_octal(self.g)
        self.par, self.m = conv_tables(self.gbits)
        self.is_info = self.profile.mask.astype(np.uint8)
        self.info_array = self.profile.info_array
        if self.crc is not None:
            if self.crc.r >= self.K:
                raise ValueError("CRC longer than the information set")
            self.crc_matrix = self.crc.parity_matrix(self.K - self.crc.r)
        else:
            self.crc_matrix = None

    @property
    def N(self) -> int:
        return self.profile.N

    @property
    def n(self) -> int:
        return self.profile.N.bit_length() - 1

    @property
    def K(self) -> int:
        """Number of information positions (data + CRC)."""
        return self.profile.K

    @property
    def k_data(self) -> int:
        return self.K - (self.crc.r if self.crc else 0)

    @property
    def rate(self) -> float:
        """Data rate used for Eb/N0 scaling."""
        return self.k_data / self.N

    def place(self, data) -> np.ndarray:
        """Data bits (plus CRC) into a length-N ``v``."""
        data = np.asarray(data, dtype=np.uint8)
        bits = self.crc.attach(data) if self.crc else data
        if bits.size != self.K:
            raise ValueError(f"expected {self.k_data} data bits, got {data.size}")
        v = np.zeros(self.N, dtype=np.uint8)
        v[self.info_array] = bits
        return v

    def encode_v(self, v) -> np.ndarray:
        return polar_transform(conv_encode(v, self.gbits))

    def encode(self, data) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(v, x)``."""
        v = self.place(data)
        return v, self.encode_v(v)

    def data_of(self, v) -> np.ndarray:
        return np.asarray(v)[..., self.info_array[: self.k_data]]

    def generator_matrix(self) -> np.ndarray:
        """K x N generator over the information positions."""
        eye = np.zeros((self.K, self.N), dtype=np.uint8)
        eye[np.arange(self.K), self.info_array] = 1
        return self.encode_v(eye)
