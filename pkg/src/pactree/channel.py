"""BPSK over AWGN with counter-based noise.

Every frame draws from its own Philox stream keyed by ``seed`` with the frame
index as counter, so ``(seed, frame_index)`` alone fixes the message and the
noise.  The noise is unit-variance and scaled by sigma, so the same frame sees
the same realisation at every SNR point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigma_from_ebn0(ebn0_db: float, rate: float) -> float:
    """Noise std for unit-energy BPSK at the given Eb/N0 and code rate."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return float((2.0 * rate * 10.0 ** (ebn0_db / 10.0)) ** -0.5)


def bpsk(x) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def llr_from_y(y, sigma: float) -> np.ndarray:
    return 2.0 * np.asarray(y, dtype=np.float64) / sigma ** 2


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    # Philox steps the low counter words, so the frame index goes in the high
    # 128 bits: frames are 2**128 blocks apart and their streams never overlap.
    if frame_index < 0:
        raise ValueError("frame index must be non-negative")
    return np.random.Generator(np.random.Philox(key=int(seed), counter=int(frame_index) << 128))


@dataclass(frozen=True)
class ChannelParams:
    ebn0_db: float
    rate: float
    seed: int = 0

    @property
    def sigma(self) -> float:
        return sigma_from_ebn0(self.ebn0_db, self.rate)


def transmit(s, params: ChannelParams, frame_index: int, noise=None) -> np.ndarray:
    """Return ``y = s + sigma z``.  ``z`` is drawn from the frame stream unless given."""
    s = np.asarray(s, dtype=np.float64)
    if noise is None:
        noise = frame_rng(params.seed, frame_index).standard_normal(s.shape)
    return s + params.sigma * noise


def frame_draw(seed: int, frame_index: int, k: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Message bits (length k) and unit noise (length N) for one frame."""
    rng = frame_rng(seed, frame_index)
    z = rng.standard_normal(N)  # drawn first so that ``transmit`` sees the same noise
    msg = rng.integers(0, 2, size=k, dtype=np.uint8)
    return msg, z
