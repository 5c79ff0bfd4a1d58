"""Cyclic redundancy check by polynomial long division over GF(2).

A polynomial given as an integer ``poly`` of degree below ``r`` lists the low
``r`` coefficients (bit k = coefficient of x^k); the leading ``x^r`` term is
implicit.  ``0xA6`` with ``r = 8`` is ``x^8 + x^7 + x^5 + x^2 + x``.
Bit sequences are read most significant (highest power) first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CRC:
    poly: int = 0xA6
    r: int = 8

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("CRC length must be positive")
        if not 0 <= self.poly < (1 << self.r):
            raise ValueError(f"poly 0x{self.poly:X} does not fit in {self.r} bits")

    @classmethod
    def parse(cls, text: str, r: int = 8) -> "CRC":
        return cls(int(str(text), 0), r)

    @classmethod
    def from_binary(cls, text: str) -> "CRC":
        """Full coefficient string, highest power first, e.g. ``"110100110"`` for 0xA6."""
        t = str(text).strip()
        if len(t) < 2 or set(t) - {"0", "1"} or t[0] != "1":
            raise ValueError(f"expected a binary polynomial with leading 1, got {text!r}")
        r = len(t) - 1
        return cls(int(t, 2) & ((1 << r) - 1), r)

    @property
    def generator_bits(self) -> np.ndarray:
        """Full coefficient list, highest power first (length r + 1)."""
        full = (1 << self.r) | self.poly
        return np.array([(full >> k) & 1 for k in range(self.r, -1, -1)], dtype=np.uint8)

    def remainder(self, d) -> np.ndarray:
        """Remainder of ``d(x) x^r`` divided by ``g(x)``, highest power first."""
        d = np.asarray(d, dtype=np.uint8).ravel()
        r = self.r
        top = 1 << (r - 1)
        mask = (1 << r) - 1
        reg = 0
        for bit in d:
            fb = ((reg & top) != 0) ^ int(bit)
            reg = (reg << 1) & mask
            if fb:
                reg ^= self.poly
        return np.array([(reg >> k) & 1 for k in range(r - 1, -1, -1)], dtype=np.uint8)

    def attach(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=np.uint8).ravel()
        return np.concatenate([d, self.remainder(d)])

    def parity_matrix(self, k: int) -> np.ndarray:
        """``(k, r)`` matrix M with ``remainder(d) = d M mod 2`` for length-k data."""
        eye = np.eye(k, dtype=np.uint8)
        return np.array([self.remainder(e) for e in eye], dtype=np.uint8).reshape(k, self.r)

    def check_many(self, C, M=None) -> np.ndarray:
        """Vectorised ``check`` over the rows of ``C``."""
        C = np.atleast_2d(np.asarray(C, dtype=np.uint8))
        k = C.shape[1] - self.r
        if M is None:
            M = self.parity_matrix(k)
        rem = (C[:, :k].astype(np.int64) @ M) & 1
        return np.all(rem == C[:, k:], axis=1)

    def check(self, c) -> bool:
        c = np.asarray(c, dtype=np.uint8).ravel()
        if c.size < self.r:
            return False
        return bool(np.array_equal(self.remainder(c[: -self.r]), c[-self.r:]))


def crc_remainder(d, poly: int = 0xA6, r: int = 8) -> np.ndarray:
    return CRC(poly, r).remainder(d)


def crc_attach(d, poly: int = 0xA6, r: int = 8) -> np.ndarray:
    return CRC(poly, r).attach(d)


def crc_check(c, poly: int = 0xA6, r: int = 8) -> bool:
    return CRC(poly, r).check(c)
