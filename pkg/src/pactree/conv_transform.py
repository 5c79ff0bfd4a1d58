"""Rate-1 convolutional pre-transform applied before the polar transform.

Generator polynomials are written in octal, MSB first: ``"133"`` is
``[1, 0, 1, 1, 0, 1, 1]`` (``g0`` first).  The shift register holds the last
``m`` inputs, most recent first.

Decoders use an integer encoding of the register: bit ``k`` holds ``state[k]``.
"""

from __future__ import annotations

import numpy as np
from numba import njit


def parse_octal(g) -> np.ndarray:
    """Octal string (or int / bit sequence) to a 0/1 coefficient array.

    Leading zeros from the octal expansion are dropped so that ``g0 = 1``.
    """
    if isinstance(g, np.ndarray) or isinstance(g, (list, tuple)):
        bits = np.asarray(g, dtype=np.uint8)
        if bits.size == 0 or bits[0] != 1 or np.any(bits > 1):
            raise ValueError("generator bits must be 0/1 with g0 = 1")
        return bits
    if isinstance(g, int):
        g = format(g, "o")
    s = str(g).strip()
    if s.startswith(("0o", "0O")):
        s = s[2:]
    if not s or any(c not in "01234567" for c in s):
        raise ValueError(f"not an octal generator: {g!r}")
    bits = "".join(format(int(c), "03b") for c in s).lstrip("0")
    if not bits:
        raise ValueError("generator must be nonzero")
    return np.array([int(b) for b in bits], dtype=np.uint8)


def conv_1b_trans(v: int, state, g) -> tuple[int, list]:
    """Encode one bit. Returns ``(u, next_state)``."""
    g = parse_octal(g)
    m = g.size - 1
    state = list(state)
    if len(state) != m:
        raise ValueError(f"state must have {m} bits")
    u = v & g[0]
    for j in range(1, m + 1):
        u ^= g[j] & state[j - 1]
    return int(u), ([v] + state[:-1]) if m else []


def conv_encode(v, g) -> np.ndarray:
    """Encode a whole block from the all-zero state."""
    g = parse_octal(g)
    v = np.asarray(v, dtype=np.uint8)
    u = np.zeros_like(v)
    for j, gj in enumerate(g[: v.shape[-1]]):
        if gj:
            u[..., j:] ^= v[..., : v.shape[-1] - j]
    return u


def toeplitz_matrix(N: int, g) -> np.ndarray:
    """Upper-triangular Toeplitz ``T`` with ``u = v T``; row i is g shifted to column i."""
    g = parse_octal(g)
    T = np.zeros((N, N), dtype=np.uint8)
    for i in range(N):
        L = min(g.size, N - i)
        T[i, i:i + L] = g[:L]
    return T


def conv_tables(g) -> tuple[np.ndarray, int]:
    """Output parity per register state, for integer-state encoding.

    Returns ``(par, m)`` where ``u = (v & g0) ^ par[state]``.
    """
    g = parse_octal(g)
    m = g.size - 1
    mask = 0
    for j in range(1, m + 1):
        if g[j]:
            mask |= 1 << (j - 1)
    par = np.zeros(1 << m, dtype=np.uint8)
    for s in range(1 << m):
        par[s] = bin(s & mask).count("1") & 1
    return par, m


@njit(cache=True)
def conv_step(v, state, par, m):
    """Integer-state step (``g0 = 1`` assumed). Returns ``(u, next_state)``."""
    u = v ^ par[state]
    return u, ((state << 1) | v) & ((1 << m) - 1)
