"""Branch and path metrics for list and sequential decoding.

Conventions: ``lam > 0`` favours bit 0.  Branch metrics are log-probabilities
(never positive).  List path metrics are penalties (never negative, smaller is
better); Fano metrics are biased log-probabilities (larger is better).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def hard_decision(lam):
    return 0 if lam > 0 else 1


@njit(cache=True)
def branch_metric(lam, u, exact):
    """``log P(u | lam)``: exact ``-log(1 + exp(-(1-2u) lam))`` or its hard approximation."""
    x = lam if u == 0 else -lam
    if exact:
        # -softplus(-x), stable for large |x|
        return -(max(-x, 0.0) + math.log1p(math.exp(-abs(x))))
    return 0.0 if x > 0 else -abs(lam)


@njit(cache=True)
def list_path_metric_update(pm, lam, u, exact):
    """Penalty-form list metric: add ``-branch_metric``."""
    return pm - branch_metric(lam, u, exact)


@njit(cache=True)
def fano_metric_step(mu_prev, m, alpha_q, log1m_pe):
    """``mu_j = mu_{j-1} + m_j - alpha_q log(1 - p_e,j)``."""
    return mu_prev + m - alpha_q * log1m_pe


def compute_alpha(mu_actual_partial: float, b_partial: float) -> float:
    """Ratio of the accumulated actual to expected log-probability.

    Both arguments are partial sums (non-positive).  A zero expected sum gives
    1, i.e. no adaptation.
    """
    if b_partial == 0:
        return 1.0
    return mu_actual_partial / b_partial


def quantize_alpha(alpha: float, delta_q: float = 2.0) -> float:
    """Round up to a multiple of ``delta_q``."""
    if delta_q <= 0:
        raise ValueError("delta_q must be positive")
    return math.ceil(alpha / delta_q) * delta_q


def retro_update(mu, alpha_q: float, b_compl):
    """Re-bias stored metrics: ``mu + (alpha_q - 1) B^c`` elementwise."""
    return np.asarray(mu, dtype=np.float64) + (alpha_q - 1.0) * np.asarray(b_compl, dtype=np.float64)


def path_metric_from_scratch(lams, us, log1m_pe, bias: float, alpha_q: float = 1.0,
                             exact: bool = False) -> np.ndarray:
    """Fano metrics ``mu_0..mu_{n-1}`` of a path computed by direct summation.

    Starts from ``mu_{-1} = alpha_q * bias``.
    """
    m = np.array([branch_metric(float(l), int(u), exact) for l, u in zip(lams, us)])
    return alpha_q * bias + np.cumsum(m) - alpha_q * np.cumsum(np.asarray(log1m_pe, dtype=np.float64))
