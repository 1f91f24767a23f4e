"""Classical zero-field open Ising chain."""
from __future__ import annotations

import math

import numpy as np

from ..coarse.structures import DecayMatrix, SiteSet, build_decay_matrix


def ising_1d_corr(n: int, beta_j: float) -> DecayMatrix:
    """Spin-spin covariance ``tanh(beta J)^|i - j|`` of the open chain at zero field.

    The diagonal holds the variance, 1.
    """
    if n < 2:
        raise ValueError("the chain needs at least two sites")
    if not beta_j > 0:
        raise ValueError("beta J must be positive")
    t = math.tanh(beta_j)
    idx = np.arange(n)
    return build_decay_matrix(t ** np.abs(idx[:, None] - idx[None, :]), SiteSet.range(n))
