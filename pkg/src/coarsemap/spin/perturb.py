"""Localized unitary perturbations of states and circuits."""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from ..errors import DimensionMismatch
from .circuit import Circuit, Gate
from .state import SpinState, apply_unitary


def apply_localized_perturbation(
    target: Union[SpinState, Circuit], region: Sequence[int], u: np.ndarray
) -> Union[SpinState, Circuit]:
    """Act with ``u`` on ``region`` only: on a state directly, on a circuit as a new final layer."""
    region = list(region)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2 ** len(region),) * 2:
        raise DimensionMismatch(f"unitary of shape {u.shape} does not fit region {region}")
    if isinstance(target, SpinState):
        return apply_unitary(target, u, region)
    return target.with_layer([Gate(tuple(region), u, "perturbation")])
