"""Comparison integrators for the body-momentum equations.

splitting_step composes the exactly-integrable single-axis flows of the
free rigid body on so(3)*: each sub-Hamiltonian p_i^2 / (2 I_i) rotates
the momentum vector about axis i; every sub-flow is an orthogonal
conjugation, so the momentum norm and all Casimirs are preserved to
round-off.  rk4_step is the classical non-geometric control: accurate at
fourth order but with no conservation structure at all, which is the
point of the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedDimensionError, ValidationError
from .lie_core import hat, vee
from .rigid_body import Inertia, continuous_ep_rhs

_AXIS_PLANES = ((1, 2), (2, 0), (0, 1))


@dataclass(frozen=True)
class SplittingScheme:
    order: str = "leapfrog"
    axes: tuple = field(default=(0, 1, 2))

    def __post_init__(self):
        if self.order not in ("first", "leapfrog"):
            raise ValidationError(f"order must be 'first' or 'leapfrog', got {self.order!r}")
        if sorted(self.axes) != [0, 1, 2]:
            raise ValidationError("axes must be a permutation of (0, 1, 2)")


def _axis_flow(p: np.ndarray, moments: np.ndarray, axis: int, dt: float) -> np.ndarray:
    """Exact flow of p_i^2/(2 I_i): rotate p about axis i by -p_i/I_i * dt."""
    ang = -p[axis] / moments[axis] * dt
    c, s = np.cos(ang), np.sin(ang)
    i, j = _AXIS_PLANES[axis]
    q = p.copy()
    q[i] = c * p[i] - s * p[j]
    q[j] = s * p[i] + c * p[j]
    return q


def splitting_step(Pi: np.ndarray, J: Inertia, h: float,
                   scheme: SplittingScheme = SplittingScheme()) -> np.ndarray:
    """One composed-sub-flow step on so(3)*.

    order='first' applies each axis flow for a full step in sequence;
    order='leapfrog' is the symmetric composition (half steps outward,
    full step on the last axis), second-order and time-reversible.
    """
    if Pi.shape[0] != 3:
        raise UnsupportedDimensionError("splitting_step is implemented for n = 3 only")
    moments = J.principal_moments()
    p = vee(Pi)
    if scheme.order == "first":
        for ax in scheme.axes:
            p = _axis_flow(p, moments, ax, h)
    else:
        outer = scheme.axes[:-1]
        for ax in outer:
            p = _axis_flow(p, moments, ax, 0.5 * h)
        p = _axis_flow(p, moments, scheme.axes[-1], h)
        for ax in reversed(outer):
            p = _axis_flow(p, moments, ax, 0.5 * h)
    return hat(p)


def rk4_step(Pi: np.ndarray, J: Inertia, h: float) -> np.ndarray:
    """Classical four-stage explicit step of d/dt Pi = ad*_{J^{-1} Pi} Pi."""
    k1 = continuous_ep_rhs(J, Pi)
    k2 = continuous_ep_rhs(J, Pi + 0.5 * h * k1)
    k3 = continuous_ep_rhs(J, Pi + 0.5 * h * k2)
    k4 = continuous_ep_rhs(J, Pi + h * k3)
    return Pi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
