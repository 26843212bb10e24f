"""Generalized rigid body on SO(n): inertia operator and momentum frames.

The inertia operator is J(xi) = Lambda xi + xi Lambda for a diagonal
Lambda with pairwise-positive sums; elementwise this is
(J xi)_ij = (Lambda_i + Lambda_j) xi_ij, a self-adjoint positive-definite
bijection between skew matrices and their duals.

Two kinetic-energy conventions appear in the literature, (1/4)<xi, J xi>
and (1/2)<xi, J xi>.  kinetic_energy uses the 1/4 convention (which equals
(1/2) trace(xi^T Lambda xi)); the chart discrete Lagrangians use the 1/2
convention.  KE_TO_CHART_LAGRANGIAN records the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInertiaError, ValidationError
from .lie_core import coAd, pairing, skew_part

# the chart discrete Lagrangian is (1/2)<zeta, J zeta> = 2 * kinetic_energy
KE_TO_CHART_LAGRANGIAN = 2.0


@dataclass(frozen=True)
class Inertia:
    """Diagonal inertia parameter Lambda (units mass*length^2)."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if lam.ndim != 1 or lam.size < 2:
            raise ValidationError("inertia diagonal must be a vector of length >= 2")
        sums = lam[:, None] + lam[None, :]
        off = sums[~np.eye(lam.size, dtype=bool)]
        if np.any(off <= 0.0):
            raise ValidationError(
                "inertia invariant violated: Lambda_i + Lambda_j > 0 required for all i != j")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "_sums", sums)

    @property
    def n(self) -> int:
        return self.lam.size

    @property
    def pair_sums(self) -> np.ndarray:
        """Matrix of Lambda_i + Lambda_j."""
        return self._sums

    def principal_moments(self) -> np.ndarray:
        """so(3) vector-form moments of inertia I_k = trace(Lambda) - Lambda_k.

        With the hat-map identification, inertia_apply(hat(v)) = hat(I * v).
        Only meaningful for n = 3.
        """
        if self.n != 3:
            raise ValidationError("principal_moments is defined for n = 3 only")
        return np.sum(self.lam) - self.lam


def inertia_apply(J: Inertia, xi: np.ndarray) -> np.ndarray:
    """J(xi) = Lambda xi + xi Lambda, elementwise (Lambda_i + Lambda_j) xi_ij."""
    return J.pair_sums * xi


def inertia_invert(J: Inertia, mu: np.ndarray) -> np.ndarray:
    """Elementwise inverse xi_ij = mu_ij / (Lambda_i + Lambda_j)."""
    sums = J.pair_sums
    off = sums[~np.eye(J.n, dtype=bool)]
    if np.any(np.abs(off) < 1e-14):
        raise DegenerateInertiaError("some |Lambda_i + Lambda_j| < 1e-14")
    safe = sums + np.eye(J.n)  # diagonal of skew matrices is zero anyway
    return mu / safe


def kinetic_energy(J: Inertia, xi: np.ndarray) -> float:
    """(1/4) <xi, J xi> = (1/2) trace(xi^T Lambda xi); >= 0, zero iff xi = 0."""
    return 0.25 * pairing(xi, inertia_apply(J, xi))


def spatial_from_body(g: np.ndarray, body: np.ndarray) -> np.ndarray:
    """Spatial momentum Ad*_{g^{-1}} body = g body g^T."""
    return coAd(g.T, body)


def body_from_spatial(g: np.ndarray, spatial: np.ndarray) -> np.ndarray:
    """Body momentum Ad*_g spatial = g^T spatial g."""
    return coAd(g, spatial)


@dataclass(frozen=True)
class BodySpatialPair:
    """A momentum seen in both frames at a configuration, kept consistent."""

    body: np.ndarray
    spatial: np.ndarray
    at: np.ndarray
    tol: float = field(default=1e-12)

    def __post_init__(self):
        expected = spatial_from_body(self.at, self.body)
        err = np.linalg.norm(expected - self.spatial)
        if err > self.tol:
            raise ValidationError(
                f"body/spatial frames inconsistent: ||Ad*_(g^-1) body - spatial|| = {err:.3g}")

    @classmethod
    def from_body(cls, g: np.ndarray, body: np.ndarray) -> "BodySpatialPair":
        return cls(body=body, spatial=spatial_from_body(g, body), at=g)


def continuous_ep_rhs(J: Inertia, Pi: np.ndarray) -> np.ndarray:
    """Time derivative of the body momentum for the free rigid body.

    d/dt Pi = ad*_xi Pi = Pi xi - xi Pi with xi = J^{-1} Pi.  For n = 3
    this is the classical Euler equation dp/dt = p x omega in vector form.
    """
    xi = inertia_invert(J, Pi)
    return skew_part(Pi @ xi - xi @ Pi)
