import numpy as np
import pytest

from liestep.errors import DegenerateInertiaError, ValidationError
from liestep.lie_core import coords, dim_so, from_coords, hat, pairing, vee
from liestep.rigid_body import (
    BodySpatialPair,
    Inertia,
    body_from_spatial,
    continuous_ep_rhs,
    inertia_apply,
    inertia_invert,
    kinetic_energy,
    spatial_from_body,
)

from conftest import random_rotation, random_skew

J123 = Inertia(np.array([1.0, 2.0, 3.0]))


def test_inertia_validation():
    Inertia(np.array([1.0, -0.4]))  # pairwise sum 0.6 > 0 is allowed
    with pytest.raises(ValidationError):
        Inertia(np.array([1.0, -1.0]))
    with pytest.raises(ValidationError):
        Inertia(np.array([2.0]))


def test_inertia_apply_trivial_and_elementwise():
    assert np.allclose(inertia_apply(J123, np.zeros((3, 3))), 0.0)
    xi = np.zeros((3, 3))
    xi[0, 1], xi[1, 0] = 1.0, -1.0
    out = inertia_apply(J123, xi)
    assert out[0, 1] == 3.0  # lambda_0 + lambda_1
    assert np.array_equal(out, -out.T)


def test_inertia_apply_matches_matrix_form(rng):
    lam = np.diag(J123.lam)
    for _ in range(20):
        xi = random_skew(rng, 3)
        assert np.allclose(inertia_apply(J123, xi), lam @ xi + xi @ lam, atol=1e-15)


def test_inertia_self_adjoint(rng):
    for _ in range(30):
        xi, eta = random_skew(rng, 3), random_skew(rng, 3)
        assert abs(pairing(inertia_apply(J123, xi), eta)
                   - pairing(xi, inertia_apply(J123, eta))) < 1e-13


def test_inertia_operator_positive_definite():
    # Gram matrix of the coordinate operator has positive eigenvalues
    d = dim_so(3)
    op = np.zeros((d, d))
    for b in range(d):
        e = np.zeros(d)
        e[b] = 1.0
        op[:, b] = coords(inertia_apply(J123, from_coords(e, 3)))
    assert np.all(np.linalg.eigvalsh(0.5 * (op + op.T)) > 0)


def test_inertia_invert_roundtrip_and_example(rng):
    xi = random_skew(rng, 3)
    assert np.linalg.norm(inertia_invert(J123, inertia_apply(J123, xi)) - xi) < 1e-14
    assert np.allclose(inertia_invert(J123, np.zeros((3, 3))), 0.0)
    mu = np.zeros((3, 3))
    mu[0, 1], mu[1, 0] = 6.0, -6.0
    assert inertia_invert(J123, mu)[0, 1] == 2.0


def test_inertia_invert_degenerate():
    tiny = Inertia(np.array([1e-15, 1e-15]))
    with pytest.raises(DegenerateInertiaError):
        inertia_invert(tiny, np.zeros((2, 2)))


def test_kinetic_energy_values(rng):
    assert kinetic_energy(J123, np.zeros((3, 3))) == 0.0
    lam = np.diag(J123.lam)
    for _ in range(30):
        xi = random_skew(rng, 3, rng.uniform(0.1, 2.0))
        quarter = 0.25 * np.trace(xi.T @ (lam @ xi + xi @ lam))
        half = 0.5 * np.trace(xi.T @ lam @ xi)
        assert abs(quarter - half) < 1e-13
        assert abs(kinetic_energy(J123, xi) - quarter) < 1e-13


def test_kinetic_energy_positive(rng):
    for _ in range(1000):
        xi = random_skew(rng, 3, rng.uniform(1e-3, 3.0))
        assert kinetic_energy(J123, xi) > 0.0


def test_body_spatial_roundtrip(rng):
    g = random_rotation(rng, 3)
    body = random_skew(rng, 3)
    assert np.allclose(spatial_from_body(np.eye(3), body), body)
    spatial = spatial_from_body(g, body)
    assert np.linalg.norm(body_from_spatial(g, spatial) - body) < 1e-12
    e0 = np.sort(np.linalg.eigvalsh(1j * body))
    e1 = np.sort(np.linalg.eigvalsh(1j * spatial))
    assert np.max(np.abs(e0 - e1)) < 1e-12


def test_body_spatial_pair_validation(rng):
    g = random_rotation(rng, 3)
    body = random_skew(rng, 3)
    BodySpatialPair.from_body(g, body)
    with pytest.raises(ValidationError):
        BodySpatialPair(body=body, spatial=body + hat([0.1, 0, 0]), at=g)


def test_principal_moments():
    assert np.array_equal(J123.principal_moments(), np.array([5.0, 4.0, 3.0]))


def test_ep_rhs_trivial_cases():
    assert np.allclose(continuous_ep_rhs(J123, np.zeros((3, 3))), 0.0)
    # principal-axis momentum is a relative equilibrium
    Pi = hat([0.0, 0.0, 2.0])
    assert np.linalg.norm(continuous_ep_rhs(J123, Pi)) < 1e-15


def test_ep_rhs_matches_textbook_euler(rng):
    # component oracle: I_k from the vector-form identification, then
    # dp_1 = (1/I_3 - 1/I_2) p_2 p_3 and cyclic
    moments = J123.principal_moments()
    for _ in range(20):
        p = rng.standard_normal(3)
        got = vee(continuous_ep_rhs(J123, hat(p)))
        want = np.array([
            (1 / moments[2] - 1 / moments[1]) * p[1] * p[2],
            (1 / moments[0] - 1 / moments[2]) * p[2] * p[0],
            (1 / moments[1] - 1 / moments[0]) * p[0] * p[1],
        ])
        assert np.allclose(got, want, atol=1e-13)
        # equivalently dp/dt = p x omega
        assert np.allclose(got, np.cross(p, p / moments), atol=1e-13)


def test_ep_rhs_conserves_energy_to_first_order(rng):
    for _ in range(20):
        Pi = random_skew(rng, 3, rng.uniform(0.1, 2.0))
        xi = inertia_invert(J123, Pi)
        assert abs(pairing(continuous_ep_rhs(J123, Pi), xi)) < 1e-13
