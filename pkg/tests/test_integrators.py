import numpy as np
import pytest

from liestep.config import NewtonConfig, SimulationConfig
from liestep.errors import (
    BranchCutError,
    NewtonDivergenceError,
    TrajectoryError,
    ValidationError,
)
from liestep.integrators import (
    DepState,
    chart_legendre_init,
    chart_momentum,
    dep_step_chart,
    dep_step_mv,
    dlp_step,
    mv_equivalence_check,
    mv_legendre_init,
    mv_momentum,
    mv_transport_rhs,
    reconstruct_step,
    run_trajectory,
)
from liestep.lagrangians import chart_discrete_lagrangian, mv_discrete_lagrangian
from liestep.lie_core import coords, exp, from_coords, hat, log, skew_part, vee
from liestep.rigid_body import (
    Inertia,
    continuous_ep_rhs,
    inertia_apply,
    inertia_invert,
    kinetic_energy,
)

from conftest import fit_loglog_slope, random_rotation, random_skew

J123 = Inertia(np.array([1.0, 2.0, 3.0]))
TIGHT = NewtonConfig(tol_residual=1e-13, max_iters=60)


def base_config(**kw):
    conf = dict(n=3, lam=(1.0, 2.0, 3.0), h=1e-2, steps=100, method="dep_mv",
                side="left", initial={"Pi0": [0.4, -0.3, 0.5]})
    conf.update(kw)
    return SimulationConfig(**conf)


# ---------------------------------------------------------------------------
# Moser-Veselov implicit update
# ---------------------------------------------------------------------------

def test_mv_identity_fixed_point():
    f = dep_step_mv(np.eye(3), J123)
    assert np.linalg.norm(f - np.eye(3)) < 1e-12


def test_mv_principal_axis_equilibrium():
    for axis in range(3):
        v = np.zeros(3)
        v[axis] = 0.4
        f_prev = exp(hat(v))
        f_next = dep_step_mv(f_prev, J123, TIGHT)
        assert np.linalg.norm(f_next - f_prev) < 1e-11


def test_mv_step_transports_momentum(rng):
    # substitute the solution back into the momentum-transport law
    for _ in range(30):
        f_prev = exp(random_skew(rng, 3, rng.uniform(0.05, 0.8)))
        f_next = dep_step_mv(f_prev, J123, TIGHT)
        m_next = mv_momentum(f_next, J123)
        want = f_prev @ mv_momentum(f_prev, J123) @ f_prev.T
        assert np.linalg.norm(m_next - want) < 1e-11


def test_mv_step_n4(rng):
    lam4 = Inertia(np.array([1.0, 2.0, 3.0, 4.0]))
    f_prev = exp(random_skew(rng, 4, 0.4))
    f_next = dep_step_mv(f_prev, lam4, TIGHT)
    res = mv_equivalence_check(f_prev, f_next, lam4)
    assert max(res) < 1e-11


def test_mv_warm_start_outside_cayley_chart():
    # a transport at rotation angle pi cannot seed the Cayley parametrization
    with pytest.raises(BranchCutError):
        dep_step_mv(exp(hat([0.0, 0.0, np.pi])), J123)


def test_mv_newton_divergence():
    cfg = NewtonConfig(tol_residual=1e-30, max_iters=3)
    with pytest.raises(NewtonDivergenceError) as exc:
        dep_step_mv(exp(hat([0.3, -0.2, 0.4])), J123, cfg)
    assert exc.value.residual is not None


def test_mv_equivalence_trivial_and_sensitivity(rng):
    res = mv_equivalence_check(np.eye(3), np.eye(3), J123)
    assert max(res) == 0.0
    f_prev = exp(random_skew(rng, 3, 0.5))
    f_next = dep_step_mv(f_prev, J123, TIGHT)
    assert max(mv_equivalence_check(f_prev, f_next, J123)) < 1e-10
    bad = f_next @ exp(1e-3 * random_skew(rng, 3))
    assert max(mv_equivalence_check(f_prev, bad, J123)) > 1e-4


def test_mv_momentum_values(rng):
    assert np.allclose(mv_momentum(np.eye(3), J123), 0.0)
    # principal-axis closed form: single entry pair (lam_i + lam_j) sin(theta)
    theta = 0.6
    f = exp(hat([0.0, 0.0, theta]))
    m = mv_momentum(f, J123)
    oracle = np.zeros((3, 3))
    oracle[0, 1] = (J123.lam[0] + J123.lam[1]) * np.sin(theta)
    oracle[1, 0] = -oracle[0, 1]
    assert np.allclose(m, oracle, atol=1e-13)


def test_mv_momentum_first_order_relation(rng):
    zeta = random_skew(rng, 3, 0.8)
    hs = [0.1, 0.05, 0.025, 0.0125]
    errs = [np.linalg.norm(mv_momentum(exp(-h * zeta), J123)
                           - h * inertia_apply(J123, zeta)) for h in hs]
    slope = fit_loglog_slope(hs, errs)
    assert abs(slope - 2.0) < 0.1


def test_mv_legendre_init_inverts_momentum_read(rng):
    Pi0 = random_skew(rng, 3, 0.9)
    h = 0.05
    f, _, _, res = mv_legendre_init(Pi0, J123, h, TIGHT)
    assert np.linalg.norm(mv_momentum(f, J123) / h - Pi0) < 1e-11


# ---------------------------------------------------------------------------
# chart implicit update
# ---------------------------------------------------------------------------

def test_chart_zero_fixed_point():
    z = dep_step_chart(np.zeros((3, 3)), J123, 0.05)
    assert np.linalg.norm(z) < 1e-13


def test_chart_principal_axis_equilibrium():
    for axis in range(3):
        v = np.zeros(3)
        v[axis] = 1.1
        zeta = hat(v)
        z_next = dep_step_chart(zeta, J123, 0.05, TIGHT)
        assert np.linalg.norm(z_next - zeta) < 1e-11


def test_chart_small_step_consistency(rng):
    # (zeta_next - zeta_prev)/h approaches the reduced equation rhs; the
    # chart velocity is the backward read, so the sign mirrors the body one
    zeta = random_skew(rng, 3, 0.8)
    target = -inertia_invert(J123, continuous_ep_rhs(J123, inertia_apply(J123, zeta)))
    hs = [0.1, 0.05, 0.025, 0.0125]
    errs = []
    for h in hs:
        z_next = dep_step_chart(zeta, J123, h, TIGHT)
        errs.append(np.linalg.norm((z_next - zeta) / h - target))
    assert fit_loglog_slope(hs, errs) > 0.9


def test_chart_branch_guard():
    with pytest.raises(BranchCutError):
        dep_step_chart(hat([0.0, 0.0, (np.pi - 0.05) / 0.1]), J123, 0.1)


def test_chart_legendre_init_inverts_momentum_read(rng):
    Pi0 = random_skew(rng, 3, 0.9)
    h = 0.05
    zeta = chart_legendre_init(Pi0, J123, h)
    assert np.linalg.norm(chart_momentum(zeta, J123, h) - Pi0) < 1e-12


# ---------------------------------------------------------------------------
# the discrete variational principle (validates the operator chains)
# ---------------------------------------------------------------------------

def _variational_residual(lagrangian_pair, g0, g1, g2, side, eps=1e-6):
    worst = 0.0
    for b in range(3):
        e = hat(np.eye(3)[b])

        def action(t):
            g1t = g1 @ exp(t * e) if side == "left" else exp(t * e) @ g1
            return lagrangian_pair(g0, g1t) + lagrangian_pair(g1t, g2)

        worst = max(worst, abs((action(eps) - action(-eps)) / (2 * eps)))
    return worst


def test_mv_step_satisfies_variational_principle(rng):
    # solver output must extremize the three-point action sum
    h = 1.0  # the update is h-free; unit scale keeps the FD well conditioned
    for _ in range(10):
        g0 = random_rotation(rng, 3, 1.5)
        f10 = exp(random_skew(rng, 3, rng.uniform(0.05, 0.6)))
        g1 = g0 @ f10.T
        f21 = dep_step_mv(f10, J123, TIGHT)
        g2 = g1 @ f21.T

        def lag(a, b):
            return mv_discrete_lagrangian(a, b, J123, h, "left")

        assert _variational_residual(lag, g0, g1, g2, "left") < 1e-8


def test_chart_step_satisfies_variational_principle(rng):
    h = 0.05
    for _ in range(10):
        g0 = random_rotation(rng, 3, 1.5)
        zeta10 = random_skew(rng, 3, rng.uniform(0.2, 1.0))
        f10 = exp(h * zeta10)
        g1 = g0 @ f10.T
        zeta21 = dep_step_chart(zeta10, J123, h, TIGHT)
        g2 = g1 @ exp(h * zeta21).T

        def lag(a, b):
            return chart_discrete_lagrangian(a, b, J123, h, "left")

        assert _variational_residual(lag, g0, g1, g2, "left") < 1e-7


def test_right_side_trajectory_satisfies_variational_principle(rng):
    # the mirrored right-invariant run extremizes the right-variant action
    cfg = base_config(side="right", steps=2, h=0.05,
                      initial={"Pi0": [0.5, -0.2, 0.4]})
    traj = run_trajectory(cfg)
    g0, g1, g2 = traj[0].g, traj[1].g, traj[2].g

    def lag(a, b):
        return mv_discrete_lagrangian(a, b, J123, 0.05, "right")

    assert _variational_residual(lag, g0, g1, g2, "right") < 1e-8


# ---------------------------------------------------------------------------
# transport and reconstruction
# ---------------------------------------------------------------------------

def test_dlp_trivial_and_norm(rng):
    mu = random_skew(rng, 3, 1.2)
    assert np.allclose(dlp_step(mu, np.eye(3), "left"), mu)
    f = random_rotation(rng, 3)
    out = dlp_step(mu, f, "left")
    assert abs(np.linalg.norm(out) - np.linalg.norm(mu)) < 1e-13


def test_dlp_composition_left(rng):
    mu = random_skew(rng, 3)
    f1, f2 = random_rotation(rng, 3), random_rotation(rng, 3)
    two_steps = dlp_step(dlp_step(mu, f1, "left"), f2, "left")
    composed = dlp_step(mu, f2 @ f1, "left")
    assert np.linalg.norm(two_steps - composed) < 1e-12


def test_dlp_right_is_coadjoint(rng):
    mu = random_skew(rng, 3)
    f = random_rotation(rng, 3)
    assert np.allclose(dlp_step(mu, f, "right"), skew_part(f.T @ mu @ f))
    with pytest.raises(ValidationError):
        dlp_step(mu, f, "middle")


def test_reconstruct_defining_identity(rng):
    g = random_rotation(rng, 3)
    f = exp(random_skew(rng, 3, 0.5))
    assert np.allclose(reconstruct_step(g, np.eye(3), "left"), g)
    g_next = reconstruct_step(g, f, "left")
    assert np.linalg.norm(g_next.T @ g - f) < 1e-13
    g_next = reconstruct_step(g, f, "right")
    assert np.linalg.norm(g @ g_next.T - f) < 1e-13


def test_reconstruction_full_trajectory_consistency():
    traj = run_trajectory(base_config(steps=200))
    worst = 0.0
    for k in range(1, len(traj)):
        f_def = traj[k].g.T @ traj[k - 1].g
        worst = max(worst, np.linalg.norm(f_def - traj[k - 1].f))
    assert worst < 1e-12


def test_dep_state_validation():
    DepState(exp(hat([0.1, 0.0, 0.0])), "left", 0.1)
    with pytest.raises(BranchCutError):
        DepState(exp(hat([np.pi - 0.05, 0.0, 0.0])), "left", 0.1)
    with pytest.raises(ValidationError):
        DepState(np.eye(3), "middle", 0.1)


# ---------------------------------------------------------------------------
# trajectory driver
# ---------------------------------------------------------------------------

def test_trajectory_zero_steps():
    traj = run_trajectory(base_config(steps=0))
    assert len(traj) == 1
    assert traj[0].step == 0


def test_trajectory_zero_momentum_is_stationary():
    traj = run_trajectory(base_config(steps=10, initial={"Pi0": [0.0, 0.0, 0.0]}))
    for rec in traj:
        assert np.allclose(rec.f, np.eye(3))
        assert np.allclose(rec.g, np.eye(3))
        assert np.allclose(rec.momentum, 0.0)
        assert rec.energy == 0.0


@pytest.mark.parametrize("method", ["dep_mv", "dep_chart"])
def test_trajectory_momentum_matches_legendre_read(method):
    # Pi_k and the transport leaving step k stay linked by the momentum read
    traj = run_trajectory(base_config(method=method, steps=50, h=0.02))
    J = traj.inertia()
    for rec in traj:
        if method == "dep_mv":
            read = mv_momentum(rec.f, J) / traj.h
        else:
            read = chart_momentum(log(rec.f) / traj.h, J, traj.h)
        assert np.linalg.norm(read - rec.momentum) < 1e-10


def test_trajectory_spectrum_preserved():
    traj = run_trajectory(base_config(steps=1000))
    e0 = np.sort(np.linalg.eigvalsh(1j * traj[0].momentum))
    worst = 0.0
    for rec in traj:
        e = np.sort(np.linalg.eigvalsh(1j * rec.momentum))
        worst = max(worst, np.max(np.abs(e - e0)))
    assert worst < 1e-12


def test_trajectory_velocity_initialization():
    xi0_coords = [0.3, -0.1, 0.2]
    xi0 = from_coords(np.array(xi0_coords), 3)
    traj = run_trajectory(base_config(steps=5, initial={"xi0": xi0_coords}))
    # seed transport is exp(-h xi0)
    assert np.linalg.norm(traj[0].f - exp(-0.01 * xi0)) < 1e-14
    # recorded momentum is the discrete Legendre read of the seed
    assert np.linalg.norm(traj[0].momentum
                          - mv_momentum(traj[0].f, J123) / 0.01) < 1e-13


def test_trajectory_g0_initialization(rng):
    g0 = random_rotation(rng, 3)
    cfg = base_config(steps=3, initial={"Pi0": [0.4, -0.3, 0.5],
                                        "g0": list(g0.reshape(-1))})
    traj = run_trajectory(cfg)
    assert np.allclose(traj[0].g, g0)


def test_trajectory_branch_error_carries_step():
    # step large enough that the required transport leaves the log chart
    cfg = base_config(method="dep_chart", h=0.8,
                      initial={"Pi0": [14.0, -10.0, 12.0]}, steps=50)
    with pytest.raises(TrajectoryError) as exc:
        run_trajectory(cfg)
    assert exc.value.step >= 0
    assert "step" in str(exc.value) or "initialization" in str(exc.value)
    assert isinstance(exc.value.cause, BranchCutError)


def test_trajectory_projection_cadence():
    traj = run_trajectory(base_config(steps=250, project_every=100))
    corr_steps = [r.step for r in traj if r.correction > 0.0]
    assert set(corr_steps) <= {100, 200}
    for rec in traj:
        assert np.linalg.norm(rec.g @ rec.g.T - np.eye(3)) < 1e-12


def test_right_side_mirrors_left(rng):
    pi = [0.4, -0.3, 0.5]
    left = run_trajectory(base_config(steps=20, initial={"Pi0": [-x for x in pi]}))
    right = run_trajectory(base_config(steps=20, side="right", initial={"Pi0": pi}))
    for rl, rr in zip(left, right):
        assert np.array_equal(rr.f, rl.f.T)
        assert np.array_equal(rr.g, rl.g.T)
        assert np.array_equal(rr.momentum, -rl.momentum)
        assert rr.energy == rl.energy


def test_right_side_reconstruction_identity():
    traj = run_trajectory(base_config(steps=50, side="right"))
    for k in range(1, len(traj)):
        f_def = traj[k - 1].g @ traj[k].g.T
        assert np.linalg.norm(f_def - traj[k - 1].f) < 1e-12


def test_right_side_dlp_transport():
    traj = run_trajectory(base_config(steps=30, side="right"))
    for k in range(1, len(traj)):
        want = dlp_step(traj[k - 1].momentum, traj[k - 1].f, "right")
        assert np.linalg.norm(want - traj[k].momentum) < 1e-13


@pytest.mark.parametrize("method", ["splitting_first", "splitting_leapfrog", "rk4"])
def test_trajectory_momentum_methods(method):
    cfg = base_config(method=method, steps=100)
    traj = run_trajectory(cfg)
    assert len(traj) == 101
    assert np.allclose(traj[0].f, np.eye(3))
    assert traj[-1].newton_iters == 0
    # splitting preserves the norm to round-off; rk4 does not have to
    if method != "rk4":
        n0 = np.linalg.norm(traj[0].momentum)
        for rec in traj:
            assert abs(np.linalg.norm(rec.momentum) - n0) < 1e-12


def test_energy_bounded_oscillation_scales_with_h_squared():
    # fit the oscillation constant on a short coarse run, then verify the
    # h^2 bound on a long fine run (safety factor 3 stored here)
    def max_rel_energy_drift(h, steps):
        traj = run_trajectory(base_config(h=h, steps=steps))
        e = traj.energies()
        return float(np.max(np.abs(e - e[0])) / e[0])

    c_fit = max_rel_energy_drift(0.04, 1000) / 0.04 ** 2
    long_drift = max_rel_energy_drift(0.01, 100_000)
    assert long_drift <= 3.0 * c_fit * 0.01 ** 2
