"""Invariant-drift reports, the symplectic-form probe, and order studies.

Reports are pure functions of their inputs: a fixed trajectory produces a
bitwise-identical report (sums are evaluated in a fixed order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import SplittingScheme, rk4_step, splitting_step
from .config import NewtonConfig, Trajectory
from .errors import ValidationError
from .integrators import (
    _solve_chart,
    _solve_mv,
    chart_legendre_init,
    chart_momentum,
    dlp_step,
    mv_legendre_init,
    mv_momentum,
    mv_transport_rhs,
)
from .lie_core import cayley_inv, coords, exp, hat, log, vee
from .rigid_body import Inertia


# ---------------------------------------------------------------------------
# drift reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftReport:
    """Per-step values of a conserved quantity and its drift statistics.

    `values` has one row per step; drift is measured against step 0,
    per component, and summarized by the max row-wise absolute drift.
    The secular slope is the least-squares slope of |drift| against the
    step index, with `secular` true when it differs from zero at the
    3-sigma level.
    """

    name: str
    component_names: tuple
    values: np.ndarray
    max_abs_drift: float
    max_rel_drift: float
    secular_slope: float
    slope_stderr: float
    secular: bool

    @property
    def drift(self) -> np.ndarray:
        return np.max(np.abs(self.values - self.values[0]), axis=1)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "component_names": list(self.component_names),
            "values": self.values.tolist(),
            "max_abs_drift": self.max_abs_drift,
            "max_rel_drift": self.max_rel_drift,
            "secular_slope": self.secular_slope,
            "slope_stderr": self.slope_stderr,
            "secular": self.secular,
        }


def _ols_slope(y: np.ndarray):
    """Least-squares slope of y against the step index.

    The standard error uses a Bartlett-kernel (serial-correlation robust)
    variance with bandwidth len(y)/10: drift series are quasi-periodic,
    and the iid error formula would flag any bounded oscillation as a
    trend on windows shorter than a few periods.
    """
    m = y.size
    if m < 3:
        return 0.0, np.inf
    x = np.arange(m, dtype=float)
    cx = x - x.mean()
    sxx = float(cx @ cx)
    slope = float(cx @ (y - y.mean())) / sxx
    resid = (y - y.mean()) - slope * cx
    w = cx * resid
    bandwidth = min(max(10, m // 10), m - 1)
    var = float(w @ w)
    for lag in range(1, bandwidth + 1):
        var += 2.0 * (1.0 - lag / (bandwidth + 1.0)) * float(w[:-lag] @ w[lag:])
    return slope, float(np.sqrt(max(var, 0.0))) / sxx


def make_drift_report(name: str, component_names, values: np.ndarray) -> DriftReport:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if len(component_names) != values.shape[1]:
        raise ValidationError("component names must match the number of columns")
    drift = np.max(np.abs(values - values[0]), axis=1)
    max_abs = float(np.max(drift))
    scale = float(np.max(np.abs(values[0])))
    max_rel = max_abs / scale if scale > 0 else np.inf if max_abs > 0 else 0.0
    slope, stderr = _ols_slope(drift)
    # the trend test is only meaningful once the series is long enough to
    # average over the oscillation; below that the flag stays off
    secular = bool(values.shape[0] >= 10_000 and stderr > 0
                   and np.isfinite(stderr) and abs(slope) > 3.0 * stderr)
    return DriftReport(name, tuple(component_names), values, max_abs, max_rel,
                       slope, stderr, secular)


def momentum_spectrum(Pi: np.ndarray) -> np.ndarray:
    """Eigenvalues of the (Hermitian) matrix i*Pi, sorted ascending."""
    return np.linalg.eigvalsh(1j * Pi).real


def casimir_drift(traj: Trajectory) -> DriftReport:
    """Spectrum and even-power-trace invariants of the momentum per step."""
    n = traj.n
    spec = np.stack([momentum_spectrum(r.momentum) for r in traj])
    traces = traj.casimir_values()
    names = [f"eig_{i}" for i in range(n)] + \
            [f"trpow_{2 * (m + 1)}" for m in range(traces.shape[1])]
    return make_drift_report("casimir", names, np.hstack([spec, traces]))


def energy_drift(traj: Trajectory, J: Inertia = None) -> DriftReport:
    """Kinetic energy per step, as recorded during the run."""
    return make_drift_report("energy", ("energy",), traj.energies())


def noether_check(traj: Trajectory) -> DriftReport:
    """Transported discrete momentum along an implicit-method trajectory.

    At each step the momentum is read locally from the recorded transport
    (M(f)/2 for the Moser-Veselov scheme, in the units of the unscaled
    reduced Lagrangian; the chart momentum read for the chart scheme) and
    pulled back to the frame of step 0 with the reconstructed
    configuration.  Along exact solutions the pulled-back value is
    constant; the report measures how well the solver preserved it.
    """
    if traj.method not in ("dep_mv", "dep_chart"):
        raise ValidationError("noether_check applies to dep_mv / dep_chart trajectories")
    J = traj.inertia()
    h = traj.h
    is_mv = traj.method == "dep_mv"

    def local_momentum(f):
        if is_mv:
            return 0.5 * mv_momentum(f, J)
        return chart_momentum(log(f) / h, J, h)

    rows = []
    for r in traj:
        if traj.side == "left":
            s = r.g @ local_momentum(r.f) @ r.g.T
        else:
            s = r.g.T @ (-local_momentum(r.f.T)) @ r.g
        rows.append(coords(s))
    values = np.stack(rows)
    names = [f"coord_{i}" for i in range(values.shape[1])]
    return make_drift_report("noether_momentum", names, values)


# ---------------------------------------------------------------------------
# discrete symplectic-form probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymplecticCheckResult:
    residual: float
    omega_norm: float
    skipped: bool = False
    note: str = ""


def _fd_mixed_omega(lagrangian_pair, g1, g2, step=1e-4):
    """Mixed second derivatives of the pair Lagrangian in exp charts."""
    c = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            def val(si, sj):
                a = np.zeros(3)
                b = np.zeros(3)
                a[i] = si * step
                b[j] = sj * step
                return lagrangian_pair(exp(hat(a)) @ g1, exp(hat(b)) @ g2)
            c[i, j] = (val(1, 1) - val(1, -1) - val(-1, 1) + val(-1, -1)) / (4 * step * step)
    return c


def _omega_block_to_matrix(c: np.ndarray) -> np.ndarray:
    omega = np.zeros((6, 6))
    omega[:3, 3:] = c
    omega[3:, :3] = -c.T
    return omega


def symplectic_check(step_map, base_pair, omega_fn=None, lagrangian_pair=None,
                     fd_step: float = 1e-6) -> SymplecticCheckResult:
    """Finite-difference check that a pair map preserves the discrete form.

    `step_map(g1, g2) -> g3` advances the trailing configuration;
    the induced pair map is (g1, g2) -> (g2, g3).  `omega_fn(g1, g2)`
    must return the mixed-derivative block of the discrete two-form in
    the exponential charts x -> exp(hat(a)) x; if omitted it is assembled
    by finite differences from `lagrangian_pair`.  n = 3 only.

    Returns the Frobenius residual of J^T Omega' J - Omega with the
    Jacobian J of the pair map obtained by central differences.
    """
    g1, g2 = base_pair
    if g1.shape[0] != 3:
        raise ValidationError("symplectic_check is implemented for n = 3 chart coordinates")
    if omega_fn is None:
        if lagrangian_pair is None:
            raise ValidationError("provide omega_fn or lagrangian_pair")
        def omega_fn(a, b):
            return _fd_mixed_omega(lagrangian_pair, a, b)

    c_here = omega_fn(g1, g2)
    scale = np.linalg.norm(c_here)
    if scale < 1e-12 or np.linalg.cond(c_here) > 1e10:
        return SymplecticCheckResult(0.0, scale, skipped=True,
                                     note="degenerate discrete Lagrangian: mixed block "
                                          "singular, form check not meaningful")
    g3 = step_map(g1, g2)
    c_next = omega_fn(g2, g3)
    omega_here = _omega_block_to_matrix(c_here)
    omega_next = _omega_block_to_matrix(c_next)

    def pair_map_coords(x):
        a, b = x[:3], x[3:]
        g1x = exp(hat(a)) @ g1
        g2x = exp(hat(b)) @ g2
        g3x = step_map(g1x, g2x)
        return np.concatenate([b, vee(log(g3x @ g3.T))])

    jac = np.empty((6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = fd_step
        jac[:, i] = (pair_map_coords(e) - pair_map_coords(-e)) / (2 * fd_step)

    residual = float(np.linalg.norm(jac.T @ omega_next @ jac - omega_here))
    return SymplecticCheckResult(residual, float(np.linalg.norm(omega_here)))


def mv_symplectic_setup(J: Inertia, tol: float = 1e-14):
    """Step map and analytic form block for the Moser-Veselov pair map.

    Uses the unscaled trace Lagrangian trace(g1 Lambda g2^T); the update
    map is scale-free so the check is unaffected.  Returns
    (step_map, omega_fn).
    """
    cfg = NewtonConfig(tol_residual=tol, max_iters=100)

    def step_map(g1, g2):
        f_prev = g2.T @ g1
        f_next = _solve_mv(mv_transport_rhs(f_prev, J), J, cayley_inv(f_prev), cfg).f
        return g2 @ f_next.T

    basis = [hat(np.eye(3)[i]) for i in range(3)]

    def omega_fn(g1, g2):
        m = g1 @ np.diag(J.lam) @ g2.T
        c = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                c[i, j] = -np.trace(basis[i] @ m @ basis[j])
        return c

    return step_map, omega_fn


# ---------------------------------------------------------------------------
# convergence-order studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderReport:
    method: str
    step_sizes: tuple
    errors: tuple
    slope: float
    fit_residual: float
    reference: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "step_sizes": list(self.step_sizes),
            "errors": list(self.errors),
            "slope": self.slope,
            "fit_residual": self.fit_residual,
            "reference": self.reference,
        }


def _final_momentum(method: str, J: Inertia, Pi0: np.ndarray, h: float, nsteps: int,
                    newton: NewtonConfig) -> np.ndarray:
    if method == "dep_mv":
        f, xi, _, _ = mv_legendre_init(Pi0, J, h, newton)
        Pi = Pi0
        for _ in range(nsteps):
            Pi = dlp_step(Pi, f, "left")
            f, xi, _, _ = _solve_mv(mv_transport_rhs(f, J), J, xi, newton)
        return Pi
    if method == "dep_chart":
        zeta = chart_legendre_init(Pi0, J, h)
        Pi = Pi0
        for _ in range(nsteps):
            Pi = dlp_step(Pi, exp(h * zeta), "left")
            zeta, _, _ = _solve_chart(zeta, J, h, newton)
        return Pi
    if method in ("splitting_first", "splitting_leapfrog"):
        scheme = SplittingScheme(order="first" if method == "splitting_first" else "leapfrog")
        Pi = Pi0
        for _ in range(nsteps):
            Pi = splitting_step(Pi, J, h, scheme)
        return Pi
    if method == "rk4":
        Pi = Pi0
        for _ in range(nsteps):
            Pi = rk4_step(Pi, J, h)
        return Pi
    raise ValidationError(f"unknown method {method!r}")


def convergence_study(method: str, J: Inertia, initial: np.ndarray, h_list,
                      t_final: float = 2.0, ref_refinement: int = 100,
                      newton: NewtonConfig = None) -> OrderReport:
    """Global momentum error at a fixed final time against a fine reference.

    The reference is the classical explicit scheme at min(h)/ref_refinement.
    Requires at least four geometrically spaced step sizes, each dividing
    the final time.  Implicit methods are seeded by the momentum-consistent
    initialization, so the measured order is that of the scheme itself.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 4:
        raise ValidationError("need at least 4 step sizes")
    ratios = [h_list[i] / h_list[i + 1] for i in range(len(h_list) - 1)]
    if any(abs(r - ratios[0]) > 0.05 * ratios[0] for r in ratios) or ratios[0] <= 1.0:
        raise ValidationError("step sizes must be geometrically spaced, decreasing")
    newton = newton or NewtonConfig()
    for h in h_list:
        if abs(round(t_final / h) * h - t_final) > 1e-9 * t_final:
            raise ValidationError(f"step size {h} does not divide the final time {t_final}")

    h_ref = min(h_list) / ref_refinement
    n_ref = int(round(t_final / h_ref))
    ref = _final_momentum("rk4", J, initial, h_ref, n_ref, newton)

    errors = []
    for h in h_list:
        Pi = _final_momentum(method, J, initial, h, int(round(t_final / h)), newton)
        errors.append(float(np.linalg.norm(Pi - ref)))

    err_arr = np.array(errors)
    mask = err_arr > 0.0
    if mask.sum() >= 2:
        logs_h = np.log(np.array(h_list)[mask])
        logs_e = np.log(err_arr[mask])
        a = np.vstack([logs_h, np.ones_like(logs_h)]).T
        coef, res, _, _ = np.linalg.lstsq(a, logs_e, rcond=None)
        slope = float(coef[0])
        fit_residual = float(np.sqrt(res[0] / mask.sum())) if res.size else 0.0
    else:
        slope, fit_residual = 0.0, 0.0
    return OrderReport(method, tuple(h_list), tuple(errors), slope,
                       fit_residual, f"rk4 @ h={h_ref:g}")
