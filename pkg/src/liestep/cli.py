"""Command-line entry points: simulate, check, convergence, compare.

Exit codes: 0 success, 1 validation/parse failure, 2 solver divergence or
chart breakdown, 3 I/O failure.  Set LIESTEP_LOG=debug|info|warning to
control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import cli_io, diagnostics
from .config import SimulationConfig
from .errors import (
    BranchCutError,
    IoError,
    LiestepError,
    NewtonDivergenceError,
    ParseError,
    SchemaMismatchError,
    TrajectoryError,
    ValidationError,
)
from .integrators import mv_equivalence_check, run_trajectory
from .lie_core import (
    Ad,
    cayley,
    chi_op,
    coAd,
    coords,
    dim_so,
    exp,
    from_coords,
    iex_op,
    log,
    pairing,
    skew_part,
)

logger = logging.getLogger("liestep")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def _setup_logging():
    level = os.environ.get("LIESTEP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_with_overrides(args) -> SimulationConfig:
    config = cli_io.load_config(args.config)
    overrides = {}
    if getattr(args, "method", None):
        overrides["method"] = args.method
    if getattr(args, "steps", None) is not None:
        overrides["steps"] = args.steps
    if getattr(args, "h", None) is not None:
        overrides["h"] = args.h
    if getattr(args, "output", None):
        overrides["output_path"] = args.output
    if getattr(args, "format", None):
        overrides["output_format"] = args.format
    if overrides:
        config = config.with_overrides(**overrides)
    return config


def cmd_simulate(args) -> int:
    config = _load_with_overrides(args)
    traj = run_trajectory(config)
    out = config.output_path
    if out:
        cli_io.ensure_parent_dir(out)
        cli_io.write_trajectory(traj, out, config.output_format)
        print(f"wrote {len(traj)} records to {out} ({config.output_format})")
    else:
        last = traj[-1]
        print(f"{config.method} side={config.side}: {len(traj)} records, "
              f"final energy {last.energy:.12g}, final residual {last.residual:.3g}")
    return EXIT_OK


def _check_rows(config: SimulationConfig):
    """The invariant table: (name, measured value, threshold)."""
    rng = np.random.default_rng(config.seed)
    n = config.n
    J = config.inertia()
    rows = []

    def rand_skew(scale=1.0):
        a = rng.standard_normal((n, n))
        s = skew_part(a)
        return s / max(np.linalg.norm(s), 1e-12) * scale

    worst = 0.0
    for _ in range(50):
        for m in (exp(rand_skew(rng.uniform(0.1, 2.0))),
                  cayley(rand_skew(rng.uniform(0.1, 2.0)))):
            worst = max(worst, float(np.linalg.norm(m @ m.T - np.eye(n))),
                        abs(float(np.linalg.det(m)) - 1.0))
    rows.append(("group invariants (exp/cayley outputs)", worst, 1e-10))

    worst = 0.0
    for _ in range(50):
        xi = rand_skew(rng.uniform(0.05, np.pi - 0.2))
        worst = max(worst, float(np.linalg.norm(log(exp(xi)) - xi)))
    rows.append(("exp/log round trip", worst, 1e-12))

    worst = 0.0
    for _ in range(50):
        xi = rand_skew(rng.uniform(0.05, 1.0))
        d = dim_so(n)
        worst = max(worst, float(np.linalg.norm(chi_op(xi) @ iex_op(xi) - np.eye(d))))
    rows.append(("chi o iex identity", worst, 1e-13))

    worst = 0.0
    t = 1e-5
    for _ in range(25):
        eta = rand_skew(rng.uniform(0.1, 1.0))
        delta = rand_skew(1.0)
        fd = (exp(eta + t * delta) - exp(eta - t * delta)) / (2 * t)
        an = exp(eta) @ from_coords(iex_op(eta) @ coords(delta), n)
        worst = max(worst, float(np.linalg.norm(fd - an) / np.linalg.norm(an)))
    rows.append(("derivative-of-exp finite difference", worst, 1e-6))

    worst = 0.0
    for _ in range(50):
        g = exp(rand_skew(rng.uniform(0.1, 2.0)))
        mu = rand_skew(1.0)
        xi = rand_skew(1.0)
        worst = max(worst, abs(pairing(coAd(g, mu), xi) - pairing(mu, Ad(g, xi))))
    rows.append(("coadjoint duality", worst, 1e-13))

    traj = run_trajectory(config)
    cas = diagnostics.casimir_drift(traj)
    rows.append(("casimir drift (trajectory)", cas.max_abs_drift, 1e-9))
    en = diagnostics.energy_drift(traj)
    geometric = ("dep_mv", "dep_chart", "splitting_first", "splitting_leapfrog")
    if config.method in geometric and len(traj) >= 10_000:
        # the trend test is defined for >= 1e4 samples
        rows.append(("energy secular slope (z-score)",
                     abs(en.secular_slope) / en.slope_stderr if en.slope_stderr > 0 else 0.0,
                     3.0))
    if config.method in ("dep_mv", "dep_chart"):
        noe = diagnostics.noether_check(traj)
        rows.append(("noether transported momentum drift", noe.max_abs_drift, 1e-9))
        recon_worst = 0.0
        for k in range(1, len(traj)):
            f_def = traj[k].g.T @ traj[k - 1].g if config.side == "left" \
                else traj[k - 1].g @ traj[k].g.T
            recon_worst = max(recon_worst,
                              float(np.linalg.norm(f_def - traj[k - 1].f)))
        rows.append(("reconstruction defining identity", recon_worst, 1e-9))
    if config.method == "dep_mv":
        worst = 0.0
        for k in range(1, len(traj)):
            res = mv_equivalence_check(traj[k - 1].f, traj[k].f, J)
            worst = max(worst, res.dep, res.transport, res.invariant)
        rows.append(("moser-veselov equivalence residuals", worst, 1e-10))
    return rows


def cmd_check(args) -> int:
    config = _load_with_overrides(args)
    rows = _check_rows(config)
    width = max(len(r[0]) for r in rows)
    print(f"{'check'.ljust(width)}  {'value':>12}  {'threshold':>10}  status")
    ok = True
    for name, value, threshold in rows:
        passed = value < threshold
        ok = ok and passed
        print(f"{name.ljust(width)}  {value:12.3e}  {threshold:10.0e}  "
              f"{'pass' if passed else 'FAIL'}")
    print(f"overall: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_convergence(args) -> int:
    config = _load_with_overrides(args)
    Pi0 = config.initial_momentum()
    if Pi0 is None:
        xi0 = config.initial_velocity()
        Pi0 = config.inertia().pair_sums * xi0
    h_list = args.h_list or [0.2, 0.1, 0.05, 0.025]
    report = diagnostics.convergence_study(config.method, config.inertia(), Pi0,
                                           h_list, t_final=args.t_final,
                                           newton=config.newton)
    print(f"{config.method}: fitted order {report.slope:.3f} "
          f"(errors {['%.3g' % e for e in report.errors]} vs {report.reference})")
    out = config.output_path
    if out:
        cli_io.ensure_parent_dir(out)
        cli_io.write_report(report, out)
        print(f"wrote report to {out}")
        if not args.no_figures:
            from .plots import render_convergence_figure
            fig_path = os.path.splitext(out)[0] + ".png"
            render_convergence_figure(report, fig_path)
            print(f"wrote figure to {fig_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_with_overrides(args)
    Pi0 = config.initial_momentum()
    if Pi0 is None:
        xi0 = config.initial_velocity()
        Pi0 = config.inertia().pair_sums * xi0
    methods = ("dep_mv", "splitting_leapfrog", "rk4")
    casimir = {}
    energy = {}
    times = None
    for method in methods:
        cfg = config.with_overrides(method=method, side="left",
                                    initial={"Pi0": list(coords(Pi0))})
        traj = run_trajectory(cfg)
        if times is None:
            times = np.array([r.t for r in traj])
        cas = diagnostics.casimir_drift(traj)
        en = diagnostics.energy_drift(traj)
        casimir[method] = cas.drift
        energy[method] = en.drift
        print(f"{method:20s} casimir drift {cas.max_abs_drift:.3e}  "
              f"energy drift {en.max_abs_drift:.3e}")
    out = config.output_path
    if out:
        cli_io.ensure_parent_dir(out)
        _write_compare_csv(out, times, methods, casimir, energy)
        print(f"wrote joint drift table to {out}")
        if not args.no_figures:
            from .plots import render_compare_figure
            fig_path = os.path.splitext(out)[0] + ".png"
            render_compare_figure(times, casimir, energy, fig_path)
            print(f"wrote figure to {fig_path}")
    return EXIT_OK


def _write_compare_csv(path, times, methods, casimir, energy):
    import csv as _csv
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh, lineterminator="\n")
            header = ["step", "t"]
            header += [f"casimir_drift_{m}" for m in methods]
            header += [f"energy_drift_{m}" for m in methods]
            writer.writerow(header)
            for k, t in enumerate(times):
                row = [str(k), repr(float(t))]
                row += [repr(float(casimir[m][k])) for m in methods]
                row += [repr(float(energy[m][k])) for m in methods]
                writer.writerow(row)
    except OSError as e:
        raise IoError(f"cannot write comparison table {path}: {e}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liestep",
        description="Structure-preserving integrators for rigid-body dynamics on SO(n)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to a JSON run configuration")
        p.add_argument("--output", help="output path (overrides config)")
        p.add_argument("--format", choices=("csv", "json"), help="output format override")
        p.add_argument("--method", help="method override")
        p.add_argument("--steps", type=int, help="step-count override")
        p.add_argument("--h", type=float, help="time-step override")

    p = sub.add_parser("simulate", help="run one trajectory and persist it")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("check", help="run the invariant suite and print a pass/fail table")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("convergence", help="measure the method's convergence order")
    common(p)
    p.add_argument("--h-list", type=float, nargs="+", help="step sizes (>= 4, geometric)")
    p.add_argument("--t-final", type=float, default=2.0)
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(fn=cmd_convergence)

    p = sub.add_parser("compare",
                       help="run dep_mv, splitting_leapfrog and rk4 on shared initial data")
    common(p)
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError, SchemaMismatchError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NewtonDivergenceError, BranchCutError, TrajectoryError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (IoError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except LiestepError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
