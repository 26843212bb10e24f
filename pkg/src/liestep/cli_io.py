"""Config and trajectory persistence: JSON configs, CSV/JSON trajectories.

Floats are written as shortest-round-trip decimal (17 significant digits
suffice), so save/load cycles are exact.  Trajectory files carry a header
comment with the schema version and run metadata; matrices re-pass their
type invariants on read.

CSV column order (documented, fixed):
    step, t, f_00..f_{n-1,n-1}, g_00..g_{n-1,n-1}, pi_0..pi_{d-1},
    energy, casimir_2, casimir_4, ..., newton_iters, residual, correction
where pi_* are the upper-triangle coordinates of the momentum in the
fixed so(n) basis.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .config import (
    SCHEMA_VERSION,
    NewtonConfig,
    SimulationConfig,
    Trajectory,
    TrajectoryRecord,
)
from .errors import IoError, ParseError, SchemaMismatchError, ValidationError
from .lie_core import ORTH_TOL, as_rotation, coords, dim_so, from_coords, require_skew

_CONFIG_KEYS = {"schema_version", "n", "lambda", "h", "steps", "method", "side",
                "initial", "newton", "project_every", "seed", "output"}
_NEWTON_KEYS = {"tol_residual", "max_iters", "initial_guess"}
_INITIAL_KEYS = {"Pi0", "xi0", "g0"}


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def config_from_dict(data: dict) -> SimulationConfig:
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaMismatchError(f"config schema_version {version} != {SCHEMA_VERSION}")
    for key in ("n", "lambda", "h", "steps"):
        if key not in data:
            raise ValidationError(f"config is missing required field {key!r}")
    newton_data = data.get("newton", {})
    unknown = set(newton_data) - _NEWTON_KEYS
    if unknown:
        raise ValidationError(f"unknown newton fields: {sorted(unknown)}")
    initial = data.get("initial", {})
    unknown = set(initial) - _INITIAL_KEYS
    if unknown:
        raise ValidationError(f"unknown initial fields: {sorted(unknown)}")
    output = data.get("output", {})
    unknown = set(output) - {"path", "format"}
    if unknown:
        raise ValidationError(f"unknown output fields: {sorted(unknown)}")
    return SimulationConfig(
        n=int(data["n"]),
        lam=tuple(float(x) for x in data["lambda"]),
        h=float(data["h"]),
        steps=int(data["steps"]),
        method=data.get("method", "dep_mv"),
        side=data.get("side", "left"),
        initial=dict(initial),
        newton=NewtonConfig(**newton_data),
        project_every=int(data.get("project_every", 100)),
        seed=int(data.get("seed", 0)),
        output_path=output.get("path"),
        output_format=output.get("format", "csv"),
    )


def config_to_dict(config: SimulationConfig) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "n": config.n,
        "lambda": [float(x) for x in config.lam],
        "h": config.h,
        "steps": config.steps,
        "method": config.method,
        "side": config.side,
        "initial": {k: (list(np.asarray(v, dtype=float).reshape(-1)))
                    for k, v in config.initial.items()},
        "newton": {
            "tol_residual": config.newton.tol_residual,
            "max_iters": config.newton.max_iters,
            "initial_guess": config.newton.initial_guess,
        },
        "project_every": config.project_every,
        "seed": config.seed,
    }
    if config.output_path is not None or config.output_format != "csv":
        out["output"] = {"format": config.output_format}
        if config.output_path is not None:
            out["output"]["path"] = config.output_path
    return out


def load_config(path: str) -> SimulationConfig:
    """Load and fully validate a run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: "
                                 f"{e.msg}") from e
    except OSError as e:
        raise IoError(f"cannot read config {path}: {e}") from e
    return config_from_dict(data)


def save_config(config: SimulationConfig, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(config_to_dict(config), fh, indent=2)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write config {path}: {e}") from e


# ---------------------------------------------------------------------------
# trajectory files
# ---------------------------------------------------------------------------

def _columns(n: int) -> list:
    d = dim_so(n)
    cols = ["step", "t"]
    cols += [f"f_{i}{j}" for i in range(n) for j in range(n)]
    cols += [f"g_{i}{j}" for i in range(n) for j in range(n)]
    cols += [f"pi_{k}" for k in range(d)]
    cols += ["energy"]
    cols += [f"casimir_{2 * (m + 1)}" for m in range(n // 2)]
    cols += ["newton_iters", "residual", "correction"]
    return cols


def _record_row(rec: TrajectoryRecord) -> list:
    row = [str(rec.step), _fmt(rec.t)]
    row += [_fmt(x) for x in rec.f.reshape(-1)]
    row += [_fmt(x) for x in rec.g.reshape(-1)]
    row += [_fmt(x) for x in coords(rec.momentum)]
    row += [_fmt(rec.energy)]
    row += [_fmt(c) for c in rec.casimirs]
    row += [str(rec.newton_iters), _fmt(rec.residual), _fmt(rec.correction)]
    return row


def _record_from_values(n: int, vals: dict) -> TrajectoryRecord:
    d = dim_so(n)
    f = np.array([vals[f"f_{i}{j}"] for i in range(n) for j in range(n)]).reshape(n, n)
    g = np.array([vals[f"g_{i}{j}"] for i in range(n) for j in range(n)]).reshape(n, n)
    pi = from_coords(np.array([vals[f"pi_{k}"] for k in range(d)]), n)
    as_rotation(f, tol=ORTH_TOL, name="persisted f")
    as_rotation(g, tol=ORTH_TOL, name="persisted g")
    require_skew(pi, name="persisted momentum")
    casimirs = tuple(vals[f"casimir_{2 * (m + 1)}"] for m in range(n // 2))
    return TrajectoryRecord(
        step=int(vals["step"]), t=vals["t"], f=f, g=g, momentum=pi,
        energy=vals["energy"], casimirs=casimirs,
        newton_iters=int(vals["newton_iters"]), residual=vals["residual"],
        correction=vals["correction"])


def _meta_line(traj: Trajectory) -> str:
    c = traj.config
    lam = ",".join(_fmt(x) for x in c.lam)
    return (f"# liestep-trajectory schema_version={SCHEMA_VERSION} n={c.n} "
            f"method={c.method} side={c.side} h={_fmt(c.h)} lambda={lam}")


def _parse_meta(line: str) -> dict:
    if not line.startswith("# liestep-trajectory "):
        raise SchemaMismatchError("missing trajectory header comment")
    meta = {}
    for tok in line[len("# liestep-trajectory "):].strip().split():
        key, _, val = tok.partition("=")
        meta[key] = val
    if int(meta.get("schema_version", -1)) != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"trajectory schema_version {meta.get('schema_version')} != {SCHEMA_VERSION}")
    return meta


def _config_from_meta(meta: dict, steps: int) -> SimulationConfig:
    lam = tuple(float(x) for x in meta["lambda"].split(","))
    d = dim_so(int(meta["n"]))
    # placeholder initial data: sufficient to interpret the records
    initial = {"Pi0": [0.0] * d}
    return SimulationConfig(n=int(meta["n"]), lam=lam, h=float(meta["h"]),
                            steps=steps, method=meta["method"], side=meta["side"],
                            initial=initial)


def write_trajectory(traj: Trajectory, path: str, fmt: str = "csv") -> None:
    """Persist a trajectory as CSV or JSON (documented column order)."""
    if fmt == "csv":
        _write_csv(traj, path)
    elif fmt == "json":
        _write_json(traj, path)
    else:
        raise ValidationError(f"format must be 'csv' or 'json', got {fmt!r}")


def _write_csv(traj: Trajectory, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(_meta_line(traj) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_columns(traj.n))
            for rec in traj:
                writer.writerow(_record_row(rec))
    except OSError as e:
        raise IoError(f"cannot write trajectory {path}: {e}") from e


def _write_json(traj: Trajectory, path: str) -> None:
    cols = _columns(traj.n)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "n": traj.n,
        "method": traj.method,
        "side": traj.side,
        "h": traj.h,
        "lambda": [float(x) for x in traj.config.lam],
        "columns": cols,
        "records": [
            {k: (int(v) if k in ("step", "newton_iters") else float(v))
             for k, v in zip(cols, _typed_row(rec))}
            for rec in traj
        ],
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write trajectory {path}: {e}") from e


def _typed_row(rec: TrajectoryRecord) -> list:
    row = [rec.step, rec.t]
    row += list(rec.f.reshape(-1))
    row += list(rec.g.reshape(-1))
    row += list(coords(rec.momentum))
    row += [rec.energy]
    row += list(rec.casimirs)
    row += [rec.newton_iters, rec.residual, rec.correction]
    return row


def read_trajectory(path: str) -> Trajectory:
    """Read a trajectory written by write_trajectory; validates invariants."""
    if path.endswith(".json"):
        return _read_json(path)
    return _read_csv(path)


def _read_csv(path: str) -> Trajectory:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            first = fh.readline().rstrip("\n")
            meta = _parse_meta(first)
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaMismatchError("trajectory file has no column header") from None
            expected = _columns(int(meta["n"]))
            if header != expected:
                raise SchemaMismatchError(
                    f"column header mismatch: expected {expected[:4]}..., got {header[:4]}...")
            records = []
            for row in reader:
                vals = {k: (v if k in ("step", "newton_iters") else float(v))
                        for k, v in zip(header, row)}
                records.append(_record_from_values(int(meta["n"]), vals))
    except OSError as e:
        raise IoError(f"cannot read trajectory {path}: {e}") from e
    cfg = _config_from_meta(meta, steps=max(len(records) - 1, 0))
    return Trajectory(cfg, records)


def _read_json(path: str) -> Trajectory:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    except OSError as e:
        raise IoError(f"cannot read trajectory {path}: {e}") from e
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"trajectory schema_version {payload.get('schema_version')} != {SCHEMA_VERSION}")
    n = int(payload["n"])
    expected = _columns(n)
    if payload.get("columns") != expected:
        raise SchemaMismatchError("column list mismatch in JSON trajectory")
    records = [_record_from_values(n, rec) for rec in payload["records"]]
    meta = {"n": str(n), "method": payload["method"], "side": payload["side"],
            "h": repr(payload["h"]),
            "lambda": ",".join(repr(float(x)) for x in payload["lambda"]),
            "schema_version": str(SCHEMA_VERSION)}
    cfg = _config_from_meta(meta, steps=max(len(records) - 1, 0))
    return Trajectory(cfg, records)


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def write_report(report, path: str) -> None:
    """Serialize a DriftReport or OrderReport to JSON."""
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(report.to_dict())
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write report {path}: {e}") from e


def ensure_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if parent and not os.path.isdir(parent):
        raise IoError(f"output directory does not exist: {parent}")
