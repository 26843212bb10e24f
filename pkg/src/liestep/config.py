"""Run configuration and trajectory records shared by the solver and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .lie_core import ORTH_TOL, as_rotation, dim_so, from_coords
from .rigid_body import Inertia

SCHEMA_VERSION = 1

METHODS = ("dep_mv", "dep_chart", "splitting_first", "splitting_leapfrog", "rk4")
SIDES = ("left", "right")
MOMENTUM_ONLY_METHODS = ("splitting_first", "splitting_leapfrog", "rk4")


@dataclass(frozen=True)
class NewtonConfig:
    """Implicit-solve settings (Frobenius residual tolerance)."""

    tol_residual: float = 1e-12
    max_iters: int = 50
    initial_guess: str = "previous_step"

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValidationError("tol_residual must be > 0")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.initial_guess not in ("previous_step", "identity"):
            raise ValidationError(
                f"initial_guess must be 'previous_step' or 'identity', got {self.initial_guess!r}")


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to reproduce one trajectory run.

    `initial` is either momentum data {"Pi0": coords} or configuration
    data {"g0": row-major matrix (optional), "xi0": coords}; coordinates
    use the fixed so(n) basis (strict upper triangle, lexicographic).
    """

    n: int
    lam: tuple
    h: float
    steps: int
    method: str = "dep_mv"
    side: str = "left"
    initial: dict = field(default_factory=dict)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    project_every: int = 100
    seed: int = 0
    output_path: str | None = None
    output_format: str = "csv"

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        if len(self.lam) != self.n:
            raise ValidationError(f"lambda must have length n = {self.n}")
        Inertia(np.asarray(self.lam, dtype=float))  # raises on Lambda_i + Lambda_j <= 0
        if not self.h > 0:
            raise ValidationError("h must be > 0")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.side not in SIDES:
            raise ValidationError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.method in ("splitting_first", "splitting_leapfrog") and self.n != 3:
            raise ValidationError("splitting methods require n = 3")
        if self.project_every < 1:
            raise ValidationError("project_every must be >= 1")
        if self.output_format not in ("csv", "json"):
            raise ValidationError(f"output format must be 'csv' or 'json', got {self.output_format!r}")
        self._validated_initial()

    def _validated_initial(self):
        d = dim_so(self.n)
        init = self.initial
        has_pi = "Pi0" in init
        has_xi = "xi0" in init
        if has_pi == has_xi:
            raise ValidationError("initial must contain exactly one of 'Pi0' or 'xi0'")
        if self.method in MOMENTUM_ONLY_METHODS and not has_pi:
            raise ValidationError(f"method {self.method!r} requires momentum initial data 'Pi0'")
        key = "Pi0" if has_pi else "xi0"
        v = np.asarray(init[key], dtype=float)
        if v.shape != (d,):
            raise ValidationError(f"initial {key} must have {d} coordinates for so({self.n})")
        if "g0" in init:
            g0 = np.asarray(init["g0"], dtype=float).reshape(self.n, self.n)
            as_rotation(g0, tol=ORTH_TOL, name="initial g0")

    # --- convenience accessors -------------------------------------------

    def inertia(self) -> Inertia:
        return Inertia(np.asarray(self.lam, dtype=float))

    def initial_momentum(self) -> np.ndarray | None:
        if "Pi0" in self.initial:
            return from_coords(np.asarray(self.initial["Pi0"], dtype=float), self.n)
        return None

    def initial_velocity(self) -> np.ndarray | None:
        if "xi0" in self.initial:
            return from_coords(np.asarray(self.initial["xi0"], dtype=float), self.n)
        return None

    def initial_configuration(self) -> np.ndarray:
        if "g0" in self.initial:
            return np.asarray(self.initial["g0"], dtype=float).reshape(self.n, self.n)
        return np.eye(self.n)

    def with_overrides(self, **kwargs) -> "SimulationConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One step of a run: state, diagnostics, and solver statistics.

    For the implicit methods `f` is the reduced transport leaving this
    state (so momentum and f stay linked by the discrete Legendre
    relation); for momentum-only baselines f and g are identity.
    """

    step: int
    t: float
    f: np.ndarray
    g: np.ndarray
    momentum: np.ndarray
    energy: float
    casimirs: tuple
    newton_iters: int = 0
    residual: float = 0.0
    correction: float = 0.0


class Trajectory:
    """A run's record sequence plus the metadata needed to interpret it."""

    def __init__(self, config: SimulationConfig, records: list):
        self.config = config
        self.records = list(records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def __iter__(self):
        return iter(self.records)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def h(self) -> float:
        return self.config.h

    @property
    def method(self) -> str:
        return self.config.method

    @property
    def side(self) -> str:
        return self.config.side

    def inertia(self) -> Inertia:
        return self.config.inertia()

    def momenta(self) -> np.ndarray:
        return np.stack([r.momentum for r in self.records])

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def casimir_values(self) -> np.ndarray:
        return np.array([r.casimirs for r in self.records])
