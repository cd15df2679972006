"""Run configuration: YAML schema, defaults and validation."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .collision import CollisionModel
from .errors import ConfigurationError
from .slip import AccommodationLaw

SCHEMA_VERSION = 1
EXPERIMENTS = ("kinetic-run", "cns-run", "converge", "slip-verify", "crosscheck", "knudsen", "slip-coeffs", "classify")


@dataclass
class RunConfig:
    """Flat run configuration; every key may appear in the YAML file.

    ``epsilons`` must be strictly decreasing.  For the power-law accommodation
    law every (epsilon, beta) pair used by the run must give chi eps^beta <= 1.
    """

    schema_version: int = SCHEMA_VERSION
    experiment: str = "converge"
    epsilons: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    law: str = "power-law"
    beta: float = 0.5
    betas: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    chi: float = 1.0
    model: str = "bgk-constant-nu"
    nu0: float | None = 1.0
    sonine_order: int = 3
    cells: int = 64
    control_cells: int = 128
    fluid_cells: int = 256
    lattice_counts: list = field(default_factory=lambda: [24, 24, 24])
    v_max: float = 6.0
    wall_speed: float = 0.1
    theta_left: float = 1.0
    theta_right: float = 1.0
    t_end: float = 0.5
    snapshots: int = 2
    steady: bool = True
    amplitude_lambda: float = 1.0
    weight_k: float = 4.0
    tolerance: float = 1e-8
    variant: str = "shear"
    output_dir: str = "results"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(f"schema_version {self.schema_version} is not supported (expected {SCHEMA_VERSION})")
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        eps = [float(e) for e in self.epsilons]
        if not eps or any(e <= 0 for e in eps):
            raise ConfigurationError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("epsilons must be strictly decreasing")
        self.epsilons = eps
        if self.law not in ("power-law", "specular"):
            raise ConfigurationError("law must be 'power-law' or 'specular'")
        betas = [float(b) for b in self.betas] + [float(self.beta)]
        if self.law == "power-law":
            if any(b <= 0 for b in betas):
                raise ConfigurationError("beta must be positive")
            if self.chi < 0:
                raise ConfigurationError("chi must be nonnegative")
            for e in eps:
                for b in betas:
                    if self.chi * e**b > 1.0:
                        raise ConfigurationError(f"chi * eps^beta = {self.chi * e**b:.3g} > 1 at eps={e}, beta={b}")
        if self.cells < 8 or self.control_cells < self.cells or self.fluid_cells < self.cells:
            raise ConfigurationError("cells >= 8 and control/fluid resolutions at least as fine as cells")
        if self.fluid_cells % self.cells:
            raise ConfigurationError("fluid_cells must be a multiple of cells")
        if len(self.lattice_counts) != 3 or min(self.lattice_counts) < 4:
            raise ConfigurationError("lattice_counts needs three entries >= 4")
        if self.theta_left <= 0 or self.theta_right <= 0:
            raise ConfigurationError("wall temperatures must be positive")
        if self.t_end <= 0 or self.snapshots < 1:
            raise ConfigurationError("t_end must be positive and snapshots >= 1")
        if self.weight_k < 3.5:
            raise ConfigurationError("weight exponent k must be at least 7/2")

    def collision_model(self) -> CollisionModel:
        nu0 = self.nu0 if self.model == "bgk-constant-nu" else None
        return CollisionModel(kind=self.model, nu0=nu0, sonine_order=self.sonine_order)

    def accommodation(self, beta: float | None = None) -> AccommodationLaw:
        if self.law == "specular":
            return AccommodationLaw(kind="specular")
        return AccommodationLaw(kind="power-law", chi=self.chi, beta=self.beta if beta is None else beta)

    def to_dict(self) -> dict:
        return dict(sorted(asdict(self).items()))

    def replace(self, **changes) -> "RunConfig":
        data = asdict(self)
        data.update(changes)
        return RunConfig(**data)


def config_from_mapping(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {unknown}")
    if "schema_version" not in data:
        raise ConfigurationError("configuration needs a schema_version field")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_mapping(data or {})
