"""Containers for fluid fields and slab distributions, plus moment extraction."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateStateError
from .lattice import VelocityLattice

VACUUM = 1e-12


@dataclass
class FluidFields:
    """(rho, u, theta) on cell centres of a slab grid; arrays broadcast over cells."""

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    x: np.ndarray | None = None
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.u.shape[-1:] != (3,):
            raise ValueError("u must have a trailing axis of length 3")

    def copy(self) -> "FluidFields":
        return replace(self, rho=self.rho.copy(), u=self.u.copy(), theta=self.theta.copy())

    def conserved(self) -> np.ndarray:
        """(rho, rho u1, rho u2, rho u3, E) with E = rho |u|^2/2 + 3 rho theta/2; shape (..., 5)."""
        rho = self.rho
        mom = rho[..., None] * self.u
        energy = 0.5 * rho * np.sum(self.u**2, axis=-1) + 1.5 * rho * self.theta
        return np.concatenate([rho[..., None], mom, energy[..., None]], axis=-1)

    @classmethod
    def from_conserved(cls, q: np.ndarray, x=None, time: float = 0.0) -> "FluidFields":
        rho = q[..., 0]
        u = q[..., 1:4] / rho[..., None]
        theta = (q[..., 4] - 0.5 * rho * np.sum(u * u, axis=-1)) / (1.5 * rho)
        return cls(rho=rho, u=u, theta=theta, x=x, time=time)


@dataclass
class KineticDistribution:
    """F(x_j, v_k) on a slab grid times a velocity lattice."""

    values: np.ndarray
    lattice: VelocityLattice
    x: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def copy(self) -> "KineticDistribution":
        return replace(self, values=self.values.copy(), meta=dict(self.meta))

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if self.x.size > 1 else 1.0


def conserved_moments(values: np.ndarray, lattice: VelocityLattice) -> np.ndarray:
    """Mass, momentum and energy densities of F; shape (..., 5)."""
    v = lattice.nodes
    w = lattice.weights
    basis = np.column_stack([np.ones(lattice.size), v, 0.5 * np.sum(v * v, axis=1)]) * w[:, None]
    return values @ basis


def moments(values: np.ndarray, lattice: VelocityLattice, x=None, time: float = 0.0) -> FluidFields:
    """(rho, u, theta) of F, cell by cell."""
    q = conserved_moments(values, lattice)
    if np.any(q[..., 0] < VACUUM):
        raise DegenerateStateError("vacuum cell: density below 1e-12", min_density=float(q[..., 0].min()))
    return FluidFields.from_conserved(q, x=x, time=time)
