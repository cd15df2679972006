"""Collision models on a velocity lattice.

Two BGK realizations and the linearized hard-sphere operator share one
interface.  Every model is normalized at the reference Maxwellian
(rho, theta) = (1, 1); local states scale the collision frequency like
rho * sqrt(theta), which is the hard-sphere scaling, so the Chapman-Enskog
radial functions a, b do not depend on theta for any kind.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import hardsphere
from .errors import ConfigurationError
from .lattice import VelocityLattice

MODEL_KINDS = ("bgk-constant-nu", "bgk-matched-nu", "hard-sphere-linearized")


@dataclass(frozen=True)
class CollisionModel:
    """Collision model description.

    ``nu0`` is the collision frequency at the reference state for the BGK
    kinds.  For ``bgk-matched-nu`` it is derived from the hard-sphere
    viscosity at ``sonine_order`` unless ``mu_ref`` is given.
    """

    kind: str = "bgk-constant-nu"
    nu0: float | None = None
    mu_ref: float | None = None
    sonine_order: int = 3
    harmonic_degree: int = 4
    table_radius: float = 10.5
    table_points: int = 257

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigurationError(f"unsupported collision model {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.sonine_order < 1:
            raise ConfigurationError("sonine_order must be >= 1")
        nu0 = self.nu0
        if self.kind == "bgk-constant-nu":
            nu0 = 1.0 if nu0 is None else float(nu0)
        elif self.kind == "bgk-matched-nu":
            mu = self.mu_ref if self.mu_ref is not None else hardsphere.solve_chapman_enskog(self.sonine_order).viscosity
            nu0 = 1.0 / float(mu)
        else:
            nu0 = float(hardsphere.collision_frequency(np.array(0.0)))
        if not np.isfinite(nu0) or nu0 <= 0:
            raise ConfigurationError("nu0 must be positive")
        object.__setattr__(self, "nu0", nu0)

    @property
    def is_bgk(self) -> bool:
        return self.kind != "hard-sphere-linearized"

    def tables(self, theta_ref: float = 1.0) -> "ChapmanEnskogTables":
        return chapman_enskog_functions(self, theta_ref)

    @property
    def a_table(self) -> np.ndarray:
        return self.tables().a

    @property
    def b_table(self) -> np.ndarray:
        return self.tables().b

    @classmethod
    def bgk(cls, nu0: float = 1.0) -> "CollisionModel":
        return cls(kind="bgk-constant-nu", nu0=nu0)

    @classmethod
    def hard_sphere(cls, sonine_order: int = 3, harmonic_degree: int = 4) -> "CollisionModel":
        return cls(kind="hard-sphere-linearized", sonine_order=sonine_order, harmonic_degree=harmonic_degree)


class InvariantBasis:
    """Discretely orthonormal basis of span{sqrt(mu) (1, v, (|v|^2-3)/2)}."""

    def __init__(self, lattice: VelocityLattice):
        self.lattice = lattice
        v = lattice.nodes
        sq = lattice.sqrt_mu
        raw = np.stack([sq, v[:, 0] * sq, v[:, 1] * sq, v[:, 2] * sq, 0.5 * (np.sum(v * v, axis=1) - 3.0) * sq])
        self.raw = raw
        sw = np.sqrt(lattice.weights)
        q, _ = np.linalg.qr((raw * sw).T)
        # fix signs so each vector correlates positively with its raw generator
        signs = np.sign(np.sum(q * (raw * sw).T, axis=0))
        self.vectors = (q * signs).T / sw
        self.vectors.setflags(write=False)

    def gram(self) -> np.ndarray:
        return (self.vectors * self.lattice.weights) @ self.vectors.T

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        return (np.asarray(f) * self.lattice.weights) @ self.vectors.T


@lru_cache(maxsize=32)
def invariant_basis(lattice: VelocityLattice) -> InvariantBasis:
    return InvariantBasis(lattice)


def project_invariants(f: np.ndarray, basis: InvariantBasis) -> np.ndarray:
    """Orthogonal projection P f onto the collision invariants (last axis is velocity)."""
    return basis.coefficients(f) @ basis.vectors


def collision_frequency(v: np.ndarray, model: CollisionModel) -> np.ndarray:
    """nu(v) at the reference Maxwellian; depends on |v| only."""
    v = np.asarray(v, dtype=float)
    speed = np.sqrt(np.sum(v * v, axis=-1))
    if model.is_bgk:
        return np.full(speed.shape, model.nu0)
    return hardsphere.collision_frequency(speed)


@lru_cache(maxsize=16)
def _hard_sphere_operator(lattice: VelocityLattice, order: int, degree: int) -> hardsphere.LatticeOperator:
    return hardsphere.LatticeOperator(lattice, order=order, degree=degree)


def apply_linearized_L(f: np.ndarray, model: CollisionModel, lattice: VelocityLattice, theta_ref: float = 1.0) -> np.ndarray:
    """Linearized operator L f (nonnegative convention) at the Maxwellian with temperature theta_ref.

    Velocities are read in thermal units of theta_ref, so the operator only
    picks up the factor sqrt(theta_ref) from the collision-rate scaling.
    """
    if model.kind not in MODEL_KINDS:
        raise ConfigurationError(f"unsupported collision model {model.kind!r}")
    f = np.asarray(f, dtype=float)
    scale = np.sqrt(theta_ref)
    if model.is_bgk:
        basis = invariant_basis(lattice)
        return scale * model.nu0 * (f - project_invariants(f, basis))
    op = _hard_sphere_operator(lattice, model.sonine_order, model.harmonic_degree)
    return scale * op.apply(f)


def coercivity_constant(model: CollisionModel, lattice: VelocityLattice, samples: int = 16, seed: int = 0) -> float:
    """Smallest observed <Lf, f> / ||(I-P) f||^2 over random lattice functions."""
    rng = np.random.default_rng(seed)
    basis = invariant_basis(lattice)
    worst = np.inf
    for _ in range(samples):
        f = rng.standard_normal(lattice.size) * lattice.sqrt_mu ** 0.5
        h = f - project_invariants(f, basis)
        num = lattice.inner(apply_linearized_L(f, model, lattice), f)
        worst = min(worst, num / lattice.inner(h, h))
    return float(worst)


@dataclass(frozen=True)
class ChapmanEnskogTables:
    """Radial Chapman-Enskog functions on r in [0, table_radius].

    ``heat`` is g(r) = b(r) (r^2 - 5) / 2, the radial factor of B_hat = g V.
    All downstream formulas use ``a`` and ``heat``; ``b`` is derived for
    reporting and is singular for hard spheres where g and r^2 - 5 vanish at
    slightly different radii.
    """

    kind: str
    theta_ref: float
    r: np.ndarray
    a: np.ndarray
    heat: np.ndarray
    constant_a: float | None = None
    constant_b: float | None = None
    sonine: hardsphere.SonineSolution | None = field(default=None, repr=False)

    @property
    def b(self) -> np.ndarray:
        if self.constant_b is not None:
            return np.full_like(self.r, self.constant_b)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 2.0 * self.heat / (self.r**2 - 5.0)

    def _eval(self, values: np.ndarray, r: np.ndarray) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        if np.any(r > self.r[-1]):
            warnings.warn(
                f"radius {float(r.max()):.3g} beyond table range {self.r[-1]:.3g}; holding last value",
                RuntimeWarning,
                stacklevel=3,
            )
        return PchipInterpolator(self.r, values, extrapolate=False)(np.minimum(r, self.r[-1]))

    def a_of(self, r: np.ndarray) -> np.ndarray:
        if self.constant_a is not None:
            return np.full(np.shape(r), self.constant_a)
        return self._eval(self.a, r)

    def heat_of(self, r: np.ndarray) -> np.ndarray:
        """g(r) = b(r) (r^2 - 5)/2."""
        if self.constant_b is not None:
            r = np.asarray(r, dtype=float)
            return self.constant_b * 0.5 * (r * r - 5.0)
        return self._eval(self.heat, r)

    def to_rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.r.tolist(), self.a.tolist(), self.b.tolist()))


@lru_cache(maxsize=32)
def _tables(model: CollisionModel) -> ChapmanEnskogTables:
    r = np.linspace(0.0, model.table_radius, model.table_points)
    if model.is_bgk:
        a0 = 1.0 / model.nu0
        return ChapmanEnskogTables(
            kind=model.kind, theta_ref=1.0, r=r, a=np.full_like(r, a0), heat=a0 * 0.5 * (r * r - 5.0),
            constant_a=a0, constant_b=a0,
        )
    sol = hardsphere.solve_chapman_enskog(model.sonine_order)
    return ChapmanEnskogTables(kind=model.kind, theta_ref=1.0, r=r, a=sol.a(r), heat=sol.heat_radial(r), sonine=sol)


def chapman_enskog_functions(model: CollisionModel, theta_ref: float = 1.0) -> ChapmanEnskogTables:
    """Tabulated a(r) and g(r) = b(r)(r^2-5)/2 for ``model``.

    theta_ref is accepted for interface symmetry; every kind here uses the
    hard-sphere collision-rate scaling, so the tables are theta independent.
    """
    if theta_ref <= 0:
        raise ConfigurationError("theta_ref must be positive")
    return _tables(model)


def defining_residuals(model: CollisionModel, lattice: VelocityLattice) -> tuple[float, float]:
    """Relative discrete residuals of L(sqrt(mu) A_hat) = sqrt(mu) A and the B analogue."""
    tab = chapman_enskog_functions(model)
    v = lattice.nodes
    r = lattice.speed
    sq = lattice.sqrt_mu
    shear = v[:, 0] * v[:, 1] * sq
    heat = v[:, 0] * 0.5 * (r * r - 5.0) * sq
    shear_hat = tab.a_of(r) * shear
    heat_hat = v[:, 0] * tab.heat_of(r) * sq
    out = []
    for src, sol in ((shear, shear_hat), (heat, heat_hat)):
        res = apply_linearized_L(sol, model, lattice) - src
        out.append(float(np.sqrt(lattice.inner(res, res) / lattice.inner(src, src))))
    return out[0], out[1]
