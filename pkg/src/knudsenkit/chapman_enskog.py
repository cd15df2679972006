"""Local Maxwellians, the first-order Chapman-Enskog correction and transport coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .collision import CollisionModel, chapman_enskog_functions
from .errors import ConfigurationError, PreconditionError
from .lattice import VelocityLattice
from .state import FluidFields, KineticDistribution

# FluidState is the pointwise view of the same data
FluidState = FluidFields


@dataclass
class FluidGradients:
    """grad_u[..., i, j] = d u_j / d x_i and grad_theta[..., i] = d theta / d x_i."""

    grad_u: np.ndarray
    grad_theta: np.ndarray

    def __post_init__(self):
        self.grad_u = np.asarray(self.grad_u, dtype=float)
        self.grad_theta = np.asarray(self.grad_theta, dtype=float)
        if not (np.all(np.isfinite(self.grad_u)) and np.all(np.isfinite(self.grad_theta))):
            raise ValueError("gradients must be finite")

    @classmethod
    def zeros(cls, shape=()) -> "FluidGradients":
        return cls(np.zeros(tuple(shape) + (3, 3)), np.zeros(tuple(shape) + (3,)))


@dataclass(frozen=True)
class RemainderWeight:
    """w_k(v) = (|v|^2 + 1)^{k/2}."""

    k: float = 4.0

    def __post_init__(self):
        if self.k < 0:
            raise ConfigurationError("weight exponent must be nonnegative")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return (np.sum(np.asarray(v) ** 2, axis=-1) + 1.0) ** (0.5 * self.k)


def local_maxwellian(state: FluidFields, v: np.ndarray) -> np.ndarray:
    """rho (2 pi theta)^{-3/2} exp(-|v-u|^2 / 2 theta); leading axes of state broadcast against v's."""
    rho = np.asarray(state.rho)[..., None]
    theta = np.asarray(state.theta)[..., None]
    c = np.asarray(v)[None, ...] if np.ndim(state.rho) else np.asarray(v)
    diff = c - np.asarray(state.u)[..., None, :]
    return rho * (2.0 * np.pi * theta) ** -1.5 * np.exp(-0.5 * np.sum(diff * diff, axis=-1) / theta)


def traceless_deformation(grad_u: np.ndarray) -> np.ndarray:
    """sigma(u) = grad u + grad u^T - (2/3) (div u) I."""
    g = np.asarray(grad_u, dtype=float)
    sym = g + np.swapaxes(g, -1, -2)
    div = np.trace(g, axis1=-2, axis2=-1)
    return sym - (2.0 / 3.0) * div[..., None, None] * np.eye(3)


def first_order_G(state: FluidFields, grads: FluidGradients, model: CollisionModel, v: np.ndarray) -> np.ndarray:
    """G = -M (1/2 A_hat(V):sigma(u) + B_hat(V).grad(theta)/sqrt(theta)), V = (v-u)/sqrt(theta)."""
    tab = chapman_enskog_functions(model)
    rho = np.asarray(state.rho)[..., None]
    sqrt_theta = np.sqrt(np.asarray(state.theta))[..., None]
    vv = np.asarray(v)
    V = (vv - np.asarray(state.u)[..., None, :]) / sqrt_theta[..., None]
    r = np.sqrt(np.sum(V * V, axis=-1))
    sigma = traceless_deformation(grads.grad_u)
    # A(V):sigma = V.sigma.V because sigma is traceless
    shear = np.einsum("...vi,...ij,...vj->...v", V, sigma, V)
    heat = np.einsum("...vi,...i->...v", V, grads.grad_theta) / sqrt_theta
    bracket = 0.5 * tab.a_of(r) * shear + tab.heat_of(r) * heat
    M = local_maxwellian(state, vv)
    return -M * bracket / (rho * sqrt_theta)


def _radial_rule(radius: float, n: int = 160) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    return 0.5 * radius * (x + 1.0), 0.5 * radius * w


def transport_coefficients(model: CollisionModel, theta) -> tuple[np.ndarray, np.ndarray]:
    """(mu(theta), kappa(theta)) from the radial tables.

    mu = (theta/10) int A:A_hat M dv = sqrt(theta) (4 pi / 15) int a r^6 mu(r) dr,
    kappa = (theta/3) int B.B_hat M dv = sqrt(theta) (4 pi / 3) int g (r^2-5)/2 r^4 mu(r) dr.
    """
    theta = np.asarray(theta, dtype=float)
    tab = chapman_enskog_functions(model)
    if tab.constant_a is not None:
        mu1, kappa1 = tab.constant_a, 2.5 * tab.constant_b
    else:
        r, w = _radial_rule(tab.r[-1])
        gauss = (2.0 * np.pi) ** -1.5 * np.exp(-0.5 * r * r)
        mu1 = 4.0 * np.pi / 15.0 * np.sum(w * tab.a_of(r) * r**6 * gauss)
        kappa1 = 4.0 * np.pi / 3.0 * np.sum(w * tab.heat_of(r) * 0.5 * (r * r - 5.0) * r**4 * gauss)
    root = np.sqrt(theta)
    return mu1 * root, kappa1 * root


def reconstruct(state: FluidFields, grads: FluidGradients, epsilon: float, model: CollisionModel,
                lattice: VelocityLattice, x=None, time: float = 0.0) -> KineticDistribution:
    """F = M + eps G on the lattice, one row per cell; positivity is reported in ``meta``."""
    if epsilon < 0:
        raise ConfigurationError("epsilon must be nonnegative")
    M = local_maxwellian(state, lattice.nodes)
    F = M if epsilon == 0 else M + epsilon * first_order_G(state, grads, model, lattice.nodes)
    F = np.atleast_2d(F)
    xs = np.asarray(x if x is not None else (state.x if state.x is not None else np.zeros(F.shape[0])))
    out = KineticDistribution(values=F, lattice=lattice, x=xs, time=time)
    out.meta["min_value"] = float(F.min())
    out.meta["positive"] = bool(F.min() >= 0.0)
    return out


def remainder_norms(F: KineticDistribution, state: FluidFields, grads: FluidGradients | None, epsilon: float,
                    weight: RemainderWeight = RemainderWeight(4.0), model: CollisionModel | None = None,
                    with_r_norm: bool = False) -> dict:
    """Discrete L2_{x,v} and weighted sup norms of (F - M)/sqrt(mu); optional R-norm.

    The R-norm is ||(F - M - eps G) / (eps^2 sqrt(mu))||_{L2} and needs eps > 0.
    """
    lat = F.lattice
    M = np.atleast_2d(local_maxwellian(state, lat.nodes))
    sq = lat.sqrt_mu
    dev = (F.values - M) / sq
    dx = F.dx if F.values.shape[0] > 1 else 1.0
    out = {
        "l2": float(np.sqrt(dx * np.sum(dev**2 * lat.weights))),
        "linf_w": float(np.max(np.abs(dev) * weight(lat.nodes))),
    }
    if with_r_norm:
        if epsilon <= 0:
            raise PreconditionError("R-norm requires epsilon > 0")
        if grads is None or model is None:
            raise PreconditionError("R-norm requires gradients and a collision model")
        G = np.atleast_2d(first_order_G(state, grads, model, lat.nodes))
        R = (F.values - M - epsilon * G) / (epsilon**2 * sq)
        out["r_norm"] = float(np.sqrt(dx * np.sum(R**2 * lat.weights)))
    return out
