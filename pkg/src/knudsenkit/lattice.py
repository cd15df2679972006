"""Discrete velocity lattices.

Nodes are stored as an (Nv, 3) array in C order over the three axes, so a
lattice function can be reshaped to ``shape`` for per-axis work.  Both
schemes are symmetric under v -> -v and under sign flips of a single axis,
which is what makes the discrete specular reflection exact.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import ConfigurationError

SCHEMES = ("uniform-cartesian", "gauss-hermite-tensor")


def global_maxwellian(v: np.ndarray) -> np.ndarray:
    """Standard Gaussian (2 pi)^{-3/2} exp(-|v|^2/2), evaluated along the last axis."""
    v = np.asarray(v, dtype=float)
    return (2.0 * np.pi) ** -1.5 * np.exp(-0.5 * np.sum(v * v, axis=-1))


def _axis_rule(scheme: str, count: int, v_max: float) -> tuple[np.ndarray, np.ndarray]:
    if count < 2:
        raise ConfigurationError(f"need at least 2 nodes per axis, got {count}")
    if scheme == "uniform-cartesian":
        h = 2.0 * v_max / count
        nodes = -v_max + h * (np.arange(count) + 0.5)
        weights = np.full(count, h)
    elif scheme == "gauss-hermite-tensor":
        x, w = hermegauss(count)
        nodes = x
        # plain-integral weights: the rule integrates g(x) exp(-x^2/2)
        weights = w * np.exp(0.5 * x * x)
    else:
        raise ConfigurationError(f"unknown lattice scheme {scheme!r}; expected one of {SCHEMES}")
    # enforce exact mirror symmetry of the 1D rule
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return nodes, weights


class VelocityLattice:
    """Tensor-product velocity lattice with per-axis counts and truncation."""

    def __init__(self, counts=24, v_max=6.0, scheme: str = "uniform-cartesian"):
        counts = tuple(int(c) for c in np.broadcast_to(counts, (3,)))
        v_max = tuple(float(c) for c in np.broadcast_to(v_max, (3,)))
        if any(c <= 0 for c in v_max):
            raise ConfigurationError("v_max must be positive")
        self.scheme = scheme
        self.shape = counts
        self.axes = []
        self.axis_weights = []
        for n, vm in zip(counts, v_max):
            x, w = _axis_rule(scheme, n, vm)
            self.axes.append(x)
            self.axis_weights.append(w)
        if scheme == "gauss-hermite-tensor":
            v_max = tuple(float(np.max(np.abs(x))) for x in self.axes)
        self.v_max = v_max
        grids = np.meshgrid(*self.axes, indexing="ij")
        self.nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*self.axis_weights, indexing="ij")
        self.weights = (wgrids[0] * wgrids[1] * wgrids[2]).ravel()
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def speed(self) -> np.ndarray:
        return np.sqrt(np.sum(self.nodes**2, axis=1))

    @cached_property
    def sqrt_mu(self) -> np.ndarray:
        return np.sqrt(global_maxwellian(self.nodes))

    @property
    def max_speed_component(self) -> float:
        return float(max(np.max(np.abs(a)) for a in self.axes))

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """Quadrature over the last axis."""
        return np.asarray(f) @ self.weights

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        return (np.asarray(f) * np.asarray(g)) @ self.weights

    def mirror_index(self, axis: int) -> np.ndarray:
        """Permutation p with nodes[p] equal to nodes with component `axis` negated."""
        idx = np.arange(self.size).reshape(self.shape)
        return np.flip(idx, axis=axis).ravel()

    def reflect_index(self, normal: np.ndarray) -> np.ndarray:
        """Node permutation realizing v -> v - 2 (v.n) n for an axis-aligned normal."""
        normal = np.asarray(normal, dtype=float)
        axis = int(np.argmax(np.abs(normal)))
        if not np.isclose(abs(normal[axis]), 1.0) or np.count_nonzero(normal) != 1:
            raise ConfigurationError("lattice reflection needs an axis-aligned normal")
        return self.mirror_index(axis)

    def __repr__(self) -> str:
        return f"VelocityLattice(scheme={self.scheme!r}, shape={self.shape}, v_max={self.v_max})"
