"""Discrete-velocity BGK solver on the slab 0 < x1 < 1 with Maxwell-reflection walls."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collision import CollisionModel
from .errors import ConfigurationError, DegenerateStateError, NumericalError, StepSizeError
from .lattice import VelocityLattice
from .slip import AccommodationLaw, WallFrame
from .state import VACUUM, FluidFields, KineticDistribution, conserved_moments
from .state import moments as _moments

CFL_LIMIT = 0.9
NEGATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Wall:
    frame: WallFrame
    law: AccommodationLaw


@dataclass(frozen=True)
class WallPair:
    """Walls at x1 = 0 (normal -e1) and x1 = 1 (normal +e1); both None means periodic."""

    left: Wall | None
    right: Wall | None

    def __post_init__(self):
        if (self.left is None) != (self.right is None):
            raise ConfigurationError("either both walls or neither (periodic)")
        if self.left is not None:
            if not np.allclose(self.left.frame.normal, [-1, 0, 0]) or not np.allclose(self.right.frame.normal, [1, 0, 0]):
                raise ConfigurationError("slab walls need normals -e1 (left) and +e1 (right)")

    @property
    def periodic(self) -> bool:
        return self.left is None

    @classmethod
    def slab(cls, law_left: AccommodationLaw, law_right: AccommodationLaw | None = None, u_left: float = 0.0,
             u_right: float = 0.0, theta_left: float = 1.0, theta_right: float = 1.0) -> "WallPair":
        law_right = law_right or law_left
        return cls(Wall(WallFrame.slab("lower", u_left, theta_left), law_left),
                   Wall(WallFrame.slab("upper", u_right, theta_right), law_right))

    @classmethod
    def periodic_box(cls) -> "WallPair":
        return cls(None, None)


def wall_maxwellian(frame: WallFrame, v: np.ndarray) -> np.ndarray:
    diff = v - frame.velocity
    return (2.0 * np.pi * frame.theta_w) ** -1.5 * np.exp(-0.5 * np.sum(diff * diff, axis=-1) / frame.theta_w)


def maxwell_reflect(outgoing: np.ndarray, wall: Wall, epsilon: float, lattice: VelocityLattice) -> np.ndarray:
    """Incoming wall trace (1 - alpha) F(R v) + alpha K F.

    The diffuse part is the wall Maxwellian scaled so that its discrete
    incoming flux equals the discrete outgoing flux, which makes the wall
    mass-tight on the lattice.  Values on outgoing nodes are passed through.
    """
    alpha = wall.law.alpha(epsilon)
    n = wall.frame.normal
    vn = lattice.nodes @ n
    out_mask = vn > 0
    flux_w = lattice.weights * np.abs(vn)
    reflect = lattice.reflect_index(n)
    trace = np.array(outgoing, dtype=float, copy=True)
    specular = trace[..., reflect]
    result = np.where(out_mask, trace, (1.0 - alpha) * specular)
    if alpha > 0:
        Mw = wall_maxwellian(wall.frame, lattice.nodes)
        out_flux = np.sum(np.where(out_mask, trace, 0.0) * flux_w, axis=-1)
        in_flux_M = np.sum(np.where(out_mask, 0.0, Mw) * flux_w)
        diffuse = np.multiply.outer(out_flux / in_flux_M, Mw)
        result = np.where(out_mask, result, result + alpha * diffuse)
    return result


class DiscreteMaxwellian:
    """exp(a0 + a.v + a4 |v|^2) matching the discrete conserved moments exactly (Newton)."""

    def __init__(self, lattice: VelocityLattice):
        self.lattice = lattice
        v = lattice.nodes
        self.psi = np.column_stack([np.ones(lattice.size), v, np.sum(v * v, axis=1)])
        self.psi_w = self.psi * lattice.weights[:, None]
        iu = np.triu_indices(5)
        self._iu = iu
        self.pairs = self.psi_w[:, iu[0]] * self.psi[:, iu[1]]

    def moments(self, F: np.ndarray) -> np.ndarray:
        return F @ self.psi_w

    def initial_guess(self, q: np.ndarray) -> np.ndarray:
        rho = q[:, 0]
        u = q[:, 1:4] / rho[:, None]
        theta = (q[:, 4] / rho - np.sum(u * u, axis=1)) / 3.0
        return np.column_stack([
            np.log(rho) - 1.5 * np.log(2.0 * np.pi * theta) - 0.5 * np.sum(u * u, axis=1) / theta,
            u / theta[:, None],
            -0.5 / theta,
        ])

    def solve(self, q: np.ndarray, guess: np.ndarray | None = None, tol: float = 1e-14, max_iter: int = 30):
        if np.any(q[:, 0] < VACUUM):
            raise DegenerateStateError("vacuum cell in collision step", min_density=float(q[:, 0].min()))
        coeffs = self.initial_guess(q) if guess is None else guess.copy()
        scale = np.abs(q) + q[:, :1]
        for _ in range(max_iter):
            M = np.exp(coeffs @ self.psi.T)
            resid = M @ self.psi_w - q
            if np.max(np.abs(resid) / scale) < tol:
                return M, coeffs
            flat = M @ self.pairs
            jac = np.zeros((q.shape[0], 5, 5))
            jac[:, self._iu[0], self._iu[1]] = flat
            jac[:, self._iu[1], self._iu[0]] = flat
            coeffs = coeffs - np.linalg.solve(jac, resid[..., None])[..., 0]
        M = np.exp(coeffs @ self.psi.T)
        resid = M @ self.psi_w - q
        if np.max(np.abs(resid) / scale) < 1e3 * tol:
            return M, coeffs
        raise NumericalError("discrete Maxwellian Newton iteration did not converge",
                             residual=float(np.max(np.abs(resid) / scale)))


@dataclass
class WallLedger:
    """Cumulative (mass, momentum, energy) that entered the gas through each wall."""

    left: np.ndarray = field(default_factory=lambda: np.zeros(5))
    right: np.ndarray = field(default_factory=lambda: np.zeros(5))

    @property
    def total(self) -> np.ndarray:
        return self.left + self.right


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


class KineticSolver:
    """Strang-split BGK solver: transport(dt/2), exact relaxation(dt), transport(dt/2)."""

    def __init__(self, lattice: VelocityLattice, cells: int, walls: WallPair, epsilon: float,
                 model: CollisionModel | None = None):
        if epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        self.model = model or CollisionModel()
        if not self.model.is_bgk:
            raise ConfigurationError("time stepping supports BGK collision models only")
        self.lattice = lattice
        self.cells = int(cells)
        self.dx = 1.0 / self.cells
        self.x = (np.arange(self.cells) + 0.5) * self.dx
        self.walls = walls
        self.epsilon = float(epsilon)
        self.maxwellian = DiscreteMaxwellian(lattice)
        self.v1 = lattice.nodes[:, 0].copy()
        self.ledger = WallLedger()
        self._coeffs: np.ndarray | None = None
        self._flux_basis = np.column_stack([np.ones(lattice.size), lattice.nodes,
                                            0.5 * np.sum(lattice.nodes**2, axis=1)]) * lattice.weights[:, None]
        if not walls.periodic:
            for wall in (walls.left, walls.right):
                wall.law.alpha(self.epsilon)

    @property
    def max_dt(self) -> float:
        return CFL_LIMIT * self.dx / self.lattice.max_speed_component

    def distribution(self, values: np.ndarray, time: float = 0.0) -> KineticDistribution:
        return KineticDistribution(values=values, lattice=self.lattice, x=self.x, time=time)

    def _wall_faces(self, F: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
        """Face values at x = 0 and x = 1 for every node (outgoing: first-order trace)."""
        left = maxwell_reflect(F[0], self.walls.left, epsilon, self.lattice)
        right = maxwell_reflect(F[-1], self.walls.right, epsilon, self.lattice)
        return left, right

    def transport(self, F: np.ndarray, tau: float) -> np.ndarray:
        """Flux-limited upwind transport in x1 over time tau (second order, TVD for CFL <= 1)."""
        c = self.v1 * tau / self.dx
        if np.max(np.abs(c)) > 1.0 + 1e-12:
            raise StepSizeError("transport CFL number exceeds 1")
        pos = self.v1 > 0
        if self.walls.periodic:
            ext = np.concatenate([F[-2:], F, F[:2]])
        else:
            left, right = self._wall_faces(F, self.epsilon)
            ext = np.concatenate([left[None], left[None], F, right[None], right[None]])
            # outgoing directions read zero-gradient ghosts, so their wall trace is first order
            ext[0:2, ~pos] = F[0, ~pos]
            ext[-2:, pos] = F[-1, pos]
        diff = np.diff(ext, axis=0)
        slope = _minmod(diff[:-1], diff[1:])
        # faces i+1/2 for i = -1 .. N-1 in ext indexing: cells 1 .. N+1
        left_state = ext[1:-2] + 0.5 * (1.0 - np.abs(c)) * slope[:-1]
        right_state = ext[2:-1] - 0.5 * (1.0 - np.abs(c)) * slope[1:]
        face = np.where(pos, left_state, right_state)
        if not self.walls.periodic:
            face[0, pos] = ext[0, pos]
            face[0, ~pos] = F[0, ~pos]
            face[-1, ~pos] = ext[-1, ~pos]
            face[-1, pos] = F[-1, pos]
            flux_in_left = (face[0] * self.v1) @ self._flux_basis
            flux_in_right = -(face[-1] * self.v1) @ self._flux_basis
            self.ledger.left += tau * flux_in_left
            self.ledger.right += tau * flux_in_right
        flux = face * self.v1
        return F - (tau / self.dx) * np.diff(flux, axis=0)

    def collide(self, F: np.ndarray, dt: float) -> np.ndarray:
        q = self.maxwellian.moments(F)
        M, self._coeffs = self.maxwellian.solve(q, self._coeffs)
        rho = q[:, 0]
        u = q[:, 1:4] / rho[:, None]
        theta = (q[:, 4] / rho - np.sum(u * u, axis=1)) / 3.0
        if np.any(theta <= 0):
            raise DegenerateStateError("nonpositive temperature", min_theta=float(theta.min()))
        nu = self.model.nu0 * rho * np.sqrt(theta)
        decay = np.exp(-nu * dt / self.epsilon)[:, None]
        return M + (F - M) * decay

    def step(self, F: np.ndarray, dt: float) -> np.ndarray:
        if dt > self.max_dt * (1 + 1e-12):
            raise StepSizeError(f"dt={dt:.3g} exceeds CFL limit {self.max_dt:.3g}")
        F = self.transport(F, 0.5 * dt)
        F = self.collide(F, dt)
        F = self.transport(F, 0.5 * dt)
        low = F.min()
        if low < 0:
            if low < -NEGATIVE_TOLERANCE * max(F.max(), 1.0):
                raise NumericalError("positivity lost", min_value=float(low))
            F = np.maximum(F, 0.0)
        return F

    def run(self, F: np.ndarray, t_end: float, dt: float | None = None, callback=None) -> tuple[np.ndarray, float]:
        dt_max = self.max_dt if dt is None else dt
        steps = max(1, int(np.ceil(t_end / dt_max - 1e-12)))
        dt = t_end / steps
        for k in range(steps):
            F = self.step(F, dt)
            if callback is not None:
                callback(k + 1, F)
        return F, dt

    def totals(self, F: np.ndarray) -> np.ndarray:
        """Slab totals of mass, momentum and energy."""
        return self.dx * np.sum(F @ self._flux_basis, axis=0)


def step(state: KineticDistribution, dt: float, epsilon: float, model: CollisionModel, walls: WallPair,
         solver: KineticSolver | None = None) -> KineticDistribution:
    """One Strang step; pass a persistent ``solver`` to keep warm starts and the wall ledger."""
    solver = solver or KineticSolver(state.lattice, state.values.shape[0], walls, epsilon, model)
    values = solver.step(state.values, dt)
    return KineticDistribution(values=values, lattice=state.lattice, x=state.x, time=state.time + dt, meta=dict(state.meta))


def moments(state: KineticDistribution) -> FluidFields:
    return _moments(state.values, state.lattice, x=state.x, time=state.time)


def h_functional(F: np.ndarray, lattice: VelocityLattice, dx: float = 1.0) -> float:
    """sum_x sum_v F log F (with 0 log 0 = 0)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        flogf = np.where(F > 0, F * np.log(np.where(F > 0, F, 1.0)), 0.0)
    return float(dx * np.sum(flogf @ lattice.weights))


def totals(state: KineticDistribution) -> np.ndarray:
    return state.dx * np.sum(conserved_moments(state.values, state.lattice), axis=0)
