"""Compressible Navier-Stokes-Fourier solver on the slab with slip-family walls.

Conserved variables per cell are (rho, rho u1, rho u2, rho u3, E) with
E = rho |u|^2 / 2 + 3 rho theta / 2 and pressure rho theta.  Inviscid fluxes use
MUSCL reconstruction (van Albada slopes) with a Rusanov flux and SSP-RK2; viscous and heat
fluxes are integrated with Crank-Nicolson (one tridiagonal solve per
component) inside a Strang split.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .chapman_enskog import transport_coefficients
from .collision import CollisionModel
from .errors import ConfigurationError, DegenerateStateError, NumericalError, StepSizeError
from .slip import BCFamily, WallFrame
from .state import FluidFields

GAMMA = 5.0 / 3.0
ADVECTIVE_CFL = 0.8
# normal-stress factor: sigma_11 = (4/3) du1/dx in one dimension
STRESS_FACTORS = np.array([4.0 / 3.0, 1.0, 1.0])


@dataclass(frozen=True)
class FluidWall:
    family: BCFamily
    frame: WallFrame

    def __post_init__(self):
        if self.family.kind != "complete-slip":
            c = self.family.coefficients
            pair = (c.cI_u, c.cI_theta) if self.family.kind == "navier-slip-critical" else (c.bI_u, c.bI_theta)
            if max(pair) >= 0:
                raise ConfigurationError("slip coefficients must be negative")


@dataclass
class GhostState:
    """Wall values, outward normal derivatives and mirror ghosts produced by apply_bc."""

    u_wall: np.ndarray
    theta_wall: float
    du_dn: np.ndarray
    dtheta_dn: float
    ghost_u: np.ndarray
    ghost_theta: float


def _wall_closure(interior0, interior1, wall_value, length, dx):
    """Outward derivative from value - wall_value = length * d/dn with one-sided second-order differences.

    d/dn = (8 b - 9 a0 + a1) / (3 dx), b the wall value, solved for b.
    """
    if np.isinf(length):
        return (9.0 * interior0 - interior1) / 8.0, np.zeros_like(np.asarray(interior0, dtype=float))
    ddn = (8.0 * wall_value - 9.0 * interior0 + interior1) / (3.0 * dx - 8.0 * length)
    return wall_value + length * ddn, ddn


def _slip_lengths(wall: FluidWall, rho: float) -> tuple[float, float]:
    return wall.family.slip_length_u(rho), wall.family.slip_length_theta(rho)


def apply_bc(fields: FluidFields, wall: FluidWall, side: str, dx: float | None = None) -> GhostState:
    """Wall values for one side ('left' at x = 0, 'right' at x = 1)."""
    n = fields.rho.shape[0]
    dx = dx or 1.0 / n
    i0, i1 = (0, 1) if side == "left" else (n - 1, n - 2)
    rho = float(fields.rho[i0])
    ell_u, ell_t = _slip_lengths(wall, rho)
    u_w = wall.frame.velocity
    u_b = np.zeros(3)
    du_dn = np.zeros(3)
    # normal velocity: no penetration; derivative from the no-slip closure
    u_b[0], du_dn[0] = 0.0, (-9.0 * fields.u[i0, 0] + fields.u[i1, 0]) / (3.0 * dx)
    u_b[1:], du_dn[1:] = _wall_closure(fields.u[i0, 1:], fields.u[i1, 1:], u_w[1:], ell_u, dx)
    theta_target = wall.frame.theta_w
    if wall.family.has_shear_heating:
        theta_target = theta_target + 0.25 * float(np.sum((u_b - u_w) ** 2))
    theta_b, dtheta_dn = _wall_closure(fields.theta[i0], fields.theta[i1], theta_target, ell_t, dx)
    return GhostState(u_wall=u_b, theta_wall=float(theta_b), du_dn=du_dn, dtheta_dn=float(dtheta_dn),
                      ghost_u=2.0 * u_b - fields.u[i0], ghost_theta=float(2.0 * theta_b - fields.theta[i0]))


def _van_albada(a, b, smoothing=1e-12):
    """Smooth slope limiter; differentiable, so the steady residual suits Newton's method."""
    return (a * b + smoothing) * (a + b) / (a * a + b * b + 2.0 * smoothing)


def _primitive(q: np.ndarray) -> np.ndarray:
    rho = q[:, 0]
    u = q[:, 1:4] / rho[:, None]
    p = (2.0 / 3.0) * (q[:, 4] - 0.5 * rho * np.sum(u * u, axis=1))
    return np.column_stack([rho, u, p])


def _conserved_from_primitive(w: np.ndarray) -> np.ndarray:
    rho, u, p = w[..., 0], w[..., 1:4], w[..., 4]
    return np.concatenate([rho[..., None], rho[..., None] * u,
                           (0.5 * rho * np.sum(u * u, axis=-1) + 1.5 * p)[..., None]], axis=-1)


def _euler_flux(w: np.ndarray) -> np.ndarray:
    rho, u, p = w[..., 0], w[..., 1:4], w[..., 4]
    E = 0.5 * rho * np.sum(u * u, axis=-1) + 1.5 * p
    u1 = u[..., 0]
    flux = np.empty(w.shape)
    flux[..., 0] = rho * u1
    flux[..., 1:4] = rho[..., None] * u1[..., None] * u
    flux[..., 1] += p
    flux[..., 4] = u1 * (E + p)
    return flux


@dataclass
class FluidLedger:
    """Cumulative conserved quantities that entered through the walls."""

    left: np.ndarray = field(default_factory=lambda: np.zeros(5))
    right: np.ndarray = field(default_factory=lambda: np.zeros(5))

    @property
    def total(self) -> np.ndarray:
        return self.left + self.right


class CNSSolver:
    def __init__(self, cells: int, epsilon: float, model: CollisionModel | None = None,
                 walls: tuple[FluidWall, FluidWall] | None = None, viscous_heating: bool = True):
        if epsilon < 0:
            raise ConfigurationError("epsilon must be nonnegative")
        if walls is not None:
            if not np.allclose(walls[0].frame.normal, [-1, 0, 0]) or not np.allclose(walls[1].frame.normal, [1, 0, 0]):
                raise ConfigurationError("slab walls need normals -e1 (left) and +e1 (right)")
        self.cells = int(cells)
        self.dx = 1.0 / self.cells
        self.x = (np.arange(self.cells) + 0.5) * self.dx
        self.epsilon = float(epsilon)
        self.model = model or CollisionModel()
        self.walls = walls
        self.viscous_heating = viscous_heating
        self.ledger = FluidLedger()

    @property
    def periodic(self) -> bool:
        return self.walls is None

    def fields(self, q: np.ndarray, time: float = 0.0) -> FluidFields:
        return FluidFields.from_conserved(q, x=self.x, time=time)

    # inviscid part
    def _extended_primitive(self, w: np.ndarray) -> np.ndarray:
        if self.periodic:
            return np.concatenate([w[-2:], w, w[:2]])
        mirror = np.array([1.0, -1.0, 1.0, 1.0, 1.0])
        left = (w[1::-1]) * mirror
        right = (w[:-3:-1]) * mirror
        return np.concatenate([left, w, right])

    def inviscid_flux(self, q: np.ndarray) -> np.ndarray:
        """Rusanov fluxes at the N + 1 faces."""
        w = _primitive(q)
        ext = self._extended_primitive(w)
        d = np.diff(ext, axis=0)
        slope = _van_albada(d[:-1], d[1:])
        wl = ext[1:-2] + 0.5 * slope[:-1]
        wr = ext[2:-1] - 0.5 * slope[1:]
        if np.any(wl[:, 0] <= 0) or np.any(wr[:, 0] <= 0) or np.any(wl[:, 4] <= 0) or np.any(wr[:, 4] <= 0):
            raise DegenerateStateError("nonpositive reconstructed density or pressure")
        speed = np.maximum(np.abs(wl[:, 1]) + np.sqrt(GAMMA * wl[:, 4] / wl[:, 0]),
                           np.abs(wr[:, 1]) + np.sqrt(GAMMA * wr[:, 4] / wr[:, 0]))
        flux = 0.5 * (_euler_flux(wl) + _euler_flux(wr)) - 0.5 * speed[:, None] * (
            _conserved_from_primitive(wr) - _conserved_from_primitive(wl))
        return flux

    def max_dt(self, q: np.ndarray) -> float:
        w = _primitive(q)
        speed = np.abs(w[:, 1]) + np.sqrt(GAMMA * w[:, 4] / w[:, 0])
        return ADVECTIVE_CFL * self.dx / float(speed.max())

    def _hyperbolic(self, q: np.ndarray, dt: float) -> np.ndarray:
        def rate(qq):
            f = self.inviscid_flux(qq)
            if not self.periodic:
                self.ledger.left += 0.5 * dt * f[0]
                self.ledger.right -= 0.5 * dt * f[-1]
            return -np.diff(f, axis=0) / self.dx
        q1 = q + dt * rate(q)
        return 0.5 * (q + q1 + dt * rate(q1))

    # viscous part
    def _coefficients(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mu, kappa = transport_coefficients(self.model, theta)
        return self.epsilon * np.asarray(mu), self.epsilon * np.asarray(kappa)

    def viscous_fluxes(self, fields: FluidFields) -> tuple[np.ndarray, np.ndarray]:
        """x-direction diffusive fluxes at faces: momentum (N+1, 3) and energy (N+1,), explicit."""
        mu, kappa = self._coefficients(fields.theta)
        n = self.cells
        u, th = fields.u, fields.theta
        mom = np.zeros((n + 1, 3))
        en = np.zeros(n + 1)
        mu_f = 0.5 * (mu[1:] + mu[:-1])
        ka_f = 0.5 * (kappa[1:] + kappa[:-1])
        grad_u = np.diff(u, axis=0) / self.dx
        mom[1:-1] = mu_f[:, None] * STRESS_FACTORS * grad_u
        en[1:-1] = ka_f * np.diff(th) / self.dx + np.sum(mom[1:-1] * 0.5 * (u[1:] + u[:-1]), axis=1)
        if self.periodic:
            mu_p = 0.5 * (mu[0] + mu[-1])
            g = (u[0] - u[-1]) / self.dx
            mom[0] = mom[-1] = mu_p * STRESS_FACTORS * g
            en[0] = en[-1] = 0.5 * (kappa[0] + kappa[-1]) * (th[0] - th[-1]) / self.dx + mom[0] @ (0.5 * (u[0] + u[-1]))
        else:
            for idx, side, sign in ((0, "left", -1.0), (n, "right", 1.0)):
                cell = 0 if side == "left" else n - 1
                wall = self.walls[0 if side == "left" else 1]
                g = apply_bc(fields, wall, side, self.dx)
                mom[idx] = sign * mu[cell] * STRESS_FACTORS * g.du_dn
                en[idx] = sign * kappa[cell] * g.dtheta_dn + mom[idx] @ g.u_wall
        return mom, en

    def _tridiagonal_diffusion(self, values, capacity, coef_faces, wall_rows, dt, source=None, periodic_coef=None):
        """Crank-Nicolson for capacity * dv/dt = d/dx(coef dv/dx) (+ source).

        ``wall_rows`` gives for each wall (cell, a0, a1, const): the flux into
        that cell is a0 v_cell + a1 v_next + const.
        """
        n = self.cells
        r = dt / (self.dx * self.dx)
        lower = np.zeros(n)
        upper = np.zeros(n)
        diag = np.zeros(n)
        cf = coef_faces
        # interior faces k between cells k and k+1
        diag[:-1] += cf
        diag[1:] += cf
        upper[:-1] -= cf
        lower[1:] -= cf
        periodic_corner = periodic_coef
        if periodic_corner is not None:
            diag[0] += periodic_corner
            diag[-1] += periodic_corner
        const = np.zeros(n)
        for cell, a0, a1, c in wall_rows:
            nxt = 1 if cell == 0 else n - 2
            # flux into cell = a0 v_cell + a1 v_next + c, in units of coef/dx
            diag[cell] -= a0
            if nxt == cell + 1:
                upper[cell] -= a1
            else:
                lower[cell] -= a1
            const[cell] += c
        # operator A v = -(flux divergence)/ (dx^2) scaled: capacity dv = -r A v + r const
        op_v = diag * values
        op_v[:-1] += upper[:-1] * values[1:]
        op_v[1:] += lower[1:] * values[:-1]
        if periodic_corner is not None:
            op_v[0] -= periodic_corner * values[-1]
            op_v[-1] -= periodic_corner * values[0]
        rhs = capacity * values - 0.5 * r * op_v + r * const
        if source is not None:
            rhs = rhs + dt * source
        if periodic_corner is None:
            ab = np.zeros((3, n))
            ab[0, 1:] = 0.5 * r * upper[:-1]
            ab[1] = capacity + 0.5 * r * diag
            ab[2, :-1] = 0.5 * r * lower[1:]
            return solve_banded((1, 1), ab, rhs)
        mat = np.diag(capacity + 0.5 * r * diag) + np.diag(0.5 * r * upper[:-1], 1) + np.diag(0.5 * r * lower[1:], -1)
        mat[0, -1] -= 0.5 * r * periodic_corner
        mat[-1, 0] -= 0.5 * r * periodic_corner
        return np.linalg.solve(mat, rhs)

    def _diffusion(self, q: np.ndarray, dt: float) -> np.ndarray:
        if self.epsilon == 0:
            return q
        f = self.fields(q)
        rho, u_old, th_old = f.rho, f.u, f.theta
        mu, kappa = self._coefficients(th_old)
        n = self.cells
        u_new = np.empty_like(u_old)
        wall_info = []
        if not self.periodic:
            for side, cell, nxt in (("left", 0, 1), ("right", n - 1, n - 2)):
                wall = self.walls[0 if side == "left" else 1]
                ell_u, ell_t = _slip_lengths(wall, float(rho[cell]))
                wall_info.append((side, cell, nxt, wall, ell_u, ell_t))
        for j in range(3):
            cf = 0.5 * (mu[1:] + mu[:-1]) * STRESS_FACTORS[j]
            pc = 0.5 * (mu[0] + mu[-1]) * STRESS_FACTORS[j] if self.periodic else None
            rows = []
            for side, cell, nxt, wall, ell_u, _ in wall_info:
                coef = mu[cell] * STRESS_FACTORS[j] * self.dx
                if j == 0:
                    denom, uw, ell = 3.0 * self.dx, 0.0, 0.0
                elif np.isinf(ell_u):
                    rows.append((cell, 0.0, 0.0, 0.0))
                    continue
                else:
                    denom, uw, ell = 3.0 * self.dx - 8.0 * ell_u, wall.frame.velocity[j], ell_u
                rows.append((cell, -9.0 * coef / denom, coef / denom, 8.0 * coef * uw / denom))
            u_new[:, j] = self._tridiagonal_diffusion(u_old[:, j], rho, cf, rows, dt, periodic_coef=pc)
        u_bar = 0.5 * (u_old + u_new)
        fb = FluidFields(rho=rho, u=u_bar, theta=th_old)
        # momentum fluxes consistent with the solve, used for the work terms
        mom = np.zeros((n + 1, 3))
        mom[1:-1] = (0.5 * (mu[1:] + mu[:-1]))[:, None] * STRESS_FACTORS * np.diff(u_bar, axis=0) / self.dx
        u_face = np.zeros((n + 1, 3))
        u_face[1:-1] = 0.5 * (u_bar[1:] + u_bar[:-1])
        if self.periodic:
            mom[0] = mom[-1] = 0.5 * (mu[0] + mu[-1]) * STRESS_FACTORS * (u_bar[0] - u_bar[-1]) / self.dx
            u_face[0] = u_face[-1] = 0.5 * (u_bar[0] + u_bar[-1])
        else:
            for (side, cell, nxt, wall, ell_u, _), idx, sign in zip(wall_info, (0, n), (-1.0, 1.0)):
                g = apply_bc(fb, wall, side, self.dx)
                mom[idx] = sign * mu[cell] * STRESS_FACTORS * g.du_dn
                u_face[idx] = g.u_wall
        work = np.sum(mom * u_face, axis=1)
        kinetic_change = 0.5 * rho * (np.sum(u_new**2, axis=1) - np.sum(u_old**2, axis=1))
        work_div = dt * np.diff(work) / self.dx
        heating = (work_div - kinetic_change) / dt if self.viscous_heating else np.zeros(n)
        # heat conduction with Crank-Nicolson, heating as a source
        pc = 0.5 * (kappa[0] + kappa[-1]) if self.periodic else None
        rows = []
        heat_wall = np.zeros(2)
        theta_targets = []
        for side, cell, nxt, wall, _, ell_t in wall_info:
            target = wall.frame.theta_w
            if wall.family.has_shear_heating:
                g = apply_bc(FluidFields(rho=rho, u=u_new, theta=th_old), wall, side, self.dx)
                target = target + 0.25 * float(np.sum((g.u_wall - wall.frame.velocity) ** 2))
            theta_targets.append(target)
            if np.isinf(ell_t):
                rows.append((cell, 0.0, 0.0, 0.0))
                continue
            coef = kappa[cell] * self.dx
            denom = 3.0 * self.dx - 8.0 * ell_t
            rows.append((cell, -9.0 * coef / denom, coef / denom, 8.0 * coef * target / denom))
        th_new = self._tridiagonal_diffusion(th_old, 1.5 * rho, 0.5 * (kappa[1:] + kappa[:-1]), rows, dt, heating,
                                             periodic_coef=pc)
        if not self.periodic:
            th_bar = 0.5 * (th_old + th_new)
            for k, (cell, a0, a1, c) in enumerate(rows):
                nxt = 1 if cell == 0 else n - 2
                heat_wall[k] = (a0 * th_bar[cell] + a1 * th_bar[nxt] + c) / self.dx
            energy_in = np.array([-work[0], work[-1]]) + heat_wall
            self.ledger.left[4] += dt * energy_in[0]
            self.ledger.right[4] += dt * energy_in[1]
            self.ledger.left[1:4] -= dt * mom[0]
            self.ledger.right[1:4] += dt * mom[-1]
        if np.any(th_new <= 0):
            raise DegenerateStateError("nonpositive temperature after diffusion")
        out = FluidFields(rho=rho, u=u_new, theta=th_new)
        return out.conserved()

    def step(self, q: np.ndarray, dt: float, retries: int = 4) -> np.ndarray:
        """Strang step D(dt/2) H(dt) D(dt/2); positivity loss retries with halved substeps."""
        if dt > self.max_dt(q) * (1 + 1e-12):
            raise StepSizeError(f"dt={dt:.3g} exceeds advective CFL limit {self.max_dt(q):.3g}")
        substeps = 1
        for _ in range(retries + 1):
            saved = (self.ledger.left.copy(), self.ledger.right.copy())
            try:
                qq = q
                h = dt / substeps
                for _ in range(substeps):
                    qq = self._diffusion(qq, 0.5 * h)
                    qq = self._hyperbolic(qq, h)
                    qq = self._diffusion(qq, 0.5 * h)
                    if np.any(qq[:, 0] <= 0):
                        raise DegenerateStateError("nonpositive density")
                return qq
            except DegenerateStateError:
                self.ledger.left, self.ledger.right = saved
                substeps *= 2
        raise NumericalError("positivity lost after retry budget", dt=dt)

    def rhs(self, q: np.ndarray) -> np.ndarray:
        """Semi-discrete time derivative dq/dt (explicit form of the same fluxes)."""
        if not self.viscous_heating:
            raise ConfigurationError("the explicit residual includes viscous heating")
        f = self.inviscid_flux(q)
        fields = self.fields(q)
        mom, en = self.viscous_fluxes(fields) if self.epsilon > 0 else (np.zeros((self.cells + 1, 3)), np.zeros(self.cells + 1))
        visc = np.zeros_like(f)
        visc[:, 1:4] = mom
        visc[:, 4] = en
        return (-np.diff(f, axis=0) + np.diff(visc, axis=0)) / self.dx

    def run(self, q: np.ndarray, t_end: float, cfl_dt: float | None = None, callback=None) -> np.ndarray:
        t = 0.0
        k = 0
        while t < t_end - 1e-14:
            dt = min(cfl_dt or self.max_dt(q), t_end - t)
            q = self.step(q, dt)
            t += dt
            k += 1
            if callback is not None:
                callback(k, t, q)
        return q

    def totals(self, q: np.ndarray) -> np.ndarray:
        return self.dx * q.sum(axis=0)

    def jacobian(self, q: np.ndarray, step: float = 1e-7) -> np.ndarray:
        """Finite-difference Jacobian of rhs with respect to the flattened conserved state."""
        base = self.rhs(q).ravel()
        flat = q.ravel()
        jac = np.empty((flat.size, flat.size))
        for k in range(flat.size):
            pert = flat.copy()
            h = step * max(1.0, abs(flat[k]))
            pert[k] += h
            jac[:, k] = (self.rhs(pert.reshape(q.shape)).ravel() - base) / h
        return jac

    def steady_state(self, q: np.ndarray, tol: float = 1e-10, max_iter: int = 40) -> tuple[np.ndarray, float]:
        """Newton on rhs(q) = 0 with total mass fixed; returns (q, final residual)."""
        mass = self.totals(q)[0]
        size = q.size
        for _ in range(max_iter):
            r = self.rhs(q)
            res = float(np.max(np.abs(r)))
            if res < tol:
                return q, res
            jac = self.jacobian(q)
            rvec = r.ravel().copy()
            # the density equations sum to zero; pin total mass instead of the first one
            jac[0] = 0.0
            jac[0, 0::5] = self.dx
            rvec[0] = self.totals(q)[0] - mass
            delta = np.linalg.lstsq(jac, -rvec, rcond=None)[0] if self.walls is None or any(
                w.family.kind == "complete-slip" for w in self.walls) else np.linalg.solve(jac, -rvec)
            q = q + delta.reshape(q.shape)
        r = self.rhs(q)
        res = float(np.max(np.abs(r)))
        if res < tol:
            return q, res
        raise NumericalError("steady CNS Newton iteration did not converge", residual=res)


def cns_step(fields: FluidFields, dt: float, epsilon: float, model: CollisionModel,
             bc: tuple[FluidWall, FluidWall] | None, viscous_heating: bool = True) -> FluidFields:
    solver = CNSSolver(fields.rho.shape[0], epsilon, model, bc, viscous_heating)
    q = solver.step(fields.conserved(), dt)
    return solver.fields(q, time=fields.time + dt)


@dataclass
class EnergyDiagnostics:
    """Zero-order energy-norm pieces per snapshot."""

    time: np.ndarray
    deviation: np.ndarray
    time_derivative: np.ndarray
    gradient: np.ndarray
    second_gradient: np.ndarray
    bound_factor: float
    bounded: bool

    @property
    def total(self) -> np.ndarray:
        return np.sqrt(self.deviation**2 + self.time_derivative**2 + self.gradient**2 + self.second_gradient**2)


def _stack(f: FluidFields) -> np.ndarray:
    return np.column_stack([f.rho - 1.0, f.u, f.theta - 1.0])


def energy_monitor(history: list[FluidFields], epsilon: float, bound_factor: float = 10.0) -> EnergyDiagnostics:
    if len(history) < 2:
        raise ConfigurationError("energy monitor needs at least two snapshots")
    times = np.array([h.time for h in history], dtype=float)
    fields = [_stack(h) for h in history]
    dx = 1.0 / fields[0].shape[0]
    l2 = lambda arr: float(np.sqrt(dx * np.sum(arr**2)))
    dev = np.array([l2(f) for f in fields])
    grads = [np.gradient(f, dx, axis=0) for f in fields]
    grad = np.array([l2(g) for g in grads])
    second = np.array([epsilon * l2(np.gradient(g, dx, axis=0)) for g in grads])
    dt_norm = np.zeros(len(fields))
    for k in range(len(fields)):
        a, b = (k, k + 1) if k + 1 < len(fields) else (k - 1, k)
        dt_norm[k] = l2((fields[b] - fields[a]) / (times[b] - times[a]))
    diag = EnergyDiagnostics(times, dev, dt_norm, grad, second, bound_factor, True)
    tot = diag.total
    diag.bounded = bool(np.all(tot <= bound_factor * max(tot[0], 1e-300)))
    return diag


def couette_closed_form(x: np.ndarray, wall_speed: float, slip_length: float) -> np.ndarray:
    """Tangential velocity of the linear slip-Couette profile, walls at -U (x=0) and +U (x=1).

    The signed length is negative for the outward normal, so the denominator is 1 + 2 |l|.
    """
    if np.isinf(slip_length):
        return np.zeros_like(np.asarray(x, dtype=float))
    return wall_speed * (2.0 * np.asarray(x) - 1.0) / (1.0 - 2.0 * slip_length)


def steady_couette_cns(cells: int, epsilon: float, walls: tuple[FluidWall, FluidWall],
                       model: CollisionModel | None = None, initial: FluidFields | None = None,
                       tol: float = 1e-10) -> tuple[FluidFields, CNSSolver, float]:
    """Steady slab flow between the given walls (Newton on the semi-discrete residual)."""
    solver = CNSSolver(cells, epsilon, model, walls)
    if initial is None:
        theta0 = 0.5 * (walls[0].frame.theta_w + walls[1].frame.theta_w)
        initial = FluidFields(rho=np.ones(cells), u=np.zeros((cells, 3)), theta=np.full(cells, theta0))
        if all(w.family.kind != "complete-slip" for w in walls):
            U = 0.5 * (walls[1].frame.velocity - walls[0].frame.velocity)
            mid = 0.5 * (walls[1].frame.velocity + walls[0].frame.velocity)
            initial.u = mid + np.outer(2.0 * solver.x - 1.0, U)
    q, res = solver.steady_state(initial.conserved(), tol=tol)
    return solver.fields(q), solver, res
