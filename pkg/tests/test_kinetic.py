import numpy as np
import pytest

from knudsenkit.chapman_enskog import FluidGradients, local_maxwellian, reconstruct
from knudsenkit.collision import CollisionModel
from knudsenkit.errors import ConfigurationError, StepSizeError
from knudsenkit.kinetic import (
    DiscreteMaxwellian,
    KineticSolver,
    Wall,
    WallPair,
    h_functional,
    maxwell_reflect,
    moments,
    step,
    totals,
    wall_maxwellian,
)
from knudsenkit.lattice import VelocityLattice
from knudsenkit.slip import AccommodationLaw, WallFrame
from knudsenkit.state import FluidFields, KineticDistribution

CELLS = 16


@pytest.fixture(scope="module")
def small_lattice():
    return VelocityLattice(12, 6.0)


def wavy_state(x, amp=0.05):
    wave = np.cos(2 * np.pi * x)
    return FluidFields(rho=1 + amp * wave, u=np.column_stack([amp * np.sin(2 * np.pi * x), amp * wave, 0 * x]),
                       theta=1 - amp * wave, x=x)


def maxwellian_field(fields, lattice):
    return np.atleast_2d(local_maxwellian(fields, lattice.nodes))


def test_global_equilibrium_is_a_fixed_point(small_lattice):
    walls = WallPair.slab(AccommodationLaw(chi=1.0, beta=0.5))
    solver = KineticSolver(small_lattice, CELLS, walls, 0.04, CollisionModel.bgk(1.0))
    rest = FluidFields(rho=np.ones(CELLS), u=np.zeros((CELLS, 3)), theta=np.ones(CELLS))
    F = maxwellian_field(rest, small_lattice)
    F1 = solver.step(F, solver.max_dt)
    assert np.max(np.abs(F1 - F)) < 1e-10


def test_periodic_run_conserves_totals(small_lattice):
    solver = KineticSolver(small_lattice, CELLS, WallPair.periodic_box(), 0.1, CollisionModel.bgk(1.0))
    F = maxwellian_field(wavy_state(solver.x), small_lattice)
    before = solver.totals(F)
    F, _ = solver.run(F, 20 * solver.max_dt)
    assert np.max(np.abs(solver.totals(F) - before)) < 1e-12


def test_collision_does_not_increase_h(small_lattice, rng):
    solver = KineticSolver(small_lattice, CELLS, WallPair.periodic_box(), 0.1, CollisionModel.bgk(1.0))
    F = maxwellian_field(wavy_state(solver.x), small_lattice)
    F = F * (1 + 0.3 * rng.random(F.shape))
    h = h_functional(F, small_lattice, solver.dx)
    for _ in range(5):
        F = solver.collide(F, 0.02)
        h_next = h_functional(F, small_lattice, solver.dx)
        assert h_next <= h + 1e-14
        h = h_next


def test_diffuse_walls_are_mass_tight(small_lattice):
    law = AccommodationLaw(chi=1.0, beta=0.5)
    walls = WallPair.slab(law, law, u_left=-0.2, u_right=0.2, theta_left=0.8, theta_right=1.3)
    solver = KineticSolver(small_lattice, CELLS, walls, 0.04, CollisionModel.bgk(1.0))
    F = maxwellian_field(wavy_state(solver.x), small_lattice)
    mass = solver.totals(F)[0]
    F, _ = solver.run(F, 30 * solver.max_dt)
    assert abs(solver.totals(F)[0] - mass) < 1e-10
    assert abs(solver.ledger.total[0]) < 1e-10
    # the walls do exchange momentum and energy with the gas
    assert abs(solver.ledger.total[2]) > 1e-6


def test_specular_walls_keep_tangential_momentum_and_energy(small_lattice):
    walls = WallPair.slab(AccommodationLaw(kind="specular"))
    solver = KineticSolver(small_lattice, CELLS, walls, 0.1, CollisionModel.bgk(1.0))
    fields = wavy_state(solver.x)
    fields.u[:, 1] += 0.1
    F = maxwellian_field(fields, small_lattice)
    before = solver.totals(F)
    F, _ = solver.run(F, 30 * solver.max_dt)
    after = solver.totals(F)
    assert np.max(np.abs(after[[0, 2, 3, 4]] - before[[0, 2, 3, 4]])) < 1e-12


def test_cfl_violation_raises(small_lattice):
    solver = KineticSolver(small_lattice, CELLS, WallPair.periodic_box(), 0.1)
    F = maxwellian_field(wavy_state(solver.x), small_lattice)
    with pytest.raises(StepSizeError):
        solver.step(F, 1.5 * solver.max_dt)


def test_solver_rejects_bad_setup(small_lattice):
    with pytest.raises(ConfigurationError):
        KineticSolver(small_lattice, CELLS, WallPair.periodic_box(), 0.0)
    with pytest.raises(ConfigurationError):
        KineticSolver(small_lattice, CELLS, WallPair.periodic_box(), 0.1, CollisionModel.hard_sphere())
    with pytest.raises(ConfigurationError):
        WallPair(None, Wall(WallFrame.slab("upper"), AccommodationLaw()))


class TestMaxwellReflect:
    def outgoing_mask(self, wall, lattice):
        return lattice.nodes @ wall.frame.normal > 0

    def test_specular_mirrors_outgoing_values(self, small_lattice, rng):
        wall = Wall(WallFrame.slab("upper"), AccommodationLaw(kind="specular"))
        trace = rng.random(small_lattice.size)
        incoming = maxwell_reflect(trace, wall, 0.1, small_lattice)
        out = self.outgoing_mask(wall, small_lattice)
        mirror = small_lattice.reflect_index(wall.frame.normal)
        np.testing.assert_allclose(incoming[~out], trace[mirror][~out], rtol=0, atol=0)
        np.testing.assert_array_equal(incoming[out], trace[out])

    def test_full_accommodation_returns_wall_maxwellian(self, small_lattice):
        frame = WallFrame.slab("lower", u_w=0.3, theta_w=1.2)
        wall = Wall(frame, AccommodationLaw(chi=1.0, beta=1.0))
        Mw = wall_maxwellian(frame, small_lattice.nodes)
        incoming = maxwell_reflect(Mw, wall, 1.0, small_lattice)
        np.testing.assert_allclose(incoming, Mw, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("beta", [0.25, 0.5, 1.0, 3.0])
    def test_zero_net_mass_flux_for_any_alpha(self, small_lattice, rng, beta):
        wall = Wall(WallFrame.slab("upper", u_w=-0.1, theta_w=0.9), AccommodationLaw(chi=1.0, beta=beta))
        trace = rng.random((3, small_lattice.size))
        incoming = maxwell_reflect(trace, wall, 0.2, small_lattice)
        vn = small_lattice.nodes @ wall.frame.normal
        net = (incoming * vn) @ small_lattice.weights
        outflow = (np.where(vn > 0, trace, 0.0) * vn) @ small_lattice.weights
        assert np.max(np.abs(net / outflow)) < 1e-14


def test_discrete_maxwellian_matches_moments_to_roundoff(small_lattice):
    dm = DiscreteMaxwellian(small_lattice)
    fields = wavy_state(np.linspace(0.05, 0.95, 7), amp=0.2)
    target = dm.moments(maxwellian_field(fields, small_lattice) * 1.01)
    M, _ = dm.solve(target)
    np.testing.assert_allclose(dm.moments(M), target, rtol=1e-13, atol=1e-15)


def test_moments_of_two_beam_mixture(wide_lattice):
    a = 0.6
    left = FluidFields(rho=np.ones(1), u=np.array([[a, 0, 0]]), theta=np.ones(1))
    right = FluidFields(rho=np.ones(1), u=np.array([[-a, 0, 0]]), theta=np.ones(1))
    F = 0.5 * (maxwellian_field(left, wide_lattice) + maxwellian_field(right, wide_lattice))
    out = moments(KineticDistribution(F, wide_lattice, x=np.array([0.5])))
    assert out.rho[0] == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(out.u[0], 0.0, atol=1e-12)
    assert out.theta[0] == pytest.approx(1 + a * a / 3, abs=1e-9)


def test_moments_of_chapman_enskog_state_are_the_fluid_fields(wide_lattice):
    x = np.array([0.25, 0.75])
    fields = FluidFields(rho=np.array([1.1, 0.9]), u=np.array([[0.1, -0.2, 0.05], [0.0, 0.3, 0.0]]),
                         theta=np.array([0.9, 1.2]), x=x)
    grads = FluidGradients.zeros((2,))
    grads.grad_u[:, 0, 1] = 0.5
    grads.grad_theta[:, 0] = -0.3
    F = reconstruct(fields, grads, 0.05, CollisionModel.bgk(1.0), wide_lattice)
    out = moments(F)
    np.testing.assert_allclose(out.rho, fields.rho, rtol=1e-8)
    np.testing.assert_allclose(out.u, fields.u, atol=1e-8)
    np.testing.assert_allclose(out.theta, fields.theta, rtol=1e-8)


def test_functional_step_and_totals(small_lattice):
    walls = WallPair.slab(AccommodationLaw(kind="specular"))
    x = (np.arange(CELLS) + 0.5) / CELLS
    state = KineticDistribution(maxwellian_field(wavy_state(x), small_lattice), small_lattice, x=x)
    dt = 0.5 / CELLS / small_lattice.max_speed_component
    nxt = step(state, dt, 0.1, CollisionModel.bgk(1.0), walls)
    assert nxt.time == pytest.approx(dt)
    assert totals(nxt)[0] == pytest.approx(totals(state)[0], abs=1e-13)
