import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from knudsenkit.chapman_enskog import (
    FluidGradients,
    FluidState,
    RemainderWeight,
    first_order_G,
    local_maxwellian,
    reconstruct,
    remainder_norms,
    traceless_deformation,
    transport_coefficients,
)
from knudsenkit.collision import CollisionModel
from knudsenkit.errors import ConfigurationError, PreconditionError
from knudsenkit.lattice import global_maxwellian
from knudsenkit.state import KineticDistribution, conserved_moments, moments

matrices = arrays(np.float64, (3, 3), elements=st.floats(-10, 10, allow_nan=False))


def random_state(rng, cells=None):
    shape = () if cells is None else (cells,)
    return FluidState(
        rho=rng.uniform(0.5, 2.0, shape),
        u=rng.uniform(-0.3, 0.3, shape + (3,)),
        theta=rng.uniform(0.8, 1.25, shape),
    )


def random_grads(rng, cells=None):
    shape = () if cells is None else (cells,)
    return FluidGradients(rng.standard_normal(shape + (3, 3)), rng.standard_normal(shape + (3,)))


def test_reference_state_is_global_maxwellian(lattice):
    state = FluidState(rho=1.0, u=np.zeros(3), theta=1.0)
    assert np.allclose(local_maxwellian(state, lattice.nodes), global_maxwellian(lattice.nodes), rtol=1e-14, atol=0)


def test_maxwellian_moments(wide_lattice):
    state = FluidState(rho=2.0, u=[0.3, 0.0, 0.0], theta=1.5)
    q = conserved_moments(local_maxwellian(state, wide_lattice.nodes), wide_lattice)
    assert q[0] == pytest.approx(2.0, abs=1e-6)
    assert np.allclose(q[1:4], [0.6, 0.0, 0.0], atol=1e-6)
    # int |v|^2 M = rho |u|^2 + 3 rho theta
    assert 2 * q[4] == pytest.approx(9.18, abs=1e-6)


def test_maxwellian_scaling(rng):
    v = rng.standard_normal((40, 3))
    state = FluidState(rho=1.3, u=[0.1, -0.2, 0.4], theta=0.7)
    expected = 1.3 * 0.7**-1.5 * global_maxwellian((v - state.u) / np.sqrt(0.7))
    assert np.allclose(local_maxwellian(state, v), expected, rtol=1e-13)


def test_sigma_examples():
    assert np.allclose(traceless_deformation(2.5 * np.eye(3)), 0)
    rot = np.array([[0, 1.0, -2.0], [-1.0, 0, 0.5], [2.0, -0.5, 0]])
    assert np.allclose(traceless_deformation(rot), 0)
    shear = np.zeros((3, 3))
    shear[0, 2] = 0.7
    expected = np.zeros((3, 3))
    expected[0, 2] = expected[2, 0] = 0.7
    assert np.allclose(traceless_deformation(shear), expected)


@settings(max_examples=60, deadline=None)
@given(matrices, matrices, st.floats(-3, 3))
def test_sigma_contract(first, second, weight):
    sigma = traceless_deformation(first)
    assert np.allclose(sigma, sigma.T, atol=1e-12)
    assert abs(np.trace(sigma)) < 1e-12
    combined = traceless_deformation(first + weight * second)
    assert np.allclose(combined, sigma + weight * traceless_deformation(second), atol=1e-10)


def test_zero_gradients_give_zero(hard_sphere, lattice):
    state = FluidState(rho=1.0, u=np.zeros(3), theta=1.0)
    assert np.all(first_order_G(state, FluidGradients.zeros(), hard_sphere, lattice.nodes) == 0)


@pytest.mark.parametrize("kind", ["bgk-constant-nu", "hard-sphere-linearized"])
def test_G_orthogonal_to_invariants(kind, wide_lattice, rng):
    model = CollisionModel(kind=kind)
    states = random_state(rng, 100)
    grads = random_grads(rng, 100)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        G = first_order_G(states, grads, model, wide_lattice.nodes)
    q = conserved_moments(G, wide_lattice)
    scale = conserved_moments(np.abs(G), wide_lattice)[:, :1]
    assert np.max(np.abs(q) / scale) < 1e-6


def test_heat_part_is_odd(hard_sphere, lattice):
    state = FluidState(rho=1.0, u=np.zeros(3), theta=1.0)
    grads = FluidGradients(np.zeros((3, 3)), [0.0, 0.0, 0.8])
    G = first_order_G(state, grads, hard_sphere, lattice.nodes)
    assert np.allclose(G[lattice.mirror_index(2)], -G, atol=1e-15)


def test_table_range_warning(hard_sphere):
    state = FluidState(rho=1.0, u=np.zeros(3), theta=1.0)
    grads = FluidGradients(np.ones((3, 3)), np.ones(3))
    with pytest.warns(RuntimeWarning, match="beyond table range"):
        first_order_G(state, grads, hard_sphere, np.array([[12.0, 0.0, 0.0]]))


def test_constant_table_transport():
    model = CollisionModel.bgk(0.5)
    mu, kappa = transport_coefficients(model, np.array([1.0, 1.44]))
    assert np.allclose(mu, [2.0, 2.4], rtol=1e-14)
    assert np.allclose(kappa, [5.0, 6.0], rtol=1e-14)


def test_radial_quadrature_matches_closed_form():
    # the constant-table closed form must agree with the general radial rule
    from knudsenkit.chapman_enskog import _radial_rule

    r, w = _radial_rule(10.5)
    gauss = (2 * np.pi) ** -1.5 * np.exp(-0.5 * r * r)
    assert 4 * np.pi / 15 * np.sum(w * r**6 * gauss) == pytest.approx(1.0, abs=1e-12)
    assert 4 * np.pi / 3 * np.sum(w * 0.25 * (r * r - 5) ** 2 * r**4 * gauss) == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("kind", ["bgk-constant-nu", "bgk-matched-nu", "hard-sphere-linearized"])
def test_transport_positive_and_scaling(kind):
    theta = np.linspace(0.5, 2.0, 7)
    mu, kappa = transport_coefficients(CollisionModel(kind=kind), theta)
    assert np.all(mu > 0) and np.all(kappa > 0)
    mu1, kappa1 = transport_coefficients(CollisionModel(kind=kind), 1.0)
    assert np.max(np.abs(mu / mu1 - np.sqrt(theta))) < 1e-10
    assert np.max(np.abs(kappa / kappa1 - np.sqrt(theta))) < 1e-10


def test_hard_sphere_transport_matches_sonine(hard_sphere):
    sol = hard_sphere.tables().sonine
    mu, kappa = transport_coefficients(hard_sphere, 1.0)
    assert mu == pytest.approx(sol.viscosity, rel=1e-6)
    assert kappa == pytest.approx(sol.conductivity, rel=1e-6)


def test_reconstruct_zero_epsilon(lattice, hard_sphere):
    state = FluidState(rho=1.1, u=[0.1, 0, 0], theta=0.9)
    out = reconstruct(state, FluidGradients.zeros(), 0.0, hard_sphere, lattice)
    assert np.array_equal(out.values[0], local_maxwellian(state, lattice.nodes))
    with pytest.raises(ConfigurationError):
        reconstruct(state, FluidGradients.zeros(), -1.0, hard_sphere, lattice)


def test_reconstruct_preserves_moments(wide_lattice, hard_sphere, rng):
    states = random_state(rng, 20)
    grads = random_grads(rng, 20)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = reconstruct(states, grads, 0.05, hard_sphere, wide_lattice, x=np.linspace(0, 1, 20))
    got = moments(out.values, wide_lattice)
    assert np.allclose(got.rho, states.rho, atol=1e-6)
    assert np.allclose(got.u * got.rho[:, None], states.u * states.rho[:, None], atol=1e-6)
    assert np.allclose(got.theta, states.theta, atol=1e-6)


def test_reconstruct_positivity_small_epsilon(lattice, hard_sphere, rng):
    state = FluidState(rho=1.0, u=np.zeros(3), theta=1.0)
    # build-time scan: eps G / M grows like |v|^3, so corners of [-6, 6]^3 stay
    # positive at eps = 0.01 for gradient entries up to about 0.1
    grads = FluidGradients(rng.uniform(-0.05, 0.05, (3, 3)), rng.uniform(-0.05, 0.05, 3))
    assert reconstruct(state, grads, 0.01, hard_sphere, lattice).meta["positive"]
    big = reconstruct(state, FluidGradients(50 * np.ones((3, 3)), np.zeros(3)), 1.0, hard_sphere, lattice)
    assert big.meta["positive"] is False


def test_remainder_norms(lattice, hard_sphere, rng):
    x = np.linspace(0.05, 0.95, 10)
    state = FluidState(rho=np.ones(10), u=np.zeros((10, 3)), theta=np.ones(10))
    grads = FluidGradients(np.tile(0.3 * np.eye(3)[::-1], (10, 1, 1)), np.tile([0, 0, 0.2], (10, 1)))
    M = local_maxwellian(state, lattice.nodes)
    zero = remainder_norms(KineticDistribution(M, lattice, x), state, grads, 0.1)
    assert zero["l2"] == 0 and zero["linf_w"] == 0
    F = reconstruct(state, grads, 0.1, hard_sphere, lattice, x=x)
    norms = remainder_norms(F, state, grads, 0.1, model=hard_sphere, with_r_norm=True)
    assert norms["r_norm"] < 1e-10
    bump = np.sin(np.pi * x)[:, None] * np.exp(-lattice.speed**2 / 8)[None, :]
    l2 = []
    for eps in (0.1, 0.05):
        F = KineticDistribution(M + eps**2 * lattice.sqrt_mu * bump, lattice, x)
        l2.append(remainder_norms(F, state, None, eps, RemainderWeight(3.5))["l2"])
    assert l2[0] / l2[1] == pytest.approx(4.0, rel=1e-12)
    with pytest.raises(PreconditionError):
        remainder_norms(F, state, grads, 0.0, model=hard_sphere, with_r_norm=True)


def test_weight_validation():
    assert RemainderWeight(2.0)(np.array([1.0, 1.0, 1.0])) == pytest.approx(4.0)
    with pytest.raises(ConfigurationError):
        RemainderWeight(-1.0)
