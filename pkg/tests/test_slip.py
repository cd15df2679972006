import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knudsenkit.chapman_enskog import FluidGradients, FluidState, traceless_deformation
from knudsenkit.collision import CollisionModel, chapman_enskog_functions
from knudsenkit.errors import ConfigurationError, PreconditionError
from knudsenkit.lattice import global_maxwellian
from knudsenkit.slip import (
    AccommodationLaw,
    BCFamily,
    SlipCoefficients,
    WallFrame,
    aoki_slip_coefficients,
    bc_residual,
    boundary_family,
    compute_slip_coefficients,
    half_space_moment,
    knudsen_source,
    shear_bracket,
    slip_coefficients_critical,
    slip_coefficients_first,
    solvability_moments,
    specular_defect,
)

SQRT_2PI = np.sqrt(2 * np.pi)


def oblique_frame(theta_w=1.0):
    n = np.array([1.0, 2.0, 2.0]) / 3.0
    t = np.array([2.0, -1.0, 0.0]) / np.sqrt(5.0)
    return WallFrame(n=n, t=t, s=np.cross(n, t), u_w=0.4 * t, theta_w=theta_w)


@pytest.fixture(params=["lower", "upper", "oblique"])
def frame(request):
    return oblique_frame() if request.param == "oblique" else WallFrame.slab(request.param, u_w=0.2)


def test_frame_validation():
    with pytest.raises(ConfigurationError):
        WallFrame(n=(1, 0, 0), t=(0, 1, 0), s=(0, 0, -1))
    with pytest.raises(ConfigurationError):
        WallFrame(n=(1, 0, 0), t=(0, 1, 0), s=(0, 0, 1), u_w=(0.1, 0, 0))
    with pytest.raises(ConfigurationError):
        WallFrame(n=(1, 0, 0), t=(0, 1, 0), s=(0, 0, 1), theta_w=0.0)


def test_golden_half_space_moments(frame):
    u_hat = np.array([0.3, -0.7, 0.2])
    assert abs(half_space_moment("mass-flux", frame) - 2 * np.pi) < 1e-8
    expected = (2 * np.pi) ** 1.5 / 2 * (u_hat @ frame.normal)
    assert abs(half_space_moment("tangential-shear-flux", frame, u_hat=u_hat) - expected) < 1e-8
    assert abs(half_space_moment("energy-flux", frame, theta_hat=0.6) - np.pi * 0.6) < 1e-8


def test_tangential_odd_moments_vanish(frame):
    value = half_space_moment("tangential-shear-flux", frame, u_hat=frame.tangent)
    assert abs(value) < 1e-12


def test_custom_moment_and_growth_flag(frame):
    # int_{xi.n>0} exp(-|xi|^2/2) = (2 pi)^{3/2} / 2
    assert half_space_moment("custom", frame, integrand=lambda xi: np.ones(len(xi))) == pytest.approx(
        (2 * np.pi) ** 1.5 / 2, rel=1e-10)
    with pytest.raises(ConfigurationError):
        half_space_moment("custom", frame, integrand=lambda xi: np.exp(0.5 * np.sum(xi * xi, axis=1)))
    with pytest.raises(ConfigurationError):
        half_space_moment("swirl", frame)


def test_bracket_constant_table():
    F, checks = shear_bracket(CollisionModel.bgk(0.5))
    assert F == pytest.approx(8 * 2.0, rel=1e-12)
    assert checks[0] == pytest.approx(np.pi / 2 * F, rel=1e-10)
    assert checks[1] == pytest.approx(np.pi / 4 * F, rel=1e-10)
    assert checks[2] == pytest.approx(np.pi * F, rel=1e-10)


@pytest.mark.parametrize("kind", ["bgk-matched-nu", "hard-sphere-linearized"])
def test_bracket_ratios(kind):
    F, (i1, i2, i3) = shear_bracket(CollisionModel(kind=kind))
    assert F > 0
    assert abs(i1 / i2 - 2) < 1e-8 and abs(i3 / i1 - 2) < 1e-8
    assert abs(i1 / (np.pi / 2 * F) - 1) < 1e-8


def test_constant_table_slip_coefficients():
    model = CollisionModel.bgk(1 / 0.7)
    bu, bt = slip_coefficients_first(model)
    assert bu == pytest.approx(-SQRT_2PI * 0.7, rel=1e-12)
    assert bt == pytest.approx(-5 * SQRT_2PI / 4 * 0.7, rel=1e-12)
    cu, ct = slip_coefficients_critical(model, 1.3)
    assert (cu, ct) == pytest.approx((bu, bt), rel=1e-14)


def test_slip_coefficients_against_lattice_free_oracle(hard_sphere):
    # direct 3D Gauss-Hermite quadrature of the defining integral
    from numpy.polynomial.hermite_e import hermegauss

    x, w = hermegauss(40)
    grid = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1).reshape(-1, 3)
    wts = np.einsum("i,j,k->ijk", w, w, w).ravel() / (2 * np.pi) ** 1.5
    r = np.linalg.norm(grid, axis=1)
    keep = r < 10.0
    tab = chapman_enskog_functions(hard_sphere)
    a = tab.a_of(r[keep])
    oracle = -SQRT_2PI * np.sum(wts[keep] * a * grid[keep, 0] ** 2 * grid[keep, 1] ** 2)
    assert slip_coefficients_first(hard_sphere)[0] == pytest.approx(oracle, rel=1e-5)


def test_hard_sphere_coefficients_negative_and_theta_free(hard_sphere):
    coeffs = compute_slip_coefficients(hard_sphere)
    assert coeffs.bI_u < 0 and coeffs.bI_theta < 0 and coeffs.cI_u < 0 and coeffs.cI_theta < 0
    values = [slip_coefficients_critical(hard_sphere, th)[0] for th in (0.8, 1.0, 1.25)]
    assert values[0] == values[1] == values[2]


def test_coefficients_reject_wrong_sign():
    with pytest.raises(ConfigurationError):
        SlipCoefficients(0.1, -1, -1, -1, 1.0)


def _source_case(model, frame, chi=1.3, rho=1.2, critical_shift=False):
    coeffs = compute_slip_coefficients(model, frame.theta_w)
    grad_u = np.outer(frame.normal, 0.8 * frame.tangent - 0.3 * frame.binormal)
    grad_theta = 0.5 * frame.normal + 0.2 * frame.tangent
    shear = grad_u + grad_u.T
    g = frame.tangential(shear @ frame.normal)
    u_hat = coeffs.bI_u * g / (chi * rho)
    theta_hat = coeffs.bI_theta * (grad_theta @ frame.normal) / (chi * rho)
    return coeffs, shear, grad_theta, u_hat, theta_hat


@pytest.mark.parametrize("kind", ["bgk-constant-nu", "hard-sphere-linearized"])
def test_solvability_with_slip_relation(kind, frame):
    model = CollisionModel(kind=kind)
    coeffs, shear, grad_theta, u_hat, theta_hat = _source_case(model, frame)

    def source(xi):
        return knudsen_source(xi, frame, model, 1.2, 1.3, u_hat, theta_hat, shear, grad_theta @ frame.normal)

    moments = solvability_moments(source, frame)
    scale = np.abs(solvability_moments(lambda xi: np.abs(source(xi)), frame)).max()
    assert np.max(np.abs(moments)) < 1e-6 * scale


def test_solvability_zero_and_shear_only(frame, hard_sphere):
    assert np.all(solvability_moments(lambda xi: np.zeros(len(xi)), frame) == 0)
    coeffs, shear, _, _, _ = _source_case(hard_sphere, frame)
    g_t = frame.tangential(shear @ frame.normal) @ frame.tangent

    def source(xi):
        return knudsen_source(xi, frame, hard_sphere, 1.0, 1.0, np.zeros(3), 0.0, shear, 0.0)

    # half of the full-space integral that defines -bI_u / sqrt(2 pi), times 2 / rho
    expected = -coeffs.bI_u / SQRT_2PI * g_t
    assert solvability_moments(source, frame)[1] == pytest.approx(expected, rel=1e-6)


def test_solvability_on_lattice(lattice):
    frame = WallFrame.slab("lower")
    h = np.ones(lattice.size) * lattice.sqrt_mu
    got = solvability_moments(h, frame, lattice=lattice)
    # int_{xi.n<0} (xi.n) mu = -1/sqrt(2 pi); the midpoint rule meets the kink of
    # (xi.n)_- at xi.n = 0, so the restricted lattice is only O(h^2) accurate
    assert got[0] == pytest.approx(-1 / SQRT_2PI, rel=2e-2)
    assert abs(got[1]) < 1e-14 and abs(got[2]) < 1e-14
    with pytest.raises(ConfigurationError):
        solvability_moments(h, frame)


@pytest.fixture(scope="module")
def coeffs():
    return compute_slip_coefficients(CollisionModel.hard_sphere())


def test_family_selection(coeffs):
    assert boundary_family(AccommodationLaw("specular"), 0.1, coeffs).kind == "complete-slip"
    assert boundary_family(AccommodationLaw(chi=1, beta=1.5), 0.1, coeffs).kind == "complete-slip"
    assert boundary_family(AccommodationLaw(chi=1, beta=0.5), 0.1, coeffs).kind == "navier-slip-sub-linear"
    fam = boundary_family(AccommodationLaw(chi=1, beta=1.0), 0.1, coeffs)
    assert fam.kind == "navier-slip-critical" and fam.has_shear_heating
    with pytest.raises(ConfigurationError):
        boundary_family(AccommodationLaw(chi=1, beta=0.0), 0.1, coeffs)
    with pytest.raises(ConfigurationError):
        boundary_family(AccommodationLaw(chi=20, beta=0.5), 0.1, coeffs)
    with pytest.raises(NotImplementedError):
        aoki_slip_coefficients()


def test_sub_linear_slip_length(coeffs):
    fam = boundary_family(AccommodationLaw(chi=1, beta=0.5), 0.04, coeffs)
    assert fam.slip_length_u(1.0) == pytest.approx(0.2 * coeffs.bI_u, rel=1e-14)
    assert fam.slip_length_theta(2.0) == pytest.approx(0.1 * coeffs.bI_theta, rel=1e-14)


def test_beta_continuity(coeffs):
    critical = boundary_family(AccommodationLaw(chi=1, beta=1.0), 0.05, coeffs).slip_length_u()
    gaps = [abs(boundary_family(AccommodationLaw(chi=1, beta=b), 0.05, coeffs).slip_length_u() - critical)
            for b in (0.9, 0.99, 0.999)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 5e-3 * abs(critical)


def test_beta_to_infinity(coeffs):
    frictions = [abs(BCFamily("navier-slip-sub-linear", 0.05, 1.0, b, coeffs).formal_friction_u()) for b in (2, 4, 8)]
    assert frictions[0] > frictions[1] > frictions[2] and frictions[2] < 1e-8
    assert boundary_family(AccommodationLaw(chi=1, beta=8), 0.05, coeffs).friction_u() == 0.0


def test_bc_residual_cases(coeffs):
    frame = WallFrame.slab("lower", u_w=0.1, theta_w=1.0)
    fam = boundary_family(AccommodationLaw("specular"), 0.1, coeffs)
    state = FluidState(rho=1.0, u=[0.0, 0.4, 0.0], theta=1.3)
    assert np.all(bc_residual(fam, state, FluidGradients(np.zeros((3, 3)), [0, 0.3, 0]), frame) == 0)
    grads = FluidGradients(np.outer([1.0, 0, 0], [0, 0.7, 0]), np.zeros(3))
    assert bc_residual(fam, state, grads, frame)[1] == pytest.approx(0.7)
    nav = boundary_family(AccommodationLaw(chi=0.8, beta=0.5), 0.09, coeffs)
    ell = nav.slip_length_u(1.0)
    # n = -e1: [(grad u + grad u^T) n]^tan = -du2/dx1 e2
    dudx = 0.5
    good = FluidState(rho=1.0, u=[0.0, 0.1 - ell * dudx, 0.0], theta=1.0)
    assert bc_residual(nav, good, FluidGradients(np.outer([1.0, 0, 0], [0, dudx, 0]), np.zeros(3)), frame)[1] < 1e-14
    bad = FluidState(rho=1.0, u=[0.0, 0.1 - ell * dudx + 1e-3, 0.0], theta=1.0)
    assert bc_residual(nav, bad, FluidGradients(np.outer([1.0, 0, 0], [0, dudx, 0]), np.zeros(3)), frame)[1] > 0


def test_critical_shear_heating(coeffs):
    frame = WallFrame.slab("lower")
    fam = boundary_family(AccommodationLaw(chi=1, beta=1.0), 0.1, coeffs)
    state = FluidState(rho=1.0, u=[0.0, 0.2, 0.0], theta=1.0 + 0.01)
    grads = FluidGradients(np.zeros((3, 3)), np.zeros(3))
    assert bc_residual(fam, state, grads, frame)[2] < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=15, max_size=15))
def test_reflection_identity(values):
    vals = np.array(values)
    V = vals[:3]
    n = vals[3:6]
    if np.linalg.norm(n) < 1e-3:
        return
    n = n / np.linalg.norm(n)
    grad_u = vals[6:15].reshape(3, 3)
    sigma = traceless_deformation(grad_u)
    RV = V - 2 * (V @ n) * n

    def A(x):
        return np.outer(x, x) - np.eye(3) * (x @ x) / 3

    S = grad_u + grad_u.T
    tangential = S @ n - (n @ S @ n) * n
    lhs = np.sum((A(V) - A(RV)) * sigma)
    assert abs(lhs - 4 * (V @ n) * (tangential @ V)) < 1e-12 * max(1.0, abs(lhs))


def test_specular_defect(hard_sphere, lattice):
    frame = WallFrame.slab("lower", u_w=0.1)
    state = FluidState(rho=1.0, u=[0.0, 0.3, 0.0], theta=1.0)
    # complete slip: no normal-tangential shear, no normal heat flux
    grad_u = np.zeros((3, 3))
    grad_u[1, 2] = 0.4
    grad_u[0, 0] = 0.2
    assert specular_defect(state, FluidGradients(grad_u, [0, 0.5, 0]), frame, hard_sphere, lattice) < 1e-10
    defects = [specular_defect(state, FluidGradients(np.zeros((3, 3)), [g, 0, 0]), frame, hard_sphere, lattice)
               for g in (0.1, 0.3)]
    assert defects[1] / defects[0] == pytest.approx(3.0, rel=1e-10)
    with pytest.raises(PreconditionError):
        specular_defect(FluidState(rho=1.0, u=[0.1, 0, 0], theta=1.0), FluidGradients.zeros(), frame, hard_sphere)
