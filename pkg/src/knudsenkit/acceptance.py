"""The ten acceptance checks, each runnable on its own (CLI: ``knudsenkit acceptance N``)."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .chapman_enskog import FluidGradients, FluidState, traceless_deformation
from .cns import CNSSolver, FluidWall
from .collision import CollisionModel
from .config import RunConfig
from .harness import (
    run_coefficient_crosscheck,
    run_convergence,
    run_regime_classification,
    run_slip_verification,
)
from .kinetic import KineticSolver, WallPair
from .lattice import VelocityLattice
from .slip import (
    AccommodationLaw,
    WallFrame,
    boundary_family,
    bracket_integrals,
    compute_slip_coefficients,
    half_space_moment,
    knudsen_source,
    slip_coefficients_first,
    solvability_moments,
    specular_defect,
)
from .state import FluidFields

SQRT_2PI = float(np.sqrt(2.0 * np.pi))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    elapsed: float = 0.0
    budget: float = float("inf")

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.metrics.items())
        return f"criterion {self.number:2d} [{status}] {self.title} ({self.elapsed:.1f}s of {self.budget:g}s): {shown}"


def _short(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _frames() -> list[WallFrame]:
    n = np.array([1.0, 2.0, 2.0]) / 3.0
    t = np.array([2.0, -1.0, 0.0]) / np.sqrt(5.0)
    oblique = WallFrame(n=n, t=t, s=np.cross(n, t), u_w=0.4 * t, theta_w=1.3)
    return [WallFrame.slab("lower", 0.2), WallFrame.slab("upper", -0.1, 0.8), oblique]


def golden_half_space_moments() -> CriterionResult:
    u_hat = np.array([0.3, -0.7, 0.2])
    theta_hat = 0.6
    worst = 0.0
    for frame in _frames():
        worst = max(worst,
                    abs(half_space_moment("mass-flux", frame) - 2.0 * np.pi),
                    abs(half_space_moment("tangential-shear-flux", frame, u_hat=u_hat)
                        - (2.0 * np.pi) ** 1.5 / 2.0 * (u_hat @ frame.normal)),
                    abs(half_space_moment("energy-flux", frame, theta_hat=theta_hat) - np.pi * theta_hat / frame.theta_w))
    return CriterionResult(1, "half-space golden moments", worst < 1e-8, {"max_abs_error": worst, "tolerance": 1e-8},
                           budget=1.0)


def bracket_ratios(seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        c = rng.uniform(0.1, 2.0, size=4)
        def a_of(r, c=c):
            return c[0] + c[1] * r**2 / (1.0 + r) + c[2] * np.exp(-c[3] * r)
        for frame in _frames():
            F, (i1, i2, i3) = bracket_integrals(a_of, frame)
            worst = max(worst, abs(i1 / (np.pi / 2 * F) - 1), abs(i2 / (np.pi / 4 * F) - 1), abs(i3 / (np.pi * F) - 1))
    return CriterionResult(2, "bracket ratios pi/2 : pi/4 : pi", worst < 1e-8, {"max_rel_error": worst, "tables": 5},
                           budget=1.0)


def analytic_slip_coefficients() -> CriterionResult:
    worst = 0.0
    for a0 in (0.5, 1.0, 1.7):
        bu, bt = slip_coefficients_first(CollisionModel.bgk(1.0 / a0))
        # BGK has b0 = a0; closed forms from Gaussian moments
        worst = max(worst, abs(bu / (-SQRT_2PI * a0) - 1), abs(bt / (-5.0 * SQRT_2PI / 4.0 * a0) - 1))
    return CriterionResult(3, "analytic constant-table slip coefficients", worst < 1e-6,
                           {"max_rel_error": worst, "tolerance": 1e-6}, budget=1.0)


def quadrature_vs_half_space() -> CriterionResult:
    rows = run_coefficient_crosscheck([CollisionModel.bgk(1.0)])
    gap = max(r["relative_gap"] for r in rows)
    change = max(r["refinement_change"] for r in rows)
    return CriterionResult(4, "quadrature vs half-space solve (BGK)", gap < 0.05 and change < 0.01,
                           {"max_gap": gap, "max_refinement_change": change}, budget=30.0)


def specular_identity(draws: int = 1000, seed: int = 11) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        V = rng.normal(size=3) * 2.0
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        grad_u = rng.normal(size=(3, 3))
        sigma = traceless_deformation(grad_u)
        RV = V - 2.0 * (V @ n) * n
        A = lambda x: np.outer(x, x) - np.eye(3) * (x @ x) / 3.0
        S = grad_u + grad_u.T
        tangential = S @ n - (n @ S @ n) * n
        lhs = np.sum((A(V) - A(RV)) * sigma)
        worst = max(worst, abs(lhs - 4.0 * (V @ n) * (tangential @ V)) / max(1.0, abs(lhs)))
    model = CollisionModel.hard_sphere()
    lattice = VelocityLattice()
    frame = WallFrame.slab("lower", u_w=0.1)
    state = FluidState(rho=1.0, u=[0.0, 0.3, 0.0], theta=1.0)
    # complete slip: zero wall shear and zero normal heat flux, tangential theta gradient allowed
    grad_u = np.zeros((3, 3))
    grad_u[1, 1] = 0.4
    grad_u[0, 0] = -0.2
    imposed = specular_defect(state, FluidGradients(grad_u, [0.0, 0.5, 0.0]), frame, model, lattice)
    violated = []
    for _ in range(5):
        g = np.zeros((3, 3))
        g[0, 1] = rng.uniform(0.1, 1.0)
        violated.append(specular_defect(state, FluidGradients(g, [0.0, 0.0, 0.0]), frame, model, lattice))
        violated.append(specular_defect(state, FluidGradients(np.zeros((3, 3)), [rng.uniform(0.1, 1.0), 0, 0]), frame,
                                        model, lattice))
    ok = worst < 1e-12 and imposed < 1e-10 and min(violated) > 1e-6
    return CriterionResult(5, "specular-defect identity", ok,
                           {"identity_error": worst, "defect_imposed": imposed, "min_defect_violated": min(violated)},
                           budget=5.0)


def conservation_suite() -> CriterionResult:
    model = CollisionModel.bgk(1.0)
    lattice = VelocityLattice()
    cells = 32
    x = (np.arange(cells) + 0.5) / cells
    state = FluidFields(rho=1.0 + 0.1 * np.cos(np.pi * x), u=np.column_stack([0.05 * np.sin(np.pi * x),
                        0.1 * np.cos(2 * np.pi * x), 0.02 * np.ones(cells)]), theta=1.0 + 0.1 * np.sin(np.pi * x), x=x)
    from .chapman_enskog import local_maxwellian
    F0 = np.atleast_2d(local_maxwellian(state, lattice.nodes))
    # diffuse-type walls, moving and at different temperatures
    walls = WallPair.slab(AccommodationLaw(chi=1.0, beta=0.5), u_left=-0.2, u_right=0.3, theta_left=0.9, theta_right=1.2)
    solver = KineticSolver(lattice, cells, walls, 0.05, model)
    m0 = solver.totals(F0)
    F, _ = solver.run(F0, 100 * solver.max_dt)
    mass_drift = abs(solver.totals(F)[0] - m0[0]) / m0[0]
    # specular walls: tangential momentum is untouched by the walls
    mirror_solver = KineticSolver(lattice, cells, WallPair.slab(AccommodationLaw(kind="specular"), u_left=-0.2, u_right=0.3),
                                   0.05, model)
    G, _ = mirror_solver.run(F0, 100 * mirror_solver.max_dt)
    tangential = float(np.max(np.abs(mirror_solver.totals(G)[2:4] - m0[2:4])))
    # CNS with complete slip on a decaying shear layer
    coeffs = compute_slip_coefficients(model)
    family = boundary_family(AccommodationLaw(kind="specular"), 0.05, coeffs)
    cns = CNSSolver(64, 0.05, model, (FluidWall(family, WallFrame.slab("lower", -0.2)),
                                      FluidWall(family, WallFrame.slab("upper", 0.3))))
    xf = cns.x
    q0 = FluidFields(rho=np.ones(64), u=np.column_stack([0 * xf, 0.2 * np.tanh((xf - 0.5) / 0.1), 0.05 * np.cos(np.pi * xf)]),
                     theta=1.0 + 0.05 * np.cos(np.pi * xf)).conserved()
    t_end = 1.0
    q = cns.run(q0, t_end)
    t0, t1 = cns.totals(q0), cns.totals(q)
    cns_mom = float(np.max(np.abs(t1[2:4] - t0[2:4]))) / t_end
    cns_energy = abs(t1[4] - t0[4]) / t_end
    ok = mass_drift < 1e-10 and tangential < 1e-10 and cns_mom < 1e-8 and cns_energy < 1e-8
    return CriterionResult(6, "conservation suite", ok,
                           {"kinetic_mass_drift": mass_drift, "specular_tangential_drift": tangential,
                            "cns_tangential_rate": cns_mom, "cns_energy_rate": cns_energy}, budget=60.0)


def convergence_rates(cfg: RunConfig | None = None) -> CriterionResult:
    cfg = cfg or RunConfig(experiment="converge", law="specular")
    report = run_convergence(cfg)
    l2 = report.orders["l2"]["median"]
    linf = report.orders["linf_w"]["median"]
    metrics = {"l2_order_median": l2, "linf_w_order_median": linf,
               "l2_pairwise": [round(p, 3) for p in report.orders["l2"]["pairwise"]],
               "linf_w_pairwise": [round(p, 3) for p in report.orders["linf_w"]["pairwise"]]}
    if report.control:
        metrics["l2_floor"] = report.control.get("l2_floor", float("nan"))
    return CriterionResult(7, "convergence rates (BGK slab, specular walls)", report.passed, metrics, budget=600.0)


def slip_law_scaling(cfg: RunConfig | None = None) -> CriterionResult:
    cfg = cfg or RunConfig(experiment="slip-verify", epsilons=[0.02], beta=0.5, betas=[0.25, 0.5, 0.75])
    result = run_slip_verification(cfg)
    head = result.headline or {}
    metrics = {"headline_relative_error": head.get("relative_error", float("nan")),
               "measured": head.get("measured_slip_length", float("nan")),
               "predicted": head.get("predicted_slip_length", float("nan")), "slope": result.slope}
    return CriterionResult(8, "slip-law scaling", result.passed(), metrics, budget=900.0)


def regime_classifier(cfg: RunConfig | None = None) -> CriterionResult:
    cfg = cfg or RunConfig(experiment="classify", epsilons=[0.04, 0.02], betas=[2.0, 0.5, 1.0])
    out = run_regime_classification(cfg)
    metrics = {k: f"{v[0]}({v[1]:.3g})" for k, v in out["classes"].items()}
    off = out["offset"]
    metrics["offset_left"] = off.get("offset_left", float("nan"))
    metrics["predicted_left"] = off.get("predicted_offset_left", float("nan"))
    metrics["offset_right"] = off.get("offset_right", float("nan"))
    metrics["predicted_right"] = off.get("predicted_offset_right", float("nan"))
    return CriterionResult(9, "beta-regime classifier", out["passed"], metrics, budget=600.0)


def solvability_checker() -> CriterionResult:
    worst = 0.0
    signs_ok = True
    value_err = 0.0
    rho, chi = 1.2, 1.3
    for model in (CollisionModel.bgk(1.0), CollisionModel.hard_sphere()):
        for frame in _frames():
            coeffs = compute_slip_coefficients(model, frame.theta_w)
            grad_u = np.array([[0.1, 0.5, -0.2], [0.3, -0.4, 0.2], [0.1, 0.2, 0.3]])
            grad_theta = np.array([0.4, -0.3, 0.6])
            shear = grad_u + grad_u.T
            g = frame.tangential(shear @ frame.normal)
            u_hat = coeffs.bI_u * g / (chi * rho)
            theta_hat = coeffs.bI_theta * (grad_theta @ frame.normal) / (chi * rho)

            def source(xi, uh=u_hat):
                return knudsen_source(xi, frame, model, rho, chi, uh, theta_hat, shear, grad_theta @ frame.normal)

            base = solvability_moments(source, frame)
            scale = np.abs(solvability_moments(lambda xi: np.abs(source(xi)), frame)).max()
            worst = max(worst, float(np.max(np.abs(base)) / scale))
            ut = u_hat @ frame.tangent
            for delta in (0.1, -0.1):
                moved = solvability_moments(lambda xi: source(xi, (1 + delta) * u_hat), frame)
                # the u_hat term contributes chi (u_hat.t) / (sqrt(theta_w) sqrt(2 pi)) per unit change
                predicted = delta * chi * ut / (np.sqrt(frame.theta_w) * SQRT_2PI)
                signs_ok &= bool(np.sign(moved[1]) == np.sign(predicted) and abs(moved[1]) > 1e-6 * scale)
                value_err = max(value_err, abs(moved[1] - predicted) / abs(predicted))
    ok = worst < 1e-6 and signs_ok and value_err < 1e-6
    return CriterionResult(10, "solvability checker", ok, {"compatible_max_over_scale": worst, "signs_ok": signs_ok,
                                                           "perturbation_rel_error": value_err}, budget=10.0)


CRITERIA = {
    1: golden_half_space_moments,
    2: bracket_ratios,
    3: analytic_slip_coefficients,
    4: quadrature_vs_half_space,
    5: specular_identity,
    6: conservation_suite,
    7: convergence_rates,
    8: slip_law_scaling,
    9: regime_classifier,
    10: solvability_checker,
}


def run_criterion(number: int) -> CriterionResult:
    if number not in CRITERIA:
        raise KeyError(f"no acceptance criterion {number}; expected 1-10")
    start = time.perf_counter()
    result = CRITERIA[number]()
    result.elapsed = time.perf_counter() - start
    return result
