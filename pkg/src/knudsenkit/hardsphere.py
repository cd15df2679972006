"""Linearized hard-sphere operator in a Sonine x spherical-harmonic basis.

Basis functions (per harmonic degree l and Sonine index p)

    phi_{l,m,p}(V) = |V|^l Y_lm(V/|V|) L_p^{(l+1/2)}(|V|^2 / 2)

are eigen-sectors of rotations, so the bracket

    [phi, psi] = 1/4 iiint |g.w| mu(v) mu(v1) D(phi) D(psi) dw dv1 dv,
    D(phi) = phi(v') + phi(v1') - phi(v) - phi(v1),

is block-diagonal in (l, m) and independent of m.  The per-sector matrices
are computed once with a product rule that is exact for the polynomial
integrands: Gauss-Hermite in the centre-of-mass velocity, generalized
Gauss-Laguerre in |g|^2/4, Gauss-Legendre x trapezoid on the hemisphere of
scattering directions.  The m-summed integrand is rotation invariant, so
the relative velocity is pinned to e_z and, because the Hermite rule in the
centre-of-mass velocity is exact, the azimuth of the scattering direction
can be pinned as well.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import erf, eval_genlaguerre, eval_legendre, gammaln, lpmv, roots_genlaguerre

from .errors import NumericalError

_TWO_PI_32 = (2.0 * np.pi) ** 1.5


def collision_frequency(speed: np.ndarray) -> np.ndarray:
    """nu(|v|) = 2 pi E|Z - v|, Z standard normal, for the kernel |(v1 - v).w|."""
    r = np.asarray(speed, dtype=float)
    small = r < 1e-3
    rs = np.where(small, 1.0, r)
    mean_abs = np.sqrt(2.0 / np.pi) * np.exp(-0.5 * rs * rs) + (rs + 1.0 / rs) * erf(rs / np.sqrt(2.0))
    series = np.sqrt(2.0 / np.pi) * (2.0 + r * r / 3.0)
    return 2.0 * np.pi * np.where(small, series, mean_abs)


def sonine(p: int, l: int, x: np.ndarray) -> np.ndarray:
    """Sonine polynomial S_{l+1/2}^{(p)}(x)."""
    return eval_genlaguerre(p, l + 0.5, x)


def sector_gram(l: int, order: int) -> np.ndarray:
    """Per-m Gram matrix int phi_p phi_q mu dV (diagonal by Laguerre orthogonality)."""
    p = np.arange(order)
    diag = 2.0 ** (l + 0.5) * np.exp(gammaln(p + l + 1.5) - gammaln(p + 1)) / _TWO_PI_32
    return np.diag(diag)


def _node_counts(l: int, order: int) -> tuple[int, int, int]:
    deg = l + 2 * (order - 1)
    return deg + 1, deg // 2 + 1, 2 * deg + 2


@lru_cache(maxsize=None)
def sector_brackets(l: int, order: int) -> np.ndarray:
    """Per-m bracket matrix [phi_{l,m,p}, phi_{l,m,q}], p, q < order."""
    n_g, n_s, n_c = _node_counts(l, order)
    xg, wg = hermgauss(n_g)
    s, ws = roots_genlaguerre(n_s, 1.0)
    c, wc = leggauss(n_c)
    c = 0.5 * (c + 1.0)
    wc = 0.5 * wc

    S, Cc = (a.ravel() for a in np.meshgrid(np.arange(n_s), np.arange(n_c), indexing="ij"))
    gmag = 2.0 * np.sqrt(s[S])
    cos_t = c[Cc]
    sin_t = np.sqrt(1.0 - cos_t**2)
    omega = np.stack([sin_t, np.zeros_like(sin_t), cos_t], axis=-1)
    gvec = np.zeros((S.size, 3))
    gvec[:, 2] = gmag
    # g^3 dg exp(-g^2/4) = 8 s exp(-s) ds ; |g.w| = g cos_t, one g absorbed above;
    # 2 pi from the azimuth of w
    w_inner = 8.0 * ws[S] * wc[Cc] * cos_t * 2.0 * np.pi
    # 1/4 * (2pi)^-3 * 4pi (direction of g) * 2 (full sphere of w)
    prefactor = 0.25 * (2.0 * np.pi) ** -3 * 4.0 * np.pi * 2.0
    g_dot_w = (gvec * omega).sum(axis=1)[:, None]
    kick = g_dot_w * omega
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    norm_l = (2 * l + 1) / (4.0 * np.pi)

    out = np.zeros((order, order))
    for i in range(n_g):
        for j in range(n_g):
            G = np.empty((n_g, 1, 3))
            G[:, 0, 0] = xg[i]
            G[:, 0, 1] = xg[j]
            G[:, 0, 2] = xg
            wG = (wg[i] * wg[j] * wg)[:, None] * w_inner[None, :]
            v = G - 0.5 * gvec[None]
            v1 = G + 0.5 * gvec[None]
            vel = np.stack([v + kick[None], v1 - kick[None], v, v1])  # (4, nG, N, 3)
            r2 = np.sum(vel * vel, axis=-1)
            r = np.sqrt(r2)
            R = np.stack([sonine(p, l, 0.5 * r2) for p in range(order)]) * signs[None, :, None, None]
            if l == 0:
                K = np.full((4, 4) + r.shape[1:], norm_l)
            else:
                dots = np.einsum("agnk,bgnk->abgn", vel, vel)
                rr = r[:, None] * r[None, :]
                cos = np.divide(dots, rr, out=np.ones_like(dots), where=rr > 0)
                K = norm_l * rr**l * eval_legendre(l, np.clip(cos, -1.0, 1.0))
            T = np.einsum("pagn,abgn->pbgn", R, K)
            out += np.einsum("pbgn,qbgn,gn->pq", T, R, wG)
    out *= prefactor / (2 * l + 1)
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class SonineSolution:
    """Galerkin Chapman-Enskog coefficients at the reference Maxwellian.

    ``shear_coeffs`` expand a(|V|) in S_{5/2}^{(q)}; ``heat_coeffs`` expand the
    radial factor g(|V|) of B_hat = g(|V|) V in S_{3/2}^{(q)}, q >= 1.
    """

    order: int
    shear_coeffs: np.ndarray
    heat_coeffs: np.ndarray
    condition: float

    def a(self, r: np.ndarray) -> np.ndarray:
        x = 0.5 * np.asarray(r, dtype=float) ** 2
        return sum(c * sonine(q, 2, x) for q, c in enumerate(self.shear_coeffs))

    def heat_radial(self, r: np.ndarray) -> np.ndarray:
        x = 0.5 * np.asarray(r, dtype=float) ** 2
        return sum(c * sonine(q + 1, 1, x) for q, c in enumerate(self.heat_coeffs))

    def enriched_residuals(self) -> tuple[float, float]:
        """Relative L2 residuals of the shear and heat relations, tested against order + 2."""
        return (
            _enriched_residual(2, self.order, self.shear_coeffs, 0, 1.0, 0),
            _enriched_residual(1, self.order, self.heat_coeffs, 1, -1.0, 1),
        )

    @property
    def viscosity(self) -> float:
        return float(self.shear_coeffs[0])

    @property
    def conductivity(self) -> float:
        # kappa = (1/3) int B.B_hat mu dV with (|V|^2-5)/2 = -S_{3/2}^{(1)}
        norm = 4.0 * np.pi / 3.0 * sector_gram(1, 2)[1, 1]
        return float(-self.heat_coeffs[0] * norm)


def _enriched_residual(l: int, order: int, coeffs: np.ndarray, rhs_index: int, rhs_sign: float, offset: int) -> float:
    big = order + offset + 2
    C = sector_brackets(l, big)
    Gm = sector_gram(l, big)
    full = np.zeros(big)
    full[offset : offset + order] = coeffs
    r = C @ full - rhs_sign * Gm[:, rhs_index]
    return float(np.sqrt(r @ np.linalg.solve(Gm, r) / Gm[rhs_index, rhs_index]))


@lru_cache(maxsize=None)
def solve_chapman_enskog(order: int = 3) -> SonineSolution:
    """Galerkin solve of L(sqrt(mu) A_hat) = sqrt(mu) A and likewise for B."""
    if order < 1:
        raise ValueError("Sonine order must be >= 1")
    C2 = sector_brackets(2, order)
    G2 = sector_gram(2, order)
    C1 = sector_brackets(1, order + 1)[1:, 1:]
    G1 = sector_gram(1, order + 1)
    cond = max(np.linalg.cond(C2), np.linalg.cond(C1))
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError("hard-sphere Galerkin system is singular", condition_number=cond)
    shear = np.linalg.solve(C2, G2[:, 0])
    # B = -S_{3/2}^{(1)} V, so the right-hand side is minus the Gram column
    heat = np.linalg.solve(C1, -G1[1:, 1])
    return SonineSolution(
        order=order,
        shear_coeffs=shear,
        heat_coeffs=heat,
        condition=float(cond),
    )


def real_solid_harmonics(nodes: np.ndarray, l: int) -> np.ndarray:
    """|v|^l Y_lm(v/|v|) for m = -l..l, orthonormal on the unit sphere; shape (2l+1, N)."""
    x, y, z = nodes[:, 0], nodes[:, 1], nodes[:, 2]
    r = np.sqrt(x * x + y * y + z * z)
    cos_t = np.divide(z, r, out=np.ones_like(r), where=r > 0)
    az = np.arctan2(y, x)
    rows = []
    for m in range(-l, l + 1):
        am = abs(m)
        norm = np.sqrt((2 * l + 1) / (4 * np.pi) * np.exp(gammaln(l - am + 1) - gammaln(l + am + 1)))
        base = norm * lpmv(am, l, cos_t)
        if m > 0:
            base = np.sqrt(2.0) * base * np.cos(am * az)
        elif m < 0:
            base = np.sqrt(2.0) * base * np.sin(am * az)
        rows.append(r**l * base)
    return np.array(rows)


class LatticeOperator:
    """Hard-sphere L on a velocity lattice: P_S L P_S + (I - P_S) nu (I - P_S).

    P_S is the discrete orthogonal projector onto the Sonine x harmonic span
    (l <= degree).  Each sector carries ``order`` functions beyond its
    collision invariants (two for l = 0, one for l = 1), so the span contains
    the invariants, on which the bracket rows vanish, and the Chapman-Enskog
    solutions of the same order.  The complement is damped by the true
    collision frequency.
    """

    def __init__(self, lattice, order: int = 3, degree: int = 4):
        self.lattice = lattice
        nodes = lattice.nodes
        w = lattice.weights
        r2 = np.sum(nodes**2, axis=1)
        sq = lattice.sqrt_mu
        columns = []
        blocks = []
        for l in range(degree + 1):
            harm = real_solid_harmonics(nodes, l)
            n_sec = order + max(0, 2 - l)
            C = sector_brackets(l, n_sec)
            for m in range(2 * l + 1):
                for p in range(n_sec):
                    columns.append(harm[m] * sonine(p, l, 0.5 * r2) * sq)
                blocks.append(C)
        self.basis = np.array(columns).T  # (Nv, Nb)
        nb = self.basis.shape[1]
        self.brackets = np.zeros((nb, nb))
        k = 0
        for C in blocks:
            n = C.shape[0]
            self.brackets[k : k + n, k : k + n] = C
            k += n
        gram = self.basis.T @ (w[:, None] * self.basis)
        self._gram_inv = np.linalg.inv(gram)
        self._span_op = self._gram_inv @ self.brackets @ self._gram_inv
        self.nu = collision_frequency(np.sqrt(r2))

    def project(self, f: np.ndarray) -> np.ndarray:
        c = (f * self.lattice.weights) @ self.basis
        return (c @ self._gram_inv.T) @ self.basis.T

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        c = (f * self.lattice.weights) @ self.basis
        span_part = (c @ self._span_op.T) @ self.basis.T
        rest = f - (c @ self._gram_inv.T) @ self.basis.T
        damped = self.nu * rest
        damped = damped - self.project(damped)
        return span_part + damped
