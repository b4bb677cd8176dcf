"""Gram determinants, Bergman functions and Bernstein-Markov diagnostics.

For a basis orthonormal in ``L^2(omega, 0)``, the unit ball of
``L^2(mu, n phi)`` has Lebesgue volume proportional to ``det(gram)^-1``, so

    L_diff = (1 / (n N)) log det gram = L_n(omega, 0) - L_n(mu, phi)

with ``L_n = (1 / (n N)) log vol``.  A constant weight ``phi = c`` gives
``gram = exp(-2 n c) I`` and ``L_diff = -2c``, which equals ``-min I_c``;
in general ``L_diff + min I_phi = O(log n / n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .config import WeightedSet
from .errors import ConditioningError, InvalidInput
from .geometry import (SPHERE_RADIUS, Atoms, CircleMeasure, GridDensity, GridField, Measure,
                       ModelSurface, distance, geodesic_offset, quadrature_grid, random_points)
from .potentials import NEG_INF
from .sections import SectionBasis, build_basis


def _measure_nodes(mu: Measure):
    if isinstance(mu, GridDensity):
        keep = mu.masses > 0
        return mu.grid.nodes[keep], mu.masses[keep]
    if isinstance(mu, (CircleMeasure, Atoms)):
        return mu.points, mu.weights
    raise InvalidInput(f"unsupported measure type {type(mu).__name__}")


def _logdet_cholesky(gram: np.ndarray):
    """``log det`` of a Hermitian matrix by Cholesky, or ``None`` if not positive definite."""
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        return None, None
    d = np.abs(np.diag(L)).astype(np.longdouble)
    if np.any(d <= 0):
        return None, None
    return float(2 * np.sum(np.log(d))), L


@dataclass
class GramReport:
    """Gram matrix of an ``L^2(omega, 0)``-orthonormal basis in ``L^2(mu, n phi)``.

    ``gram`` is stored with the factor ``exp(2 n phi_min)`` pulled out, so the
    true matrix is ``exp(-2 n phi_min) gram``; ``log_det`` refers to the true
    matrix.
    """

    n: int
    N: int
    gram: np.ndarray
    log_det: object
    L_diff: object
    condition: float
    phi_shift: float
    resolution: int
    cholesky: np.ndarray | None = None

    def to_dict(self) -> dict:
        f = lambda v: None if v is NEG_INF else float(v)  # noqa: E731
        return {"n": self.n, "N": self.N, "log_det": f(self.log_det), "L_diff": f(self.L_diff),
                "condition": self.condition, "resolution": self.resolution}


def _weighted_nodes(weighted_set: WeightedSet, n: int, resolution: int, mu=None):
    mu = weighted_set.mu_measure(resolution) if mu is None else mu
    nodes, w = _measure_nodes(mu)
    phi = np.asarray(weighted_set.phi(nodes), float)
    shift = float(np.min(phi))
    return nodes, w * np.exp(-2 * n * (phi - shift)), phi, shift


def gram_matrix(basis: SectionBasis, weighted_set: WeightedSet, n: int | None = None,
                resolution: int = 256, mu: Measure | None = None) -> GramReport:
    """Gram matrix of ``basis`` in ``L^2(mu, n phi)`` and ``L_diff``.

    Parameters
    ----------
    basis : SectionBasis
        Orthonormal in ``L^2(omega, 0)``.
    weighted_set : WeightedSet
        Supplies ``phi`` and the measure ``mu`` (restricted to ``K``).
    n : int, optional
        Must equal ``basis.n`` when given.
    resolution : int
        Quadrature resolution for grid measures.
    mu : Measure, optional
        Overrides the weighted set's measure.

    Returns
    -------
    GramReport
        ``L_diff`` is ``NEG_INF`` when the matrix is numerically singular.
    """
    if basis.coef is None:
        raise InvalidInput("gram_matrix needs a basis orthonormal in L^2(omega, 0)")
    if n is not None and n != basis.n:
        raise InvalidInput("n does not match the basis")
    n, N = basis.n, basis.N
    nodes, w, _, shift = _weighted_nodes(weighted_set, n, resolution, mu)
    V = basis.values(nodes)
    gram = (V.conj().T * w) @ V
    gram = 0.5 * (gram + gram.conj().T)
    ev = np.linalg.eigvalsh(gram)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    ld, L = _logdet_cholesky(gram)
    if ld is None or cond > 1e15:
        return GramReport(n, N, gram, NEG_INF, NEG_INF, cond, shift, resolution, None)
    log_det = ld - 2 * n * N * shift
    return GramReport(n, N, gram, log_det, log_det / (n * N), cond, shift, resolution, L)


@dataclass
class BergmanReport:
    """Bergman function ``rho_n(mu, phi)`` sampled on a grid."""

    n: int
    N: int
    nodes: np.ndarray
    values: np.ndarray
    sup_K: float
    integral: float
    in_K: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "sup_K": self.sup_K, "integral": self.integral}


def _rho(basis, L, shift, n, z, phi_vals):
    V = basis.values(z)
    W = np.linalg.solve(L, V.conj().T)
    return np.sum(np.abs(W) ** 2, axis=0) * np.exp(-2 * n * (np.asarray(phi_vals) - shift))


def bergman(basis: SectionBasis, weighted_set: WeightedSet, n: int | None = None,
            grid=None, resolution: int = 256, mu: Measure | None = None) -> BergmanReport:
    """``rho_n(x) = sum_j |s_j(x)|^2 e^{-2 n phi(x)}`` for an ``L^2(mu, n phi)``-orthonormal basis.

    The basis is re-orthonormalized through the Cholesky factor of its Gram
    matrix.  ``grid`` (default: the quadrature grid) gives the sample points;
    the supremum is taken over samples in ``K`` and over the support of
    ``mu``.

    Raises
    ------
    ConditioningError
        When the Gram matrix is singular.
    """
    rep = gram_matrix(basis, weighted_set, n, resolution, mu)
    if rep.cholesky is None:
        raise ConditioningError("Gram matrix is numerically singular", condition=rep.condition)
    n = basis.n
    mu = weighted_set.mu_measure(resolution) if mu is None else mu
    mnodes, mw = _measure_nodes(mu)
    rho_mu = _rho(basis, rep.cholesky, rep.phi_shift, n, mnodes, weighted_set.phi(mnodes))
    integral = float(np.dot(mw, rho_mu))
    if grid is None:
        grid = quadrature_grid(weighted_set.surface, resolution)
    nodes = grid.nodes if hasattr(grid, "nodes") else np.asarray(grid, complex)
    vals = _rho(basis, rep.cholesky, rep.phi_shift, n, nodes, weighted_set.phi(nodes))
    inK = weighted_set.region.contains(nodes)
    sup = max(float(np.max(vals[inK], initial=0.0)), float(np.max(rho_mu)))
    return BergmanReport(n, basis.N, nodes, vals, sup, integral, inK)


def bernstein_markov_fit(weighted_set: WeightedSet, n_values, resolution: int = 256) -> dict:
    """Fit ``sup_K rho_n <= C n^C`` over ``n_values``.

    For each ``n`` the smallest ``C_n`` with ``C_n n^{C_n} >= sup_K rho_n`` is
    found by root bracketing; ``C_hat = max C_n``.
    """
    n_values = [int(n) for n in n_values]
    sups, cs = [], []
    for n in n_values:
        basis = build_basis(weighted_set.surface, n)
        sup = bergman(basis, weighted_set, n, resolution=resolution).sup_K
        sups.append(sup)
        f = lambda c: math.log(c) + c * math.log(n) - math.log(sup)  # noqa: E731
        lo, hi = 1e-12, 1.0
        while f(hi) < 0:
            hi *= 2
        cs.append(float(optimize.brentq(f, lo, hi, xtol=1e-14)) if f(lo) < 0 else lo)
    C = max(cs)
    return {"n_values": n_values, "sup_rho": sups, "C_n": cs, "C_hat": C,
            "pass": bool(math.isfinite(C) and C > 0)}


def bracket_width(n: int, C_hat: float) -> float:
    """``log(C n^C) / n``, clipped at zero."""
    return max(0.0, math.log(C_hat) + C_hat * math.log(n)) / n


def linf_bracket(gram_report: GramReport, bm_fit: dict) -> dict:
    """Bracket for ``L_n(K, phi) - L_n(omega, 0)``.

    The L-infinity unit ball on ``K`` lies inside the ``L^2(mu)`` ball, and
    contains it scaled by ``(sup_K rho_n)^{-1/2}``, so
    ``0 <= L_n(mu, phi) - L_n(K, phi) <= log(sup_K rho_n) / n``.
    With ``L_n(mu, phi) - L_n(omega, 0) = -L_diff`` the bracket is
    ``[-L_diff - w, -L_diff]`` with ``w = log(C n^C) / n``.
    """
    if gram_report.L_diff is NEG_INF:
        raise ConditioningError("Gram matrix is singular", condition=gram_report.condition)
    if not bm_fit.get("pass", False):
        raise InvalidInput("the Bernstein-Markov fit did not pass")
    n = gram_report.n
    w = bracket_width(n, bm_fit["C_hat"])
    upper = -float(gram_report.L_diff)
    return {"lower": upper - w, "upper": upper, "width": w, "n": n}


# -- mass density -------------------------------------------------------------

def _polar_mass(surface: ModelSurface, dens: GridField, x, r, nr=16, nt=32):
    """``int_{B(x, r)} dens omega`` by Gauss-Legendre in radius and trapezoid in angle."""
    t, wt = np.polynomial.legendre.leggauss(nr)
    rho = 0.5 * r * (t + 1)
    wr = 0.5 * r * wt
    ang = 2 * np.pi * np.arange(nt) / nt
    R, A = np.meshgrid(rho, ang, indexing="ij")
    pts = geodesic_offset(surface, np.full(R.size, x), R.ravel(), A.ravel())
    vals = dens(pts).reshape(R.shape)
    if surface.kind == "sphere":
        jac = SPHERE_RADIUS * np.sin(rho / SPHERE_RADIUS)
    else:
        jac = rho
    return float(np.sum(vals * (wr * jac)[:, None]) * (2 * np.pi / nt))


def _circle_mass(surface: ModelSurface, mu: CircleMeasure, x, r):
    """Arc fraction of a uniform circle inside ``B(x, r)``."""
    d = float(distance(surface, x, mu.center))
    rho = mu.radius
    if surface.kind == "sphere":
        R = SPHERE_RADIUS
        if d < 1e-14:
            return 1.0 if r >= rho else 0.0
        c = (math.cos(r / R) - math.cos(d / R) * math.cos(rho / R)) / (
            math.sin(d / R) * math.sin(rho / R))
    else:
        if d < 1e-14:
            return 1.0 if r >= rho else 0.0
        c = (d * d + rho * rho - r * r) / (2 * d * rho)
    if c >= 1:
        return 0.0
    if c <= -1:
        return 1.0
    return math.acos(c) / math.pi


def ball_mass(mu: Measure, x, r: float) -> float:
    """``mu(B(x, r))`` for grid densities, uniform circles and atoms."""
    surface = mu.surface
    if isinstance(mu, CircleMeasure) and np.ptp(mu.weights) == 0:
        return _circle_mass(surface, mu, x, r) * mu.mass
    if isinstance(mu, (CircleMeasure, Atoms)):
        return float(np.sum(mu.weights[distance(surface, mu.points, x) <= r]))
    if isinstance(mu, GridDensity):
        dens = GridField(mu.grid, mu.density)
        return _polar_mass(surface, dens, x, r)
    raise InvalidInput(f"unsupported measure type {type(mu).__name__}")


def mass_density_check(mu: Measure, region=None, samples: int = 32, points=None,
                       radii=None, seed: int = 0) -> dict:
    """Fit the worst-case ``(c, tau)`` in ``mu(B(x, r)) >= c r^tau``.

    Centers are ``points`` or ``samples`` random points of the region;
    radii default to ``2^-1 .. 2^-8``.  For each center ``tau_x`` is the
    least-squares slope of ``log mu(B(x, r))`` against ``log r``;
    ``tau_hat = max tau_x`` and ``c_hat = min mu(B) / r^tau_hat``.  The check
    passes iff every ball has positive mass.
    """
    surface = mu.surface
    if radii is None:
        radii = 2.0 ** -np.arange(1, 9)
    radii = np.asarray(radii, float)
    if points is None:
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < samples:
            z = random_points(surface, 4 * samples, rng)
            if region is not None:
                z = z[region.contains(z)]
            pts.extend(z.tolist())
        points = np.array(pts[:samples])
    points = np.atleast_1d(np.asarray(points, complex))
    masses = np.array([[ball_mass(mu, x, r) for r in radii] for x in points])
    empty = np.any(masses <= 1e-300, axis=1)
    taus = np.full(points.size, np.nan)
    lr = np.log(radii)
    for i in np.nonzero(~empty)[0]:
        taus[i] = np.polyfit(lr, np.log(masses[i]), 1)[0]
    ok = not np.any(empty)
    if ok:
        tau_hat = float(np.max(taus))
        c_hat = float(np.min(masses / radii[None, :] ** tau_hat))
    else:
        tau_hat, c_hat = math.inf, 0.0
    return {"c_hat": c_hat, "tau_hat": tau_hat, "pass": bool(ok and c_hat > 0),
            "tau_per_point": taus.tolist(), "failed_points": points[empty].tolist(),
            "radii": radii.tolist()}
