"""Holomorphic section bases of ``L^n``, weighted determinants and Fekete points.

Sphere: ``L = O(1)``, sections are polynomials of degree at most ``n`` with
pointwise norm ``|p(z)| (1 + |z|^2)^{-n/2}``.  Torus: ``L = O(p0)``; sections
are level-``n`` theta functions ``theta[j/n, 0](n w; n tau)`` of
``w = z - p0 + (1 + tau) / 2`` with pointwise norm
``|s(w)| exp(-n pi (Im w)^2 / Im tau)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .config import WeightedSet
from .errors import ConditioningError, InvalidInput
from .geometry import (ModelSurface, as_points, distance, geodesic_offset, lattice_grid,
                       quadrature_grid, random_points, reduce_point,
                       torus_difference)
from .green import GreenKernel
from .potentials import NEG_INF, Configuration, _points, pair_matrix
from .theta import ThetaContext, theta_char

SINGULAR_RTOL = 1e-13


class SectionBasis:
    """A basis of ``H^0(X, L^n)`` with pointwise evaluation in the h-metric.

    Attributes
    ----------
    n : int
        Tensor power.
    N : int
        Dimension ``n + 1`` (sphere) or ``n`` (torus).
    coef : ndarray or None
        ``N x N`` matrix mapping raw basis values to the orthonormal basis.
    """

    def __init__(self, surface: ModelSurface, n: int, p0: complex = 0j):
        self.surface = surface
        self.n = int(n)
        self.p0 = complex(p0)
        if surface.kind == "sphere":
            if self.n < 0:
                raise InvalidInput("sphere sections need n >= 0")
            self.N = self.n + 1
        else:
            if self.n < 1:
                raise InvalidInput("torus sections need n >= 1")
            self.N = self.n
        self.coef = None
        self.gram_condition = 1.0

    # -- raw evaluation ----------------------------------------------------
    def raw_values(self, z) -> np.ndarray:
        """Metric-weighted raw basis values, shape ``(len(z), N)``.

        Each row is ``s_j(z)`` times the metric weight at ``z``, up to a
        unimodular factor common to the row, so row moduli are pointwise
        h-norms and determinants have the correct modulus.
        """
        z = np.atleast_1d(as_points(self.surface, z)).ravel()
        if self.surface.kind == "sphere":
            return self._sphere_raw(z)
        return self._torus_raw(z)

    def _sphere_raw(self, z):
        n = self.n
        j = np.arange(n + 1)
        out = np.zeros((z.size, n + 1), complex)
        inf = np.isinf(z.real)
        zf = z[~inf]
        az = np.abs(zf)
        with np.errstate(divide="ignore"):
            logr = np.log(az)
        # log(1 + |z|^2) without overflow
        big = az > 1.0
        l1 = np.where(big, 2 * logr + np.log1p(1.0 / np.where(big, az, 1.0) ** 2),
                      np.log1p(az * az))
        ang = np.angle(zf)
        with np.errstate(invalid="ignore"):
            mag = np.where(j[None, :] == 0, 0.0, j[None, :] * logr[:, None])
        mag = mag - 0.5 * n * l1[:, None]
        out[~inf] = np.exp(mag + 1j * np.outer(ang, j))
        out[inf, n] = 1.0
        return out

    def _torus_raw(self, z):
        n, tau = self.n, self.surface.tau
        w = reduce_point(self.surface, z - self.p0 + 0.5 * (1 + tau))
        v = n * w
        T = n * tau
        out = np.empty((z.size, n), complex)
        for j in range(n):
            out[:, j] = theta_char(j / n, v, T, weight_n=n)
        return out

    # -- orthonormal evaluation -------------------------------------------
    def values(self, z) -> np.ndarray:
        """Weighted values of the (orthonormalized, if built so) basis."""
        raw = self.raw_values(z)
        return raw if self.coef is None else raw @ self.coef

    def log_abs_combination(self, z, c) -> np.ndarray:
        """``log |sum_j c_j s_j(z)|_h``."""
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.values(z) @ np.asarray(c, complex)))

    def quadrature_gram(self, resolution: int = 256, weights=None, phi=None) -> np.ndarray:
        """Gram matrix ``<s_j, s_k>`` in ``L^2(mu, n phi)`` on a quadrature grid.

        ``weights`` are the grid masses of ``mu`` (default ``omega``) and
        ``phi`` optional values of the weight at the grid nodes.
        """
        grid = quadrature_grid(self.surface, resolution)
        V = self.values(grid.nodes)
        w = grid.weights if weights is None else np.asarray(weights, float)
        if phi is not None:
            w = w * np.exp(-2 * self.n * np.asarray(phi, float))
        return (V.conj().T * w) @ V

    def describe(self) -> dict:
        return {"surface": self.surface.describe(), "n": self.n, "N": self.N,
                "orthonormal": self.coef is not None, "p0": [self.p0.real, self.p0.imag]}


def build_basis(surface: ModelSurface, n: int, orthonormalize: bool = True,
                resolution: int | None = None, p0: complex = 0j) -> SectionBasis:
    """Build a section basis, optionally orthonormal in ``L^2(omega, 0)``.

    Orthonormalization uses the Cholesky factor of the quadrature Gram
    matrix.  The default resolution integrates the basis products exactly on
    the sphere and to spectral accuracy on the torus.

    Raises
    ------
    ConditioningError
        When the Gram matrix is numerically singular.
    """
    basis = SectionBasis(surface, n, p0)
    if orthonormalize:
        if resolution is None:
            resolution = max(64, 4 * (basis.N + 8))
            resolution += resolution % 2
        gram = basis.quadrature_gram(resolution)
        gram = 0.5 * (gram + gram.conj().T)
        cond = float(np.linalg.cond(gram))
        basis.gram_condition = cond
        if not np.isfinite(cond) or cond > 1e14:
            raise ConditioningError("section Gram matrix is numerically singular", condition=cond)
        L = np.linalg.cholesky(gram)
        # G = L L^H, so S L^{-H} is orthonormal
        basis.coef = sla.solve_triangular(L, np.eye(basis.N), lower=True).conj().T
    return basis


def log_abs_det(M: np.ndarray) -> float:
    """``log |det M|`` by row normalization and pivoted QR; ``-inf`` if singular."""
    M = np.asarray(M, complex)
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0):
        return -math.inf
    R = sla.qr(M / norms[:, None], mode="r", pivoting=True)[0]
    d = np.abs(np.diag(R))
    if d[-1] <= SINGULAR_RTOL * d[0]:
        return -math.inf
    return float(math.fsum(np.log(norms)) + math.fsum(np.log(d)))


@dataclass
class DetEvaluation:
    """Weighted determinant of a section basis at a configuration.

    ``log_abs_det`` is ``log |det S_n|_h`` (``NEG_INF`` when singular) and
    ``weighted`` subtracts ``n sum phi(x_j)``.
    """

    config: Configuration
    log_abs_det: object
    weighted: object
    theta_factor: float = float("nan")
    green_sum: float = float("nan")


def det_norm(basis: SectionBasis, config, phi=None, kernel: GreenKernel | None = None,
             theta_ctx: ThetaContext | None = None) -> DetEvaluation:
    """``log |det S_n(x_1..x_N)|_h - n sum phi(x_j)``.

    With ``kernel`` the pair sum ``sum_{j != k} G(x_j, x_k)`` is filled in and
    with ``theta_ctx`` the log theta norm of the Abel-Jacobi argument.
    """
    pts = _points(config, basis.surface)
    if pts.size != basis.N:
        raise InvalidInput(f"configuration has {pts.size} points, basis dimension is {basis.N}")
    cfg = config if isinstance(config, Configuration) else Configuration(basis.surface, pts)
    ld = log_abs_det(basis.values(pts))
    ld = NEG_INF if ld == -math.inf else ld
    if ld is NEG_INF:
        weighted = NEG_INF
    else:
        phis = 0.0 if phi is None else float(np.sum(_phi_values(phi, pts)))
        weighted = ld - basis.n * phis
    ev = DetEvaluation(cfg, ld, weighted)
    if kernel is not None:
        G, collide = pair_matrix(kernel, pts)
        ev.green_sum = -math.inf if collide else float(math.fsum(G[~np.eye(pts.size, dtype=bool)]))
    if theta_ctx is not None:
        arg = theta_ctx.theta_argument(basis.n, pts)
        ev.theta_factor = float(theta_ctx.log_norm(arg))
    return ev


def _phi_values(phi, pts):
    if phi is None:
        return np.zeros(pts.shape)
    if callable(phi):
        return np.asarray(phi(pts), float)
    return np.broadcast_to(np.asarray(phi, float), pts.shape)


def locate_det_zero(basis: SectionBasis, pts, j: int = 0, grid: int = 64,
                    exclusion: float = 0.05) -> complex:
    """Move point ``j`` to a nontrivial zero of ``det S_n`` (torus).

    Scans ``log |det|`` over a lattice grid for point ``j``, skipping
    neighborhoods of the other points (trivial zeros), then refines with
    Newton's method on the holomorphic determinant.
    """
    surface = basis.surface
    pts = np.array(pts, complex)
    others = np.delete(pts, j)
    tau = surface.tau
    a = (np.arange(grid) + 0.5) / grid
    cand = (a[:, None] + a[None, :] * tau).ravel()
    keep = np.ones(cand.size, bool)
    for o in others:
        keep &= distance(surface, cand, o) > exclusion
    cand = cand[keep]
    # det as a linear function of the row of point j: det = row . cof
    M = basis.raw_values(pts)
    cof = _cofactor_column(M, j)
    # weighted |det| with the trivial zeros divided out
    dd = np.abs(torus_difference(surface, cand[:, None], others[None, :]))
    vals = np.log(np.abs(basis.raw_values(cand) @ cof)) - np.sum(np.log(dd), axis=1)
    z = complex(cand[int(np.argmin(vals))])

    def f(x):
        # holomorphic in x, with the trivial zeros at the other points divided out
        d = torus_difference(surface, np.full(others.size, x), others)
        return complex(_holo_row(basis, x) @ cof) / complex(np.prod(d))

    h = 1e-6
    for _ in range(60):
        fz = f(z)
        df = (f(z + h) - f(z - h)) / (2 * h)
        if df == 0:
            break
        step = fz / df
        z -= step
        if abs(step) < 1e-15:
            break
    return complex(reduce_point(surface, z))


def _cofactor_column(M, j):
    """Vector ``c`` with ``det(M with row j replaced by r) = r . c``."""
    N = M.shape[0]
    c = np.zeros(N, complex)
    rows = np.delete(M, j, axis=0)
    for k in range(N):
        sub = np.delete(rows, k, axis=1)
        c[k] = (-1) ** (j + k) * (np.linalg.det(sub) if sub.size else 1.0)
    return c


def _holo_row(basis: SectionBasis, x) -> np.ndarray:
    """Unweighted torus section values at ``x`` (no lattice reduction)."""
    n, tau = basis.n, basis.surface.tau
    w = np.array([x - basis.p0 + 0.5 * (1 + tau)])
    return np.array([theta_char(j / n, n * w, n * tau)[0] for j in range(n)])


def random_configuration(surface: ModelSurface, N: int, rng, region=None,
                         min_sep: float = 0.0, tries: int = 1000) -> np.ndarray:
    """``N`` random points (uniform in ``omega``) in the region, optionally separated."""
    out = []
    for _ in range(tries * N):
        z = random_points(surface, 1, rng)[0]
        if region is not None and not region.contains(z):
            continue
        if min_sep > 0 and out and np.min(distance(surface, np.array(out), z)) < min_sep:
            continue
        out.append(z)
        if len(out) == N:
            return np.array(out)
    raise InvalidInput("could not place the requested points")


def bosonization_check(basis: SectionBasis, kernel: GreenKernel, theta_ctx, configs,
                       threshold: float = 1e-10) -> dict:
    """Constancy of ``2 log|det|_h - sum_{j != k} G - 2 log ||theta(arg)||``.

    Returns
    -------
    dict
        ``log_ratios`` (``nan`` for excluded configurations), ``excluded``
        indices (theta norm below ``threshold``), ``spread`` and ``log_Z``,
        the center of the band.
    """
    ratios, excluded = [], []
    for i, cfg in enumerate(configs):
        ev = det_norm(basis, cfg, kernel=kernel, theta_ctx=theta_ctx)
        if ev.log_abs_det is NEG_INF:
            raise InvalidInput(f"configuration {i} collides")
        th = 0.0
        if theta_ctx is not None:
            if ev.theta_factor < math.log(threshold):
                excluded.append(i)
                ratios.append(float("nan"))
                continue
            th = ev.theta_factor
        ratios.append(2 * ev.log_abs_det - ev.green_sum - 2 * th)
    r = np.array(ratios)
    good = r[np.isfinite(r)]
    spread = float(good.max() - good.min()) if good.size else float("nan")
    center = float(0.5 * (good.max() + good.min())) if good.size else float("nan")
    return {"log_ratios": r.tolist(), "excluded": excluded, "spread": spread,
            "log_Z": center, "n": basis.n, "N": basis.N}


# -- Fekete points -----------------------------------------------------------

@dataclass
class FeketeResult:
    config: Configuration
    log_value: float
    restarts: int
    stationarity_residual: float
    history: list = field(default_factory=list)


def _probe_points(surface: ModelSurface, region, count: int) -> np.ndarray:
    """About ``count`` quadrature nodes restricted to the region."""
    if surface.kind == "torus":
        pts = lattice_grid(surface, max(16, int(math.sqrt(count)))).nodes
    else:
        pts = quadrature_grid(surface, max(16, int(math.sqrt(count / 2)))).nodes
    if region is not None:
        pts = pts[region.contains(pts)]
    return pts


def fekete_configuration(basis: SectionBasis, weighted_set: WeightedSet, restarts: int = 4,
                         seed: int = 0, probes: int = 4096, max_rounds: int = 200,
                         step_min: float = 1e-7, initial=None) -> FeketeResult:
    """Multistart maximization of ``log |det S_n|_h - n sum phi`` over ``K^N``.

    Each round visits every point; the best replacement from a probe grid is
    found with the rank-one determinant update ``det(A') = det(A) (v A^{-1})_j``
    and then refined by a shrinking 9-point stencil.

    Parameters
    ----------
    initial : array, optional
        Extra starting configuration (for instance a minimizer of the
        discrete energy); the result dominates it.
    """
    surface = weighted_set.surface
    region = weighted_set.region
    phi = weighted_set.phi
    N, n = basis.N, basis.n
    probe = _probe_points(surface, region, probes)
    Vp = basis.values(probe)
    php = np.asarray(phi(probe), float)
    rng = np.random.default_rng(seed)
    starts = []
    if initial is not None:
        starts.append(np.asarray(_points(initial, surface), complex))
    for _ in range(restarts):
        starts.append(random_configuration(surface, N, rng, region))

    def objective(pts):
        ld = log_abs_det(basis.values(pts))
        return ld - n * float(np.sum(phi(pts)))

    best, best_val, hist = None, -math.inf, []
    for pts in starts:
        pts, val = _fekete_ascent(basis, region, phi, pts, probe, Vp, php, objective,
                                  max_rounds, step_min)
        hist.append(val)
        if val > best_val:
            best, best_val = pts, val
    resid = _fekete_stationarity(basis, phi, best, probe, Vp, php)
    return FeketeResult(Configuration(surface, best, region), float(best_val), len(starts),
                        resid, hist)


def _ratio_scores(basis, A, j, V, phv, phi_j):
    """``log |det(A with row j -> V)| - log |det A|`` minus the weight change."""
    col = np.linalg.solve(A, np.eye(A.shape[0])[:, j])
    with np.errstate(divide="ignore"):
        return np.log(np.abs(V @ col)) - basis.n * (phv - phi_j)


def _fekete_ascent(basis, region, phi, pts, probe, Vp, php, objective, max_rounds, step_min):
    surface = basis.surface
    pts = np.array(pts, complex)
    val = objective(pts)
    angles = np.arange(8) * (np.pi / 4)
    for _ in range(max_rounds):
        improved = 0.0
        for j in range(pts.size):
            A = basis.values(pts)
            phj = float(phi(pts[j:j + 1])[0])
            sc = _ratio_scores(basis, A, j, Vp, php, phj)
            k = int(np.argmax(sc))
            if sc[k] > 1e-12:
                pts[j] = probe[k]
            # local refinement on a shrinking stencil
            step = 0.5 * _probe_spacing(surface, probe.size)
            # gains below 1e-12 are at the rounding level of the determinant ratio
            for _ in range(400):
                if step <= step_min:
                    break
                A = basis.values(pts)
                phj = float(phi(pts[j:j + 1])[0])
                cand = geodesic_offset(surface, np.full(8, pts[j]), np.full(8, step), angles)
                if region is not None:
                    cand = region.project(cand)
                sc = _ratio_scores(basis, A, j, basis.values(cand), np.asarray(phi(cand)), phj)
                k = int(np.argmax(sc))
                if sc[k] > 1e-12:
                    pts[j] = cand[k]
                else:
                    step *= 0.5
            new = objective(pts)
            improved += new - val
            val = new
        if improved < 1e-12:
            break
    return pts, val


def _probe_spacing(surface, count):
    if surface.kind == "sphere":
        return math.sqrt(4 * math.pi / count) * 0.5 / math.sqrt(math.pi)
    return 1.0 / math.sqrt(count)


def _fekete_stationarity(basis, phi, pts, probe, Vp, php) -> float:
    """Largest gain from moving one point to a probe location (nonnegative)."""
    A = basis.values(pts)
    best = 0.0
    phs = np.asarray(phi(pts), float)
    for j in range(pts.size):
        sc = _ratio_scores(basis, A, j, Vp, php, phs[j])
        best = max(best, float(np.max(sc)))
    return best


def log_Z(basis: SectionBasis, kernel: GreenKernel, theta_ctx=None, samples: int = 20,
          seed: int = 0) -> float:
    """Center of the bosonization band, an estimate of ``log Z_n``."""
    rng = np.random.default_rng(seed)
    cfgs = [random_configuration(basis.surface, basis.N, rng, min_sep=0.02)
            for _ in range(samples)]
    return bosonization_check(basis, kernel, theta_ctx, cfgs)["log_Z"]
