"""Potentials, energies and the circle sweep.

Conventions: ``U*_nu(x) = int G(x, .) dnu`` (mean normalized),
``U_nu = U*_nu - max U*_nu``, ``I_phi(nu) = -int U*_nu dnu + 2 int phi dnu``,
``E_m(p) = m^-2 sum_{j != k} G(p_j, p_k)``, ``J = -E_m + 2 int phi d delta_p``
and ``K_m = -(m / (m - 1)) E_m + 2 int phi d delta_p``.

Collisions and atoms are reported with the tagged sentinels
:data:`POS_INF` / :data:`NEG_INF`, which refuse arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .geometry import (COLLISION_TOL, SPHERE_RADIUS, Atoms, CircleMeasure, Grid, GridDensity,
                       GridField, Measure, ModelSurface, as_points, distance,
                       geodesic_offset, injectivity_radius, reduce_point)
from .green import GreenKernel


# ---------------------------------------------------------------------------
# sentinels
# ---------------------------------------------------------------------------

class Infinite:
    """Tagged infinity.  Compares like +-inf but cannot enter sums."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = 1 if sign > 0 else -1

    def __repr__(self):
        return "POS_INF" if self.sign > 0 else "NEG_INF"

    def __float__(self):
        return math.inf * self.sign

    def __neg__(self):
        return POS_INF if self.sign < 0 else NEG_INF

    def __eq__(self, other):
        return isinstance(other, Infinite) and other.sign == self.sign

    def __hash__(self):
        return hash(("Infinite", self.sign))

    def __lt__(self, other):
        return float(self) < float(other)

    def __le__(self, other):
        return float(self) <= float(other)

    def __gt__(self, other):
        return float(self) > float(other)

    def __ge__(self, other):
        return float(self) >= float(other)

    def _refuse(self, *_):
        raise TypeError("infinite sentinel cannot take part in arithmetic")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _refuse
    __truediv__ = __rtruediv__ = _refuse


POS_INF = Infinite(1)
NEG_INF = Infinite(-1)


def is_infinite(v) -> bool:
    return isinstance(v, Infinite)


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------

class Configuration:
    """Ordered tuple of surface points, optionally tied to a region.

    Parameters
    ----------
    surface : ModelSurface
    points : array_like of complex
    region : Region, optional
        When given, membership of every point is checked.
    """

    def __init__(self, surface: ModelSurface, points, region=None):
        self.surface = surface
        self.points = reduce_point(surface, np.atleast_1d(np.asarray(points, complex))).copy()
        self.points.setflags(write=False)
        self.region = region
        if region is not None and not np.all(region.contains(self.points)):
            raise InvalidInput("configuration point outside the region")

    @property
    def m(self) -> int:
        return int(self.points.size)

    def __len__(self):
        return self.m

    def replace(self, j: int, z) -> "Configuration":
        pts = np.array(self.points)
        pts[j] = z
        return Configuration(self.surface, pts, self.region)

    def to_list(self):
        return [[complex(p).real, complex(p).imag] for p in self.points]


def _points(cfg, surface=None):
    if isinstance(cfg, Configuration):
        return cfg.points
    return as_points(surface, np.atleast_1d(np.asarray(cfg, complex)))


def pair_matrix(kernel: GreenKernel, pts) -> tuple:
    """Green matrix of a point set with a collision flag.

    Returns
    -------
    (ndarray, bool)
        ``G(p_j, p_k)`` with zero diagonal, and whether any pair collides.
    """
    pts = np.asarray(pts, complex)
    m = pts.size
    dist = distance(kernel.surface, pts[:, None], pts[None, :])
    off = ~np.eye(m, dtype=bool)
    collide = bool(np.any(dist[off] < COLLISION_TOL))
    g = np.zeros((m, m))
    if m > 1:
        jj, kk = np.nonzero(np.triu(off))
        vals = kernel.raw(pts[jj], pts[kk])
        g[jj, kk] = vals
        g[kk, jj] = vals
    return g, collide


def discrete_energy(kernel: GreenKernel, config) -> float | Infinite:
    """``E_m(p) = m^-2 sum_{j != k} G(p_j, p_k)``; ``NEG_INF`` on collisions."""
    pts = _points(config, kernel.surface)
    m = pts.size
    if m < 2:
        raise InvalidInput("discrete energy needs m >= 2")
    g, collide = pair_matrix(kernel, pts)
    if collide:
        return NEG_INF
    return 2.0 * math.fsum(g[np.triu_indices(m, 1)].tolist()) / m ** 2


def _phi_mean(phi, pts) -> float:
    return math.fsum(np.asarray(phi(pts), float).reshape(-1).tolist()) / pts.size


def functional_J(kernel: GreenKernel, config, phi) -> float | Infinite:
    """``J_{m,phi}(p) = -E_m(p) + 2 int phi d delta_p``; ``POS_INF`` on collisions."""
    pts = _points(config, kernel.surface)
    e = discrete_energy(kernel, pts)
    if is_infinite(e):
        return POS_INF
    return -e + 2.0 * _phi_mean(phi, pts)


def functional_Km(kernel: GreenKernel, config, phi) -> float | Infinite:
    """``K_{m,phi}(p) = -(m/(m-1)) E_m(p) + 2 int phi d delta_p``."""
    pts = _points(config, kernel.surface)
    m = pts.size
    if m < 2:
        raise InvalidInput("K_m needs m >= 2")
    e = discrete_energy(kernel, pts)
    if is_infinite(e):
        return POS_INF
    return -(m / (m - 1.0)) * e + 2.0 * _phi_mean(phi, pts)


# ---------------------------------------------------------------------------
# potentials of measures
# ---------------------------------------------------------------------------

@dataclass
class Potential:
    """Grid samples of a potential with its normalization tag."""

    field: GridField
    normalization: str
    source: Measure

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def max_normalized(self) -> "Potential":
        v = self.field.values
        return Potential(GridField(self.field.grid, v - v.max()), "MaxZero", self.source)


def rect_log_mean(a, b):
    """Mean of ``log|s|`` over the rectangle ``[-a/2, a/2] x [-b/2, b/2]``."""
    x = np.asarray(a, float) / 2
    y = np.asarray(b, float) / 2
    F = 0.5 * (x * y * np.log(x * x + y * y) - 3 * x * y + x * x * np.arctan(y / x)
               + y * y * np.arctan(x / y))
    return 4 * F / (np.asarray(a, float) * np.asarray(b, float))


_KERNEL_CACHE: dict = {}


def _self_terms(kernel: GreenKernel, grid: Grid):
    a, b = grid.cell_sides()
    return rect_log_mean(a, b) + kernel.remainder_at_pole()


def parallelogram_log_mean(u, v, nodes: int = 32) -> float:
    """Mean of ``log|s|`` over the parallelogram ``{a u + b v : |a|, |b| <= 1/2}``.

    The cell is split into four triangles with a vertex at the origin; on
    each, the Duffy substitution leaves a smooth one-dimensional integral.
    """
    corners = [0.5 * (u + v), 0.5 * (-u + v), 0.5 * (-u - v), 0.5 * (u - v)]
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    total = 0.0
    for k in range(4):
        p1 = corners[k]
        p2 = corners[(k + 1) % 4]
        det = abs((p1.conjugate() * (p2 - p1)).imag)
        line = float(np.dot(w, np.log(np.abs(p1 + x * (p2 - p1)))))
        total += det * (-0.25 + 0.5 * line)
    area = abs((u.conjugate() * v).imag)
    return total / area


def _lattice_kernel_hat(kernel: GreenKernel, grid: Grid):
    """FFT of the cell-averaged kernel ``k(node_j) = avg_{s in cell} G(node_j - s)``."""
    key = ("lattice", id(kernel), kernel.surface, grid.resolution, kernel.c0)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit
    R = grid.resolution
    e1, e2 = kernel.surface.reduced_basis
    u, v = e1 / R, e2 / R
    nodes = grid.nodes
    x, w = np.polynomial.legendre.leggauss(4)
    x = 0.5 * x
    w = 0.5 * w
    vals = np.zeros(grid.size)
    for xa, wa in zip(x, w):
        for xb, wb in zip(x, w):
            with np.errstate(divide="ignore"):
                vals += wa * wb * kernel.raw(nodes, xa * u + xb * v)
    # cells next to the pole need a finer rule
    xf, wf = np.polynomial.legendre.leggauss(24)
    xf = 0.5 * xf
    wf = 0.5 * wf
    sa, sb = np.meshgrid(xf, xf, indexing="ij")
    off = (sa * u + sb * v).reshape(-1)
    ww = np.outer(wf, wf).reshape(-1)
    near = [(i, j) for i in range(-3, 4) for j in range(-3, 4) if (i, j) != (0, 0)]
    for i, j in near:
        idx = (i % R) * R + (j % R)
        vals[idx] = float(ww @ kernel.raw(nodes[idx], off))
    # self cell: exact log mean plus the smooth chart remainder
    rem = kernel.raw(0.0, off) - np.log(np.abs(off))
    vals[0] = parallelogram_log_mean(u, v) + float(ww @ rem)
    khat = np.fft.rfft2(vals.reshape(grid.shape))
    if len(_KERNEL_CACHE) > 6:
        _KERNEL_CACHE.clear()
    _KERNEL_CACHE[key] = khat
    return khat


def _ring_kernel_rows(kernel: GreenKernel, grid: Grid, r: int, self_term: float):
    nphi = grid.shape[1]
    nodes = grid.nodes.reshape(grid.shape)
    row = kernel.raw(nodes[r, 0], nodes)
    row[r, 0] = self_term
    return np.fft.rfft(row, axis=1)


def grid_operator(kernel: GreenKernel, grid: Grid):
    """Return ``apply(masses) -> U`` with ``U_i = sum_j K_ij masses_j``.

    ``K_ij = G(node_i, node_j)`` off the diagonal and the cell average of
    ``G(node_i, .)`` on the diagonal.  ``K`` is symmetric.
    """
    if grid.layout == "lattice":
        khat = _lattice_kernel_hat(kernel, grid)

        def apply(m):
            mm = np.asarray(m, float).reshape(grid.shape)
            return np.fft.irfft2(np.fft.rfft2(mm) * khat, s=grid.shape).reshape(-1)
        return apply

    selfs = _self_terms(kernel, grid).reshape(grid.shape)[:, 0]
    nr, nphi = grid.shape
    key = ("rings", id(kernel), kernel.surface, grid.shape, grid.resolution, kernel.c0,
           float(grid.theta[0]))
    rows = _KERNEL_CACHE.get(key)
    if rows is None and nr * nr * (nphi // 2 + 1) * 16 < 2e8:
        rows = [_ring_kernel_rows(kernel, grid, r, selfs[r]) for r in range(nr)]
        _KERNEL_CACHE[key] = rows

    def apply(m):
        mm = np.asarray(m, float).reshape(grid.shape)
        mhat = np.fft.rfft(mm, axis=1)
        out = np.empty(grid.shape)
        for r in range(nr):
            kr = rows[r] if rows is not None else _ring_kernel_rows(kernel, grid, r, selfs[r])
            out[r] = np.fft.irfft(np.sum(mhat * kr, axis=0), n=nphi)
        return out.reshape(-1)
    return apply


def grid_potential(kernel: GreenKernel, nu: GridDensity) -> Potential:
    """Mean-normalized potential of a grid measure on its own grid."""
    apply = grid_operator(kernel, nu.grid)
    return Potential(GridField(nu.grid, apply(nu.masses)), "MeanZero", nu)


def potential_values(kernel: GreenKernel, nu: Measure, z, chunk: int = 2048):
    """``U*_nu`` at arbitrary points.

    Returns
    -------
    (ndarray, ndarray of bool)
        Values (NaN at poles) and a mask of points sitting on an atom.
    """
    z = as_points(kernel.surface, np.atleast_1d(z)).reshape(-1)
    if isinstance(nu, GridDensity):
        src, w = nu.grid.nodes, nu.masses
        keep = w != 0
        src, w = src[keep], w[keep]
        atomic = False
    elif isinstance(nu, (Atoms, CircleMeasure)):
        src, w = nu.points, nu.weights
        atomic = isinstance(nu, Atoms)
    else:
        raise InvalidInput("unsupported measure type")
    out = np.empty(z.size)
    pole = np.zeros(z.size, bool)
    for s in range(0, z.size, chunk):
        zz = z[s:s + chunk]
        d = distance(kernel.surface, zz[:, None], src[None, :])
        hit = d < COLLISION_TOL
        g = kernel.raw(zz[:, None], src[None, :])
        g = np.where(hit, 0.0, g)
        out[s:s + chunk] = g @ w
        if atomic:
            pole[s:s + chunk] = np.any(hit & (w[None, :] != 0), axis=1)
        else:
            pole[s:s + chunk] = np.any(hit, axis=1) & isinstance(nu, CircleMeasure)
    out[pole] = np.nan
    return out, pole


def potential_of_measure(kernel: GreenKernel, nu: Measure, x):
    """``U*_nu(x) = int G(x, .) dnu``.

    Scalar ``x`` returns a float or :data:`NEG_INF` when ``x`` carries an
    atom; array ``x`` returns a masked array with poles masked.
    """
    vals, pole = potential_values(kernel, nu, x)
    if np.ndim(x) == 0:
        return NEG_INF if pole[0] else float(vals[0])
    return np.ma.masked_array(vals.reshape(np.shape(x)), mask=pole.reshape(np.shape(x)))


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def _chart_radius(surface: ModelSurface, r: float) -> float:
    if surface.kind == "torus":
        return r * math.sqrt(surface.area)
    return math.tan(r / (2 * SPHERE_RADIUS))


def circle_self_energy(kernel: GreenKernel, c: CircleMeasure) -> float:
    """``int int G dc dc`` for a circle measure with trapezoid-sampled density.

    The logarithmic part is integrated exactly in Fourier space,
    ``int int log|e^{is} - e^{it}| f f = -sum_{k >= 1} |f_k|^2 / k``, and the
    smooth chart remainder by the trapezoid rule.
    """
    n = c.weights.size
    rho = _chart_radius(c.surface, c.radius)
    s = 2 * np.pi * np.arange(n) / n
    w = c.weights
    fh = np.fft.fft(w)
    k = np.arange(1, n // 2 + 1)
    coef = np.abs(fh[k]) ** 2 / k
    if n % 2 == 0:
        coef[-1] *= 0.5
    log_part = math.log(rho) * w.sum() ** 2 - float(np.sum(coef))
    chord = rho * np.abs(np.exp(1j * s)[:, None] - np.exp(1j * s)[None, :])
    pts = c.points
    g = kernel.raw(pts[:, None], pts[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        rem = g - np.log(chord)
    if c.surface.kind == "torus":
        rem0 = kernel.remainder_at_pole() - 0.5 * math.log(c.surface.area)
    else:
        rem0 = kernel.c0 - math.log(1 + rho * rho)
    np.fill_diagonal(rem, rem0)
    return log_part + float(w @ rem @ w)


def energy_I(kernel: GreenKernel, nu: Measure, phi) -> float | Infinite:
    """``I_phi(nu) = -int U*_nu dnu + 2 int phi dnu``; ``POS_INF`` with atoms."""
    nu.check_probability(1e-10)
    if isinstance(nu, Atoms):
        if np.any(nu.weights > 0):
            return POS_INF
    if isinstance(nu, GridDensity):
        u = grid_potential(kernel, nu).values
        return -float(nu.masses @ u) + 2.0 * nu.integrate(phi)
    if isinstance(nu, CircleMeasure):
        return -circle_self_energy(kernel, nu) + 2.0 * nu.integrate(phi)
    raise InvalidInput("unsupported measure type")


def mutual_energy(kernel: GreenKernel, nu1: GridDensity, nu2: GridDensity) -> float:
    """``int U*_{nu1} dnu2`` for grid measures on the same grid."""
    if nu1.grid is not nu2.grid:
        raise InvalidInput("grid measures live on different grids")
    u = grid_operator(kernel, nu1.grid)(nu1.masses)
    return float(nu2.masses @ u)


# ---------------------------------------------------------------------------
# circle sweep
# ---------------------------------------------------------------------------

def _log_plus_mean(surface: ModelSurface, r: float) -> float:
    """``int log+(rho / |zeta|) omega`` over the chart disc of metric radius r."""
    rho = _chart_radius(surface, r)
    if surface.kind == "torus":
        return math.pi * rho * rho / (2 * surface.area)
    return 0.5 * math.log1p(rho * rho)


def sweep_to_circle(kernel: GreenKernel, p, r: float, nodes: int = 256) -> CircleMeasure:
    """Balayage of ``delta_p`` onto the metric circle ``dB(p, r)``.

    In a chart centered at ``p`` where ``omega`` has a particular potential
    ``q`` (``dd^c q = -omega``), the swept measure has density
    ``(rho / 2 pi) (d_r G - d_r h - d_r q)`` per unit angle, with ``h`` the
    harmonic extension of ``G(p, .) - q`` from the circle (computed by FFT)
    and ``d_r G`` by fourth-order central differences.
    """
    surface = kernel.surface
    if not 0 < r < 0.5 * injectivity_radius(surface):
        raise InvalidInput("sweep radius must lie in (0, injectivity radius / 2)")
    p = complex(reduce_point(surface, p))
    rho = _chart_radius(surface, r)
    t = 2 * np.pi * np.arange(nodes) / nodes

    def g_at(rr):
        pts = geodesic_offset(surface, np.full(nodes, p), np.full(nodes, rr), t)
        return kernel.raw(p, pts)

    def metric_r(chart_r):
        if surface.kind == "torus":
            return chart_r / math.sqrt(surface.area)
        return 2 * SPHERE_RADIUS * math.atan(chart_r)

    if surface.kind == "torus":
        q = lambda s: -math.pi * s * s / (2 * surface.area)  # noqa: E731
        dq = -math.pi * rho / surface.area
    else:
        q = lambda s: -0.5 * math.log1p(s * s)  # noqa: E731
        dq = -rho / (1 + rho * rho)
    d = 1e-3 * rho
    f = {k: g_at(metric_r(rho + k * d)) for k in (-2, -1, 1, 2)}
    dg = (-f[2] + 8 * f[1] - 8 * f[-1] + f[-2]) / (12 * d)
    g0 = g_at(r) - q(rho)
    gh = np.fft.fft(g0) / nodes
    kk = np.abs(np.fft.fftfreq(nodes, 1.0 / nodes))
    dh = np.real(np.fft.ifft(gh * kk / rho) * nodes)
    dens = rho * (dg - dh - dq) / (2 * np.pi)
    return CircleMeasure(surface, p, r, dens * (2 * np.pi / nodes))


def swept_potential(kernel: GreenKernel, p, r: float, z) -> np.ndarray:
    """``U*`` of the uniform sweep of ``delta_p`` at radius ``r``, in closed form.

    Equals ``G(p, z) + log+(rho / |zeta(z)|) - int log+(rho / |zeta|) omega``.
    """
    surface = kernel.surface
    rho = _chart_radius(surface, r)
    z = as_points(surface, z)
    dz = distance(surface, z, p)
    chart = np.array([_chart_radius(surface, float(v)) for v in np.ravel(dz)]).reshape(np.shape(dz))
    with np.errstate(divide="ignore"):
        lp = np.maximum(np.log(rho / chart), 0.0)
    return kernel.raw(p, z) + lp - _log_plus_mean(surface, r)


def swept_energy(kernel: GreenKernel, config, r: float, nodes: int = 128) -> float:
    """``int U*_{sigma_p} d sigma_p`` with ``sigma_p`` the average of the uniform
    sweeps of the points of ``config`` at radius ``r``."""
    pts = _points(config, kernel.surface)
    m = pts.size
    t = 2 * np.pi * np.arange(nodes) / nodes
    total = []
    circles = [geodesic_offset(kernel.surface, np.full(nodes, p), np.full(nodes, r), t)
               for p in pts]
    for j in range(m):
        for k in range(m):
            total.append(float(np.mean(swept_potential(kernel, pts[j], r, circles[k]))))
    return math.fsum(total) / m ** 2
