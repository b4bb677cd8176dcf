"""Green functions of the model surfaces.

The Green function satisfies ``dd^c G(x, .) = delta_x - omega`` and
``int G(x, .) omega = 0``, with ``dd^c = (1 / 2 pi) Laplacian`` in a flat
chart.  Closed forms:

* sphere: ``G = log chordal(x, y) + c0``;
* torus: ``G = log|theta_1(x - y; tau)| - pi Im(x - y)^2 / Im(tau) + c0``.

The constant ``c0`` is computed by singularity-subtracted quadrature
(:func:`green_normalization`).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import backend
from .errors import InvalidInput, PoleError
from .geometry import (COLLISION_TOL, SPHERE_RADIUS, ModelSurface, as_points, chordal,
                       distance, lattice_grid, quadrature_grid, sphere_to_xyz,
                       torus_difference, xyz_to_sphere, _tangent_frame)


def theta_terms(tau_imag: float) -> int:
    """Number of series terms for a tail below 1e-14 at ``Im tau >= 0.5``."""
    return int(math.ceil(math.sqrt(40.0 / (math.pi * max(tau_imag, 0.5))))) + 3


def torus_green0(surface: ModelSurface, d, nterms: int | None = None) -> np.ndarray:
    """Torus Green function without the constant, at difference vectors ``d``.

    The difference is reduced to its shortest lattice representative and
    rescaled to the Gauss-reduced basis, where ``Im tau' >= sqrt(3)/2`` and
    the theta series converges fast; the Green function is unchanged by this
    conformal change of lattice basis.
    """
    e1, _ = surface.reduced_basis
    t = surface.reduced_tau
    if nterms is None:
        nterms = theta_terms(t.imag)
    d = np.asarray(d, complex)
    zeta = (torus_difference(surface, d, 0.0) / e1).reshape(-1)
    out = backend.theta1_green0(np.ascontiguousarray(zeta.real),
                                np.ascontiguousarray(zeta.imag), t.real, t.imag, nterms)
    return np.asarray(out).reshape(d.shape)


def dedekind_eta_log_abs(tau: complex, terms: int = 200) -> float:
    """``log|eta(tau)|`` by the product formula."""
    q = np.exp(2j * np.pi * tau)
    n = np.arange(1, terms + 1)
    return float(-np.pi * tau.imag / 12.0 + np.sum(np.log(np.abs(1.0 - q ** n))))


def _bump(r, rho):
    """Smooth cutoff: 1 on ``[0, rho/4]``, 0 beyond ``rho``."""
    r = np.asarray(r, float)
    t = np.clip((r - 0.25 * rho) / (0.75 * rho), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return b / (a + b)


def singular_mean(surface: ModelSurface, f, x, resolution: int) -> float:
    """``int f omega`` for ``f`` with a ``log dist(x, .)`` singularity at ``x``.

    ``f`` is a vectorized callable.  The singular part ``log(dist) * psi``
    (``psi`` a smooth cutoff) is integrated in polar coordinates, and the
    smooth remainder with a quadrature rule centered at ``x`` whose nodes
    avoid ``x``.

    Returns
    -------
    float
    """
    x = complex(as_points(surface, x))
    if surface.kind == "torus":
        rho = 0.45 * abs(surface.reduced_basis[0]) / math.sqrt(surface.area)
        g = lattice_grid(surface, resolution)
        e1, e2 = surface.reduced_basis
        shift = 0.5 * (e1 + e2) / resolution
        pts = x + g.nodes + shift
        d = distance(surface, pts, x)
        rem = f(pts) - np.log(d) * _bump(d, rho)
        smooth = float(np.dot(g.weights, rem))
        # omega(B) = pi r^2 in metric units
        sing, _ = integrate.quad(lambda r: 2 * np.pi * r * np.log(r) * _bump(r, rho), 0, rho,
                                 limit=200, epsabs=1e-15, epsrel=1e-13, points=[0.25 * rho])
        return smooth + sing
    rho = 0.5
    g = quadrature_grid(surface, resolution)
    u = sphere_to_xyz(x)
    e1, e2 = _tangent_frame(u)
    # rotate the standard grid so its south pole (z = 0) lands on x
    v = sphere_to_xyz(g.nodes)
    rot = np.stack([e1, e2, -u], axis=1)
    pts = xyz_to_sphere(v @ rot.T)
    d = distance(surface, pts, x)
    rem = f(pts) - np.log(d) * _bump(d, rho)
    smooth = float(np.dot(g.weights, rem))
    # area element of the radius-R_s sphere in geodesic polar coordinates
    dens = lambda r: 2 * np.pi * SPHERE_RADIUS * np.sin(r / SPHERE_RADIUS)  # noqa: E731
    sing, _ = integrate.quad(lambda r: dens(r) * np.log(r) * _bump(r, rho), 0, rho,
                             limit=200, epsabs=1e-15, epsrel=1e-13, points=[0.25 * rho])
    return smooth + sing


@lru_cache(maxsize=32)
def green_normalization(surface: ModelSurface, resolution: int = 512) -> float:
    """Constant ``c0`` making ``int G(x, .) omega = 0``.

    Parameters
    ----------
    surface : ModelSurface
    resolution : int
        Quadrature resolution used for the smooth remainder.

    Returns
    -------
    float
    """
    if surface.kind == "torus":
        f = lambda z: torus_green0(surface, z)  # noqa: E731
    else:
        f = lambda z: np.log(chordal(0.0, z))  # noqa: E731
    return -singular_mean(surface, f, 0.0, resolution)


class GreenKernel:
    """Green function of a model surface.

    Parameters
    ----------
    surface : ModelSurface
    resolution : int, default 512
        Quadrature resolution for the normalization constant.
    nterms : int, optional
        Theta-series truncation (torus); defaults to :func:`theta_terms`.
    """

    def __init__(self, surface: ModelSurface, resolution: int = 512, nterms: int | None = None):
        self.surface = surface
        self.resolution = int(resolution)
        if surface.kind == "torus":
            self.nterms = nterms or theta_terms(surface.reduced_tau.imag)
        else:
            self.nterms = 0
        self._c0 = None

    @property
    def c0(self) -> float:
        if self._c0 is None:
            self._c0 = green_normalization(self.surface, self.resolution)
        return self._c0

    def raw(self, x, y) -> np.ndarray:
        """Green function without the pole check; coincident points give -inf."""
        if self.surface.kind == "torus":
            d = np.asarray(x, complex) - np.asarray(y, complex)
            with np.errstate(divide="ignore"):
                return torus_green0(self.surface, d, self.nterms) + self.c0
        with np.errstate(divide="ignore"):
            return np.log(chordal(x, y)) + self.c0

    def __call__(self, x, y):
        x = as_points(self.surface, x)
        y = as_points(self.surface, y)
        if np.any(distance(self.surface, x, y) < COLLISION_TOL):
            raise PoleError("Green function evaluated at coincident points")
        g = self.raw(x, y)
        return g if np.ndim(g) else float(g)

    def grad_x(self, x, y) -> np.ndarray:
        """Gradient of ``G(x, y)`` in ``x``.

        Torus: chart gradient ``dG/dRe x + i dG/dIm x``.  Sphere: ``x, y`` are
        unit vectors of shape ``(..., 3)`` and the result is the tangential
        gradient with respect to the unit-sphere embedding.
        """
        if self.surface.kind == "torus":
            e1, _ = self.surface.reduced_basis
            t = self.surface.reduced_tau
            zeta = torus_difference(self.surface, x, y) / e1
            q2 = np.exp(2j * np.pi * t)
            nt = int(math.ceil(40.0 / (math.pi * t.imag))) + 2
            with np.errstate(divide="ignore", invalid="ignore"):
                dl = np.pi / np.tan(np.pi * zeta)
                # sin(2 pi n zeta) from powers of exp(+-2 pi i zeta)
                E = np.exp(2j * np.pi * zeta)
                Ei = 1.0 / E
                En, Emn = E, Ei
                for n in range(1, nt + 1):
                    qn = q2 ** n
                    dl = dl + (2j * np.pi * qn / (qn - 1)) * (En - Emn)
                    En = En * E
                    Emn = Emn * Ei
            # theta_1'/theta_1 gives the gradient of log|theta_1|; subtract the Gaussian term
                g = (np.conj(dl) - 2j * np.pi * zeta.imag / t.imag) / np.conj(e1)
            return g
        X = np.asarray(x, float)
        Y = np.asarray(y, float)
        D = X - Y
        with np.errstate(divide="ignore", invalid="ignore"):
            g = D / np.sum(D * D, axis=-1, keepdims=True)
        return g - np.sum(g * X, axis=-1, keepdims=True) * X

    def remainder(self, x, y) -> np.ndarray:
        """Smooth part ``G(x, y) - log dist(x, y)``."""
        return self.raw(x, y) - np.log(distance(self.surface, x, y))

    def remainder_at_pole(self) -> float:
        """Limit of :meth:`remainder` as ``y -> x``."""
        if self.surface.kind == "torus":
            e1, _ = self.surface.reduced_basis
            t = self.surface.reduced_tau
            # theta_1'(0) = 2 pi eta^3; rescale to metric units
            val = math.log(2 * math.pi) + 3 * dedekind_eta_log_abs(t)
            return val + self.c0 + math.log(math.sqrt(self.surface.area) / abs(e1))
        # log chordal - log dist -> log(1 / (2 R_s))
        return self.c0 - math.log(2 * SPHERE_RADIUS)


def green(kernel: GreenKernel, x, y):
    """Evaluate ``G(x, y)``; raises :class:`PoleError` when ``x = y``."""
    return kernel(x, y)


def verify_green(kernel: GreenKernel, x, resolution: int = 512, tol: float = 1e-3) -> dict:
    """Check the defining properties of the Green function at base point ``x``.

    Returns
    -------
    dict
        ``mean_residual``: ``|int G(x, .) omega|`` by singularity-subtracted
        quadrature.  ``laplacian_residual``: max over mesh cells farther than
        five steps from ``x`` of ``|dd^c_h G(x, .) + omega|`` per cell, with
        the finite-volume operator of :mod:`fekete_rate.mesh`.
        ``laplacian_density_residual``: the same divided by the cell mass,
        restricted to cells at metric distance above 0.1.
        ``lipschitz_bound``: largest difference quotient of
        ``G - log dist`` between adjacent mesh nodes.  ``pass``: both
        residual bounds hold.
    """
    from .mesh import build_mesh

    surface = kernel.surface
    x = complex(as_points(surface, x))
    mean = abs(singular_mean(surface, lambda z: kernel.raw(x, z), x, resolution))
    mesh = build_mesh(surface, resolution)
    d = distance(surface, mesh.nodes, x)
    if np.min(d) < COLLISION_TOL:
        raise InvalidInput("base point coincides with a mesh node")
    g = kernel.raw(x, mesh.nodes)
    lap = mesh.apply(g) + mesh.weights
    far = d > 5 * mesh.step
    lap_res = float(np.max(np.abs(lap[far])))
    farther = d > 0.1
    dens_res = float(np.max(np.abs(lap[farther] / mesh.weights[farther])))
    rem = g - np.log(d)
    i, j = mesh.edges()
    q = np.abs(rem[i] - rem[j]) / distance(surface, mesh.nodes[i], mesh.nodes[j])
    return {
        "mean_residual": mean,
        "laplacian_residual": lap_res,
        "laplacian_density_residual": dens_res,
        "lipschitz_bound": float(np.max(q)),
        "c0": kernel.c0,
        "pass": bool(mean < 1e-6 and lap_res < tol),
    }
