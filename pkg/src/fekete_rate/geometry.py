"""Model surfaces, distances, regions, quadrature grids and measures.

Two model surfaces are supported:

* the round sphere, parametrized by the extended stereographic coordinate
  ``z`` (``complex(inf, 0)`` is the point at infinity), with the Fubini-Study
  form ``omega = dx dy / (pi (1 + |z|^2)^2)``;
* the flat torus ``C / (Z + tau Z)`` with ``omega = dx dy / Im(tau)``.

Both forms have total mass one.  Distances are measured in the Riemannian
metric whose area form is ``omega``.  Points are plain complex numbers (or
complex ndarrays); all functions broadcast over arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .errors import InvalidInput

#: Radius of the round sphere whose area is one.
SPHERE_RADIUS = 1.0 / (2.0 * np.sqrt(np.pi))

#: Points closer than this are treated as coinciding.
COLLISION_TOL = 1e-10


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------

def _gauss_reduce(tau: complex):
    """Return a reduced basis ``(u, v)`` of ``Z + tau Z``.

    The basis satisfies ``|u| <= |v|``, ``|Re(v conj u)| <= |u|^2 / 2`` and
    ``Im(v / u) > 0``, so the nearest lattice point of any vector lies among
    the 3x3 neighbours of its rounded coordinates.
    """
    u, v = complex(1.0), complex(tau)
    for _ in range(200):
        if abs(v) < abs(u):
            u, v = v, u
        k = round((v * u.conjugate()).real / abs(u) ** 2)
        if k == 0:
            break
        v = v - k * u
    if abs(v) < abs(u):
        u, v = v, u
    if (v / u).imag < 0:
        v = -v
    return u, v


@dataclass(frozen=True)
class ModelSurface:
    """A compact model Riemann surface with its normalized area form.

    Parameters
    ----------
    kind : {"sphere", "torus"}
    tau : complex
        Torus modulus, ``Im(tau) > 0``.  Ignored for the sphere.
    """

    kind: str
    tau: complex = 1j
    _basis: tuple = field(default=(1.0, 1j), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("sphere", "torus"):
            raise InvalidInput(f"unknown surface kind {self.kind!r}")
        if self.kind == "torus":
            tau = complex(self.tau)
            if not np.isfinite(tau) or tau.imag <= 0:
                raise InvalidInput("torus modulus needs Im(tau) > 0")
            object.__setattr__(self, "tau", tau)
            object.__setattr__(self, "_basis", _gauss_reduce(tau))
        else:
            object.__setattr__(self, "tau", 0j)

    @classmethod
    def sphere(cls) -> "ModelSurface":
        return cls("sphere")

    @classmethod
    def torus(cls, tau: complex = 1j) -> "ModelSurface":
        return cls("torus", complex(tau))

    @property
    def genus(self) -> int:
        return 1 if self.kind == "torus" else 0

    @property
    def area(self) -> float:
        """Euclidean area of the chart domain (torus only)."""
        return self.tau.imag if self.kind == "torus" else float("nan")

    @property
    def reduced_basis(self):
        """Gauss-reduced generators ``(e1, e2)`` of the period lattice."""
        return self._basis

    @property
    def reduced_tau(self) -> complex:
        e1, e2 = self._basis
        return e2 / e1

    def describe(self) -> dict:
        if self.kind == "sphere":
            return {"kind": "sphere"}
        return {"kind": "torus", "tau": [self.tau.real, self.tau.imag]}


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

def as_points(surface: ModelSurface, x) -> np.ndarray:
    """Coerce ``x`` into a complex array of valid surface points.

    Sphere points with a non-finite coordinate become ``complex(inf, 0)``.
    Torus points must be finite.
    """
    z = np.asarray(x, dtype=complex)
    if surface.kind == "sphere":
        bad = ~np.isfinite(z)
        if np.any(bad):
            z = np.where(bad, complex(np.inf, 0.0), z)
        return z
    if not np.all(np.isfinite(z)):
        raise InvalidInput("torus points must be finite")
    return z


def lattice_coords(surface: ModelSurface, z, reduced: bool = False):
    """Real coordinates ``(a, b)`` with ``z = a e1 + b e2``.

    With ``reduced=False`` the basis is ``(1, tau)``; otherwise the reduced
    basis from :attr:`ModelSurface.reduced_basis`.
    """
    z = np.asarray(z, dtype=complex)
    if reduced:
        e1, e2 = surface.reduced_basis
    else:
        e1, e2 = 1.0 + 0j, surface.tau
    w = z / e1
    t = e2 / e1
    b = w.imag / t.imag
    a = w.real - b * t.real
    return a, b


def _frac(a):
    f = a - np.floor(a)
    return np.where(f >= 1.0, 0.0, f)


def reduce_point(surface: ModelSurface, z) -> np.ndarray:
    """Canonical representative of a point.

    Torus points are mapped into ``{a + b tau : a, b in [0, 1)}``; sphere
    points are returned unchanged apart from the infinity normalization.
    """
    z = as_points(surface, z)
    if surface.kind == "sphere":
        return z
    a, b = lattice_coords(surface, z)
    return _frac(a) + _frac(b) * surface.tau


def _torus_min_image(surface: ModelSurface, d):
    """Shortest representative of ``d`` modulo the lattice."""
    e1, e2 = surface.reduced_basis
    a, b = lattice_coords(surface, d, reduced=True)
    a0 = d - np.rint(a) * e1 - np.rint(b) * e2
    best = a0
    bestabs = np.abs(a0)
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            if i == 0 and j == 0:
                continue
            c = a0 + i * e1 + j * e2
            ca = np.abs(c)
            take = ca < bestabs
            best = np.where(take, c, best)
            bestabs = np.where(take, ca, bestabs)
    return best


def torus_difference(surface: ModelSurface, z, w) -> np.ndarray:
    """Shortest lattice representative of ``z - w`` on a torus."""
    return _torus_min_image(surface, np.asarray(z, complex) - np.asarray(w, complex))


def sphere_to_xyz(z) -> np.ndarray:
    """Unit vectors of stereographic points; shape ``z.shape + (3,)``.

    The point at infinity maps to the north pole ``(0, 0, 1)``.
    """
    z = np.asarray(z, dtype=complex)
    inf = ~np.isfinite(z)
    zz = np.where(inf, 0.0, z)
    r2 = np.abs(zz) ** 2
    den = 1.0 + r2
    out = np.stack([2 * zz.real / den, 2 * zz.imag / den, (r2 - 1.0) / den], axis=-1)
    if np.any(inf):
        out[inf] = (0.0, 0.0, 1.0)
    return out


def xyz_to_sphere(v) -> np.ndarray:
    """Inverse of :func:`sphere_to_xyz` for unit vectors."""
    v = np.asarray(v, dtype=float)
    x, y, zc = v[..., 0], v[..., 1], v[..., 2]
    w = x + 1j * y
    with np.errstate(divide="ignore", invalid="ignore"):
        # (1 + Z) / conj(w) avoids the cancellation in 1 - Z near infinity
        out = np.where(zc <= 0, w / (1.0 - zc), (1.0 + zc) / np.conj(w))
    north = (zc > 0) & (np.abs(w) <= 1e-300)
    if np.any(north):
        out = np.where(north, complex(np.inf, 0.0), out)
    return out


def chordal(z, w) -> np.ndarray:
    """Chordal distance ``|z - w| / sqrt((1 + |z|^2)(1 + |w|^2))``.

    This is half the Euclidean distance of the unit vectors, in ``[0, 1]``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zi = ~np.isfinite(z)
    wi = ~np.isfinite(w)
    z0 = np.where(zi, 0.0, z)
    w0 = np.where(wi, 0.0, w)
    az = 1.0 + np.abs(z0) ** 2
    aw = 1.0 + np.abs(w0) ** 2
    both = np.abs(z0 - w0) / np.sqrt(az * aw)
    out = np.where(zi, 1.0 / np.sqrt(aw), both)
    out = np.where(wi, 1.0 / np.sqrt(az), out)
    return np.where(zi & wi, 0.0, out)


def distance(surface: ModelSurface, x, y) -> np.ndarray:
    """Geodesic distance in the metric with area form ``omega``.

    Parameters
    ----------
    surface : ModelSurface
    x, y : complex or array_like
        Surface points; broadcast against each other.

    Returns
    -------
    float or ndarray
    """
    if isinstance(x, ModelSurface) or isinstance(y, ModelSurface):
        raise InvalidInput("points expected, got a surface")
    x = as_points(surface, x)
    y = as_points(surface, y)
    if surface.kind == "torus":
        d = np.abs(torus_difference(surface, x, y)) / np.sqrt(surface.area)
    else:
        c = np.minimum(chordal(x, y), 1.0)
        d = SPHERE_RADIUS * 2.0 * np.arctan2(c, np.sqrt(1.0 - c * c))
    return d if np.ndim(d) else float(d)


def omega_density(surface: ModelSurface, z) -> np.ndarray:
    """Density of ``omega`` with respect to ``dx dy`` in the chart."""
    z = np.asarray(z, dtype=complex)
    if surface.kind == "torus":
        return np.full(z.shape, 1.0 / surface.area)
    with np.errstate(over="ignore", invalid="ignore"):
        d = 1.0 / (np.pi * (1.0 + np.abs(z) ** 2) ** 2)
    return np.where(np.isfinite(z), d, 0.0)


def injectivity_radius(surface: ModelSurface) -> float:
    """Largest radius for which metric discs are embedded."""
    if surface.kind == "sphere":
        return np.pi * SPHERE_RADIUS
    e1, _ = surface.reduced_basis
    return 0.5 * abs(e1) / np.sqrt(surface.area)


def metric_circle(surface: ModelSurface, center: complex, radius: float, nodes: int):
    """Equispaced points on the metric circle ``dist(., center) = radius``.

    Returns
    -------
    ndarray of complex, shape (nodes,)
    """
    t = 2.0 * np.pi * np.arange(nodes) / nodes
    if surface.kind == "torus":
        pts = center + radius * np.sqrt(surface.area) * np.exp(1j * t)
        return reduce_point(surface, pts)
    u = sphere_to_xyz(center)
    e1, e2 = _tangent_frame(u)
    alpha = radius / SPHERE_RADIUS
    v = (np.cos(alpha) * u[None, :]
         + np.sin(alpha) * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2))
    return xyz_to_sphere(v)


def _tangent_frame(u):
    """Orthonormal tangent vectors at unit vector(s) ``u`` (last axis of size 3)."""
    u = np.asarray(u, float)
    a = np.where(np.abs(u[..., :1]) < 0.9, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    e1 = a - np.sum(a * u, axis=-1, keepdims=True) * u
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(u, e1)
    return e1, e2


def geodesic_offset(surface: ModelSurface, x, r, angle) -> np.ndarray:
    """Points at metric distance ``r`` from ``x`` in direction ``angle``."""
    x = as_points(surface, x)
    r = np.asarray(r, float)
    angle = np.asarray(angle, float)
    if surface.kind == "torus":
        return reduce_point(surface, x + r * np.sqrt(surface.area) * np.exp(1j * angle))
    u = sphere_to_xyz(x)
    u, r, angle = np.broadcast_arrays(u, r[..., None], angle[..., None])
    r, angle = r[..., 0], angle[..., 0]
    a = np.where(np.abs(u[..., :1]) < 0.9, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    e1 = a - np.sum(a * u, axis=-1, keepdims=True) * u
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(u, e1)
    al = (r / SPHERE_RADIUS)[..., None]
    t = angle[..., None]
    v = np.cos(al) * u + np.sin(al) * (np.cos(t) * e1 + np.sin(t) * e2)
    return xyz_to_sphere(v)


def random_points(surface: ModelSurface, size, rng: np.random.Generator) -> np.ndarray:
    """Independent ``omega``-distributed random points."""
    if surface.kind == "torus":
        a = rng.random(size)
        b = rng.random(size)
        return reduce_point(surface, a + b * surface.tau)
    g = rng.standard_normal(tuple(np.atleast_1d(size)) + (3,))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return xyz_to_sphere(g)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

class Grid:
    """Nodes with positive weights summing to one.

    Two layouts exist.  ``"lattice"`` (torus): node ``(i, j)`` is
    ``(i e1 + j e2) / R`` in the reduced basis, stored row-major with shape
    ``(R, R)``.  ``"rings"`` (sphere): rings of constant colatitude
    ``theta`` (measured from the point at infinity) carrying ``nphi`` equally
    spaced longitudes each, stored with shape ``(n_rings, nphi)``.

    Attributes
    ----------
    surface : ModelSurface
    nodes : ndarray of complex, shape (size,)
    weights : ndarray of float, shape (size,)
    shape : tuple of int
    layout : str
    resolution : int
    """

    def __init__(self, surface, nodes, weights, shape, layout, resolution, theta=None,
                 phi0=0.0):
        self.surface = surface
        self.nodes = nodes
        self.weights = weights
        self.shape = tuple(shape)
        self.layout = layout
        self.resolution = int(resolution)
        self.theta = theta
        self.phi0 = phi0
        for arr in (self.nodes, self.weights):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def step(self) -> float:
        """Typical node spacing in the ``omega`` metric."""
        if self.layout == "lattice":
            e1, e2 = self.surface.reduced_basis
            return max(abs(e1), abs(e2)) / self.resolution / np.sqrt(self.surface.area)
        return np.pi * SPHERE_RADIUS / self.shape[0]

    def integrate(self, values) -> float:
        """Quadrature of grid samples against ``omega``."""
        return float(np.dot(self.weights, np.asarray(values).reshape(-1)))

    def cell_sides(self):
        """Approximate metric side lengths ``(a, b)`` of each node's cell."""
        if self.layout == "lattice":
            e1, e2 = self.surface.reduced_basis
            s = np.sqrt(self.surface.area)
            a = np.full(self.size, abs(e1) / self.resolution / s)
            b = self.weights / a
            return a, b
        nphi = self.shape[1]
        st = np.sin(self.theta)
        b = 2 * np.pi * SPHERE_RADIUS * st / nphi
        b = np.repeat(b, nphi)
        a = self.weights / b
        return a, b


def quadrature_grid(surface: ModelSurface, resolution: int = 256) -> Grid:
    """Quadrature grid for ``omega``.

    Parameters
    ----------
    surface : ModelSurface
    resolution : int
        Torus: ``R`` nodes per period, ``R^2`` in total.  Sphere: ``R``
        Gauss-Legendre rings in ``cos(theta)`` times ``2R`` longitudes, which
        integrates spherical polynomials of degree below ``2R`` exactly.

    Returns
    -------
    Grid
    """
    resolution = int(resolution)
    if resolution < 16:
        raise InvalidInput("quadrature resolution must be at least 16")
    return _quadrature_grid_cached(surface, resolution)


_GRID_CACHE: dict = {}


def _quadrature_grid_cached(surface, resolution):
    key = (surface, resolution)
    grid = _GRID_CACHE.get(key)
    if grid is None:
        if surface.kind == "torus":
            grid = lattice_grid(surface, resolution)
        else:
            t, w = np.polynomial.legendre.leggauss(resolution)
            theta = np.arccos(t)[::-1].copy()  # increasing colatitude
            wt = (w / 2.0)[::-1]
            grid = ring_grid(surface, theta, np.repeat(wt, 1), 2 * resolution, resolution)
        if len(_GRID_CACHE) > 16:
            _GRID_CACHE.clear()
        _GRID_CACHE[key] = grid
    return grid


def lattice_grid(surface: ModelSurface, resolution: int) -> Grid:
    """Uniform torus lattice with ``resolution**2`` equal weights."""
    e1, e2 = surface.reduced_basis
    i = np.arange(resolution)
    nodes = (i[:, None] * e1 + i[None, :] * e2) / resolution
    weights = np.full(resolution * resolution, 1.0 / resolution ** 2)
    return Grid(surface, nodes.reshape(-1), weights, (resolution, resolution), "lattice",
                resolution)


def ring_grid(surface, theta, ring_mass, nphi, resolution) -> Grid:
    """Sphere grid from ring colatitudes and per-ring masses."""
    phi0 = np.pi / nphi
    phi = phi0 + 2 * np.pi * np.arange(nphi) / nphi
    rad = 1.0 / np.tan(theta / 2.0)
    nodes = rad[:, None] * np.exp(1j * phi)[None, :]
    weights = np.repeat(np.asarray(ring_mass, float) / nphi, nphi)
    weights = weights / weights.sum()
    return Grid(surface, nodes.reshape(-1), weights, (len(theta), nphi), "rings",
                resolution, theta=np.asarray(theta, float), phi0=phi0)


def sphere_angles(z):
    """Colatitude from the point at infinity and longitude of sphere points."""
    v = sphere_to_xyz(z)
    theta = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    phi = np.arctan2(v[..., 1], v[..., 0])
    return theta, phi


class GridField:
    """Samples of a scalar field on a grid, with interpolation.

    Parameters
    ----------
    grid : Grid
    values : array_like, shape (grid.size,)
    """

    def __init__(self, grid: Grid, values):
        self.grid = grid
        self.values = np.asarray(values, dtype=float).reshape(-1)
        if self.values.size != grid.size:
            raise InvalidInput("field size does not match grid")

    def __call__(self, z) -> np.ndarray:
        return interpolate(self.grid, self.values, z)

    def max(self) -> float:
        return float(self.values.max())

    def mean(self) -> float:
        return self.grid.integrate(self.values)


def interpolate(grid: Grid, values, z) -> np.ndarray:
    """Bilinear interpolation of grid samples at surface points ``z``."""
    z = as_points(grid.surface, z)
    vals = np.asarray(values, float).reshape(grid.shape)
    if grid.layout == "lattice":
        R = grid.resolution
        a, b = lattice_coords(grid.surface, z, reduced=True)
        fa = _frac(a) * R
        fb = _frac(b) * R
        i0 = np.floor(fa).astype(int) % R
        j0 = np.floor(fb).astype(int) % R
        ta = fa - np.floor(fa)
        tb = fb - np.floor(fb)
        i1 = (i0 + 1) % R
        j1 = (j0 + 1) % R
        return ((1 - ta) * (1 - tb) * vals[i0, j0] + ta * (1 - tb) * vals[i1, j0]
                + (1 - ta) * tb * vals[i0, j1] + ta * tb * vals[i1, j1])
    theta, phi = sphere_angles(z)
    th = grid.theta
    nphi = grid.shape[1]
    # pad with pole values so the interpolation is defined everywhere
    north = vals[0].mean()
    south = vals[-1].mean()
    thp = np.concatenate([[0.0], th, [np.pi]])
    fp = (phi - grid.phi0) / (2 * np.pi) * nphi
    k0 = np.floor(fp).astype(int) % nphi
    k1 = (k0 + 1) % nphi
    tp = fp - np.floor(fp)
    r = np.clip(np.searchsorted(thp, theta, side="right") - 1, 0, len(thp) - 2)
    tr = (theta - thp[r]) / (thp[r + 1] - thp[r])

    def ring_val(idx):
        inner = (idx >= 1) & (idx <= len(th))
        ii = np.clip(idx - 1, 0, len(th) - 1)
        v = (1 - tp) * vals[ii, k0] + tp * vals[ii, k1]
        return np.where(inner, v, np.where(idx == 0, north, south))

    return (1 - tr) * ring_val(r) + tr * ring_val(r + 1)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

class Region:
    """Compact region ``K``: the whole surface, a union of closed discs, or
    the complement of a union of open discs.

    Parameters
    ----------
    surface : ModelSurface
    kind : {"full", "union", "complement"}
    centers, radii : sequences
        Disc centers (surface points) and metric radii.
    """

    def __init__(self, surface: ModelSurface, kind: str = "full", centers=(), radii=()):
        if kind not in ("full", "union", "complement"):
            raise InvalidInput(f"unknown region kind {kind!r}")
        self.surface = surface
        self.kind = kind
        self.centers = reduce_point(surface, np.atleast_1d(np.asarray(centers, complex)))
        self.radii = np.atleast_1d(np.asarray(radii, float))
        if self.centers.shape != self.radii.shape:
            raise InvalidInput("centers and radii differ in length")
        if kind != "full" and self.centers.size == 0:
            raise InvalidInput("disc regions need at least one disc")
        if np.any(self.radii <= 0):
            raise InvalidInput("disc radii must be positive")
        if kind == "complement" and np.all(self.contains(self._probe()) == False):  # noqa: E712
            raise InvalidInput("complement region is empty")

    @classmethod
    def full(cls, surface):
        return cls(surface, "full")

    def _probe(self):
        return random_points(self.surface, 4096, np.random.default_rng(0))

    def _dist(self, z):
        z = np.asarray(z, complex)
        return distance(self.surface, z[..., None], self.centers)

    def contains(self, z) -> np.ndarray:
        """Membership test; boundary points count as inside."""
        z = as_points(self.surface, z)
        if self.kind == "full":
            return np.ones(z.shape, bool)
        d = self._dist(z)
        slack = 1e-12 * (1 + self.radii)
        if self.kind == "union":
            return np.any(d <= self.radii + slack, axis=-1)
        return np.all(d >= self.radii - slack, axis=-1)

    def mask(self, grid: Grid) -> np.ndarray:
        return self.contains(grid.nodes)

    def signed_distance(self, z) -> np.ndarray:
        """Metric distance to ``dK``, negative inside ``K`` (approximate for
        overlapping discs)."""
        z = as_points(self.surface, z)
        if self.kind == "full":
            return np.full(z.shape, -np.inf)
        d = self._dist(z) - self.radii
        if self.kind == "union":
            return np.min(d, axis=-1)
        return -np.min(d, axis=-1)

    def project(self, z) -> np.ndarray:
        """Map points outside ``K`` to the nearest disc boundary point."""
        z = as_points(self.surface, z).copy()
        if self.kind == "full":
            return z
        for _ in range(3):
            out = ~self.contains(z)
            if not np.any(out):
                break
            d = self._dist(z[out]) - self.radii
            k = np.argmin(np.abs(d), axis=-1)
            z[out] = _move_to_circle(self.surface, z[out], self.centers[k], self.radii[k],
                                     outward=(self.kind == "complement"))
        return z

    def area(self, resolution: int = 256) -> float:
        g = quadrature_grid(self.surface, resolution)
        return g.integrate(self.mask(g))

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind != "full":
            out["centers"] = [[c.real, c.imag] for c in self.centers]
            out["radii"] = self.radii.tolist()
        return out


def _move_to_circle(surface, z, c, r, outward):
    pad = 1.0 + (1e-9 if outward else -1e-9)
    if surface.kind == "torus":
        d = torus_difference(surface, z, c)
        ad = np.abs(d)
        u = np.where(ad > 0, d / np.where(ad > 0, ad, 1.0), 1.0)
        return reduce_point(surface, c + u * r * pad * np.sqrt(surface.area))
    u = sphere_to_xyz(z)
    cu = sphere_to_xyz(c)
    t = u - np.sum(u * cu, axis=-1, keepdims=True) * cu
    tn = np.linalg.norm(t, axis=-1, keepdims=True)
    fallback = np.broadcast_to(_tangent_frame(cu.reshape(-1, 3)[0])[0], t.shape)
    t = np.where(tn > 1e-14, t / np.where(tn > 1e-14, tn, 1.0), fallback)
    a = (r * pad / SPHERE_RADIUS)[..., None] if np.ndim(r) else r * pad / SPHERE_RADIUS
    return xyz_to_sphere(np.cos(a) * cu + np.sin(a) * t)


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

class Measure:
    """Base class for finite measures on a model surface."""

    surface: ModelSurface
    signed: bool = False

    @property
    def mass(self) -> float:
        raise NotImplementedError

    def check_probability(self, tol: float = 1e-10):
        if self.signed:
            raise InvalidInput("a probability measure was expected, got a signed one")
        if abs(self.mass - 1.0) > tol:
            raise InvalidInput(f"measure has mass {self.mass!r}, expected 1")

    def integrate(self, f) -> float:
        """Integral of a callable ``f(z)``."""
        raise NotImplementedError


class GridDensity(Measure):
    """Measure with point masses on the nodes of a grid.

    ``masses[i]`` is the mass carried by the cell of node ``i``; the
    density with respect to ``omega`` is ``masses / grid.weights``.
    """

    def __init__(self, grid: Grid, masses, signed: bool = False):
        self.grid = grid
        self.surface = grid.surface
        self.masses = np.asarray(masses, float).reshape(-1)
        self.signed = signed
        if self.masses.size != grid.size:
            raise InvalidInput("mass vector does not match grid")
        if not signed and np.any(self.masses < 0):
            raise InvalidInput("negative mass in an unsigned measure")

    @classmethod
    def omega(cls, grid: Grid) -> "GridDensity":
        return cls(grid, grid.weights.copy())

    @property
    def mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.grid.weights

    def integrate(self, f) -> float:
        v = f(self.grid.nodes) if callable(f) else np.asarray(f).reshape(-1)
        return float(np.dot(self.masses, v))

    def support_mask(self, tol: float = 0.0) -> np.ndarray:
        return self.masses > tol


class Atoms(Measure):
    """Finite combination of Dirac masses."""

    def __init__(self, surface: ModelSurface, points, weights=None, signed: bool = False):
        self.surface = surface
        self.points = reduce_point(surface, np.atleast_1d(np.asarray(points, complex)))
        if weights is None:
            weights = np.full(self.points.size, 1.0 / max(self.points.size, 1))
        self.weights = np.atleast_1d(np.asarray(weights, float))
        self.signed = signed
        if self.weights.shape != self.points.shape:
            raise InvalidInput("points and weights differ in length")
        if not signed and np.any(self.weights < 0):
            raise InvalidInput("negative weight in an unsigned measure")

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


class CircleMeasure(Measure):
    """Measure on the metric circle ``dB(center, radius)``.

    The circle is discretized by ``len(weights)`` equispaced nodes; the
    weights are node masses (trapezoid rule).  With uniform weights this is
    the normalized arc-length measure.
    """

    def __init__(self, surface: ModelSurface, center: complex, radius: float, weights=None,
                 nodes: int = 256):
        if radius <= 0 or radius >= injectivity_radius(surface):
            raise InvalidInput("circle radius outside (0, injectivity radius)")
        self.surface = surface
        self.center = complex(reduce_point(surface, center))
        self.radius = float(radius)
        if weights is None:
            weights = np.full(nodes, 1.0 / nodes)
        self.weights = np.asarray(weights, float)
        self.signed = bool(np.any(self.weights < 0))
        self.points = metric_circle(surface, self.center, self.radius, self.weights.size)

    @classmethod
    def uniform(cls, surface, center, radius, nodes: int = 256):
        return cls(surface, center, radius, None, nodes)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))

    def as_atoms(self) -> Atoms:
        return Atoms(self.surface, self.points, self.weights, signed=self.signed)
