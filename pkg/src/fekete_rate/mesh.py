"""Finite-volume meshes carrying a discrete ``dd^c`` operator.

For a mesh function ``u``, ``(L u)_i`` approximates the ``dd^c u`` mass of
cell ``i`` (the ``1 / 2 pi`` factor included).  ``L`` is symmetric, has
nonnegative off-diagonal entries and zero row sums, so ``L u + w >= 0`` is
the discrete form of ``omega``-subharmonicity when ``w`` holds the cell
masses of ``omega``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput
from .geometry import Grid, ModelSurface, lattice_grid, ring_grid


class Mesh(Grid):
    """A :class:`Grid` with a discrete ``dd^c`` operator and a coloring.

    Attributes
    ----------
    offdiag : scipy.sparse.csr_matrix
        Off-diagonal part of ``L``.
    diag : ndarray
        Diagonal of ``L`` (negative).
    colors : list of ndarray
        Index sets of mutually uncoupled nodes.
    """

    def _set_operator(self, offdiag, colors):
        offdiag = sp.csr_matrix(offdiag)
        offdiag.sum_duplicates()
        offdiag.eliminate_zeros()
        self.offdiag = offdiag
        self.diag = -np.asarray(offdiag.sum(axis=1)).reshape(-1)
        self.colors = colors
        self.order = np.concatenate(colors).astype(np.int32)
        self.color_ptr = np.concatenate([[0], np.cumsum([len(c) for c in colors])])

    @property
    def laplacian(self) -> sp.csr_matrix:
        return (self.offdiag + sp.diags(self.diag)).tocsr()

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, float).reshape(-1)
        return self.offdiag @ u + self.diag * u

    def edges(self):
        """Node pairs ``(i, j)``, ``i < j``, coupled by the operator."""
        c = self.offdiag.tocoo()
        keep = c.row < c.col
        return c.row[keep], c.col[keep]


def _torus_stencil(surface: ModelSurface, R: int):
    """Monotone 5- or 7-point stencil in reduced lattice coordinates."""
    t = surface.reduced_tau
    tr, ti = t.real, t.imag
    if abs(tr) < 1e-14:
        tr = 0.0
    s = 1.0 if tr >= 0 else -1.0
    a = abs(tr)
    ca = (abs(t) ** 2 - a) / ti
    cb = (1.0 - a) / ti
    cd = a / ti
    idx = np.arange(R * R).reshape(R, R)
    rows, cols, vals = [], [], []

    def couple(di, dj, c):
        if c <= 0:
            return
        nb = np.roll(np.roll(idx, -di, axis=0), -dj, axis=1)
        for src, dst in ((idx, nb), (nb, idx)):
            rows.append(src.reshape(-1))
            cols.append(dst.reshape(-1))
            vals.append(np.full(R * R, c / (2 * np.pi)))

    couple(1, 0, ca)
    couple(0, 1, cb)
    # tau' real part >= 0 couples along (1, -1), otherwise along (1, 1)
    couple(1, -int(s), cd)
    off = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(R * R, R * R)).tocsr()
    if cd > 0:
        colors = _greedy_colors(off)
    elif R % 2 == 0:
        par = ((np.arange(R)[:, None] + np.arange(R)[None, :]) % 2).reshape(-1)
        colors = [np.flatnonzero(par == 0), np.flatnonzero(par == 1)]
    else:
        colors = _greedy_colors(off)
    return off, colors


def _greedy_colors(off: sp.csr_matrix):
    n = off.shape[0]
    color = -np.ones(n, int)
    indptr, indices = off.indptr, off.indices
    for i in range(n):
        used = set(color[indices[indptr[i]:indptr[i + 1]]].tolist())
        c = 0
        while c in used:
            c += 1
        color[i] = c
    return [np.flatnonzero(color == c) for c in range(color.max() + 1)]


def _sphere_mesh(surface: ModelSurface, R: int):
    nth, nph = R, 2 * R
    dth = np.pi / nth
    dph = 2 * np.pi / nph
    edges = np.linspace(0.0, np.pi, nth + 1)
    theta = 0.5 * (edges[:-1] + edges[1:])
    ring_mass = (np.cos(edges[:-1]) - np.cos(edges[1:])) / 2.0
    grid = ring_grid(surface, theta, ring_mass, nph, R)
    idx = np.arange(nth * nph).reshape(nth, nph)
    rows, cols, vals = [], [], []
    ew = dth / (np.sin(theta) * dph) / (2 * np.pi)
    nb = np.roll(idx, -1, axis=1)
    for src, dst in ((idx, nb), (nb, idx)):
        rows.append(src.reshape(-1))
        cols.append(dst.reshape(-1))
        vals.append(np.repeat(ew, nph))
    ns = np.sin(edges[1:-1]) * dph / dth / (2 * np.pi)
    for src, dst in ((idx[:-1], idx[1:]), (idx[1:], idx[:-1])):
        rows.append(src.reshape(-1))
        cols.append(dst.reshape(-1))
        vals.append(np.repeat(ns, nph))
    off = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(nth * nph, nth * nph)).tocsr()
    par = ((np.arange(nth)[:, None] + np.arange(nph)[None, :]) % 2).reshape(-1)
    colors = [np.flatnonzero(par == 0), np.flatnonzero(par == 1)]
    return grid, off, colors


@lru_cache(maxsize=8)
def build_mesh(surface: ModelSurface, resolution: int = 256) -> Mesh:
    """Finite-volume mesh of a model surface.

    Parameters
    ----------
    surface : ModelSurface
    resolution : int
        Torus: ``R x R`` lattice cells (same nodes as the quadrature grid).
        Sphere: ``R`` latitude bands times ``2R`` longitudes.

    Returns
    -------
    Mesh
    """
    R = int(resolution)
    if R < 8:
        raise InvalidInput("mesh resolution must be at least 8")
    if surface.kind == "torus":
        grid = lattice_grid(surface, R)
        off, colors = _torus_stencil(surface, R)
    else:
        grid, off, colors = _sphere_mesh(surface, R)
    mesh = Mesh.__new__(Mesh)
    Grid.__init__(mesh, surface, np.array(grid.nodes), np.array(grid.weights), grid.shape,
                  grid.layout, R, theta=grid.theta, phi0=grid.phi0)
    mesh._set_operator(off, colors)
    return mesh
