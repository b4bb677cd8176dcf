"""Extremal function ``U_{K,phi}``, equilibrium measure and ``min I_phi``.

The envelope is the largest ``omega``-subharmonic function below ``phi`` on
``K``.  On a finite-volume mesh this is the complementarity problem

    L U + w >= 0,   U <= phi on K,   (L U + w)(phi - U) = 0 on K,
    L U + w = 0 off K,

solved by projected SOR with red-black (multicolor) ordering and nested
iteration from coarser meshes.  The equilibrium measure is ``L U + w``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .config import WeightedSet
from .errors import ConvergenceError, InvalidInput
from .geometry import GridDensity, GridField, ModelSurface, distance
from .green import GreenKernel
from .mesh import Mesh, build_mesh
from .potentials import energy_I, grid_potential

MIN_LEVEL = 32


@dataclass
class EnvelopeSolution:
    """Converged envelope on a mesh.

    Attributes
    ----------
    U : GridField
        The envelope ``U_{K,phi}``.
    contact_mask : ndarray of bool
        Nodes of ``K`` where ``U = phi``.
    nu : GridDensity
        Equilibrium measure ``dd^c U + omega``.
    min_energy : float
        ``int phi dnu + int U omega``, which equals ``I_phi(nu)``.
    """

    U: GridField
    contact_mask: np.ndarray
    nu: GridDensity
    min_energy: float
    mesh: Mesh
    phi_values: np.ndarray
    region_mask: np.ndarray
    sweeps: int
    last_update: float
    relax: float
    clipped_mass: float
    diagnostics: dict = field(default_factory=dict)

    def check_invariants(self, tol: float = 1e-6) -> dict:
        """Admissibility, subharmonicity and harmonicity residuals."""
        mesh = self.mesh
        lap = mesh.apply(self.U.values) + mesh.weights
        K = self.region_mask
        boundary = _boundary_nodes(mesh, K)
        free = ~self.contact_mask & ~boundary
        out = {
            "admissibility": float(np.max((self.U.values - self.phi_values)[K], initial=-np.inf)),
            "subharmonicity": float(-np.min(lap)),
            "harmonicity_off_contact": float(np.max(np.abs(lap[free]), initial=0.0)),
            "nu_mass": self.nu.mass,
        }
        out["ok"] = bool(out["admissibility"] <= tol and out["subharmonicity"] <= tol
                         and out["harmonicity_off_contact"] <= tol
                         and abs(out["nu_mass"] - 1) <= 1e-6)
        return out


def _boundary_nodes(mesh: Mesh, mask: np.ndarray) -> np.ndarray:
    """Nodes of ``mask`` with a neighbor outside it, and vice versa."""
    i, j = mesh.edges()
    cut = mask[i] != mask[j]
    out = np.zeros(mesh.size, bool)
    out[i[cut]] = True
    out[j[cut]] = True
    return out


def optimal_relaxation(mesh: Mesh) -> float:
    """SOR factor ``2 / (1 + sin(pi / n))`` for an ``n``-node period."""
    n = max(mesh.shape)
    return 2.0 / (1.0 + math.sin(math.pi / n))


def _psor(mesh: Mesh, upper, u0, relax, tol, max_sweeps):
    u = np.ascontiguousarray(u0, dtype=float).copy()
    off = mesh.offdiag
    sweeps, upd = backend.psor_sweeps(off.indptr.astype(np.int32), off.indices.astype(np.int32),
                                      off.data, mesh.diag, np.asarray(mesh.weights, float),
                                      upper, mesh.order, mesh.color_ptr, u, relax, tol,
                                      max_sweeps)
    return u, int(sweeps), float(upd)


def _solve_level(ws: WeightedSet, R: int, tol, relax, max_sweeps, nested):
    mesh = build_mesh(ws.surface, R)
    phi = np.asarray(ws.phi(mesh.nodes), float)
    K = ws.region.mask(mesh)
    if not np.any(K):
        raise InvalidInput("region contains no mesh node")
    upper = np.where(K, phi, np.inf)
    if nested and R % 2 == 0 and R // 2 >= MIN_LEVEL:
        coarse = _solve_level(ws, R // 2, tol, relax, max_sweeps, nested)
        u0 = np.minimum(coarse[0].U(mesh.nodes), upper)
        total = coarse[1]
    else:
        u0 = np.full(mesh.size, float(np.min(phi[K])))
        total = 0
    w = relax if relax is not None else optimal_relaxation(mesh)
    u, sweeps, upd = _psor(mesh, upper, u0, w, tol, max_sweeps)
    if upd >= tol:
        raise ConvergenceError(f"projected SOR did not converge at resolution {R}",
                               residual=upd, iterations=sweeps)
    return _Level(mesh, GridField(mesh, u), phi, K, sweeps, upd, w), total + sweeps


@dataclass
class _Level:
    mesh: Mesh
    U: GridField
    phi: np.ndarray
    K: np.ndarray
    sweeps: int
    upd: float
    relax: float


def extremal_function(surface: ModelSurface, weighted_set: WeightedSet, resolution: int = 256,
                      tol: float = 1e-8, relax: float | None = None,
                      max_sweeps: int = 100000, nested: bool = True) -> EnvelopeSolution:
    """Solve the obstacle problem for ``U_{K,phi}``.

    Parameters
    ----------
    surface : ModelSurface
    weighted_set : WeightedSet
    resolution : int
        Mesh resolution, at least 64.
    tol : float
        Stop when the sup-norm of a sweep's update falls below ``tol``.
    relax : float, optional
        Over-relaxation factor; defaults to :func:`optimal_relaxation`.
    max_sweeps : int
        Sweep budget per mesh level.
    nested : bool
        Start from the interpolated solution on the half-resolution mesh.

    Returns
    -------
    EnvelopeSolution

    Raises
    ------
    ConvergenceError
        When a level exhausts ``max_sweeps``.
    """
    if weighted_set.surface != surface:
        raise InvalidInput("weighted set lives on another surface")
    if resolution < 64:
        raise InvalidInput("envelope resolution must be at least 64")
    t0 = time.perf_counter()
    lvl, total = _solve_level(weighted_set, int(resolution), tol, relax, max_sweeps, nested)
    mesh = lvl.mesh
    u = lvl.U.values
    raw = mesh.apply(u) + mesh.weights
    neg = float(np.min(raw))
    dens = np.where(raw > 0, raw, 0.0)
    # off K the measure vanishes up to the solver tolerance
    dens = np.where(lvl.K | (dens > 1e-8), dens, 0.0)
    clipped = float(np.sum(raw) - np.sum(dens))
    nu = GridDensity(mesh, dens / dens.sum())
    contact = lvl.K & (lvl.phi - u <= 1e-12 * (1.0 + np.abs(lvl.phi)))
    emin = nu.integrate(lvl.phi) + mesh.integrate(u)
    diag = {"seconds": time.perf_counter() - t0, "total_sweeps": total,
            "min_raw_density": neg, "backend": backend.NAME}
    return EnvelopeSolution(lvl.U, contact, nu, float(emin), mesh, lvl.phi, lvl.K, lvl.sweeps,
                            lvl.upd, lvl.relax, clipped, diag)


def min_energy(kernel: GreenKernel, solution: EnvelopeSolution, weighted_set=None) -> float:
    """``min_{M(K)} I_phi`` from a converged envelope.

    Uses ``int phi dnu + int U omega``; :func:`energy_I` of ``nu`` gives the
    same value up to discretization error.
    """
    return solution.min_energy


def direct_energy(kernel: GreenKernel, solution: EnvelopeSolution, weighted_set: WeightedSet):
    """``I_phi(nu)`` evaluated with the Green kernel."""
    return energy_I(kernel, solution.nu, solution.phi_values)


def verify_solmin(kernel: GreenKernel, solution: EnvelopeSolution, weighted_set=None,
                  support_tol: float = 1e-12) -> dict:
    """Residuals of the two potential identities of the equilibrium measure.

    ``contact_residual`` is the max over ``supp(nu)`` of
    ``|U*_nu - phi - int phi dnu + min I|`` and ``global_residual`` the max
    over the mesh of ``|U*_nu - U - int phi dnu + min I|``.
    """
    nu = solution.nu
    ustar = grid_potential(kernel, nu).values
    phi = solution.phi_values
    emin = solution.min_energy
    c = nu.integrate(phi) - emin
    supp = nu.masses > support_tol * nu.grid.weights
    return {
        "contact_residual": float(np.max(np.abs(ustar - phi - c)[supp])),
        "global_residual": float(np.max(np.abs(ustar - solution.U.values - c))),
        "min_energy": emin,
        "direct_energy": float(-(nu.masses @ ustar) + 2 * nu.integrate(phi)),
    }


def sup_norm_transfer_check(basis, weighted_set: WeightedSet, solution: EnvelopeSolution,
                            samples: int = 20, seed: int = 0) -> dict:
    """Compare ``sup_K |s| e^{-n phi}`` with ``sup_X |s| e^{-n U}`` for random sections.

    Returns
    -------
    dict
        ``max_relative_gap`` over the samples and ``argmax_on_contact``, the
        fraction of samples whose maximizer over ``X`` lies within one mesh
        cell of the contact set.
    """
    mesh = solution.mesh
    n = basis.n
    rng = np.random.default_rng(seed)
    K = solution.region_mask
    phi = solution.phi_values
    U = solution.U.values
    contact_nodes = mesh.nodes[solution.contact_mask]
    gaps, near = [], []
    for _ in range(samples):
        c = rng.standard_normal(basis.N) + 1j * rng.standard_normal(basis.N)
        logs = basis.log_abs_combination(mesh.nodes, c)
        a = logs - n * phi
        b = logs - n * U
        sup_k = np.max(a[K])
        sup_x = np.max(b)
        gaps.append(abs(math.expm1(sup_x - sup_k)))
        z = mesh.nodes[int(np.argmax(b))]
        if contact_nodes.size:
            dmin = float(np.min(distance(mesh.surface, contact_nodes, z)))
        else:
            dmin = math.inf
        near.append(dmin <= 1.5 * mesh.step)
    return {"max_relative_gap": float(max(gaps)), "argmax_on_contact": float(np.mean(near)),
            "samples": samples}
