"""Minimizers of the discrete functionals ``K_{m,phi}`` and ``J_{m,phi}``.

Block coordinate descent: each point in turn jumps to the best node of a
probe grid of ``K`` for its coordinate objective

    h_j(z) = phi(z) - (m - 1)^-1 sum_{k != j} G(z, p_k),

and may be refined on an 8-direction stencil whose step halves down to
``step_min``.  A point is coordinate-optimal for ``K_{m,phi}`` exactly when it
minimizes ``h_j`` over ``K``.  Between sweeps all points move together by a
spectral projected gradient method, which removes the slow linear tail of
pure coordinate descent.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .config import WeightedSet
from .errors import InfeasibleError, InvalidInput, PerturbationError
from .geometry import (COLLISION_TOL, ModelSurface, _tangent_frame, distance, geodesic_offset,
                       lattice_grid, quadrature_grid, random_points, reduce_point, sphere_to_xyz,
                       torus_difference, xyz_to_sphere)
from .green import GreenKernel
from .potentials import Configuration, _points, functional_J, functional_Km, is_infinite

ANGLES = np.arange(8) * (np.pi / 4)


@dataclass
class MinimizerResult:
    """Best configuration over all restarts with its diagnostics."""

    config: Configuration
    value_K: float
    value_J: float
    coord_optimality_residual: float
    min_separation: float
    beta_hat: float
    restarts_used: int
    restart_values: list = field(default_factory=list)
    seed: int = 0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"points": self.config.to_list(), "value_K": self.value_K,
                "value_J": self.value_J,
                "coord_optimality_residual": self.coord_optimality_residual,
                "min_separation": self.min_separation, "beta_hat": self.beta_hat,
                "restarts_used": self.restarts_used, "restart_values": self.restart_values,
                "seed": self.seed}


def probe_grid(surface: ModelSurface, region, count: int = 10000) -> np.ndarray:
    """About ``count`` quadrature nodes inside the region."""
    if surface.kind == "torus":
        pts = lattice_grid(surface, max(8, int(round(math.sqrt(count))))).nodes
    else:
        pts = quadrature_grid(surface, max(16, int(round(math.sqrt(count / 2))))).nodes
    if region is not None:
        pts = pts[region.contains(pts)]
    if pts.size == 0:
        raise InfeasibleError("probe grid has no node inside the region")
    return pts


def _spiral_points(surface: ModelSurface, m: int) -> np.ndarray:
    """Near-uniform deterministic points: Fibonacci spiral or a skewed lattice."""
    k = np.arange(m) + 0.5
    golden = (1 + math.sqrt(5)) / 2
    if surface.kind == "sphere":
        zc = 1 - 2 * k / m
        ph = 2 * np.pi * k / golden
        s = np.sqrt(1 - zc * zc)
        return xyz_to_sphere(np.stack([s * np.cos(ph), s * np.sin(ph), zc], axis=-1))
    return (k / m) + ((k / golden) % 1.0) * surface.tau


def _initial(surface, region, m, rng, restart, probe):
    """Restart 0 uses spiral points, later ones seeded uniform points; outliers go into K."""
    if restart == 0:
        pts = _spiral_points(surface, m)
    else:
        pts = random_points(surface, m, rng)
    if region is not None and region.kind != "full":
        inside = region.contains(pts)
        if not np.all(inside):
            pts = pts.copy()
            pts[~inside] = probe[rng.choice(probe.size, int(np.sum(~inside)), replace=False)]
    return _separate(surface, pts, probe, rng)


def _separate(surface, pts, probe, rng):
    """Replace colliding points by unused probe nodes."""
    pts = np.array(pts, complex)
    for j in range(pts.size):
        others = np.delete(pts, j)
        if np.min(distance(surface, others, pts[j])) <= 10 * COLLISION_TOL:
            free = np.min(distance(surface, probe[:, None], others[None, :]), axis=1)
            pts[j] = probe[int(np.argmax(free))]
    return pts


class _Descent:
    """State of one coordinate-descent run."""

    def __init__(self, kernel: GreenKernel, ws: WeightedSet, pts, probe, step0, step_min):
        self.kernel = kernel
        self.surface = ws.surface
        self.region = ws.region
        self.phi = ws.phi
        self.pts = np.array(pts, complex)
        self.m = self.pts.size
        self.probe = probe
        self.phi_probe = np.asarray(self.phi(probe), float)
        self.step0 = step0
        self.step_min = step_min
        # columns: G(probe, p_k); their sum is the probe potential
        self.Gp = np.empty((probe.size, self.m))
        for k in range(self.m):
            self.Gp[:, k] = kernel.raw(probe, self.pts[k])
        self.Usum = self.Gp.sum(axis=1)

    def h(self, j, z):
        """Coordinate objective ``h_j`` at points ``z``."""
        z = np.atleast_1d(z)
        others = np.delete(self.pts, j)
        g = self.kernel.raw(z[:, None], others[None, :])
        with np.errstate(invalid="ignore"):
            s = np.sum(g, axis=1)
        out = np.asarray(self.phi(z), float) - s / (self.m - 1)
        return np.where(np.isnan(out), np.inf, out)

    def probe_h(self, j):
        with np.errstate(invalid="ignore"):
            rest = self.Usum - self.Gp[:, j]
        out = self.phi_probe - rest / (self.m - 1)
        return np.where(np.isnan(out), np.inf, out)

    def move(self, j, z):
        self.pts[j] = z
        col = self.kernel.raw(self.probe, z)
        with np.errstate(invalid="ignore"):
            self.Usum = self.Usum - self.Gp[:, j] + col
        self.Gp[:, j] = col
        # recompute the running sum now and then against drift
        if not np.all(np.isfinite(self.Usum)):
            self.Usum = self.Gp.sum(axis=1)

    def coordinate_step(self, j) -> float:
        """Optimize point ``j``; returns the decrease of ``h_j``."""
        cur = float(self.h(j, self.pts[j])[0])
        start = cur
        ph = self.probe_h(j)
        k = int(np.argmin(ph))
        z = self.pts[j]
        if ph[k] < cur - 1e-14:
            z = self.probe[k]
            cur = float(self.h(j, z)[0])
        step = self.step0
        while step >= self.step_min:
            cand = geodesic_offset(self.surface, np.full(8, z), np.full(8, step), ANGLES)
            if self.region is not None and self.region.kind != "full":
                cand = self.region.project(cand)
            hv = self.h(j, cand)
            i = int(np.argmin(hv))
            if hv[i] < cur - 1e-15:
                z, cur = cand[i], float(hv[i])
            else:
                step *= 0.5
        if cur < start:
            self.move(j, z)
        return start - cur

    def set_points(self, pts):
        self.pts = np.array(pts, complex)
        for k in range(self.m):
            self.Gp[:, k] = self.kernel.raw(self.probe, self.pts[k])
        self.Usum = self.Gp.sum(axis=1)

    def jump_step(self, j) -> float:
        """Move point ``j`` to the best probe node if that lowers ``h_j``."""
        cur = float(self.h(j, self.pts[j])[0])
        ph = self.probe_h(j)
        k = int(np.argmin(ph))
        if ph[k] < cur - 1e-12:
            z = self.probe[k]
            new = float(self.h(j, z)[0])
            if new < cur:
                self.move(j, z)
                return cur - new
        return 0.0

    def sweep(self, stencil: bool) -> tuple:
        gain, jumps = 0.0, 0
        for j in range(self.m):
            if stencil:
                gain += self.coordinate_step(j)
            else:
                g = self.jump_step(j)
                gain += g
                jumps += g > 0
        return gain, jumps


class _Smooth:
    """``(m / 2) K_{m,phi}`` with gradient, for the projected gradient stage.

    Torus states are chart points (complex); sphere states are unit vectors.
    The scaling makes the gradient in point ``j`` equal to ``grad h_j``.
    """

    FD = 1e-6

    def __init__(self, kernel: GreenKernel, ws: WeightedSet):
        self.kernel = kernel
        self.surface = ws.surface
        self.region = ws.region if ws.region.kind != "full" else None
        self.phi = ws.phi
        self.sphere = ws.surface.kind == "sphere"

    def to_state(self, pts):
        return sphere_to_xyz(pts) if self.sphere else np.array(pts, complex)

    def to_points(self, state):
        return xyz_to_sphere(state) if self.sphere else state

    def retract(self, state, v):
        if self.sphere:
            x = state + v
            x = x / np.linalg.norm(x, axis=-1, keepdims=True)
            if self.region is not None:
                x = sphere_to_xyz(self.region.project(xyz_to_sphere(x)))
            return x
        z = reduce_point(self.surface, state + v)
        if self.region is not None:
            z = self.region.project(z)
        return z

    def diff(self, a, b):
        return a - b if self.sphere else torus_difference(self.surface, a, b)

    @staticmethod
    def inner(a, b) -> float:
        if np.iscomplexobj(a):
            return float(np.sum(a.real * b.real + a.imag * b.imag))
        return float(np.sum(a * b))

    def value_grad(self, state):
        m = state.shape[0]
        pts = self.to_points(state)
        if self.sphere:
            iu = np.triu_indices(m, 1)
            g = self.kernel.raw(pts[iu[0]], pts[iu[1]])
            gsum = float(np.sum(g))
        else:
            e1, _ = self.surface.reduced_basis
            t = self.surface.reduced_tau
            zeta = pts / e1
            gsum, gr, gi = backend.torus_pair_sums(
                np.ascontiguousarray(zeta.real), np.ascontiguousarray(zeta.imag), t.real, t.imag,
                self.kernel.nterms, int(math.ceil(40.0 / (math.pi * t.imag))) + 2)
            gsum += 0.5 * m * (m - 1) * self.kernel.c0
            # pair gradients in chart coordinates
            grad = -(gr + 1j * gi) / np.conj(e1) / (m - 1)
        if not math.isfinite(gsum):
            return math.inf, None
        phis = np.asarray(self.phi(pts), float)
        val = -gsum / (m - 1) + float(np.sum(phis))
        # sphere pair gradients in the embedding; phi gradients by central differences
        if self.sphere:
            gx = self.kernel.grad_x(state[:, None, :], state[None, :, :])
            gx[np.arange(m), np.arange(m)] = 0.0
            grad = -np.sum(gx, axis=1) / (m - 1)
            e1, e2 = _tangent_frame(state)
            h = self.FD
            for e in (e1, e2):
                xp = state + h * e
                xm = state - h * e
                xp /= np.linalg.norm(xp, axis=-1, keepdims=True)
                xm /= np.linalg.norm(xm, axis=-1, keepdims=True)
                dphi = (np.asarray(self.phi(xyz_to_sphere(xp))) -
                        np.asarray(self.phi(xyz_to_sphere(xm)))) / (2 * h)
                grad = grad + dphi[:, None] * e
        else:
            h = self.FD
            dx = (np.asarray(self.phi(pts + h)) - np.asarray(self.phi(pts - h))) / (2 * h)
            dy = (np.asarray(self.phi(pts + 1j * h)) - np.asarray(self.phi(pts - 1j * h))) / (2 * h)
            grad = grad + dx + 1j * dy
        return val, grad


def _spg(sm: _Smooth, state, max_iter: int = 2000, tol: float = 1e-7, memory: int = 10):
    """Nonmonotone spectral projected gradient descent."""
    f, g = sm.value_grad(state)
    if g is None:
        return state
    hist = [f]
    alpha = 1e-2 / max(float(np.max(np.abs(g))), 1e-12)
    for _ in range(max_iter):
        pg = sm.diff(sm.retract(state, -g), state)
        if float(np.max(np.abs(pg))) < tol:
            break
        d = sm.diff(sm.retract(state, -alpha * g), state)
        gd = sm.inner(g, d)
        if gd >= 0:
            break
        fref = max(hist[-memory:])
        lam = 1.0
        while True:
            new = sm.retract(state, lam * d)
            fn, gn = sm.value_grad(new)
            if gn is not None and fn <= fref + 1e-4 * lam * gd:
                break
            lam *= 0.5
            if lam < 1e-10:
                return state
        s = sm.diff(new, state)
        y = gn - g
        sy = sm.inner(s, y)
        alpha = min(max(sm.inner(s, s) / sy, 1e-10), 1e3) if sy > 0 else 1e3
        state, f, g = new, fn, gn
        hist.append(f)
    return state


def _descend(kernel, ws, pts, probe, step_min, max_iters, tol):
    """Jump sweeps, projected gradient polish, then a stencil certification sweep."""
    d = _Descent(kernel, ws, pts, probe, 0.1, step_min)
    sm = _Smooth(kernel, ws)
    for _ in range(2):
        d.sweep(stencil=False)
    for cycle in range(max_iters):
        st = _spg(sm, sm.to_state(d.pts))
        d.set_points(sm.to_points(st))
        gain, jumps = d.sweep(stencil=False)
        if jumps == 0:
            break
    # certification: short stencil refinement of every coordinate
    d.step0 = max(16 * step_min, 1e-3)
    for _ in range(3):
        gain, _ = d.sweep(stencil=True)
        if gain < tol:
            break
    return d.pts


def minimize_Km(kernel: GreenKernel, weighted_set: WeightedSet, m: int, restarts: int = 8,
                max_iters: int = 200, seed: int = 0, probes: int = 4096,
                check_probes: int = 10000, step0: float = 0.1, step_min: float = 1e-6,
                tol: float = 1e-10) -> MinimizerResult:
    """Multistart coordinate descent for ``K_{m,phi}`` over ``K^m``.

    Parameters
    ----------
    restarts : int
        Number of independent starts; restart 0 uses deterministic spiral
        points, the others seeded random points.
    max_iters : int
        Sweep budget per restart.
    probes, check_probes : int
        Sizes of the descent probe grid and of the optimality-check grid.
    step0, step_min : float
        Initial and final stencil step (metric units).

    Raises
    ------
    InfeasibleError
        When the probe grid of ``K`` has fewer than ``m`` nodes.
    """
    if m < 2:
        raise InvalidInput("m must be at least 2")
    if weighted_set.surface != kernel.surface:
        raise InvalidInput("kernel and weighted set live on different surfaces")
    t0 = time.perf_counter()
    surface, region = weighted_set.surface, weighted_set.region
    probe = probe_grid(surface, region, probes)
    if probe.size < m:
        raise InfeasibleError(f"region holds {probe.size} probe nodes, fewer than m = {m}")
    rng = np.random.default_rng(seed)
    best, best_val, values = None, math.inf, []
    for r in range(max(1, restarts)):
        pts = _initial(surface, region, m, rng, r, probe)
        out = _descend(kernel, weighted_set, pts, probe, step_min, max_iters, tol)
        v = functional_Km(kernel, out, weighted_set.phi)
        v = math.inf if is_infinite(v) else float(v)
        values.append(v)
        # ties keep the lower restart index
        if v < best_val:
            best, best_val = out.copy(), v
    if best is None:
        raise InfeasibleError("no restart produced a collision-free configuration")
    cfg = Configuration(surface, best, region)
    resid = check_coordinate_optimality(kernel, cfg, weighted_set,
                                        probe_grid(surface, region, check_probes))
    sep = separation(cfg, weighted_set.gamma)
    vj = functional_J(kernel, cfg, weighted_set.phi)
    return MinimizerResult(cfg, best_val, float(vj), resid, sep["min_dist"], sep["beta_hat"],
                           len(values), values, seed, time.perf_counter() - t0)


def check_coordinate_optimality(kernel: GreenKernel, config, weighted_set: WeightedSet,
                                probe=None) -> float:
    """``max_j max_z [h_j(p_j) - h_j(z)]^+`` over probe points ``z`` in ``K``."""
    pts = _points(config, weighted_set.surface)
    if probe is None:
        probe = probe_grid(weighted_set.surface, weighted_set.region, 10000)
    d = _Descent(kernel, weighted_set, pts, probe, 0.1, 1.0)
    worst = 0.0
    for j in range(pts.size):
        here = float(d.h(j, pts[j])[0])
        worst = max(worst, here - float(np.min(d.probe_h(j))))
    return worst


def separation(config, gamma: float = 1.0, surface: ModelSurface | None = None) -> dict:
    """Minimum pairwise distance and ``beta_hat = min_dist m^{1/gamma}``."""
    if surface is None:
        surface = config.surface
    pts = _points(config, surface)
    m = pts.size
    if m < 2:
        raise InvalidInput("separation needs m >= 2")
    iu = np.triu_indices(m, 1)
    d = distance(surface, pts[iu[0]], pts[iu[1]])
    dmin = float(np.min(d))
    return {"min_dist": dmin, "beta_hat": dmin * m ** (1.0 / gamma)}


def theta_R(theta_ctx, points) -> float:
    """``R_m(p) = ||theta(m A(p0) - sum A(p_j) - z_star)||^2``."""
    pts = np.asarray(points, complex)
    arg = theta_ctx.theta_argument(pts.size, pts, theta_ctx.riemann_constant(3))
    return float(theta_ctx.norm(arg)) ** 2


def perturb_for_theta(config, weighted_set: WeightedSet, theta_ctx, kappa0: float = 1e-3,
                      alpha: float = 0.25, probes: int = 10000) -> tuple:
    """Replace the first point so that ``R_m >= kappa0``.

    Candidates are probe nodes of ``K`` at distance at least ``alpha / sqrt(m)``
    from the other points, tried in order of distance to the current first
    point.

    Returns
    -------
    (Configuration, dict)
        The perturbed configuration and ``{"R_before", "R_after",
        "alpha_hat", "moved"}``; ``alpha_hat = sqrt(m) * min dist`` from the
        new point to the others.

    Raises
    ------
    PerturbationError
        When no candidate satisfies both conditions.
    """
    surface = weighted_set.surface
    if surface.kind != "torus":
        raise InvalidInput("the theta perturbation needs a genus-one surface")
    pts = np.array(_points(config, surface), complex)
    m = pts.size
    if m <= 1:
        raise InvalidInput("the theta perturbation needs m > 1")
    others = pts[1:]
    r0 = theta_R(theta_ctx, pts)

    def sep(z):
        return float(np.min(distance(surface, others, z))) * math.sqrt(m)

    if r0 >= kappa0 and sep(pts[0]) >= alpha:
        out = Configuration(surface, pts, weighted_set.region)
        return out, {"R_before": r0, "R_after": r0, "alpha_hat": sep(pts[0]), "moved": False}
    probe = probe_grid(surface, weighted_set.region, probes)
    order = np.argsort(distance(surface, probe, pts[0]), kind="stable")
    dmin = np.min(distance(surface, probe[:, None], others[None, :]), axis=1) * math.sqrt(m)
    seen = []
    for i in order:
        if dmin[i] < alpha:
            continue
        trial = pts.copy()
        trial[0] = probe[i]
        r = theta_R(theta_ctx, trial)
        if r >= kappa0:
            out = Configuration(surface, trial, weighted_set.region)
            return out, {"R_before": r0, "R_after": r, "alpha_hat": float(dmin[i]),
                         "moved": True}
        if len(seen) < 32:
            seen.append(r)
    raise PerturbationError("no admissible replacement point", theta_values=seen)
