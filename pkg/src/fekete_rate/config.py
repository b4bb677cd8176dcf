"""Weighted sets ``(K, phi, mu)`` and their JSON descriptors.

Descriptor layout::

    {"surface": {"kind": "torus", "tau": [0.0, 1.0]},
     "region": {"kind": "complement", "centers": [[0, 0]], "radii": [0.2]},
     "gamma": 1.0,
     "phi": {"kind": "expr", "expr": "0.1*cos(2*pi*u)"},
     "mu": {"kind": "omega"}}
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .fields import ConstantField, Field, field_from_dict
from .geometry import (CircleMeasure, GridDensity, Measure, ModelSurface, Region,
                       quadrature_grid)


def surface_from_dict(desc) -> ModelSurface:
    if desc is None:
        return ModelSurface.torus(1j)
    kind = desc.get("kind", "torus")
    if kind == "sphere":
        return ModelSurface.sphere()
    tau = desc.get("tau", [0.0, 1.0])
    if isinstance(tau, str):
        tau = [float(t) for t in tau.split(",")]
    return ModelSurface.torus(complex(tau[0], tau[1]))


def region_from_dict(surface: ModelSurface, desc) -> Region:
    if desc is None or desc.get("kind", "full") == "full":
        return Region.full(surface)
    centers = [complex(c[0], c[1]) for c in desc["centers"]]
    return Region(surface, desc["kind"], centers, desc["radii"])


@dataclass
class WeightedSet:
    """A compact region with a weight field and a reference measure.

    Parameters
    ----------
    surface : ModelSurface
    region : Region
    phi : Field
    gamma : float
        Hoelder exponent of ``phi``, in ``(0, 1]``.
    mu : dict
        Measure descriptor: ``{"kind": "omega"}`` (``omega`` restricted to K
        and normalized), ``{"kind": "density", "density": <field>}`` (density
        relative to ``omega``), or ``{"kind": "circle", "center": [x, y],
        "radius": r}``.
    """

    surface: ModelSurface
    region: Region
    phi: Field
    gamma: float = 1.0
    mu: dict = field(default_factory=lambda: {"kind": "omega"})

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise InvalidInput("gamma must lie in (0, 1]")
        if self.region.surface != self.surface or self.phi.surface != self.surface:
            raise InvalidInput("region, field and surface disagree")

    @classmethod
    def full(cls, surface: ModelSurface, phi: Field | float | None = None, gamma: float = 1.0):
        if phi is None or isinstance(phi, (int, float)):
            phi = ConstantField(surface, 0.0 if phi is None else phi)
        return cls(surface, Region.full(surface), phi, gamma)

    def mu_measure(self, resolution: int = 256) -> Measure:
        """The reference measure as a probability measure supported in K."""
        kind = self.mu.get("kind", "omega")
        if kind == "circle":
            c = self.mu["center"]
            meas = CircleMeasure.uniform(self.surface, complex(c[0], c[1]), self.mu["radius"],
                                         self.mu.get("nodes", 512))
            if not np.all(self.region.contains(meas.points)):
                raise InvalidInput("circle measure leaves the region")
            return meas
        grid = quadrature_grid(self.surface, resolution)
        dens = np.ones(grid.size)
        if kind == "density":
            dens = np.asarray(field_from_dict(self.surface, self.mu["density"])(grid.nodes))
            if np.any(dens < 0):
                raise InvalidInput("mu density must be nonnegative")
        elif kind != "omega":
            raise InvalidInput(f"unknown mu kind {kind!r}")
        masses = dens * grid.weights * self.region.mask(grid)
        total = masses.sum()
        if total <= 0:
            raise InvalidInput("mu has no mass on the region")
        return GridDensity(grid, masses / total)

    def describe(self) -> dict:
        return {"surface": self.surface.describe(), "region": self.region.describe(),
                "gamma": self.gamma, "phi": self.phi.describe(), "mu": dict(self.mu)}

    def content_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def weighted_set_from_dict(desc: dict) -> WeightedSet:
    surface = surface_from_dict(desc.get("surface"))
    region = region_from_dict(surface, desc.get("region"))
    phi = field_from_dict(surface, desc.get("phi"))
    return WeightedSet(surface, region, phi, float(desc.get("gamma", 1.0)),
                       dict(desc.get("mu", {"kind": "omega"})))


def load_weighted_set(src) -> WeightedSet:
    """Load a weighted set from a path, JSON string or dict."""
    if isinstance(src, dict):
        return weighted_set_from_dict(src)
    p = Path(src)
    if p.exists():
        return weighted_set_from_dict(json.loads(p.read_text()))
    try:
        desc = json.loads(src)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"config is neither a file nor JSON: {src!r}") from exc
    return weighted_set_from_dict(desc)
