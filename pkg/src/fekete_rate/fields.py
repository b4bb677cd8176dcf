"""Weight fields ``phi`` on model surfaces and their Hoelder norms.

Every field is a vectorized callable on surface points with a JSON
description, so weighted sets can be serialized and hashed.
"""
from __future__ import annotations

import ast

import numpy as np

from .errors import InvalidInput
from .geometry import (GridField, ModelSurface, as_points, distance, geodesic_offset,
                       lattice_coords, quadrature_grid, random_points, sphere_to_xyz)


class Field:
    """Base class; subclasses implement ``__call__`` and ``describe``."""

    surface: ModelSurface

    def __call__(self, z) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def __add__(self, other):
        return SumField(self.surface, [self, other])


class ConstantField(Field):
    def __init__(self, surface: ModelSurface, value: float = 0.0):
        self.surface = surface
        self.value = float(value)

    def __call__(self, z):
        return np.full(np.shape(z), self.value)

    def describe(self):
        return {"kind": "const", "value": self.value}


class FourierField(Field):
    """Torus field ``sum a cos(2 pi (kx u + ky v)) + b sin(...)``.

    ``(u, v)`` are the coordinates in the basis ``(1, tau)``, so every term is
    doubly periodic.
    """

    def __init__(self, surface: ModelSurface, terms):
        if surface.kind != "torus":
            raise InvalidInput("Fourier fields are defined on tori only")
        self.surface = surface
        self.terms = np.atleast_2d(np.asarray(terms, float))
        if self.terms.shape[1] != 4:
            raise InvalidInput("Fourier terms are rows (kx, ky, a, b)")
        if np.any(self.terms[:, :2] != np.round(self.terms[:, :2])):
            raise InvalidInput("Fourier frequencies must be integers")

    def __call__(self, z):
        u, v = lattice_coords(self.surface, as_points(self.surface, z))
        out = np.zeros(np.shape(u))
        for kx, ky, a, b in self.terms:
            arg = 2 * np.pi * (kx * u + ky * v)
            out = out + a * np.cos(arg) + b * np.sin(arg)
        return out

    def describe(self):
        return {"kind": "fourier", "terms": self.terms.tolist()}


class HolderField(Field):
    """``amplitude * dist(z, center) ** exponent + offset``.

    The exponent is the Hoelder exponent of the field at ``center``.
    """

    def __init__(self, surface, center, amplitude=1.0, exponent=0.5, offset=0.0):
        if not 0 < exponent <= 1:
            raise InvalidInput("Hoelder exponent must lie in (0, 1]")
        self.surface = surface
        self.center = complex(as_points(surface, center))
        self.amplitude = float(amplitude)
        self.exponent = float(exponent)
        self.offset = float(offset)

    def __call__(self, z):
        d = distance(self.surface, as_points(self.surface, z), self.center)
        return self.amplitude * np.asarray(d) ** self.exponent + self.offset

    def describe(self):
        return {"kind": "holder", "center": [self.center.real, self.center.imag],
                "amplitude": self.amplitude, "exponent": self.exponent,
                "offset": self.offset}


_SAFE_FUNCS = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "arctan2", "minimum", "maximum",
    "where", "sinh", "cosh", "tanh", "arcsin", "arccos", "arctan", "clip")}


class ExprField(Field):
    """Field given by an arithmetic expression.

    Variables: torus ``u, v`` (lattice coordinates, period 1) and ``x, y``
    (chart coordinates); sphere ``X, Y, Z`` (unit vector, ``Z = 1`` at
    infinity).  ``pi`` and the numpy functions in ``_SAFE_FUNCS`` are
    available, plus ``dist(cx, cy)``, the metric distance to ``cx + i cy``.
    Torus expressions should be periodic in ``u, v``; this is not checked.
    """

    _ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
                ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub,
                ast.UAdd, ast.Compare, ast.Lt, ast.Gt, ast.LtE, ast.GtE, ast.Mod)

    def __init__(self, surface: ModelSurface, expr: str):
        self.surface = surface
        self.expr = str(expr)
        tree = ast.parse(self.expr, mode="eval")
        names = set(_SAFE_FUNCS) | {"pi", "dist", "u", "v", "x", "y", "X", "Y", "Z"}
        for node in ast.walk(tree):
            if not isinstance(node, self._ALLOWED):
                raise InvalidInput(f"disallowed syntax in expression: {type(node).__name__}")
            if isinstance(node, ast.Name) and node.id not in names:
                raise InvalidInput(f"unknown name {node.id!r} in expression")
        self._code = compile(tree, "<phi>", "eval")

    def __call__(self, z):
        z = as_points(self.surface, z)
        env = dict(_SAFE_FUNCS)
        env["pi"] = np.pi
        env["dist"] = lambda cx, cy: distance(self.surface, z, complex(cx, cy))
        if self.surface.kind == "torus":
            u, v = lattice_coords(self.surface, z)
            env.update(u=u, v=v, x=z.real, y=z.imag)
        else:
            xyz = sphere_to_xyz(z)
            env.update(X=xyz[..., 0], Y=xyz[..., 1], Z=xyz[..., 2])
        out = eval(self._code, {"__builtins__": {}}, env)  # noqa: S307 - names whitelisted
        return np.broadcast_to(np.asarray(out, float), z.shape).copy()

    def describe(self):
        return {"kind": "expr", "expr": self.expr}


class GridValuesField(Field):
    """Interpolated samples on a quadrature grid or mesh."""

    def __init__(self, grid, values):
        self.surface = grid.surface
        self.field = GridField(grid, values)

    def __call__(self, z):
        return self.field(z)

    def describe(self):
        g = self.field.grid
        return {"kind": "grid", "layout": g.layout, "resolution": g.resolution,
                "shape": list(g.shape), "values": self.field.values.tolist()}


class SumField(Field):
    def __init__(self, surface, parts):
        self.surface = surface
        self.parts = list(parts)

    def __call__(self, z):
        out = 0.0
        for p in self.parts:
            out = out + p(z)
        return out

    def describe(self):
        return {"kind": "sum", "terms": [p.describe() for p in self.parts]}


class ScaledField(Field):
    def __init__(self, field: Field, factor: float):
        self.surface = field.surface
        self.base = field
        self.factor = float(factor)

    def __call__(self, z):
        return self.factor * self.base(z)

    def describe(self):
        return {"kind": "scaled", "factor": self.factor, "field": self.base.describe()}


def field_from_dict(surface: ModelSurface, desc) -> Field:
    """Build a field from its JSON description."""
    if desc is None:
        return ConstantField(surface, 0.0)
    if isinstance(desc, (int, float)):
        return ConstantField(surface, float(desc))
    kind = desc.get("kind")
    if kind == "const":
        return ConstantField(surface, desc.get("value", 0.0))
    if kind == "fourier":
        return FourierField(surface, desc["terms"])
    if kind == "holder":
        c = desc.get("center", [0.0, 0.0])
        return HolderField(surface, complex(c[0], c[1]), desc.get("amplitude", 1.0),
                           desc.get("exponent", 0.5), desc.get("offset", 0.0))
    if kind == "expr":
        return ExprField(surface, desc["expr"])
    if kind == "grid":
        from .mesh import build_mesh
        res = int(desc["resolution"])
        grid = build_mesh(surface, res) if desc.get("mesh", True) else quadrature_grid(surface, res)
        vals = desc["values"]
        if isinstance(vals, str):
            vals = np.load(vals)
        return GridValuesField(grid, vals)
    if kind == "sum":
        return SumField(surface, [field_from_dict(surface, d) for d in desc["terms"]])
    if kind == "scaled":
        return ScaledField(field_from_dict(surface, desc["field"]), desc["factor"])
    raise InvalidInput(f"unknown field kind {kind!r}")


def holder_norm(field: Field, gamma: float, samples: int = 4000, seed: int = 0,
                resolution: int = 128) -> float:
    """Estimate ``||phi||_{C^gamma} = sup|phi| + sup |phi(x) - phi(y)| / dist^gamma``.

    The seminorm is sampled over random base points and dyadic distances
    ``2^-1 .. 2^-12``.
    """
    surface = field.surface
    grid = quadrature_grid(surface, resolution)
    sup = float(np.max(np.abs(field(grid.nodes))))
    rng = np.random.default_rng(seed)
    x = random_points(surface, samples, rng)
    best = 0.0
    for k in range(1, 13):
        r = 2.0 ** (-k) * 0.5
        y = geodesic_offset(surface, x, np.full(samples, r), rng.uniform(0, 2 * np.pi, samples))
        d = distance(surface, x, y)
        q = np.abs(field(x) - field(y)) / d ** gamma
        best = max(best, float(np.max(q)))
    return sup + best
