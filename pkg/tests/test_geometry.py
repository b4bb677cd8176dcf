import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fekete_rate import InvalidInput, ModelSurface, Region, distance, quadrature_grid
from fekete_rate.geometry import (CircleMeasure, GridDensity, reduce_point, lattice_coords,
                                  random_points)
from oracles import sphere_cap_mass

coord = st.floats(-3, 3, allow_nan=False)
taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.6, 2.0))


def test_torus_distances(torus):
    assert distance(torus, 0, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert distance(torus, 0, 0.5 + 0.5j) == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_sphere_pole_distance(sphere):
    assert distance(sphere, 0, complex(np.inf, 0)) == pytest.approx(math.sqrt(math.pi) / 2,
                                                                     abs=1e-14)


def test_sphere_meridian_distance_by_quadrature(sphere):
    # meridian arc length, ds = |dz| / (sqrt(pi) (1 + |z|^2))
    from scipy import integrate
    r = 2.7
    L, _ = integrate.quad(lambda t: 1 / (math.sqrt(math.pi) * (1 + t * t)), 0, r)
    assert distance(sphere, 0, r) == pytest.approx(L, abs=1e-12)


def test_surface_validation():
    with pytest.raises(InvalidInput):
        ModelSurface.torus(1 - 0.5j)
    with pytest.raises(InvalidInput):
        ModelSurface("plane")


def test_quadrature_grid_sizes(torus, sphere):
    g = quadrature_grid(torus, 64)
    assert g.size == 4096
    np.testing.assert_allclose(g.weights, 1 / 4096, rtol=1e-14)
    for s in (torus, sphere):
        w = quadrature_grid(s, 128).weights
        assert np.all(w > 0)
        assert abs(w.sum() - 1) < 1e-12
    with pytest.raises(InvalidInput):
        quadrature_grid(torus, 8)


def test_sphere_antisymmetric_integral(sphere):
    g = quadrature_grid(sphere, 128)
    z = g.nodes
    f = np.where(np.isfinite(z), (z.real / (1 + np.abs(z) ** 2)), 0.0)
    assert abs(g.integrate(np.nan_to_num(f))) < 1e-6


def test_torus_quadrature_order(torus):
    rng = np.random.default_rng(1)
    slopes = []
    for _ in range(20):
        c = rng.normal(size=3)
        a, b = rng.integers(1, 4, size=2)
        # periodic fields, the last one only C^2
        f = lambda z: (c[0] * np.cos(2 * np.pi * a * z.real) ** 2
                       + c[1] * np.exp(np.sin(2 * np.pi * b * z.imag))
                       + c[2] * np.abs(np.sin(np.pi * (z.real - 0.37))) ** 3)
        errs = []
        ref = quadrature_grid(torus, 1024).integrate(f(quadrature_grid(torus, 1024).nodes))
        for R in (16, 32, 64):
            g = quadrature_grid(torus, R)
            errs.append(abs(g.integrate(f(g.nodes)) - ref))
        slopes.append(np.polyfit(np.log([16, 32, 64]), np.log(np.maximum(errs, 1e-16)), 1)[0])
    assert max(slopes) <= -1.8


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, coord, coord, taus)
def test_torus_metric_axioms(a, b, c, d, e, f, tau):
    T = ModelSurface.torus(tau)
    x, y, z = complex(a, b), complex(c, d), complex(e, f)
    dxy, dyx = distance(T, x, y), distance(T, y, x)
    assert dxy == pytest.approx(dyx, abs=1e-12)
    assert dxy >= 0
    assert distance(T, x, x) == 0
    assert distance(T, x, z) <= dxy + distance(T, y, z) + 1e-12


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, coord, coord)
def test_sphere_metric_axioms(a, b, c, d, e, f):
    S = ModelSurface.sphere()
    x, y, z = complex(a, b), complex(c, d), complex(e, f)
    assert distance(S, x, y) == pytest.approx(distance(S, y, x), abs=1e-12)
    assert distance(S, x, z) <= distance(S, x, y) + distance(S, y, z) + 1e-12


def test_metric_axioms_bulk(torus, sphere):
    rng = np.random.default_rng(0)
    for s in (torus, sphere):
        x, y, z = (random_points(s, 1000, rng) for _ in range(3))
        assert np.max(np.abs(distance(s, x, y) - distance(s, y, x))) <= 1e-12
        assert np.all(distance(s, x, z) <= distance(s, x, y) + distance(s, y, z) + 1e-12)


@settings(max_examples=100, deadline=None)
@given(coord, coord, taus)
def test_reduce_point_canonical(a, b, tau):
    T = ModelSurface.torus(tau)
    z = reduce_point(T, complex(a, b))
    u, v = lattice_coords(T, z)
    assert 0 <= u < 1 and 0 <= v < 1
    assert distance(T, z, complex(a, b)) < 1e-9
    assert reduce_point(T, z) == z


def test_region_membership(torus):
    R = Region(torus, "union", [0j], [0.2])
    assert R.contains(0.1)
    assert not R.contains(0.5)
    assert Region.full(torus).contains(0.37 + 0.2j)
    C = Region(torus, "complement", [0j], [0.2])
    assert C.contains(0.2)  # boundary belongs to K
    assert not C.contains(0.1)


def test_region_mask_idempotent(torus, sphere):
    for s in (torus, sphere):
        g = quadrature_grid(s, 64)
        R = Region(s, "complement", [0.3 + 0.1j], [0.25])
        m1 = R.mask(g)
        m2 = Region(s, "complement", [0.3 + 0.1j], [0.25]).mask(g)
        assert np.array_equal(m1, m2)


def test_region_validation(torus):
    with pytest.raises(InvalidInput):
        Region(torus, "union", [0j], [-0.1])
    with pytest.raises(InvalidInput):
        Region(torus, "blob")


def test_measures_normalized(torus, sphere):
    g = quadrature_grid(torus, 64)
    assert GridDensity.omega(g).mass == pytest.approx(1, abs=1e-12)
    c = CircleMeasure.uniform(sphere, 0.2 + 0.1j, 0.3)
    assert c.mass == pytest.approx(1, abs=1e-12)
    # circle nodes sit at the requested metric radius
    np.testing.assert_allclose(distance(sphere, c.points, c.center), 0.3, atol=1e-10)


def test_sphere_cap_areas(sphere):
    g = quadrature_grid(sphere, 256)
    for r in (0.2, 0.5, 0.8):
        R = Region(sphere, "union", [0j], [r])
        assert R.area(256) == pytest.approx(sphere_cap_mass(r), abs=5e-3)
