import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fekete_rate import InvalidInput, discrete_energy, functional_J, functional_Km, green
from fekete_rate.fields import ConstantField, field_from_dict
from fekete_rate.geometry import (Atoms, CircleMeasure, GridDensity, geodesic_offset,
                                  quadrature_grid, random_points, sphere_to_xyz)
from fekete_rate.potentials import (NEG_INF, POS_INF, energy_I, grid_potential, is_infinite,
                                    mutual_energy, potential_of_measure, swept_energy,
                                    swept_potential, sweep_to_circle)


def _random_density(grid, rng, modes=3):
    """Smooth positive density: trigonometric on the torus, polynomial in X, Y, Z on the sphere."""
    z = grid.nodes
    f = np.ones(z.size)
    if grid.surface.kind == "sphere":
        v = sphere_to_xyz(z)
        for _ in range(modes):
            c = rng.normal(size=3)
            f += 0.3 * rng.normal() * np.cos(np.pi * (v @ c) / np.linalg.norm(c) + rng.random())
    else:
        for _ in range(modes):
            a, b = rng.integers(-3, 4, size=2)
            f += 0.3 * rng.normal() * np.cos(2 * np.pi * (a * z.real + b * z.imag) + rng.random())
    f = np.maximum(f, 0.05)
    m = f * grid.weights
    return GridDensity(grid, m / m.sum())


def test_potential_of_omega_vanishes(torus_kernel, sphere_kernel):
    g = quadrature_grid(torus_kernel.surface, 128)
    assert np.max(np.abs(grid_potential(torus_kernel, GridDensity.omega(g)).values)) < 1e-10
    # the ring grid samples the kernel at nodes: second-order error
    errs = []
    for R in (64, 128):
        g = quadrature_grid(sphere_kernel.surface, R)
        errs.append(np.max(np.abs(grid_potential(sphere_kernel, GridDensity.omega(g)).values)))
    assert errs[1] < 3e-5
    assert errs[0] / errs[1] > 3.0


def test_potential_of_atoms(torus_kernel):
    a, b = 0.1 + 0.2j, 0.6 + 0.7j
    x = np.array([0.33 + 0.4j, 0.9 + 0.05j])
    one = Atoms(torus_kernel.surface, [a], [1.0])
    two = Atoms(torus_kernel.surface, [a, b], [0.5, 0.5])
    np.testing.assert_allclose(potential_of_measure(torus_kernel, one, x), torus_kernel(a, x),
                               rtol=0, atol=1e-15)
    ref = 0.5 * (torus_kernel(a, x) + torus_kernel(b, x))
    np.testing.assert_allclose(potential_of_measure(torus_kernel, two, x), ref, atol=1e-15)
    assert potential_of_measure(torus_kernel, one, a) is NEG_INF


def test_energy_of_omega_and_atoms(torus_kernel, sphere_kernel):
    for k in (torus_kernel, sphere_kernel):
        g = quadrature_grid(k.surface, 128 if k.surface.kind == "torus" else 256)
        assert abs(energy_I(k, GridDensity.omega(g), ConstantField(k.surface, 0))) < 1e-5
        assert energy_I(k, Atoms(k.surface, [0.1], [1.0]), ConstantField(k.surface, 0)) is POS_INF
    with pytest.raises(InvalidInput):
        energy_I(torus_kernel, Atoms(torus_kernel.surface, [0.1], [0.5]),
                 ConstantField(torus_kernel.surface, 0))


def test_circle_energy_matches_double_quadrature(torus_kernel):
    T = torus_kernel.surface
    c0, r = 0.3 + 0.4j, 0.15
    circ = CircleMeasure.uniform(T, c0, r, 256)
    val = energy_I(torus_kernel, circ, ConstantField(T, 0.0))

    def pt(s):
        return complex(geodesic_offset(T, np.array([c0]), np.array([r]), np.array([s]))[0])

    def inner(s):
        f = lambda t: torus_kernel.raw(pt(s), pt(t)) if abs(t - s) > 1e-14 else 0.0
        v, _ = integrate.quad(f, 0, 2 * np.pi, points=[s], limit=200, epsabs=1e-12)
        return v

    x, w = np.polynomial.legendre.leggauss(24)
    s = np.pi * (x + 1)
    # the inner integral is a smooth periodic function of s: Gauss rule suffices
    oracle = -np.pi * np.dot(w, [inner(si) for si in s]) / (2 * np.pi) ** 2
    assert val == pytest.approx(oracle, abs=1e-4)


def test_discrete_energy_examples(torus_kernel):
    k = torus_kernel
    assert discrete_energy(k, [0, 0.5]) == pytest.approx(0.5 * green(k, 0, 0.5), abs=1e-15)
    quarter = [0, 0.5, 0.5j, 0.5 + 0.5j]
    # pair values log2/4 (four pairs) and log2/2 (two diagonals): E = log2/4
    assert discrete_energy(k, quarter) == pytest.approx(math.log(2) / 4, abs=1e-12)
    assert discrete_energy(k, [0.1, 0.2, 0.1]) is NEG_INF
    assert functional_J(k, [0.1, 0.1], ConstantField(k.surface, 0)) is POS_INF
    assert functional_Km(k, [0.1, 0.1], ConstantField(k.surface, 0)) is POS_INF
    with pytest.raises(InvalidInput):
        discrete_energy(k, [0.1])
    with pytest.raises(InvalidInput):
        functional_Km(k, [0.1], ConstantField(k.surface, 0))
    zero = ConstantField(k.surface, 0.0)
    assert functional_Km(k, [0, 0.5], zero) == pytest.approx(-green(k, 0, 0.5), abs=1e-15)


def test_functional_identities(torus_kernel, sphere_kernel):
    rng = np.random.default_rng(4)
    for k in (torus_kernel, sphere_kernel):
        phi = field_from_dict(k.surface, {"kind": "expr", "expr": "0.3*sin(x+y)" if k.surface.kind == "torus" else "0.3*Z"})
        for _ in range(50):
            m = int(rng.integers(2, 12))
            p = random_points(k.surface, m, rng)
            e = discrete_energy(k, p)
            J = functional_J(k, p, phi)
            K = functional_Km(k, p, phi)
            assert K - J == pytest.approx(-e / (m - 1), abs=1e-12)
            J0 = functional_J(k, p, ConstantField(k.surface, 0))
            Jc = functional_J(k, p, ConstantField(k.surface, 0.7))
            assert J0 == pytest.approx(-e, abs=1e-15)
            assert Jc == pytest.approx(J0 + 1.4, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 10))
def test_permutation_invariance(seed, m):
    from fekete_rate import GreenKernel, ModelSurface
    k = _KERNEL
    rng = np.random.default_rng(seed)
    p = random_points(k.surface, m, rng)
    q = p[rng.permutation(m)]
    phi = field_from_dict(k.surface, {"kind": "expr", "expr": "cos(2*pi*u)"})
    for f in (discrete_energy, lambda kk, c: functional_J(kk, c, phi),
              lambda kk, c: functional_Km(kk, c, phi)):
        assert f(k, p) == pytest.approx(f(k, q), abs=1e-12)


def test_commutation_and_negativity(torus_kernel, sphere_kernel):
    """Mutual energies commute and self energies are nonpositive."""
    rng = np.random.default_rng(9)
    for k, count in ((torus_kernel, 60), (sphere_kernel, 40)):
        g = quadrature_grid(k.surface, 48)
        for _ in range(count):
            a, b = _random_density(g, rng), _random_density(g, rng)
            assert abs(mutual_energy(k, a, b) - mutual_energy(k, b, a)) < 1e-8
            assert mutual_energy(k, a, a) <= 1e-8


def test_sweep_mass_and_uniformity(torus_kernel):
    for r in (0.02, 0.05):
        s = sweep_to_circle(torus_kernel, 0.3 + 0.2j, r)
        assert s.mass == pytest.approx(1, abs=1e-10)
        dens = s.weights * s.weights.size
        assert np.max(np.abs(dens - 1)) < 1e-3
    with pytest.raises(InvalidInput):
        sweep_to_circle(torus_kernel, 0, 0.4)


def test_sweep_potential_matches_point_potential_outside(torus_kernel, sphere_kernel):
    rng = np.random.default_rng(8)
    for k in (torus_kernel, sphere_kernel):
        p = random_points(k.surface, 1, rng)[0]
        x = random_points(k.surface, 400, rng)
        from fekete_rate.geometry import distance
        ratios = []
        for r in (0.01, 0.02, 0.04):
            far = x[distance(k.surface, x, p) >= 2 * r]
            s = sweep_to_circle(k, p, r)
            u = np.asarray(potential_of_measure(k, s, far))
            dev = np.max(np.abs(u - k(p, far)))
            ratios.append(dev / (r * r * abs(math.log(r))))
        assert max(ratios) < 2.0


def test_swept_energy_bounds_discrete_energy(torus_kernel):
    rng = np.random.default_rng(12)
    cs = []
    for _ in range(50):
        m = int(rng.integers(4, 16))
        p = random_points(torus_kernel.surface, m, rng)
        e = discrete_energy(torus_kernel, p)
        se = swept_energy(torus_kernel, p, 1.0 / m, nodes=64)
        cs.append((e - se) * m / math.log(m))
    # the fitted constant is finite and modest
    assert max(cs) < 1.0


def test_swept_potential_closed_form(torus_kernel):
    p, r = 0.4 + 0.4j, 0.05
    s = sweep_to_circle(torus_kernel, p, r)
    z = np.array([0.41 + 0.4j, 0.8 + 0.1j])
    ref = np.asarray(potential_of_measure(torus_kernel, s, z))
    np.testing.assert_allclose(swept_potential(torus_kernel, p, r, z), ref, atol=1e-6)


_KERNEL = None


@pytest.fixture(autouse=True, scope="module")
def _set_kernel(torus_kernel):
    global _KERNEL
    _KERNEL = torus_kernel
