import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fekete_rate import GreenKernel, ModelSurface, PoleError, green, verify_green
from fekete_rate.geometry import distance, random_points, sphere_to_xyz
from fekete_rate.green import dedekind_eta_log_abs
from oracles import ewald_torus_green

# frozen from the theta-series evaluation; the Ewald lattice sum agrees to 1e-15
G_TORUS_HALF = 0.17328679513998646


def test_torus_regression_value(torus_kernel):
    assert green(torus_kernel, 0, 0.5) == pytest.approx(G_TORUS_HALF, abs=1e-12)
    # symmetric points of the square torus: exact values log2/4 and log2/2
    assert green(torus_kernel, 0, 0.5) == pytest.approx(math.log(2) / 4, abs=1e-12)
    assert green(torus_kernel, 0, 0.5 + 0.5j) == pytest.approx(math.log(2) / 2, abs=1e-12)


@pytest.mark.parametrize("tau", [1j, 0.3 + 1.2j, -0.45 + 0.8j, 2.5j])
def test_torus_matches_lattice_sum(tau):
    T = ModelSurface.torus(tau)
    k = GreenKernel(T)
    rng = np.random.default_rng(7)
    for x in random_points(T, 6, rng):
        assert k(0, x) == pytest.approx(ewald_torus_green(tau, complex(x)), abs=1e-8)


def test_sphere_normalization_constant(sphere_kernel):
    # int log chordal(x, .) omega = -1/2 on the unit-area sphere
    assert sphere_kernel.c0 == pytest.approx(0.5, abs=1e-8)


def test_symmetry(torus_kernel, sphere_kernel):
    rng = np.random.default_rng(3)
    for k in (torus_kernel, sphere_kernel):
        x = random_points(k.surface, 100, rng)
        y = random_points(k.surface, 100, rng)
        assert np.max(np.abs(k(x, y) - k(y, x))) <= 1e-12


def test_pole(torus_kernel, sphere_kernel):
    with pytest.raises(PoleError):
        torus_kernel(0.3, 0.3)
    with pytest.raises(PoleError):
        sphere_kernel(complex(np.inf, 0), complex(np.inf, 0))


def test_zero_mean_and_laplacian(torus_kernel, sphere_kernel):
    rng = np.random.default_rng(11)
    for k in (torus_kernel, sphere_kernel):
        for x in random_points(k.surface, 2, rng):
            r = verify_green(k, x, 512)
            assert r["mean_residual"] < 1e-6
            assert r["laplacian_residual"] < 1e-3
            assert r["pass"]


def test_remainder_bounded_and_pole_limit(torus_kernel, sphere_kernel):
    rng = np.random.default_rng(5)
    for k in (torus_kernel, sphere_kernel):
        x = random_points(k.surface, 500, rng)
        y = random_points(k.surface, 500, rng)
        rem = k.remainder(x, y)
        assert np.all(np.isfinite(rem)) and np.max(np.abs(rem)) < 5
        z = x[0]
        near = k.remainder(z, z + 1e-6)
        assert near == pytest.approx(k.remainder_at_pole(), abs=1e-5)


def test_eta_value():
    # |eta(i)| = Gamma(1/4) / (2 pi^{3/4})
    ref = math.log(math.gamma(0.25) / (2 * math.pi ** 0.75))
    assert dedekind_eta_log_abs(1j) == pytest.approx(ref, abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_torus_gradient_matches_finite_differences(a, b, c, d):
    T = ModelSurface.torus(0.2 + 1.1j)
    k = GreenKernel(T)
    x = complex(a, b * 1.1)
    y = x + complex(c - 0.5, (d - 0.5) * 1.1)
    if distance(T, x, y) < 0.05:
        return
    h = 1e-6
    fd = ((k.raw(x + h, y) - k.raw(x - h, y)) + 1j * (k.raw(x + 1j * h, y) - k.raw(x - 1j * h, y))) / (2 * h)
    assert abs(k.grad_x(x, y) - fd) < 1e-6


def test_sphere_gradient_matches_finite_differences(sphere_kernel):
    rng = np.random.default_rng(2)
    X = sphere_to_xyz(random_points(sphere_kernel.surface, 5, rng))
    Y = sphere_to_xyz(random_points(sphere_kernel.surface, 5, rng))
    g = sphere_kernel.grad_x(X, Y)
    h = 1e-6
    for i in range(5):
        t = np.cross(X[i], [0.3, -0.2, 0.9])
        t /= np.linalg.norm(t)
        f = lambda s: 0.5 * np.log(np.sum((X[i] * np.cos(s) + t * np.sin(s) - Y[i]) ** 2))
        fd = (f(h) - f(-h)) / (2 * h)
        assert np.dot(g[i], t) == pytest.approx(fd, abs=1e-6)
