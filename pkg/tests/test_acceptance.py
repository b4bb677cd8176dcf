"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary
(section "acceptance criteria"), whether the assertion holds or not.
"""
import json
import math
import time

import numpy as np
import pytest

import conftest
from oracles import brute_force_Km
from fekete_rate import (GreenKernel, ModelSurface, Region, ThetaContext, WeightedSet,
                         build_basis, extremal_function, minimize_Km, verify_green,
                         verify_solmin)
from fekete_rate.cli import main
from fekete_rate.fields import field_from_dict
from fekete_rate.geometry import GridDensity, quadrature_grid, random_points
from fekete_rate.harness import (rate_experiment_fekete, rate_experiment_J,
                                 rate_experiment_volume)
from fekete_rate.potentials import mutual_energy
from fekete_rate.sections import bosonization_check, random_configuration
from fekete_rate.theta import lattice_distance

pytestmark = pytest.mark.acceptance

SMOOTH = {"kind": "expr", "expr": "0.1*cos(2*pi*u) + 0.05*sin(2*pi*v)"}
HOLDER = {"kind": "holder", "center": [0.5, 0.5], "amplitude": 0.2, "exponent": 0.5}
PHIS = {"0": ({"kind": "const", "value": 0.0}, 1.0), "smooth": (SMOOTH, 1.0),
        "holder": (HOLDER, 0.5)}


def record(k, ok, detail):
    conftest.ACCEPTANCE_LINES[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(conftest.ACCEPTANCE_LINES[k])
    return ok


@pytest.fixture(scope="module")
def T():
    return ModelSurface.torus(1j)


@pytest.fixture(scope="module")
def S():
    return ModelSurface.sphere()


def _ws(surface, region, phi_desc, gamma=1.0, mu=None):
    ws = WeightedSet(surface, region, field_from_dict(surface, phi_desc), gamma)
    if mu is not None:
        ws.mu = mu
    return ws


def test_c01_green_contract(T, S):
    t0 = time.perf_counter()
    worst_mean, worst_lap, ok = 0.0, 0.0, True
    rng = np.random.default_rng(1)
    for surf in (T, S):
        k = GreenKernel(surf)
        for x in random_points(surf, 10, rng):
            r = verify_green(k, x, 512)
            worst_mean = max(worst_mean, r["mean_residual"])
            worst_lap = max(worst_lap, r["laplacian_residual"])
            ok &= r["mean_residual"] < 1e-6 and r["laplacian_residual"] < 1e-3
    secs = time.perf_counter() - t0
    ok &= secs < 30
    assert record(1, ok, f"mean residual {worst_mean:.2e}, Laplacian residual {worst_lap:.2e}, "
                         f"{secs:.1f} s")


def _random_density(grid, rng):
    z = grid.nodes
    f = np.ones(z.size)
    if grid.surface.kind == "sphere":
        from fekete_rate.geometry import sphere_to_xyz
        v = sphere_to_xyz(z)
        for _ in range(3):
            c = rng.normal(size=3)
            f += 0.3 * rng.normal() * np.cos(np.pi * (v @ c) / np.linalg.norm(c) + rng.random())
    else:
        for _ in range(3):
            a, b = rng.integers(-3, 4, size=2)
            f += 0.3 * rng.normal() * np.cos(2 * np.pi * (a * z.real + b * z.imag) + rng.random())
    m = np.maximum(f, 0.05) * grid.weights
    return GridDensity(grid, m / m.sum())


def test_c02_negativity_and_commutation(T, S):
    rng = np.random.default_rng(2)
    worst_self, worst_comm = -math.inf, 0.0
    for surf, count in ((T, 50), (S, 50)):
        k = GreenKernel(surf)
        g = quadrature_grid(surf, 48)
        for _ in range(count):
            a, b = _random_density(g, rng), _random_density(g, rng)
            worst_self = max(worst_self, mutual_energy(k, a, a))
            worst_comm = max(worst_comm, abs(mutual_energy(k, a, b) - mutual_energy(k, b, a)))
    ok = worst_self <= 1e-8 and worst_comm < 1e-8
    assert record(2, ok, f"max self energy {worst_self:.2e}, commutation {worst_comm:.2e}")


def test_c03_trivial_equilibrium(T, S):
    worst = 0.0
    for surf in (T, S):
        for c in (0.0, 0.7, -0.4):
            ws = WeightedSet.full(surf, c)
            sol = extremal_function(surf, ws, 512)
            worst = max(worst, abs(sol.min_energy - 2 * c), float(np.max(np.abs(sol.U.values - c))),
                        float(np.max(np.abs(sol.nu.masses - sol.mesh.weights))))
    assert record(3, worst < 1e-6, f"max deviation {worst:.2e}")


def test_c04_potential_identities(T):
    sets = {
        "full smooth": _ws(T, Region.full(T), SMOOTH),
        "disc complement": _ws(T, Region(T, "complement", [0.5 + 0.5j], [0.2]), {"kind": "const",
                                                                                 "value": 0.0}),
        "disc union Hoelder": _ws(T, Region(T, "union", [0.3 + 0.3j, 0.7 + 0.6j], [0.2, 0.25]),
                                  HOLDER, 0.5),
    }
    k = GreenKernel(T)
    ok, parts = True, []
    for name, ws in sets.items():
        r = [verify_solmin(k, extremal_function(T, ws, R), ws) for R in (256, 512)]
        c, g = r[1]["contact_residual"], r[1]["global_residual"]
        halv = max(c / r[0]["contact_residual"], g / r[0]["global_residual"])
        ok &= c < 1e-3 and g < 1e-3 and halv <= 0.5
        parts.append(f"{name}: {c:.1e}/{g:.1e} x{halv:.2f}")
    assert record(4, ok, "; ".join(parts))


def test_c05_sphere_bosonization(S):
    t0 = time.perf_counter()
    k = GreenKernel(S)
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in range(1, 21):
        basis = build_basis(S, n, orthonormalize=False)
        cfgs = [random_configuration(S, basis.N, rng, min_sep=0.02) for _ in range(50)]
        worst = max(worst, bosonization_check(basis, k, None, cfgs)["spread"])
    secs = time.perf_counter() - t0
    assert record(5, worst < 1e-8 and secs < 10, f"max spread {worst:.2e}, {secs:.1f} s")


def test_c06_torus_bosonization(T):
    k = GreenKernel(T)
    ctx = ThetaContext(T)
    cal = lattice_distance(T, ctx.riemann_constant(3), ctx.riemann_constant(5))
    rng = np.random.default_rng(6)
    worst = 0.0
    for n in range(1, 11):
        basis = build_basis(T, n, orthonormalize=False)
        cfgs = [random_configuration(T, n, rng, min_sep=0.02) for _ in range(50)]
        worst = max(worst, bosonization_check(basis, k, ctx, cfgs)["spread"])
    ok = worst < 1e-6 and cal < 1e-8
    assert record(6, ok, f"max spread {worst:.2e}, calibration n=3 vs 5 {cal:.1e}")


@pytest.fixture(scope="module")
def rate_j_reports(T):
    k = GreenKernel(T)
    t0 = time.perf_counter()
    reps = {}
    for rname, region in (("K=X", Region.full(T)),
                          ("disc complement", Region(T, "complement", [0j], [0.2]))):
        for pname, (desc, gamma) in PHIS.items():
            reps[(rname, pname)] = rate_experiment_J(_ws(T, region, desc, gamma), kernel=k)
    return reps, time.perf_counter() - t0


def test_c07_discrete_energy_rate(rate_j_reports):
    reps, secs = rate_j_reports
    ok = all(r.ratio <= 4 for r in reps.values()) and secs < 600
    worst = max(r.ratio for r in reps.values())
    assert record(7, ok, f"worst ratio {worst:.2f} over {len(reps)} sets, {secs:.0f} s")


def test_c08_volume_rate(T):
    mus = {"omega": None,
           "density": {"kind": "density",
                       "density": {"kind": "expr", "expr": "1 + 0.5*cos(2*pi*u)*sin(2*pi*v)"}}}
    ratios = {}
    for name, mu in mus.items():
        rep = rate_experiment_volume(_ws(T, Region.full(T), SMOOTH, mu=mu))
        ratios[name] = rep.ratio
    exact = rate_experiment_volume(WeightedSet.full(T, 0.35))
    e0 = max(exact.errors)
    ok = all(r <= 4 for r in ratios.values()) and e0 < 1e-10
    assert record(8, ok, f"ratios omega {ratios['omega']:.2f}, density {ratios['density']:.2f}; "
                         f"constant weight error {e0:.1e}")


def test_c09_fekete_rate(S):
    t0 = time.perf_counter()
    rep = rate_experiment_fekete(WeightedSet.full(S))
    secs = time.perf_counter() - t0
    ok = rep.ratio <= 4 and secs < 900
    assert record(9, ok, f"ratio {rep.ratio:.2f}, errors "
                         + ", ".join(f"{e:.1e}" for e in rep.errors) + f", {secs:.0f} s")


def test_c10_separation_band(rate_j_reports):
    reps, _ = rate_j_reports
    bands = {}
    for key, r in reps.items():
        b = [d["beta_hat"] for d in r.details]
        bands[key] = max(b) / min(b)
    worst = max(bands.values())
    assert record(10, worst <= 3, f"worst beta_hat band factor {worst:.2f} over m = 8..128")


def test_c11_small_m_oracle(T):
    k = GreenKernel(T)
    ws = _ws(T, Region.full(T), {"kind": "expr", "expr": "0.3*cos(2*pi*u) + 0.1*sin(2*pi*v)"})
    worst = 0.0
    for m, grid in ((2, 24), (3, 12)):
        oracle = brute_force_Km(k, ws, m, grid)
        worst = max(worst, abs(minimize_Km(k, ws, m, restarts=4, seed=1).value_K - oracle))
    assert record(11, worst < 1e-4, f"max deviation from exhaustive search {worst:.1e}")


CLI_RUNS = [
    ["green-check", "--points", "2", "--resolution", "64"],
    ["envelope", "--resolution", "64"],
    ["min-energy", "--resolution", "64"],
    ["minimize", "--m", "6", "--restarts", "2"],
    ["fekete", "--n", "4", "--restarts", "2"],
    ["gram", "--n", "5", "--resolution", "64"],
    ["bergman", "--n", "4", "--resolution", "64", "--bm-fit", "2,4"],
    ["boson-check", "--n", "5", "--samples", "10"],
    ["rate-j", "--m-values", "8,16", "--restarts", "1", "--resolution", "64"],
    ["rate-vol", "--n-values", "4,6", "--resolution", "64"],
    ["rate-fekete", "--n-values", "6,8", "--restarts", "1"],
]


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _artifacts(paths):
    """File contents with wall-clock timing removed."""
    out = {}
    for p in paths:
        text = p.read_text()
        if p.suffix == ".json":
            out[p.suffix] = _strip_timing(json.loads(text))
        elif p.suffix == ".csv" and text.startswith("param,"):
            # rate tables: the last column is the timing
            out[p.suffix] = [line.rsplit(",", 1)[0] for line in text.splitlines()]
        else:
            out[p.suffix] = text
    return out


def test_c12_determinism(tmp_path, capsys):
    cfg = json.dumps({"surface": {"kind": "torus", "tau": [0.1, 1.1]},
                      "region": {"kind": "complement", "centers": [[0.5, 0.5]], "radii": [0.15]},
                      "phi": SMOOTH})
    differing = []
    for args in CLI_RUNS:
        outs = []
        for rep in range(2):
            d = tmp_path / f"{args[0]}-{rep}"
            d.mkdir()
            main(args + ["--config", cfg, "--seed", "11", "--json", "--out", str(d / "out")])
            printed = _strip_timing(json.loads(capsys.readouterr().out))
            outs.append((printed, _artifacts(sorted(d.iterdir()))))
        if outs[0] != outs[1]:
            differing.append(args[0])
    ok = not differing
    assert record(12, ok, f"{len(CLI_RUNS)} subcommands re-run; differing: {differing or 'none'}")
