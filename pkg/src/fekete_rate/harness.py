"""Rate experiments: discrete energies, ball volumes and Fekete moments.

Each experiment measures an error ``e(p)`` over increasing parameters ``p``
and the normalized statistic ``s(p) = e(p) / rate(p)``.  It passes when
``max s / min s <= 4``, which tests the rate without assuming a constant.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, backend
from .config import WeightedSet
from .envelope import extremal_function
from .errors import ConditioningError, InvalidInput
from .fields import field_from_dict
from .green import GreenKernel
from .optimizer import minimize_Km
from .sections import build_basis, fekete_configuration
from .volume import gram_matrix, mass_density_check

RATIO_BOUND = 4.0


def git_hash(blob: bytes) -> str:
    """Git blob hash (SHA-1 of ``"blob <size>\\0" + blob``)."""
    return hashlib.sha1(b"blob %d\0" % len(blob) + blob).hexdigest()


def config_hash(weighted_set: WeightedSet) -> str:
    return git_hash(json.dumps(weighted_set.describe(), sort_keys=True).encode())


def derived_seed(seed: int, param: int) -> int:
    """Per-parameter seed, a deterministic function of the master seed."""
    return int(np.random.SeedSequence([int(seed), int(param)]).generate_state(1)[0])


def log_rate(p: float) -> float:
    return math.log(p) / p


def sqrt_log_rate(p: float) -> float:
    return math.sqrt(math.log(p) / p)


@dataclass
class RateReport:
    """Outcome of a rate experiment.

    ``statistic[i] = errors[i] / rate(params[i])``; ``fitted_constant`` is
    the largest statistic, the smallest ``C`` with ``e <= C rate`` on the
    sampled range.
    """

    experiment: str
    params: list
    errors: list
    statistic: list
    fitted_constant: float
    ratio: float
    passed: bool
    seconds: list
    reference: float | None = None
    details: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "error", "statistic", "seconds"])
        for row in zip(self.params, self.errors, self.statistic, self.seconds):
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
        return buf.getvalue()

    def to_dat(self) -> str:
        """Gnuplot data: ``log p``, ``log e``, ``s`` per line."""
        lines = [f"# {self.experiment}: log(param) log(error) statistic"]
        for p, e, s in zip(self.params, self.errors, self.statistic):
            le = math.log(e) if e > 0 else float("-inf")
            lines.append(f"{math.log(p):.17g} {le:.17g} {s:.17g}")
        return "\n".join(lines) + "\n"


def write_report(report: RateReport, out) -> list:
    """Write ``<stem>.json``, ``<stem>.csv`` and ``<stem>.dat``; returns the paths."""
    stem = Path(out)
    if stem.suffix in (".json", ".csv", ".dat"):
        stem = stem.with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for ext, text in ((".json", report.to_json()), (".csv", report.to_csv()),
                      (".dat", report.to_dat())):
        p = stem.with_suffix(ext)
        p.write_text(text)
        paths.append(str(p))
    return paths


def _check_params(values, lo, hi, what):
    values = [int(v) for v in values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidInput(f"{what} must be strictly increasing")
    if values[0] < lo or values[-1] > hi:
        raise InvalidInput(f"{what} must lie in [{lo}, {hi}]")
    return values


def _finish(name, params, errors, rate, seconds, reference, details, provenance):
    stat = [e / rate(p) for p, e in zip(params, errors)]
    lo = min(stat)
    ratio = max(stat) / lo if lo > 0 else math.inf
    return RateReport(name, list(params), [float(e) for e in errors], stat, float(max(stat)),
                      float(ratio), bool(ratio <= RATIO_BOUND), seconds, reference, details,
                      provenance)


def _provenance(weighted_set, seed, **resolutions) -> dict:
    return {"seed": seed, "config_hash": config_hash(weighted_set),
            "config": weighted_set.describe(), "backend": backend.NAME,
            "version": __version__, **resolutions}


def rate_experiment_J(weighted_set: WeightedSet, m_values=(8, 16, 32, 64, 128), seed: int = 0,
                      restarts: int = 4, envelope_resolution: int = 512,
                      kernel: GreenKernel | None = None) -> RateReport:
    """``e(m) = |J_{m,phi}(f_m) - min I_phi|`` for minimizers ``f_m`` of ``K_{m,phi}``."""
    m_values = _check_params(m_values, 8, 256, "m_values")
    surface = weighted_set.surface
    kernel = GreenKernel(surface) if kernel is None else kernel
    emin = extremal_function(surface, weighted_set, envelope_resolution).min_energy
    errors, secs, details = [], [], []
    for m in m_values:
        res = minimize_Km(kernel, weighted_set, m, restarts=restarts, seed=derived_seed(seed, m))
        errors.append(abs(res.value_J - emin))
        secs.append(res.seconds)
        details.append({"m": m, "value_J": res.value_J, "value_K": res.value_K,
                        "beta_hat": res.beta_hat, "min_separation": res.min_separation,
                        "coord_optimality_residual": res.coord_optimality_residual,
                        "restart_values": res.restart_values})
    prov = _provenance(weighted_set, seed, envelope_resolution=envelope_resolution,
                       restarts=restarts)
    return _finish("rate-j", m_values, errors, log_rate, secs, emin, details, prov)


def rate_experiment_volume(weighted_set: WeightedSet, n_values=(4, 6, 8, 12, 16, 24),
                           resolution: int = 256, envelope_resolution: int = 512,
                           density_samples: int = 16, seed: int = 0) -> RateReport:
    """``e(n) = |L_diff(n) + min I_phi|`` with ``L_diff`` from Gram determinants.

    When ``mu`` is not ``omega`` the mass-density condition is checked first
    and a failure raises :class:`InvalidInput`.
    """
    n_values = _check_params(n_values, 4, 24, "n_values")
    surface = weighted_set.surface
    details = []
    if weighted_set.mu.get("kind", "omega") != "omega" or weighted_set.region.kind != "full":
        md = mass_density_check(weighted_set.mu_measure(resolution), weighted_set.region,
                                density_samples, seed=seed)
        if not md["pass"]:
            raise InvalidInput("mu fails the mass-density check")
        details.append({"mass_density": {k: md[k] for k in ("c_hat", "tau_hat", "pass")}})
    emin = extremal_function(surface, weighted_set, envelope_resolution).min_energy
    errors, secs = [], []
    for n in n_values:
        t0 = time.perf_counter()
        rep = gram_matrix(build_basis(surface, n), weighted_set, n, resolution)
        if not math.isfinite(float(rep.L_diff)):
            raise ConditioningError(f"Gram matrix singular at n = {n}",
                                    condition=rep.condition)
        errors.append(abs(float(rep.L_diff) + emin))
        secs.append(time.perf_counter() - t0)
        details.append({"n": n, "L_diff": float(rep.L_diff), "condition": rep.condition})
    prov = _provenance(weighted_set, seed, resolution=resolution,
                       envelope_resolution=envelope_resolution)
    return _finish("rate-vol", n_values, errors, log_rate, secs, emin, details, prov)


SPHERE_TEST_FUNCTIONS = (
    {"kind": "expr", "expr": "Z"},
    {"kind": "expr", "expr": "X*Y + 0.5*Z**2"},
    {"kind": "expr", "expr": "clip(X + 0.3, 0, None)**3"},
)
TORUS_TEST_FUNCTIONS = (
    {"kind": "expr", "expr": "cos(2*pi*u)"},
    {"kind": "expr", "expr": "sin(2*pi*u)*cos(2*pi*v)"},
    {"kind": "expr", "expr": "dist(0.5, 0.5)**3"},
)


def rate_experiment_fekete(weighted_set: WeightedSet, n_values=(8, 12, 16, 24, 32),
                           test_functions=None, seed: int = 0, restarts: int = 2,
                           envelope_resolution: int = 256) -> RateReport:
    """``e(n) = max_psi |int psi d delta_{F_n} - int psi d nu_{K,phi}|``.

    ``F_n`` is a computed Fekete configuration of degree ``n`` and
    ``delta_{F_n}`` its empirical measure; the statistic divides by
    ``sqrt(log n / n)``.  Test functions are field descriptors (default: three
    fixed C^2 functions per surface) and enter linearly, so scaling a test
    function scales its error.
    """
    n_values = _check_params(n_values, 6, 32, "n_values")
    surface = weighted_set.surface
    if test_functions is None:
        test_functions = SPHERE_TEST_FUNCTIONS if surface.kind == "sphere" else TORUS_TEST_FUNCTIONS
    psis = [field_from_dict(surface, d) for d in test_functions]
    sol = extremal_function(surface, weighted_set, envelope_resolution)
    nodes = sol.nu.grid.nodes
    ref = [float(sol.nu.integrate(np.asarray(psi(nodes), float))) for psi in psis]
    errors, secs, details = [], [], []
    for n in n_values:
        t0 = time.perf_counter()
        res = fekete_configuration(build_basis(surface, n), weighted_set, restarts=restarts,
                                   seed=derived_seed(seed, n))
        pts = res.config.points
        errs = [abs(float(np.mean(psi(pts))) - r) for psi, r in zip(psis, ref)]
        errors.append(max(errs))
        secs.append(time.perf_counter() - t0)
        details.append({"n": n, "N": int(pts.size), "moment_errors": errs,
                        "log_value": res.log_value,
                        "stationarity_residual": res.stationarity_residual})
    prov = _provenance(weighted_set, seed, envelope_resolution=envelope_resolution,
                       restarts=restarts, test_functions=[dict(d) for d in test_functions])
    return _finish("rate-fekete", n_values, errors, sqrt_log_rate, secs, None, details, prov)
