"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -v tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import contextlib
import io
import math
import time
from pathlib import Path

import jax.numpy as jnp
import numpy as np
import pytest

from gaugeflow import ConfigError, so3, u1
from gaugeflow.cli import main
from gaugeflow.config import parse_config, serialize_config
from gaugeflow.dynamics import (
    covariant_residuals,
    crosscheck,
    diagnose,
    gauge_covariance_check,
    integrate,
    integrate_model,
)
from gaugeflow.gauge import constant_gauge_map, exp_gauge_map, zero_potential
from gaugeflow.identities import verify_identities
from gaugeflow.internal import coadjoint_sphere_chart
from gaugeflow.quantization import (
    dirac_condition,
    euler_lagrange_residual,
    flux_quantization_check,
    orbit_cycle,
    sternberg_two_form,
)
from gaugeflow.scenarios import build_scenario, builtin_config, list_builtins

pytestmark = pytest.mark.acceptance

MALFORMED = sorted((Path(__file__).parent / "data" / "malformed").glob("*.cfg"))


class Criterion:
    """Collects checks for one criterion and reports them on one line."""

    def __init__(self, number, limit=None):
        self.number, self.limit = number, limit
        self.checks = []
        self.start = time.perf_counter()

    def check(self, label, value, ok):
        self.checks.append((label, value, bool(ok)))

    def finish(self, capsys=None):
        elapsed = time.perf_counter() - self.start
        if self.limit is not None:
            self.check("runtime_s", elapsed, elapsed < self.limit)
        passed = all(ok for _, _, ok in self.checks)
        detail = "; ".join(f"{label}={_fmt(v)}{'' if ok else ' (fail)'}" for label, v, ok in self.checks)
        line = f"criterion {self.number}: {'PASS' if passed else 'FAIL'}  {detail}"
        if capsys is None:
            print(line)
        else:
            with capsys.disabled():
                print("\n" + line)
        assert passed, line


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(v)
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def energy_drift(traj, energy):
    e = np.array([energy(y) for y in traj.states])
    return float(np.max(np.abs(e - e[0])))


def criterion_1_identities():
    c = Criterion(1, limit=10.0)
    scn = build_scenario(builtin_config("wong_su2"))
    results = {r.name: r for r in verify_identities(scn.model, samples=100, seed=0, q_center=scn.y0[:3])}
    limits = {"kappa_symplectomorphism": 1e-10, "moment_contraction": 1e-8, "moment_equivariance": 1e-8}
    for name, r in results.items():
        tol = limits.get(name, 1e-6)
        c.check(name, r.residual, r.residual <= tol and r.samples >= 100)
    c.check("count", len(results), len(results) == 16)
    return c


def criterion_2_lorentz():
    c = Criterion(2, limit=5.0)
    scn = build_scenario(builtin_config("lorentz"))
    traj = integrate_model(scn.model, scn.y0, scn.t_span, 1e-3)
    # v_y = -sin(2t) for this start; upward zero crossings are a period apart
    t, vy = traj.times, traj.states[:, 4]
    idx = np.nonzero((vy[:-1] < 0) & (vy[1:] >= 0))[0]
    crossings = []
    for i in idx:
        # cubic interpolation through four neighbouring samples
        sl = slice(max(i - 1, 0), i + 3)
        poly = np.polynomial.Polynomial.fit(t[sl], vy[sl], 3)
        roots = [r.real for r in poly.roots() if abs(r.imag) < 1e-12 and t[i] <= r.real <= t[i + 1]]
        crossings.append(roots[0])
    period = float(np.mean(np.diff(crossings)))
    expected = 2 * math.pi / (1.0 * 2.0)
    rel = abs(period - expected) / expected
    c.check("crossings", len(crossings), len(crossings) >= 2)
    c.check("period_rel_err", rel, rel <= 1e-6)
    return c


def criterion_3_dirac_monopole():
    c = Criterion(3, limit=10.0)
    scn = build_scenario(builtin_config("dirac_monopole"))
    traj = integrate_model(scn.model, scn.y0, (0.0, 10.0), 1e-3)
    q_e, q_m = 1.0, 0.5
    r, v = traj.q, traj.second
    J = np.cross(r, v) - q_e * q_m * r / np.linalg.norm(r, axis=1)[:, None]
    drift = np.max(np.abs(J - J[0]), axis=0)
    for i, d in enumerate(drift):
        c.check(f"J{i + 1}_drift", float(d), d < 1e-7)
    two_form, cycle = scn.cycle()
    flux = flux_quantization_check(two_form, cycle).flux_over_2pi
    c.check("flux_err", abs(flux - 2 * q_e * q_m), abs(flux - 2 * q_e * q_m) <= 1e-3)
    grid = {0.0: True, 0.25: False, 0.3: False, 0.5: True, 1.0: True}
    agree = all(dirac_condition(1.0, g) is want for g, want in grid.items())
    agree &= all(((2 * g) % 1 == 0) is dirac_condition(1.0, g) for g in grid)
    c.check("dirac_grid", agree, agree)
    return c


def criterion_4_wong():
    c = Criterion(4, limit=20.0)
    scn = build_scenario(builtin_config("wong_su2"))
    diff, lag, ham = crosscheck(scn.model, scn.y0, (0.0, 5.0), scn.dt)
    c.check("q_sup_diff", diff, diff <= 1e-6)
    phi = np.linalg.norm(np.array([scn.model.space.moment(z) for z in lag.z[::50]]), axis=1)
    cas = float(np.max(np.abs(phi - phi[0])))
    c.check("casimir_drift", cas, cas <= 1e-12)
    rng = np.random.default_rng(7)
    ys = np.concatenate([rng.uniform(-1, 1, (100, 3)), rng.normal(size=(100, 3)),
                         np.stack([rng.uniform(0, 2 * np.pi, 100), rng.uniform(-0.9, 0.9, 100)], axis=1)], axis=1)
    cov = float(np.max(covariant_residuals(scn.model.space, scn.model.chart, scn.model.lagrangian, ys)))
    c.check("covariant_residual", cov, cov <= 1e-7)
    kin = 0.5 * np.sum(lag.second ** 2, axis=1)
    kd = float(np.max(np.abs(kin - kin[0])))
    c.check("kinetic_drift", kd, kd <= 1e-8)
    return c


def _bisect(f, a, b, tol=1e-14):
    fa = f(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return 0.5 * (a + b)


def criterion_5_magnetized_kepler():
    c = Criterion(5, limit=10.0)
    scn = build_scenario(builtin_config("magnetized_kepler"))
    mu = 1.0
    x0 = np.asarray(scn.model.to_hamiltonian(scn.y0))
    traj = integrate_model(scn.model, x0, (0.0, 10.0), 1e-3, formulation="hamiltonian")
    q, p = traj.q, traj.second
    r = np.linalg.norm(q, axis=1)
    H = 0.5 * np.sum(p ** 2, axis=1) - 1.0 / r + 0.5 * mu ** 2 / r ** 2
    hd = float(np.max(np.abs(H - H[0])))
    c.check("H_drift", hd, hd <= 1e-7)
    # radial reduction: |r x v|^2 is constant, the monopole only adds the centrifugal mu^2 term
    ell2 = float(np.sum(np.cross(scn.y0[:3], scn.y0[3:6]) ** 2))
    r_star = _bisect(lambda s: 1.0 / s ** 2 - (ell2 + mu ** 2) / s ** 3, 0.1, 50.0)
    rerr = float(np.max(np.abs(r - r_star)))
    c.check("radius_err", rerr, rerr <= 1e-6)
    space = coadjoint_sphere_chart(mu)
    flux = flux_quantization_check(sternberg_two_form(space, zero_potential(so3(), 3)),
                                   orbit_cycle(space, mu, q0=np.zeros(3), level=4)).flux_over_2pi
    c.check("orbit_flux_err", abs(flux - 2 * mu), abs(flux - 2 * mu) <= 1e-3)
    two_form, cycle = scn.cycle()
    bflux = flux_quantization_check(two_form, cycle).flux_over_2pi
    c.check("base_flux_err", abs(bflux - 2 * mu), abs(bflux - 2 * mu) <= 1e-3)
    return c


def criterion_6_gauge_covariance():
    c = Criterion(6, limit=10.0)
    lor = build_scenario(builtin_config("lorentz"))
    a = exp_gauge_map(u1(), lambda q: jnp.array([q[0] * q[1] - 0.5 * q[2] + 0.3 * jnp.sin(q[0])]))
    ab = gauge_covariance_check(lor.model, lor.y0, a, lor.t_span, 1e-3)
    c.check("abelian", ab, ab <= 1e-6)
    wong = build_scenario(builtin_config("wong_su2"))
    g = constant_gauge_map(so3(), np.asarray(so3().exp([0.3, -0.2, 0.9])))
    na = gauge_covariance_check(wong.model, wong.y0, g, wong.t_span, 1e-3)
    c.check("constant_su2", na, na <= 1e-6)
    return c


def criterion_7_textbook_lagrangian():
    c = Criterion(7, limit=10.0)
    for name in ("wong_su2", "dirac_monopole"):
        scn = build_scenario(builtin_config(name))
        traj = integrate_model(scn.model, scn.y0, scn.t_span, scn.dt)
        res = euler_lagrange_residual(scn.model.space, scn.model.chart, scn.model.lagrangian, traj)
        c.check(name, res, res <= 1e-5)
    return c


def criterion_8_parser(out_dir):
    c = Criterion(8)
    trips = 0
    for name in list_builtins():
        cfg = builtin_config(name)
        text = serialize_config(cfg)
        trips += parse_config(text) == cfg and serialize_config(parse_config(text)) == text
    c.check("round_trips", trips, trips == len(list_builtins()))
    c.check("corpus_size", len(MALFORMED), len(MALFORMED) >= 10)
    right = nonzero = 0
    for path in MALFORMED:
        want = path.read_bytes().splitlines()[0].decode().split(":", 1)[1].strip()
        try:
            parse_config(path.read_bytes())
        except ConfigError as exc:
            right += exc.category == want
        with contextlib.redirect_stderr(io.StringIO()):
            nonzero += main(["integrate", "--config", str(path), "--out-dir", str(out_dir)]) != 0
    c.check("categories", right, right == len(MALFORMED))
    c.check("nonzero_exits", nonzero, nonzero == len(MALFORMED))
    return c


def rk4_drift_ratio(rhs, y0, t_end, dt, energy):
    drifts = []
    for h in (dt, dt / 2):
        traj = integrate(rhs, y0, (0.0, t_end), h)
        drifts.append(energy_drift(traj, energy))
    return drifts[0] / drifts[1]


def criterion_9_rk4_convergence():
    c = Criterion(9)
    scn = build_scenario(builtin_config("harmonic_oscillator"))
    m = scn.model
    ratio = rk4_drift_ratio(m.lagrangian_rhs, scn.y0, scn.t_span[1], scn.dt, m.lagrangian_energy)
    c.check("harmonic_ratio", ratio, 12.0 <= ratio <= 20.0)
    return c


def test_rk4_energy_ratio_on_anharmonic_oscillator():
    # supplementary: a nonlinear force shows the fourth-order energy error
    def rhs(y):
        return jnp.array([y[1], -y[0] - y[0] ** 3])

    def energy(y):
        return 0.5 * y[1] ** 2 + 0.5 * y[0] ** 2 + 0.25 * y[0] ** 4

    ratio = rk4_drift_ratio(rhs, np.array([1.0, 0.0]), 10.0, 0.005, energy)
    assert 12.0 <= ratio <= 20.0


def test_energy_diagnostics_match_direct_drift():
    scn = build_scenario(builtin_config("harmonic_oscillator"))
    traj = integrate_model(scn.model, scn.y0, scn.t_span, scn.dt)
    rep = diagnose(traj, scn.quantities()).to_dict()
    assert math.isclose(rep["energy"]["max_drift"], energy_drift(traj, scn.model.lagrangian_energy), rel_tol=1e-12)


def test_criterion_1_identities(capsys):
    criterion_1_identities().finish(capsys)


def test_criterion_2_lorentz(capsys):
    criterion_2_lorentz().finish(capsys)


def test_criterion_3_dirac_monopole(capsys):
    criterion_3_dirac_monopole().finish(capsys)


def test_criterion_4_wong(capsys):
    criterion_4_wong().finish(capsys)


def test_criterion_5_magnetized_kepler(capsys):
    criterion_5_magnetized_kepler().finish(capsys)


def test_criterion_6_gauge_covariance(capsys):
    criterion_6_gauge_covariance().finish(capsys)


def test_criterion_7_textbook_lagrangian(capsys):
    criterion_7_textbook_lagrangian().finish(capsys)


def test_criterion_8_parser(capsys, tmp_path):
    criterion_8_parser(tmp_path).finish(capsys)


def test_criterion_9_rk4_convergence(capsys):
    criterion_9_rk4_convergence().finish(capsys)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        for crit in (criterion_1_identities, criterion_2_lorentz, criterion_3_dirac_monopole, criterion_4_wong,
                     criterion_5_magnetized_kepler, criterion_6_gauge_covariance, criterion_7_textbook_lagrangian, criterion_8_parser, criterion_9_rk4_convergence):
            try:
                (crit(Path(tmp)) if crit is criterion_8_parser else crit()).finish()
            except AssertionError:
                pass
