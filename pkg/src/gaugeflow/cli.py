"""Command-line runner: ``gaugeflow <mode> --config FILE | --builtin NAME``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from gaugeflow.config import ScenarioConfig, parse_config
from gaugeflow.dynamics import crosscheck, diagnose, integrate_model
from gaugeflow.errors import ConfigError, ConfigInvariantError, GaugeflowError
from gaugeflow.quantization import dirac_condition, flux_quantization_check
from gaugeflow.scenarios import BUILTINS, build_scenario, builtin_config, list_builtins

MODES = ("integrate", "crosscheck", "quantize", "verify-identities")
CROSSCHECK_TOL = 1e-6


def format_float(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def dump_json(obj, indent=0):
    """Deterministic JSON with floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {dump_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dump_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def write_trajectory(path, trajectory, stride, second="v"):
    n = trajectory.n
    dim = trajectory.states.shape[1]
    cols = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"{second}{i + 1}" for i in range(n)]
    cols += [f"z{i + 1}" for i in range(dim - 2 * n)]
    idx = np.arange(0, len(trajectory), stride)
    if idx[-1] != len(trajectory) - 1:
        idx = np.append(idx, len(trajectory) - 1)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for i in idx:
            row = [trajectory.times[i], *trajectory.states[i]]
            fh.write(",".join(format_float(x) for x in row) + "\n")


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


def run_integrate(scn, out):
    form = scn.formulation
    if form == "both":
        raise ConfigInvariantError("integrate needs dynamics.formulation = lagrangian or hamiltonian",
                                   key="dynamics.formulation")
    y0 = scn.y0 if form == "lagrangian" else np.asarray(scn.model.to_hamiltonian(scn.y0))
    tol = scn.config.get("integrator", "tol")
    traj = integrate_model(scn.model, y0, scn.t_span, scn.dt, scn.method, tol, formulation=form)
    opts = scn.config["output"]
    write_trajectory(out / opts["trajectory"], traj, opts["stride"], "v" if form == "lagrangian" else "p")
    report = diagnose(traj, scn.quantities(form), scn.model).to_dict()
    _write(out / opts["diagnostics"], dump_json(report))
    print(f"{scn.config.name}: {len(traj)} samples, t = {traj.times[-1]:.6g}")
    for name, rec in report.items():
        print(f"  {name:<12} max_drift {rec['max_drift']:.3e}")
    return 0


def run_crosscheck(scn, out):
    if scn.method != "rk4":
        raise ConfigInvariantError("crosscheck needs integrator.method = rk4 (shared time grid)",
                                   key="integrator.method")
    diff, lag, ham = crosscheck(scn.model, scn.y0, scn.t_span, scn.dt)
    passed = diff <= CROSSCHECK_TOL
    report = {
        "crosscheck": {"max_q_difference": diff, "threshold": CROSSCHECK_TOL, "pass": passed},
        "lagrangian": diagnose(lag, scn.quantities("lagrangian"), scn.model).to_dict(),
        "hamiltonian": diagnose(ham, scn.quantities("hamiltonian"), scn.model).to_dict(),
    }
    _write(out / "crosscheck.json", dump_json(report))
    print(f"{scn.config.name}: max |q_L - q_H| = {diff:.3e} ({'pass' if passed else 'FAIL'})")
    return 0 if passed else 1


def run_quantize(scn, out):
    two_form, cycle = scn.cycle()
    quant = scn.config["quantize"]
    rep = flux_quantization_check(two_form, cycle, tol=quant["tol"])
    report = {"flux": rep.to_dict()}
    gauge = scn.config["gauge"]
    print(f"{scn.config.name}: flux / 2 pi = {rep.flux_over_2pi:.10f}, nearest {rep.nearest_integer} "
          f"({'pass' if rep.passed else 'FAIL'})")
    if gauge["kind"] == "monopole" and scn.q_e is not None:
        holds = dirac_condition(scn.q_e, gauge["q_m"])
        report["dirac_condition"] = {"q_e": scn.q_e, "q_m": gauge["q_m"], "holds": holds}
        print(f"  q_e q_m = {scn.q_e * gauge['q_m']:g}: Dirac condition {'holds' if holds else 'fails'}")
    _write(out / "quantize.json", dump_json(report))
    return 0 if rep.passed else 1


def run_verify(scn, out, seed):
    from gaugeflow.identities import verify_identities

    n = scn.model.n
    results = verify_identities(scn.model, samples=100, seed=seed, q_center=scn.y0[:n])
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {r.residual:.3e}  <= {r.threshold:.0e}  {'pass' if r.passed else 'FAIL'}")
    _write(out / "identities.json", dump_json({r.name: r.to_dict() for r in results}))
    return 0 if all(r.passed for r in results) else 1


def load_config(args) -> ScenarioConfig:
    if args.builtin:
        try:
            return builtin_config(args.builtin)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
    try:
        data = Path(args.config).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
    return parse_config(data)


def run(cfg: ScenarioConfig, mode, out_dir=".", seed=0):
    """Run one mode on a config; returns the exit status."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scn = build_scenario(cfg)
    if mode == "integrate":
        return run_integrate(scn, out)
    if mode == "crosscheck":
        return run_crosscheck(scn, out)
    if mode == "quantize":
        return run_quantize(scn, out)
    return run_verify(scn, out, seed)


def _parser():
    p = argparse.ArgumentParser(prog="gaugeflow", description="Charged particles in gauge fields.")
    p.add_argument("mode", nargs="?", choices=MODES)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="scenario config file")
    src.add_argument("--builtin", help="builtin scenario name")
    p.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed for verify-identities")
    p.add_argument("--list-scenarios", action="store_true", help="list builtin scenarios and exit")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.list_scenarios:
        for name in list_builtins():
            print(f"{name:<20} {BUILTINS[name].splitlines()[0].lstrip('# ')}")
        return 0
    if args.mode is None:
        print("gaugeflow: a mode is required (or --list-scenarios)", file=sys.stderr)
        return 2
    if not (args.config or args.builtin):
        print("gaugeflow: give --config FILE or --builtin NAME", file=sys.stderr)
        return 2
    if not 0 <= args.seed < 2 ** 64:
        print("gaugeflow: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args)
        return run(cfg, args.mode, args.out_dir, args.seed)
    except GaugeflowError as exc:
        print(f"gaugeflow: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
