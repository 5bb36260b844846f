"""Command-line scenario runner.

Subcommands ``classify``, ``integrate``, ``sweep``, ``orbit`` and ``budget``
read a YAML scenario file (see :mod:`flrw_ode.config`).  Exit codes: 0 on
success, 1 for scenario errors, 2 for solver failures, 3 when a checked
invariant is violated.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import cosmology, desitter, dynamics, energy, picard
from .cosmology import CaseTag
from .dynamics import BlowUpBracket, TrajectoryStatus
from .errors import NonContractionError, RegimeMismatchError, StepFloorError

EXIT_OK, EXIT_SCENARIO, EXIT_SOLVER, EXIT_INVARIANT = 0, 1, 2, 3
THREADS_ENV = "FLRW_ODE_THREADS"
#: rk/picard disagreement flagged as an invariant violation
CROSS_SOLVER_TOL = 1e-4


class SolverFailure(RuntimeError):
    pass


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return f"{float(x):.17g}"


def _sign_text(name, sign) -> str:
    sym = {"pos": ">", "zero": "=", "neg": "<"}[sign.value]
    return f"{name}{sym}0"


def classify_text(params) -> str:
    rc = cosmology.classify(params)
    hz = cosmology.horizon(params)
    head = f"case {rc.case_tag.value}, {_sign_text('A', rc.sign_A)}, {_sign_text('DtA', rc.sign_DtA)}"
    if params.is_de_sitter:
        head = f"de Sitter (H={_fmt(params.hubble)}), " + head
    if hz.t0 is not None and hz.t0 == hz.t1:
        return f"{head}, T0=T1={hz.t1:g}"
    if hz.t0 is not None:
        return f"{head}, T0={hz.t0:g}, T1={hz.t1:g}"
    return f"{head}, T1={hz.t1:g}"


def trajectory_csv(traj, ledger=None) -> str:
    n = traj.Y.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"Y_{i + 1}" for i in range(n)] + [f"DtY_{i + 1}" for i in range(n)]
               + ["e0", "drift"])
    for k, t in enumerate(traj.grid):
        e0 = ledger.e0[k] if ledger is not None else None
        drift = ledger.drift[k] if ledger is not None else None
        w.writerow([_fmt(t), *map(_fmt, traj.Y[k]), *map(_fmt, traj.DtY[k]), _fmt(e0), _fmt(drift)])
    return buf.getvalue()


def _budget_dict(sf, Y0, Y1, nl=None):
    nl = nl or sf.nonlinearity
    try:
        b = picard.existence_budget(sf.cosmology, nl, Y0, Y1, sf.constants, sf.q_star)
    except ValueError as exc:
        return {"theorem": None, "note": str(exc)}
    return {"theorem": b.theorem_tag.value, "T_admissible": b.T_admissible, "global": b.global_,
            "D": b.D, "constants": list(b.constants), "heuristic": b.heuristic, "note": b.note}


def _ledger_or_none(scn, traj):
    if not scn.nonlinearity.is_vector or traj.frame != "Y":
        return None
    try:
        return energy.matching_ledger(scn.cosmology, scn.nonlinearity, traj)
    except RegimeMismatchError:
        return None


def _json_number(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        return _json_number(obj)
    return obj


def _write(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run_integrate(sf, solver: str):
    """Run the configured integration; returns ``(csv_texts, report, exit_code)``."""
    scn = sf.scenario()
    report = {"params_hash": scn.digest(), "t_end": scn.t_end, "clipped": scn.clipped,
              "budget": _budget_dict(sf, scn.Y0, scn.Y1)}
    csvs = {}
    code = EXIT_OK
    rk = pic = None
    if solver in ("rk", "both"):
        if sf.frame in ("Y", "both"):
            rk = dynamics.integrate_Y(scn)
        if sf.frame in ("X", "both"):
            xt = dynamics.integrate_X(scn)
            report["x_frame_status"] = xt.status.value
            mapped = dynamics.frame_map(scn.cosmology, xt, "XtoY")
            if rk is None:
                rk = mapped
            else:
                m = min(len(rk.grid), len(mapped.grid))
                report["frame_disagreement"] = float(np.max(np.abs(rk.Y[:m] - mapped.Y[:m])))
        ledger = _ledger_or_none(scn, rk)
        report["status"] = rk.status.value
        report["endpoint"] = {"t": rk.t_final, "Y": rk.Y[-1].tolist(), "DtY": rk.DtY[-1].tolist()}
        report["max_abs_Y"] = rk.sup_norm()
        report["n_steps"] = rk.n_steps
        if ledger is not None:
            report["energy"] = {"regime": ledger.regime.value, "max_drift": ledger.max_drift,
                                "bound": ledger.drift_bound(max(scn.rtol, scn.atol))}
            strict = cosmology.classify(scn.cosmology).case_tag is not CaseTag.OTHER
            if strict and rk.reached_end and not ledger.within_bound(max(scn.rtol, scn.atol)):
                code = EXIT_INVARIANT
        if rk.status is TrajectoryStatus.BLOW_UP:
            report["t_blowup"] = rk.t_blowup
            try:
                br = dynamics.estimate_blowup_time(scn)
            except StepFloorError as exc:
                raise SolverFailure(str(exc)) from exc
            if isinstance(br, BlowUpBracket):
                report["bracket"] = [br.t_low, br.t_high]
        elif rk.status is TrajectoryStatus.STEP_FLOOR:
            raise SolverFailure(f"step floor at t = {rk.t_final}")
        csvs["rk"] = trajectory_csv(rk, ledger)
    if solver in ("picard", "both"):
        try:
            res = picard.solve_scenario(scn, n_grid=scn.n_out)
        except NonContractionError as exc:
            raise SolverFailure(f"Picard iteration: {exc}") from exc
        pic = res.trajectory
        report["picard"] = {"iterations": res.iterations, "residual": res.residual,
                            "endpoint": pic.Y[-1].tolist()}
        pl = _ledger_or_none(scn, pic)
        csvs["picard"] = trajectory_csv(pic, pl)
        if rk is None:
            report["status"] = TrajectoryStatus.COMPLETED.value
            report["max_abs_Y"] = pic.sup_norm()
    if rk is not None and pic is not None:
        if len(rk.grid) == len(pic.grid):
            dis = float(np.max(np.abs(rk.Y - pic.Y)))
            report["picard"]["disagreement"] = dis
            if dis > CROSS_SOLVER_TOL:
                code = EXIT_INVARIANT
    return csvs, report, code


def _cell(v) -> str:
    if isinstance(v, bool) or isinstance(v, str):
        return str(v)
    return _fmt(v)


def _sweep_cell(args):
    sf, lam, p, s0, s1 = args
    n = sf.cosmology.n
    e1 = tuple(1.0 if i == 0 else 0.0 for i in range(n))
    d0 = np.array(sf.sweep.Y0_dir or e1)
    d1 = np.array(sf.sweep.Y1_dir or e1)
    nl = dataclasses.replace(sf.nonlinearity, lam=lam, p=p)
    Y0, Y1 = tuple(s0 * d0), tuple(s1 * d1)
    row = {"lambda": lam, "p": p, "Y0_scale": s0, "Y1_scale": s1}
    b = _budget_dict(sf, Y0, Y1, nl)
    row.update(budget_theorem=b.get("theorem"), budget_T=b.get("T_admissible"),
               budget_global=b.get("global"))
    try:
        scn = sf.scenario(nonlinearity=nl, Y0=Y0, Y1=Y1)
        out = dynamics.estimate_blowup_time(scn)
        if isinstance(out, BlowUpBracket):
            row.update(outcome="blow_up", t_low=out.t_low, t_high=out.t_high)
        else:
            row.update(outcome="global", t_low=None, t_high=None)
    except (ValueError, RuntimeError) as exc:
        row.update(outcome=f"error: {type(exc).__name__}: {exc}", t_low=None, t_high=None)
    return row


SWEEP_COLUMNS = ["lambda", "p", "Y0_scale", "Y1_scale", "outcome", "t_low", "t_high",
                 "budget_theorem", "budget_T", "budget_global"]


def run_sweep(sf) -> str:
    if sf.sweep is None or sf.nonlinearity is None:
        raise cfgmod.ConfigError("sweep needs 'sweep' and 'nonlinearity' sections")
    ax = sf.sweep
    cells = [(sf, *c) for c in itertools.product(ax.lam, ax.p, ax.Y0_scale, ax.Y1_scale)]
    workers = max(1, int(os.environ.get(THREADS_ENV, "1") or 1))
    if workers == 1:
        rows = [_sweep_cell(c) for c in cells]
    else:
        # map() keeps grid order whatever the completion order
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def orbit_text(ocfg) -> str:
    res = desitter.orbit_omega(ocfg)
    lines = [
        f"omega = {_fmt(res.omega)} s^-1",
        f"omega_minkowski = {_fmt(res.minkowski)} s^-1",
        f"omegaT = {_fmt(res.omegaT)} (= 2 x {_fmt(res.omegaT / 2)})",
        f"correction = {_fmt(res.correction)}",
        f"delta_omega = {_fmt(res.delta_omega)} s^-1",
    ]
    return "\n".join(lines) + "\n"


def budget_text(sf) -> str:
    if sf.nonlinearity is None or sf.Y0 is None:
        raise cfgmod.ConfigError("budget needs nonlinearity and initial sections")
    b = _budget_dict(sf, sf.Y0, sf.Y1)
    if b.get("theorem") is None:
        raise cfgmod.ConfigError(b["note"], "cosmology")
    return json.dumps(_sanitize(b), indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flrw-ode", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=False, help="YAML scenario file")
    common.add_argument("--out", help="output path (CSV, or text for orbit/budget)")
    common.add_argument("--solver", choices=cfgmod.SOLVERS, help="override solver.method")
    common.add_argument("--grid", type=int, help="override the output grid size")
    common.add_argument("--tol", type=float, help="override both rtol and atol")
    for name, help_ in (("classify", "report the expansion regime"),
                        ("integrate", "integrate one scenario to CSV"),
                        ("sweep", "phase table over (lambda, p, |Y0|, |Y1|)"),
                        ("orbit", "solar-orbit angular velocity"),
                        ("budget", "heuristic existence time")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if name in ("classify", "integrate", "sweep", "budget"):
            sp.set_defaults(needs_config=True)
    return ap


def _load(args):
    if args.config is None:
        if getattr(args, "needs_config", False):
            raise cfgmod.ConfigError("--config is required for this command")
        return None
    sf = cfgmod.load(args.config)
    over = {}
    if args.grid is not None:
        over["grid"] = args.grid
    if args.tol is not None:
        over["rtol"] = over["atol"] = args.tol
    if args.solver is not None:
        over["solver"] = args.solver
    return dataclasses.replace(sf, **over) if over else sf


def _emit(text, path):
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sf = _load(args)
        if args.command == "classify":
            _emit(classify_text(sf.cosmology) + "\n", args.out)
            return EXIT_OK
        if args.command == "orbit":
            ocfg = sf.orbit if sf is not None else desitter.OrbitConfig()
            _emit(orbit_text(ocfg), args.out)
            return EXIT_OK
        if args.command == "budget":
            _emit(budget_text(sf), args.out)
            return EXIT_OK
        if args.command == "sweep":
            _emit(run_sweep(sf), args.out or sf.csv_path)
            return EXIT_OK
        start = time.perf_counter()
        try:
            csvs, report, code = run_integrate(sf, sf.solver)
        except SolverFailure as exc:
            report = {"status": "SolverFailure", "error": str(exc)}
            print(json.dumps(report, sort_keys=True), file=sys.stderr)
            return EXIT_SOLVER
        report["wall_time_s"] = time.perf_counter() - start
        out = args.out or sf.csv_path
        for key, text in csvs.items():
            path = out
            if out and key == "picard" and "rk" in csvs:
                p = Path(out)
                path = str(p.with_name(p.stem + ".picard" + p.suffix))
            _emit(text, path)
        report_path = sf.report_path or (str(Path(out).with_suffix(".json")) if out else None)
        rep = json.dumps(_sanitize(report), indent=2, sort_keys=True) + "\n"
        if report_path:
            _write(report_path, rep)
        else:
            sys.stderr.write(rep)
        return code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
