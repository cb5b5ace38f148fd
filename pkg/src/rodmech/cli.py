"""Command line driver: ``run``, ``converge`` and ``check``.

Exit codes: 0 success, 2 configuration error, 3 simulation error, 4 check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import checks
from .config import ScenarioConfig, load_config
from .diagnostics import convergence_study, effective_step, energy_ledger, momenta, reference_run
from .dynamics import StepScheme, simulate
from .errors import ConfigError, SimulationError
from .models import PendulumModel, pendulum_invariants

CSV_COLUMNS = (
    "t", "ke_trans", "ke_rot", "Um", "Ua", "Us", "Upp", "Upw", "Upend", "E",
    "Px", "Py", "Pz", "Lx", "Ly", "Lz", "Lsx", "Lsy", "Lsz", "aux1", "aux2",
)
CONVERGE_COLUMNS = ("scheme", "h", "steps", "e_error", "q_error", "q_diff")
TERMS = ("Um", "Ua", "Us", "Upp", "Upw", "Upend")

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_CHECK = 0, 2, 3, 4


def fmt(x):
    """17 significant digits: doubles survive a text round trip exactly."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


@contextmanager
def atomic_open(path):
    """Write to a temporary file beside ``path`` and rename over it on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_json(path, obj):
    with atomic_open(path) as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------- run


def sample_row(state, ledger, mom, model):
    if isinstance(model, PendulumModel) and state.n == 1:
        _, axial, length = pendulum_invariants(state, model)
        aux = (axial, length - np.linalg.norm(model.rho0))
    else:
        aux = (0.0, 0.0)
    return (
        state.t, ledger.ke_trans, ledger.ke_rot, *(ledger.term(k) for k in TERMS), ledger.total,
        *mom.P, *mom.L_total, *mom.L_spin, *aux,
    )


def run_scenario(cfg: ScenarioConfig):
    """Simulate ``cfg`` and return ``(rows, summary)``; the final state is always sampled."""
    s0, model = cfg.make()
    rows = []
    t_start = time.perf_counter()
    final = simulate(
        s0, model, cfg.scheme, cfg.h, cfg.t_end,
        sampler=lambda st, led, mom: rows.append(sample_row(st, led, mom, model)),
        sample_every=cfg.sample_every,
    )
    wall = time.perf_counter() - t_start
    steps = int(round((final.t - s0.t) / cfg.h)) if cfg.t_end > 0 else 0
    last_led = energy_ledger(final, model)
    last_mom = momenta(final)
    if rows[-1][0] != final.t:
        rows.append(sample_row(final, last_led, last_mom, model))

    data = np.array(rows)
    E = data[:, CSV_COLUMNS.index("E")]
    E0 = E[0]
    summary = {
        "scenario": cfg.scenario,
        "scheme": cfg.scheme.value,
        "h": cfg.h,
        "t_end": cfg.t_end,
        "steps": steps,
        "samples": len(rows),
        "wall_clock_s": wall,
        "final_momenta": {"P": last_mom.P, "L_spin": last_mom.L_spin, "L_total": last_mom.L_total},
        "final_energy": {
            "t": last_led.t,
            "ke_trans": last_led.ke_trans,
            "ke_rot": last_led.ke_rot,
            **{k: last_led.term(k) for k in TERMS},
            "E": last_led.total,
        },
        "max_rel_energy_error": float(np.max(np.abs(E - E0)) / abs(E0)) if E0 != 0 else None,
        "invariant_max": {},
    }
    if isinstance(model, PendulumModel):
        a1, a2 = data[:, -2], data[:, -1]
        summary["invariant_max"] = {
            "axial_drift": float(np.max(np.abs(a1 - a1[0]))),
            "length_drift": float(np.max(np.abs(a2))),
        }
    return rows, summary


def cmd_run(args):
    cfg = load_config(args.config)
    rows, summary = run_scenario(cfg)
    out = Path(args.out)
    write_csv(out, CSV_COLUMNS, rows)
    write_json(out.with_name(out.name + ".summary.json"), summary)
    json.dump(_jsonable(summary), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


# --------------------------------------------------------------- converge


def parse_h_list(text):
    try:
        hs = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse step list {text!r}") from None
    if len(hs) < 3:
        raise ConfigError("converge needs at least three step sizes")
    if any(h <= 0 or not np.isfinite(h) for h in hs):
        raise ConfigError("step sizes must be positive")
    return sorted(hs, reverse=True)


def parse_schemes(text, default):
    if not text:
        return [default]
    try:
        return [StepScheme(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def converge(cfg: ScenarioConfig, h_list, schemes, ref_factor=10.0):
    if cfg.t_end <= 0:
        raise ConfigError("converge needs t_end > 0")
    h_eff = [effective_step(h, cfg.t_end) for h in h_list]
    if len(set(h_eff)) < len(h_eff):
        raise ConfigError("step sizes collapse onto the same step count for this t_end")
    ref = reference_run(cfg.make, cfg.t_end, min(h_eff) / ref_factor)
    return [convergence_study(cfg.make, sch, h_list, cfg.t_end, reference=ref) for sch in schemes]


def cmd_converge(args):
    cfg = load_config(args.config)
    h_list = parse_h_list(args.h)
    schemes = parse_schemes(args.schemes, cfg.scheme)
    reports = converge(cfg, h_list, schemes, args.ref_factor)
    out = Path(args.out)
    stem = out.with_suffix("") if out.suffix in (".json", ".csv") else out
    doc = {"scenario": cfg.scenario, "t_end": cfg.t_end, "reports": [r.as_dict() for r in reports]}
    write_json(stem.with_name(stem.name + ".json"), doc)
    write_csv(
        stem.with_name(stem.name + ".csv"),
        CONVERGE_COLUMNS,
        [(r.scheme, *row) for r in reports for row in r.rows],
    )
    json.dump(_jsonable(doc), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


# ------------------------------------------------------------------ check


def cmd_check(args):
    results = checks.run_all(args.seed)
    doc = {
        "seed": args.seed,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    if args.out:
        write_json(args.out, doc)
    json.dump(_jsonable(doc), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK if doc["passed"] else EXIT_CHECK


# ------------------------------------------------------------------- main


def build_parser():
    p = argparse.ArgumentParser(prog="rodmech", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and write a CSV time series")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("converge", help="energy and trajectory error sweep over time steps")
    c.add_argument("--config", required=True)
    c.add_argument("--h", required=True, help="comma separated step sizes, e.g. 1e-1,3e-2,1e-2")
    c.add_argument("--out", required=True, help="output stem; .json and .csv are written")
    c.add_argument("--schemes", default=None, help="comma separated schemes (default: the config's)")
    c.add_argument("--ref-factor", type=float, default=10.0)
    c.set_defaults(func=cmd_converge)

    k = sub.add_parser("check", help="run the invariant and oracle suites")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error at step {exc.step}: {exc.cause}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
