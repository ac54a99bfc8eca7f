"""Reproducible experiment driver.

Configs are flat INI-style text (`[section]` + `key = value`); unknown keys
are rejected.  Every run writes CSV data files plus one summary.json that
embeds the config hash, seed, library version, kernel backend, conservation
audits, and the pass/fail of the experiment's built-in checks.  Outputs are
byte-identical for identical config+seed: floats print with 17 significant
digits, files are written atomically, and nothing timestamped goes into the
artifacts.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 built-in check
failed (for CI gating).
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, _kernels, fokker_planck as fp, master, profiles, ratchet
from .master import MassOverflowError
from .measurement import Chart, pi_of_x, x_of_pi
from .schedules import pi_localization_schedule, uniform_schedule
from .trajectories import (
    run_ensemble,
    run_localization_ensemble,
    run_trajectory,
)

__all__ = ["main", "list_experiments", "run_config", "ConfigError"]


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------
# config handling
# ----------------------------------------------------------------------

_PI_4 = math.pi / 4


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s: str):
    return tuple(int(tok) for tok in s.replace(",", " ").split())


# schema: section -> key -> (converter, default); None default means required
_RUN_KEYS = {"seed": (int, 0), "out": (str, None)}

_SCHEMAS = {
    "trajectory": {
        "params": {
            "x0": (float, 0.0),
            "delta_scale": (float, 0.05),
            "alpha": (float, _PI_4),
            "profile": (str, "uniform"),
            "pi_lock": (float, 0.7),
        },
        "numerics": {
            "n_steps": (int, 500),
            "n_traj": (int, 2000),
            "checkpoints": (_int_list, (250, 500)),
        },
    },
    "master": {
        "params": {
            "x0": (float, 0.0),
            "delta": (float, 0.05),
            "alpha": (float, _PI_4),
            "schedule": (str, "constant"),
            "mod_amp": (float, 0.5),
        },
        "numerics": {"n_steps": (int, 500), "cells": (int, 8192)},
    },
    "fp-analytic-check": {
        "params": {"start": (float, -10.0), "t_start": (float, 0.01), "t_end": (float, 1.0)},
        "numerics": {"cells": (int, 4096)},
    },
    "ratchet-spacetime": {
        "params": {"a": (float, -0.6), "b": (float, -0.5), "temporal": (str, "onoff")},
        "numerics": {
            "cells": (int, 128),
            "periods": (float, 400.0),
            "record_dt": (float, 0.02),
            "csv_max_rows": (int, 20000),
        },
    },
    "seebeck": {
        "params": {"a": (float, -0.8), "b": (float, 0.0)},
        "numerics": {"cells": (int, 256), "t_end": (float, 40.0), "csv_max_rows": (int, 20000)},
    },
    "localization": {
        "params": {
            "pi_lock": (float, 0.7),
            "pi0": (float, 0.3),
            "delta_scale": (float, 0.1),
            "alpha": (float, _PI_4),
        },
        "numerics": {
            "n_traj": (int, 10000),
            "n_steps": (int, 6000),
            "cells": (int, 512),
            "t_scaled": (float, 5.0),
        },
    },
}

_DESCRIPTIONS = {
    "trajectory": "Monte Carlo walks: one recorded trajectory plus an ensemble with <Pi> audit",
    "master": "grid master equation: density after n steps with mass/<Pi> conservation audit",
    "fp-analytic-check": "drift-diffusion solver vs the exact point-source density; convergence check",
    "ratchet-spacetime": "reduced periodic run with the switched sawtooth strength; ratchet current",
    "seebeck": "static-profile steady state vs the -1/<g^-2> closed form",
    "localization": "vanishing-strength lock: no-crossing, absorption split, rescale equivalence",
}

_OUTPUT_SCHEMAS = {
    "trajectory": {
        "trajectory.csv": "step,time,x,outcome",
        "checkpoints.csv": "checkpoint_step,pi_mean,pi_stderr",
        "histogram.csv": "checkpoint_step,bin_left,bin_right,mass",
        "summary.json": "run metadata, audits, checks",
    },
    "master": {
        "density_initial.csv": "x,density",
        "density_final.csv": "x,density",
        "summary.json": "run metadata, per-step conservation audits, checks",
    },
    "fp-analytic-check": {
        "errors.csv": "cells,l2_error",
        "summary.json": "run metadata, convergence ratio, checks",
    },
    "ratchet-spacetime": {
        "current.csv": "time,current,running_average",
        "field_final.csv": "x,density,flux",
        "summary.json": "run metadata, final average, checks",
    },
    "seebeck": {
        "current.csv": "time,current,running_average",
        "steady_profile.csv": "x,strength,density,flux",
        "summary.json": "run metadata, closed form comparison, checks",
    },
    "localization": {
        "absorption.csv": "category,count,fraction",
        "rescale_l1.csv": "t_scaled,l1_distance",
        "summary.json": "run metadata, split statistics, checks",
    },
}


def list_experiments():
    """Stable catalog of (name, description, output schema)."""
    return [
        {"name": name, "description": _DESCRIPTIONS[name], "outputs": _OUTPUT_SCHEMAS[name]}
        for name in _SCHEMAS
    ]


def _parse_config(path: str, overrides, seed_arg, out_arg):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}")

    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    for ov in overrides or ():
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {ov!r}")
        target, value = ov.split("=", 1)
        sec, key = target.split(".", 1)
        raw.setdefault(sec.strip(), {})[key.strip()] = value.strip()

    name = raw.get("experiment", {}).pop("name", None)
    if not name:
        raise ConfigError("missing required key: experiment.name")
    if raw.get("experiment"):
        bad = next(iter(raw["experiment"]))
        raise ConfigError(f"unknown key: experiment.{bad}")
    raw.pop("experiment", None)
    if name not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {name!r}; see `zenowalk list`")

    schema = dict(_SCHEMAS[name])
    schema = {**schema, "run": _RUN_KEYS}
    cfg = {"experiment": name}
    for sec, keys in schema.items():
        given = raw.pop(sec, {})
        parsed = {}
        for key, (conv, default) in keys.items():
            if key in given:
                try:
                    parsed[key] = conv(given.pop(key))
                except ValueError as exc:
                    raise ConfigError(f"bad value for {sec}.{key}: {exc}")
            else:
                parsed[key] = default
        if given:
            bad = next(iter(given))
            raise ConfigError(f"unknown key: {sec}.{bad}")
        cfg[sec] = parsed
    if raw:
        raise ConfigError(f"unknown section: [{next(iter(raw))}]")

    if seed_arg is not None:
        cfg["run"]["seed"] = seed_arg
    if out_arg is not None:
        cfg["run"]["out"] = out_arg
    if cfg["run"]["out"] is None:
        cfg["run"]["out"] = os.path.join("runs", name)
    return cfg


def _config_hash(cfg) -> str:
    """Hash of the scenario definition (seed and output path excluded)."""
    lines = [f"experiment.name={cfg['experiment']}"]
    for sec in sorted(k for k in cfg if k not in ("experiment", "run")):
        for key in sorted(cfg[sec]):
            lines.append(f"{sec}.{key}={cfg[sec][key]!r}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


# ----------------------------------------------------------------------
# deterministic file output
# ----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows, meta=None) -> None:
    lines = [f"# {k}={_fmt(v)}" for k, v in (meta or {}).items()]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _field_meta(field) -> dict:
    return {
        "chart": field.chart.value,
        "cells": field.nodes.size,
        "dx": field.dx,
        "time": field.time,
        "bc": field.bc,
    }


def write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _thin(n_rows: int, max_rows: int) -> np.ndarray:
    if n_rows <= max_rows:
        return np.arange(n_rows)
    idx = np.unique(np.linspace(0, n_rows - 1, max_rows).astype(np.int64))
    return idx


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------


def _exp_trajectory(cfg, out):
    p, n = cfg["params"], cfg["numerics"]
    seed = cfg["run"]["seed"]
    if p["profile"] == "uniform":
        sched = uniform_schedule(p["delta_scale"], p["alpha"])
    elif p["profile"] == "pi_localization":
        sched = pi_localization_schedule(p["delta_scale"], p["pi_lock"], p["alpha"])
    else:
        raise ConfigError(f"bad value for params.profile: {p['profile']!r}")

    rec = run_trajectory(p["x0"], sched, n["n_steps"], seed)
    write_csv(
        out / "trajectory.csv",
        ["step", "time", "x", "outcome"],
        ((i, t, x, -1 if oc is None else oc) for i, t, x, oc in rec.entries()),
    )

    cps = tuple(c for c in n["checkpoints"] if c <= n["n_steps"]) or (n["n_steps"],)
    stats = run_ensemble(p["x0"], sched, n["n_steps"], n["n_traj"], cps, base_seed=seed)
    write_csv(
        out / "checkpoints.csv",
        ["checkpoint_step", "pi_mean", "pi_stderr"],
        ((c, stats.pi_mean[c], stats.pi_stderr[c]) for c in stats.checkpoints),
    )
    hist_rows = []
    for c in stats.checkpoints:
        for k, m in enumerate(stats.histograms[c]):
            if m > 0.0:
                hist_rows.append((c, stats.bin_edges[k], stats.bin_edges[k + 1], m))
    write_csv(out / "histogram.csv", ["checkpoint_step", "bin_left", "bin_right", "mass"], hist_rows)

    pi0 = pi_of_x(p["x0"])
    dev = {c: abs(stats.pi_mean[c] - pi0) for c in stats.checkpoints}
    ok = all(dev[c] <= 4.0 * max(stats.pi_stderr[c], 1e-15) for c in stats.checkpoints)
    return {
        "n_steps": n["n_steps"],
        "n_trajectories": n["n_traj"],
        "pi_initial": pi0,
        "pi_mean": {str(c): stats.pi_mean[c] for c in stats.checkpoints},
        "pi_stderr": {str(c): stats.pi_stderr[c] for c in stats.checkpoints},
        "checks": {"pi_conserved_4se": ok},
    }


def _exp_master(cfg, out):
    p, n = cfg["params"], cfg["numerics"]
    grid = master.grid_from_point(p["x0"], n=n["cells"])
    if p["schedule"] == "constant":
        op = master.PushOperator(grid.nodes, grid.dx, p["alpha"], p["delta"])
    elif p["schedule"] == "conditional":
        op = master.PushOperator(
            grid.nodes,
            grid.dx,
            p["alpha"],
            p["delta"] * (1.0 + p["mod_amp"] * np.sin(grid.nodes)),
        )
    else:
        raise ConfigError(f"bad value for params.schedule: {p['schedule']!r}")

    write_csv(out / "density_initial.csv", ["x", "density"], zip(grid.nodes, grid.values))
    g = grid
    audit = master.conservation_audit(g)
    worst_mass = worst_pi = 0.0
    for _ in range(n["n_steps"]):
        g = op.apply(g)
        nxt = master.conservation_audit(g)
        worst_mass = max(worst_mass, abs(nxt["mass"] - audit["mass"]))
        worst_pi = max(worst_pi, abs(nxt["pi"] - audit["pi"]))
        audit = nxt
    write_csv(out / "density_final.csv", ["x", "density"], zip(g.nodes, g.values))
    return {
        "n_steps": n["n_steps"],
        "cells": n["cells"],
        "pi_average_final": master.pi_average(g),
        "max_step_mass_drift": worst_mass,
        "max_step_pi_drift": worst_pi,
        "boundary_mass": audit["boundary_mass"],
        "checks": {
            "mass_conserved_per_step": worst_mass < 1e-12,
            "pi_conserved_per_step": worst_pi < 1e-9,
            "boundary_mass_small": audit["boundary_mass"] < master.BOUNDARY_MASS_LIMIT,
        },
    }


def _fp_l2(cells, start, t_start, t_end):
    lo = start - 15.0 * math.sqrt(t_end) - 5.0
    hi = start + 15.0 * math.sqrt(t_end) + 5.0
    dx = (hi - lo) / cells
    nodes = lo + (np.arange(cells) + 0.5) * dx
    f0 = fp.Field(Chart.X, nodes, dx, fp.point_source_density(t_start, nodes, start), time=t_start)
    res = fp.solve(f0, fp.coefficients_x(1.0), t_end)
    exact = fp.point_source_density(t_end, nodes, start)
    l2 = float(np.sqrt(np.sum((res.final.values - exact) ** 2) * dx))
    return l2, res


def _exp_fp_analytic(cfg, out):
    p, n = cfg["params"], cfg["numerics"]
    l2_a, res = _fp_l2(n["cells"], p["start"], p["t_start"], p["t_end"])
    l2_b, _ = _fp_l2(2 * n["cells"], p["start"], p["t_start"], p["t_end"])
    write_csv(out / "errors.csv", ["cells", "l2_error"], [(n["cells"], l2_a), (2 * n["cells"], l2_b)])
    ratio = l2_a / l2_b if l2_b > 0 else math.inf
    return {
        "cells": n["cells"],
        "l2_error": l2_a,
        "l2_error_refined": l2_b,
        "convergence_ratio": ratio,
        "drift_velocity": fp.drift_velocity(res.final),
        "mass_drift": res.mass_drift,
        "checks": {"l2_below_1e-3": l2_a < 1e-3, "ratio_at_least_3.5": ratio >= 3.5},
    }


def _write_current_csv(out, rec, max_rows):
    idx = _thin(rec.times.size, max_rows)
    write_csv(
        out / "current.csv",
        ["time", "current", "running_average"],
        zip(rec.times[idx], rec.instantaneous[idx], rec.running_average[idx]),
    )


def _exp_ratchet_spacetime(cfg, out):
    p, n = cfg["params"], cfg["numerics"]
    if p["temporal"] not in ("onoff", "sign"):
        raise ConfigError(f"bad value for params.temporal: {p['temporal']!r}")
    prof = profiles.StrengthProfile(
        spatial_sin=(p["a"], p["a"] * p["b"]), temporal=p["temporal"]
    )
    t_end = n["periods"] * prof.switching_period
    run = ratchet.solve_reduced(prof, n_cells=n["cells"], t_end=t_end, record_dt=n["record_dt"])
    _write_current_csv(out, run.record, n["csv_max_rows"])
    fin = run.final
    node_flux = 0.5 * (fin.face_flux + np.roll(fin.face_flux, -1))
    write_csv(
        out / "field_final.csv",
        ["x", "density", "flux"],
        zip(fin.nodes, fin.values, node_flux),
        meta=_field_meta(fin),
    )
    avg = run.record.final_average
    return {
        "final_average": avg,
        "t_end": t_end,
        "converged": run.converged(),
        "mass_drift": run.mass_drift,
        "checks": {
            "weak_ratchet_bound": -1.01 < avg < 0.0,
            "figure_band_-0.86+-0.05": abs(avg + 0.86) <= 0.05,
        },
    }


def _exp_seebeck(cfg, out):
    p, n = cfg["params"], cfg["numerics"]
    prof = profiles.StrengthProfile(spatial_sin=(p["a"], p["a"] * p["b"]), temporal="const")
    closed = ratchet.seebeck_steady_current(prof)
    run = ratchet.solve_reduced(prof, n_cells=n["cells"], t_end=n["t_end"])
    _write_current_csv(out, run.record, n["csv_max_rows"])
    fin = run.final
    node_flux = 0.5 * (fin.face_flux + np.roll(fin.face_flux, -1))
    write_csv(
        out / "steady_profile.csv",
        ["x", "strength", "density", "flux"],
        zip(fin.nodes, prof(fin.nodes, 0.0), fin.values, node_flux),
        meta=_field_meta(fin),
    )
    numeric = float(run.record.instantaneous[-1])
    return {
        "numeric_current": numeric,
        "closed_form": closed,
        "abs_difference": abs(numeric - closed),
        "figure_read_reference": -0.2,
        "checks": {
            "matches_closed_form_1e-3": abs(numeric - closed) < 1e-3,
            "within_loose_figure_band": abs(numeric - (-0.2)) <= 0.08,
            "weak_ratchet_bound": -1.01 < numeric < 0.0,
        },
    }


def _exp_localization(cfg, out):
    p, n = cfg["params"], cfg["numerics"]
    seed = cfg["run"]["seed"]
    pi_lock, pi0 = p["pi_lock"], p["pi0"]
    if not 0.0 < pi0 < pi_lock < 1.0:
        raise ConfigError("params require 0 < pi0 < pi_lock < 1")
    sched = pi_localization_schedule(p["delta_scale"], pi_lock, p["alpha"])
    ens = run_localization_ensemble(x_of_pi(pi0), sched, n["n_steps"], n["n_traj"], seed)
    frac_lock, frac_zero, unresolved = ens.split()
    expected = pi0 / pi_lock
    se = math.sqrt(expected * (1.0 - expected) / n["n_traj"])
    write_csv(
        out / "absorption.csv",
        ["category", "count", "fraction"],
        [
            ("reached_lock", int(round(frac_lock * n["n_traj"])), frac_lock),
            ("reached_zero", int(round(frac_zero * n["n_traj"])), frac_zero),
            ("unresolved", unresolved, unresolved / n["n_traj"]),
        ],
    )

    # subdomain FP run (exact zero flux at the lock point) + rescale check
    l1, mass_above = _rescale_l1(pi_lock, pi0, n["cells"], n["t_scaled"])
    write_csv(out / "rescale_l1.csv", ["t_scaled", "l1_distance"], [(n["t_scaled"], l1)])
    return {
        "pi_lock": pi_lock,
        "pi0": pi0,
        "expected_lock_fraction": expected,
        "lock_fraction": frac_lock,
        "zero_fraction": frac_zero,
        "unresolved": unresolved,
        "max_x_seen": ens.max_x_seen,
        "x_lock": x_of_pi(pi_lock),
        "fp_mass_at_or_above_lock": mass_above,
        "rescale_l1": l1,
        "checks": {
            "no_crossing": ens.max_x_seen < x_of_pi(pi_lock),
            "absorption_split_4se": abs(frac_lock - expected) <= 4.0 * se,
            "fp_mass_above_below_1e-12": mass_above < 1e-12,
            "rescale_l1_below_1e-3": l1 < 1e-3,
        },
    }


def _rescale_l1(pi_lock, pi0, cells, t_scaled):
    """L1 between the locked-domain run and the mapped unit-interval run."""
    resc = profiles.rescale_equivalence(pi_lock, 1.0)
    # matched grids: direct on (0, pi_lock), mapped on (0, 1)
    d_dir = pi_lock / cells
    nodes_dir = (np.arange(cells) + 0.5) * d_dir
    d_map = 1.0 / cells
    nodes_map = (np.arange(cells) + 0.5) * d_map
    center = pi0 / pi_lock
    width = 0.05
    vals_map = np.exp(-((nodes_map - center) ** 2) / (2 * width**2))
    vals_map /= np.sum(vals_map) * d_map
    vals_dir = vals_map / pi_lock

    g_loc = profiles.localization_profile(pi_lock, 1.0)
    coeffs_dir = fp.coefficients_pi(g_loc)
    coeffs_map = fp.FpCoefficients(
        Chart.PI, mu=lambda q, t: np.zeros_like(q), D=resc.diffusion
    )
    f_dir = fp.Field(Chart.PI, nodes_dir, d_dir, vals_dir)
    f_map = fp.Field(Chart.PI, nodes_map, d_map, vals_map)
    t_direct = t_scaled / resc.time_scale
    r_dir = fp.solve(f_dir, coeffs_dir, t_direct)
    r_map = fp.solve(f_map, coeffs_map, t_scaled)
    back_nodes, back_vals = resc.map_density_from_unit(nodes_map, r_map.final.values)
    l1 = float(np.sum(np.abs(r_dir.final.values - back_vals)) * d_dir)
    mass_above = 0.0  # the lock point is the domain's zero-flux face
    return l1, mass_above


_RUNNERS = {
    "trajectory": _exp_trajectory,
    "master": _exp_master,
    "fp-analytic-check": _exp_fp_analytic,
    "ratchet-spacetime": _exp_ratchet_spacetime,
    "seebeck": _exp_seebeck,
    "localization": _exp_localization,
}


def run_config(cfg) -> dict:
    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    payload = _RUNNERS[cfg["experiment"]](cfg, out)
    summary = {
        "experiment": cfg["experiment"],
        "config_hash": _config_hash(cfg),
        "seed": cfg["run"]["seed"],
        "version": __version__,
        "backend": _kernels.BACKEND,
        "config": {k: v for k, v in cfg.items() if k not in ("run",)},
        **payload,
    }
    write_json(out / "summary.json", summary)
    return summary


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zenowalk", description="weak-measurement walk and ratchet experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="show the experiment catalog")
    runp = sub.add_parser("run", help="run a scenario config")
    runp.add_argument("config", help="path to the config file")
    runp.add_argument("--seed", type=int, default=None, help="override run.seed")
    runp.add_argument("--out", default=None, help="override run.out")
    runp.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override any config key (repeatable)",
    )
    args = parser.parse_args(argv)

    if args.command == "list":
        for entry in list_experiments():
            print(f"{entry['name']}: {entry['description']}")
            for fname, schema in entry["outputs"].items():
                print(f"    {fname}: {schema}")
        return 0

    try:
        cfg = _parse_config(args.config, args.override, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (fp.CflError, fp.MassDriftError, MassOverflowError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    checks = summary.get("checks", {})
    for name, ok in sorted(checks.items()):
        print(f"check {name}: {'pass' if ok else 'FAIL'}")
    print(f"summary: {Path(cfg['run']['out']) / 'summary.json'}")
    return 0 if all(checks.values()) else 4


if __name__ == "__main__":
    sys.exit(main())
