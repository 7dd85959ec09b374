"""Command line: ``simulate``, ``bracket-check``, ``verify-reduction``, ``forms-check``.

Configs are JSON objects or ``key = value`` text (one key per line, ``#``
comments, values parsed as JSON when they parse and kept as strings
otherwise).  Unknown keys are rejected.  Exit codes: 0 success, 1 a numerical
abort or a failed check, 2 a config, usage or scenario error.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import io
import json
import os
import re
import sys
import tempfile

import numpy as np

from . import brackets as br
from . import dynamics as dy
from . import integrators as it
from . import iterated_bundles as ib
from . import lie_core as lc
from . import reduction as rd
from .errors import ExpressionError, IntegrationAbort, NumericalDomainError, RegularityError, UsageError
from .expr import parse


class ConfigError(UsageError):
    """A config file is unreadable, malformed or has unknown or missing keys."""


SIMULATE_KEYS = ("group", "space", "formulation", "observable", "initial", "scheme", "dt", "t_final",
                 "monitors", "out", "seed", "scale")
BRACKET_KEYS = ("brackets", "groups", "samples", "seed", "printed", "tests", "out")
REDUCTION_KEYS = ("scenarios", "seed", "out")
FORMS_KEYS = ("forms", "groups", "samples", "seed", "out")

_KEYS = {"simulate": SIMULATE_KEYS, "bracket-check": BRACKET_KEYS,
         "verify-reduction": REDUCTION_KEYS, "forms-check": FORMS_KEYS}

FORM_TOLERANCE = 1e-9


# --- config -----------------------------------------------------------------


def parse_config_text(text):
    """A JSON object, or ``key = value`` lines."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            cfg = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        return cfg
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key in cfg:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            cfg[key] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key] = value
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def validate_config(command, cfg, required=()):
    allowed = _KEYS[command]
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys {unknown} for {command}; allowed: {list(allowed)}")
    missing = [k for k in required if k not in cfg]
    if missing:
        raise ConfigError(f"{command} config is missing keys {missing}")
    return cfg


def _as_list(value, key):
    if isinstance(value, str):
        return [value]
    if isinstance(value, list):
        return value
    raise ConfigError(f"{key} must be a string or a list")


def _as_int(value, key):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ConfigError(f"{key} must be a non-negative integer")
    return value


def _as_float(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number")
    return float(value)


# --- output -----------------------------------------------------------------


def write_atomic(path, text):
    """Write via a temporary file in the target directory and rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text, out):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


def fmt(x):
    """17 significant digits, locale independent."""
    return format(float(x), ".17g")


# --- simulate ---------------------------------------------------------------


def _initial_point(f, G, cfg, seed):
    space = f.space
    rng = np.random.default_rng(seed)
    p = ib.random_point(space, G.id, rng, _as_float(cfg.get("scale", 0.5), "scale"))
    init = cfg.get("initial")
    if init is None:
        return p
    names, kinds = ib.slot_names(space), ib.slot_kinds(space)
    if isinstance(init, list):
        sizes = [G.matrix_size ** 2 if k == "G" else G.dim for k in kinds]
        if len(init) != sum(sizes):
            raise ConfigError(f"initial needs {sum(sizes)} numbers for {space} on {G.id} "
                              f"(slots {names}), got {len(init)}")
        parts, k = {}, 0
        for name, size in zip(names, sizes):
            parts[name] = init[k:k + size]
            k += size
        init = parts
    if not isinstance(init, dict):
        raise ConfigError("initial must be a flat list or a mapping from slot name to values")
    unknown = sorted(set(init) - set(names))
    if unknown:
        raise ConfigError(f"initial values for unknown slots {unknown}; {space} has {names}")
    changes = {}
    for name, value in init.items():
        try:
            v = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"initial {name} must be numeric") from None
        if name == "g":
            changes[name] = lc.element(G, v.reshape(G.matrix_size, G.matrix_size))
        else:
            if v.shape != (G.dim,):
                raise ConfigError(f"initial {name} needs {G.dim} numbers")
            changes[name] = v
    return p.replace(**changes)


def _point(s):
    return s.point if isinstance(s, dy.FlowState) else s


def monitor_specs(f, obs, G, entries):
    """``(column names, fn(state) -> values)`` per monitor entry.

    ``energy`` is the observable for Hamiltonian runs and the energy invariant
    for Lagrangian ones.  ``momentum:<action>`` expands to one column per
    component; Lagrangian runs take tangent-lift actions, Hamiltonian runs
    symplectic ones.  ``name=source`` or a bare source is an observable
    expression on the run's space.
    """
    lag = f.role == "lagrangian"
    specs = []
    for entry in _as_list(entries, "monitors"):
        if not isinstance(entry, str):
            raise ConfigError("monitor entries must be strings")
        if entry == "energy":
            if lag:
                specs.append((["energy"], lambda s: [dy.energy_invariant(f, obs, s)]))
            else:
                specs.append((["energy"], lambda s: [obs.value(s)]))
        elif entry.startswith("momentum:"):
            a = rd.get_action(entry.split(":", 1)[1])
            if a.space != f.space:
                raise ConfigError(f"monitor {entry}: {a.id} acts on {a.space}, the run is on {f.space}")
            if (a.kind == "lift") != lag:
                want = "tangent-lift" if lag else "symplectic"
                raise ConfigError(f"monitor {entry}: {f.id} runs need a {want} action")
            parts = 2 if a.subgroup in ("Gg", "Gg*") else 1
            cols = [f"J[{a.id}]_{k}" for k in range(parts * G.dim)]
            specs.append((cols, lambda s, a=a: np.concatenate(rd.momentum(a, s))))
        else:
            name, sep, source = entry.partition("=")
            if not sep or not re.fullmatch(r"\w+", name.strip()):
                name, source = entry, entry
            m = parse(source.strip(), f.space)
            specs.append(([name.strip()], lambda s, m=m: [m.value(_point(s))]))
    return specs


def csv_header(space, G, monitor_columns=()):
    cols = ["t"]
    for name, kind in zip(ib.slot_names(space), ib.slot_kinds(space)):
        if kind == "G":
            m = G.matrix_size
            cols += [f"g_{i}{j}" for i in range(m) for j in range(m)]
        else:
            cols += [f"{name}_{i}" for i in range(G.dim)]
    return cols + list(monitor_columns)


def point_row(p):
    out = []
    for v in p.slots:
        out += list(np.ravel(v.matrix if isinstance(v, lc.GroupElement) else v))
    return out


def trajectory_csv(traj, space, G, specs):
    columns = [c for cols, _ in specs for c in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(space, G, columns))
    for t, s in zip(traj.times, traj.states):
        row = [t] + point_row(_point(s))
        for _, fn in specs:
            row += list(fn(s))
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def read_trajectory_csv(path_or_text, space, group):
    """``(times, points, monitors)`` from an emitted CSV; ``monitors`` maps column to array."""
    G = lc.get_group(group)
    text = path_or_text
    if "\n" not in path_or_text:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    header, data = rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
    base = csv_header(space, G)
    if header[:len(base)] != base:
        raise UsageError(f"CSV header does not match {space} on {group}")
    points = []
    for r in data:
        k, slots = 1, []
        for kind in ib.slot_kinds(space):
            if kind == "G":
                m = G.matrix_size
                slots.append(lc.element(G, r[k:k + m * m].reshape(m, m)))
                k += m * m
            else:
                slots.append(r[k:k + G.dim].copy())
                k += G.dim
        points.append(ib.BundlePoint(space, group, tuple(slots)))
    monitors = {c: data[:, i] for i, c in enumerate(header) if i >= len(base)}
    return data[:, 0], points, monitors


def cmd_simulate(cfg, seed=None, out=None):
    """Integrate one run; returns the CSV text (also written to ``out``)."""
    validate_config("simulate", cfg, ("group", "formulation", "observable", "dt", "t_final"))
    G = lc.get_group(cfg["group"])
    f = dy.get_formulation(cfg["formulation"])
    if "space" in cfg and cfg["space"] != f.space:
        raise ConfigError(f"{f.id} lives on {f.space}, config says space {cfg['space']!r}")
    if not isinstance(cfg["observable"], str):
        raise ConfigError("observable must be a source string")
    obs = parse(cfg["observable"], f.space)
    seed = _as_int(cfg.get("seed", 0) if seed is None else seed, "seed")
    p0 = _initial_point(f, G, cfg, seed)
    scheme = it.Scheme(cfg.get("scheme", "rkmk4"), _as_float(cfg["dt"], "dt"), _as_float(cfg["t_final"], "t_final"))
    specs = monitor_specs(f, obs, G, cfg.get("monitors", []))
    traj = it.integrate(f, obs, p0, scheme)
    text = trajectory_csv(traj, f.space, G, specs)
    _emit(text, out or cfg.get("out"))
    return text


# --- checks -----------------------------------------------------------------


def _pool_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _bracket_job(args):
    bid, group, samples, seed, printed, tests = args
    return br.bracket_suite(bid, group, samples, seed, printed, tests)


def cmd_bracket_check(cfg, seed=None, out=None, jobs=1):
    """Rows ``{bracket_id, group, printed, test, max_residual, tolerance, pass}``."""
    validate_config("bracket-check", cfg)
    ids = cfg.get("brackets", "all")
    ids = list(br.BRACKET_IDS) if ids == "all" else _as_list(ids, "brackets")
    for bid in ids:
        br.get_bracket(bid)
    groups = _as_list(cfg.get("groups", "so3"), "groups")
    for g in groups:
        lc.get_group(g)
    samples = _as_int(cfg.get("samples", 5), "samples")
    seed = _as_int(cfg.get("seed", 0) if seed is None else seed, "seed")
    printed = cfg.get("printed", False)
    if not isinstance(printed, bool):
        raise ConfigError("printed must be true or false")
    tests = tuple(_as_list(cfg.get("tests", list(br.TESTS)), "tests"))
    jobs_ = [(bid, g, samples, seed, printed, tests) for g in groups for bid in ids]
    rows = [r for res in _pool_map(_bracket_job, jobs_, jobs) for r in res]
    _emit(_json({"pass": all(r["pass"] for r in rows), "results": rows}), out or cfg.get("out"))
    return rows


def _scenario(entry, seed):
    sc = rd.get_scenario(entry) if isinstance(entry, str) else rd.scenario_from_dict(entry)
    return sc if seed is None else rd.with_overrides(sc, seed=seed)


def _reduction_job(sc):
    return rd.verify_reduction(sc).as_dict()


def _safe_name(sid):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", sid)


def cmd_verify_reduction(cfg, seed=None, out=None, jobs=1):
    """Run scenarios (all shipped ones by default); reports ordered by scenario id.

    ``out`` ending in a path separator or naming a directory receives one
    ``<id>.json`` per scenario plus ``summary.json``; otherwise it is the
    aggregate report file.
    """
    validate_config("verify-reduction", cfg)
    entries = cfg.get("scenarios", "all")
    entries = list(rd.SCENARIOS) if entries == "all" else _as_list(entries, "scenarios")
    if "seed" in cfg and seed is None:
        seed = _as_int(cfg["seed"], "seed")
    scenarios = sorted((_scenario(e, seed) for e in entries), key=lambda sc: sc.id)
    if len({sc.id for sc in scenarios}) != len(scenarios):
        raise ConfigError("scenario ids must be unique")
    reports = _pool_map(_reduction_job, scenarios, jobs)
    summary = {"pass": all(r["pass"] for r in reports), "reports": reports}
    out = out or cfg.get("out")
    if out and (out.endswith(os.sep) or os.path.isdir(out)):
        for r in reports:
            write_atomic(os.path.join(out, _safe_name(r["scenario_id"]) + ".json"), _json(r))
        write_atomic(os.path.join(out, "summary.json"), _json(summary))
    else:
        _emit(_json(summary), out)
    return reports


def cmd_forms_check(cfg, seed=None, out=None, jobs=1):
    """Rows ``{form, group, check, max_residual, tolerance, pass}``."""
    validate_config("forms-check", cfg)
    forms = cfg.get("forms", "all")
    forms = list(rd.ORBIT_FORMS) if forms == "all" else _as_list(forms, "forms")
    for form in forms:
        if form not in rd.ORBIT_FORMS and form not in rd.ORBIT_FORMS.values():
            raise ConfigError(f"unknown form {form!r}; expected one of {list(rd.ORBIT_FORMS)}")
    groups = _as_list(cfg.get("groups", "so3"), "groups")
    for g in groups:
        lc.get_group(g)
    samples = _as_int(cfg.get("samples", 100), "samples")
    seed = _as_int(cfg.get("seed", 0) if seed is None else seed, "seed")
    rows = []
    for g in groups:
        for form in forms:
            for check, v in rd.orbit_form_check(form, g, samples, seed).items():
                v = float(v)
                rows.append({"form": form, "group": g, "check": check, "max_residual": v,
                             "tolerance": FORM_TOLERANCE, "pass": v <= FORM_TOLERANCE})
    _emit(_json({"pass": all(r["pass"] for r in rows), "results": rows}), out or cfg.get("out"))
    return rows


# --- entry point ------------------------------------------------------------

_COMMANDS = {"simulate": cmd_simulate, "bracket-check": cmd_bracket_check,
             "verify-reduction": cmd_verify_reduction, "forms-check": cmd_forms_check}


def build_parser():
    ap = argparse.ArgumentParser(prog="liebundles", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name == "simulate", help="JSON or key = value config file")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for independent checks")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config) if args.config else {}
        fn = _COMMANDS[args.command]
        if args.command == "simulate":
            fn(cfg, args.seed, args.out)
            return 0
        rows = fn(cfg, args.seed, args.out, args.jobs)
    except IntegrationAbort as exc:
        print(f"error: integration aborted: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalDomainError, RegularityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if all(r["pass"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
