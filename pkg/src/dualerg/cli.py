"""Command-line experiment runner.

Subcommands
-----------
``diagnose``         run scheme checks, projection estimates and probes on a model
``reproduce``        scripted reproductions compared against shipped fixtures
``export-plotdata``  decay curves, tightness profiles and moduli tables as CSV
``list-models``      registry names, parameters and schemes

Exit codes: 0 when every requested certification passes (inconclusive
results are allowed unless ``--strict``), 1 on a certification failure or
fixture mismatch, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .averaging import verify_as1, verify_as3
from .core import PLATEAU_TOL, SignedMeasure, dumps, profile_csv, tightness_profile
from .equicontinuity import (average_family, beta0_equicontinuity_probe, e_property_probe,
                             theorem_eerg_equivalences)
from .ergodic import (default_atoms, default_function_probes, estimate_projection, fixed_space,
                      projection_from_fixed_spaces, separation_test)
from .models import REGISTRY, build
from .reproductions import REPRODUCTIONS

SCHEMA_VERSION = 1
CHECKS = ("as1", "as3", "projection", "e-property", "beta0", "equivalences")
SERIES = ("as3", "projection-error", "tightness", "moduli")
DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "model": {"name": "irreducible3", "params": {}},
    "scheme": {"name": "cesaro", "n_max": 1024, "r_grid": None, "t_grid": None, "grid": None},
    "checks": ["as1", "as3", "projection"],
    "series": list(SERIES),
    "topology": "sigma",
    "tol": PLATEAU_TOL,
    "seed": 0,
    "strict": False,
}


class ConfigError(ValueError):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _names(text, allowed, what):
    items = [x.strip() for x in text.split(",") if x.strip()]
    bad = [x for x in items if x not in allowed]
    if bad:
        raise ConfigError(f"unknown {what} {bad}; choose from {list(allowed)}")
    return items


def _params(pairs):
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise ConfigError(f"model parameter {p!r} is not key=value")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def resolve_config(args):
    """Merge defaults, the JSON config file and flags (flags win)."""
    cfg = json.loads(json.dumps(DEFAULTS))
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {doc.get('schema_version')}")
        unknown = set(doc) - set(DEFAULTS) - {"out"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for k, v in doc.items():
            if isinstance(v, dict) and isinstance(cfg.get(k), dict):
                cfg[k].update(v)
            else:
                cfg[k] = v
    if getattr(args, "model", None):
        cfg["model"]["name"] = args.model
    if getattr(args, "param", None):
        cfg["model"]["params"].update(_params(args.param))
    if getattr(args, "scheme", None):
        cfg["scheme"]["name"] = args.scheme
    if getattr(args, "n_max", None) is not None:
        cfg["scheme"]["n_max"] = args.n_max
    if getattr(args, "r_grid", None):
        cfg["scheme"]["r_grid"] = _floats(args.r_grid)
    if getattr(args, "t_grid", None):
        cfg["scheme"]["t_grid"] = _floats(args.t_grid)
    if getattr(args, "check", None) is not None:
        cfg["checks"] = _names(args.check, CHECKS, "checks")
    if getattr(args, "series", None) is not None:
        cfg["series"] = _names(args.series, SERIES, "series")
    if getattr(args, "topology", None):
        cfg["topology"] = args.topology
    if getattr(args, "tol", None) is not None:
        cfg["tol"] = args.tol
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "strict", False):
        cfg["strict"] = True
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg["model"]["name"] not in REGISTRY:
        raise ConfigError(f"unknown model {cfg['model']['name']!r}; known: {sorted(REGISTRY)}")
    if not (isinstance(cfg["tol"], (int, float)) and cfg["tol"] > 0):
        raise ConfigError("tol must be positive")
    if not (isinstance(cfg["scheme"]["n_max"], int) and cfg["scheme"]["n_max"] >= 1):
        raise ConfigError("n_max must be a positive integer")
    if cfg["topology"] not in ("sigma", "sigma_prime", "beta0"):
        raise ConfigError("topology is sigma, sigma_prime or beta0")
    _names(",".join(cfg["checks"]), CHECKS, "checks")
    _names(",".join(cfg["series"]), SERIES, "series")


def config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _setup(cfg):
    try:
        model = build(cfg["model"]["name"], **cfg["model"]["params"])
        sc = cfg["scheme"]
        S, spec = model.scheme(sc["name"], n_max=sc["n_max"], r_grid=sc["r_grid"], t_grid=sc["t_grid"],
                               grid=sc.get("grid"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return model, S, spec


def _provenance(cfg, model):
    sp = model.space
    return {"schema_version": SCHEMA_VERSION, "config": cfg, "config_hash": config_hash(cfg),
            "truncation": {"level": sp.truncation_level, "states": len(sp),
                           "exhaustion_levels": len(sp.exhaustion), "finite": sp.finite}}


# --------------------------------------------------------------------------
# diagnose
# --------------------------------------------------------------------------


def run_diagnose(cfg):
    """Run the requested checks; returns ``(report, csv_files)``."""
    model, S, spec = _setup(cfg)
    space = model.space
    probes = default_function_probes(space) + list(model.probes.values())
    atoms = default_atoms(space)
    results, files = {}, {}
    f0 = probes[1] if len(probes) > 1 else probes[0]
    mu0 = SignedMeasure.atom(atoms[0])

    if "as1" in cfg["checks"]:
        r = verify_as1(spec, spec.semigroup(S, space), probes, [SignedMeasure.atom(a) for a in atoms])
        results["as1"] = {**r, "status": "pass" if r["passed"] else "fail"}
    if "as3" in cfg["checks"]:
        r = verify_as3(spec, S, f0, mu0)
        results["as3"] = {**r, "status": "pass" if r["passed"] else "fail"}
        rows = ["index,function_decay,markov_bound,identity_residual"]
        for i, a in enumerate(r["grid"]):
            b = repr(r["markov_bound"][i]) if r["markov_bound"] else ""
            rows.append(f"{a},{r['function_decay'][i]!r},{b},{r['identity_residuals'][i]!r}")
        files["as3.csv"] = "\n".join(rows) + "\n"
    if "projection" in cfg["checks"]:
        est = estimate_projection(S, spec, cfg["topology"], function_probes=probes, atoms=atoms, tol=cfg["tol"])
        results["projection"] = {**est.to_dict(), "plateau": est.status,
                                 "status": "pass" if est.certified else "inconclusive"}
        dl = [e for e in est.log if "distance" in e]
        files["convergence.csv"] = profile_csv([e["distance"] for e in dl], [e["index"] for e in dl],
                                               ("index", "distance"))
    if "e-property" in cfg["checks"]:
        fam = average_family(S, spec)
        tables = {}
        ok = True
        rows = ["probe,point,radius,modulus"]
        for j, f in enumerate(probes):
            name = next((k for k, v in model.probes.items() if v is f), f"probe{j}")
            t = e_property_probe(fam, f)
            tables[name] = t.to_dict()
            ok = ok and all(t.holds.values())
            for x in t.moduli:
                for rad, m in zip(t.radii[x], t.moduli[x]):
                    rows.append(f"{name},{x},{rad!r},{m!r}")
        results["e-property"] = {"status": "pass" if ok else "fail", "tables": tables}
        files["moduli.csv"] = "\n".join(rows) + "\n"
    if "beta0" in cfg["checks"]:
        r = beta0_equicontinuity_probe(average_family(S, spec), atoms[:1], space=space)
        r["index"] = {repr(k): v for k, v in r["index"].items()}
        results["beta0"] = {**r, "status": "pass" if r["equicontinuous"] else "inconclusive"}
    if "equivalences" in cfg["checks"]:
        rep = theorem_eerg_equivalences(S, spec, function_probes=probes[: len(default_function_probes(space))])
        d = rep.to_dict()
        d["details"] = {k: v for k, v in d["details"].items() if k != "P"}
        if rep.matrix is None:
            status = "inconclusive"
        elif rep.consistent:
            status = "pass"
        else:
            status = "fail"
        results["equivalences"] = {**d, "status": status}

    statuses = [r["status"] for r in results.values()]
    failed = "fail" in statuses or (cfg["strict"] and "inconclusive" in statuses)
    report = {**_provenance(cfg, model), "results": results,
              "overall": "fail" if failed else "pass",
              "note": "plateau certificates are evidence on a truncation, not proven limits"}
    return report, files


def _write(out, name, text):
    p = Path(out) / name
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    return p


def cmd_diagnose(args):
    cfg = resolve_config(args)
    report, files = run_diagnose(cfg)
    text = dumps(report) + "\n"
    if args.out:
        _write(args.out, "report.json", text)
        for name, body in files.items():
            _write(args.out, name, body)
    else:
        sys.stdout.write(text)
    lines = [f"{k}: {v['status']}" for k, v in report["results"].items()]
    print("\n".join(lines) + f"\noverall: {report['overall']}", file=sys.stderr)
    return 1 if report["overall"] == "fail" else 0


# --------------------------------------------------------------------------
# reproduce
# --------------------------------------------------------------------------


def cmd_reproduce(args):
    names = list(REPRODUCTIONS) if args.example == "all" else [args.example]
    status = 0
    bundles = {}
    for name in names:
        kwargs = {"seed": args.seed} if name == "cycles" and args.seed is not None else {}
        b = REPRODUCTIONS[name](**kwargs)
        bundles[name] = b
        print(f"== {name} ==")
        print("\n".join(b["summary"]))
        if not b["passed"]:
            print("divergent: " + "; ".join(b["divergent"]))
            status = 1
        print()
    if args.out:
        _write(args.out, "reproduce.json", dumps(bundles) + "\n")
    return status


# --------------------------------------------------------------------------
# export-plotdata
# --------------------------------------------------------------------------


def run_export(cfg):
    model, S, spec = _setup(cfg)
    space = model.space
    files = {}
    series = cfg["series"]
    if not series:
        return files
    probes = default_function_probes(space) + list(model.probes.values())
    atoms = default_atoms(space)
    if "as3" in series:
        f0 = probes[1] if len(probes) > 1 else probes[0]
        r = verify_as3(spec, S, f0, SignedMeasure.atom(atoms[0]))
        rows = ["index,value,bound"]
        for i, a in enumerate(r["grid"]):
            b = repr(r["markov_bound"][i]) if r["markov_bound"] else ""
            rows.append(f"{a},{r['function_decay'][i]!r},{b}")
        files["as3_decay.csv"] = "\n".join(rows) + "\n"
    if "projection-error" in series:
        est = estimate_projection(S, spec, cfg["topology"], function_probes=probes, atoms=atoms, tol=cfg["tol"])
        p, ref = est.P.matrix, est.status
        if not est.certified:
            # fall back to the projection built from the fixed spaces when they separate
            T = spec.semigroup(S)
            fun, meas = fixed_space(T, "function"), fixed_space(T, "measure")
            if not T.ghosts and separation_test(fun, meas)["both"]:
                p, ref = projection_from_fixed_spaces(fun, meas), "fixed-space"
        rows = ["index,op_norm,max_entry,status"]
        for a in spec.grid:
            d = spec.matrix(S, a)[: S.n] - p[: S.n]
            rows.append(f"{a},{float(np.abs(d).sum(axis=1).max())!r},{float(np.abs(d).max())!r},{ref}")
        files["projection_error.csv"] = "\n".join(rows) + "\n"
    if "tightness" in series:
        fam = [op.matrix for op in average_family(S, spec)]
        rows = ["atom,level,outside_mass"]
        for x in atoms:
            i = space.index[x]
            prof = tightness_profile([SignedMeasure.from_vector(S.ext_states, m[i]) for m in fam], space)
            rows += [f"{x},{m},{v!r}" for m, v in enumerate(prof)]
        files["tightness.csv"] = "\n".join(rows) + "\n"
    if "moduli" in series:
        fam = average_family(S, spec)
        rows = ["probe,point,radius,modulus"]
        for j, f in enumerate(probes):
            t = e_property_probe(fam, f)
            for x in t.moduli:
                rows += [f"probe{j},{x},{r!r},{m!r}" for r, m in zip(t.radii[x], t.moduli[x])]
        files["moduli.csv"] = "\n".join(rows) + "\n"
    manifest = {**_provenance(cfg, model), "files": sorted(files)}
    files["manifest.json"] = dumps(manifest) + "\n"
    return files


def cmd_export(args):
    cfg = resolve_config(args)
    files = run_export(cfg)
    out = args.out or "."
    for name, body in files.items():
        _write(out, name, body)
    print(f"wrote {len(files)} file(s) to {out}", file=sys.stderr)
    return 0


def cmd_list_models(args):
    for name in sorted(REGISTRY):
        try:
            m = build(name) if name != "irreducible_chain" else None
        except Exception:  # noqa: BLE001
            m = None
        if m is None:
            print(f"{name}: needs params (P=...)")
            continue
        schemes = sorted(set(m.schemes) | ({"cesaro", "abel"} if m.rate is None else {"time"}))
        print(f"{name}: {len(m.space)} states, params {m.params}, schemes {schemes}")
    return 0


# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="dualerg", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, series=False):
        sp.add_argument("--model", help="registry name (see list-models)")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter (JSON value)")
        sp.add_argument("--scheme", help="cesaro, abel, time or a model-specific scheme name")
        sp.add_argument("--n-max", type=int, dest="n_max", help="largest Cesaro index / time")
        sp.add_argument("--r-grid", dest="r_grid", help="comma-separated Abel parameters in [0, 1)")
        sp.add_argument("--t-grid", dest="t_grid", help="comma-separated positive times")
        sp.add_argument("--topology", choices=("sigma", "sigma_prime", "beta0"))
        sp.add_argument("--tol", type=float, help="plateau tolerance")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--config", help="JSON config document; flags override it")
        sp.add_argument("--out", help="output directory")
        if series:
            sp.add_argument("--series", help=f"comma-separated subset of {','.join(SERIES)} (empty for none)")
        else:
            sp.add_argument("--check", help=f"comma-separated subset of {','.join(CHECKS)}")
            sp.add_argument("--strict", action="store_true", help="treat inconclusive results as failures")

    d = sub.add_parser("diagnose", help="run checks on a model and write a JSON report")
    common(d)
    d.set_defaults(func=cmd_diagnose)
    r = sub.add_parser("reproduce", help="scripted reproductions compared against fixtures")
    r.add_argument("example", choices=sorted(REPRODUCTIONS) + ["all"])
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reproduce)
    e = sub.add_parser("export-plotdata", help="write CSV series for plotting")
    common(e, series=True)
    e.set_defaults(func=cmd_export)
    ls = sub.add_parser("list-models", help="list registry models")
    ls.set_defaults(func=cmd_list_models)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
