"""Command-line front end: JSON in, JSON/CSV/SVG out.

Exit codes: 0 success, 1 a check ran and reported a negative result (wheel-check),
2 schema or input error, 3 genericity error (with a suggested perturbation),
4 invariant breach (with a reproduction bundle).  Every error path prints one JSON
diagnostic line on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .attractor import AttractorGeometry, AttractorPoint, check_tree, enumerate_trees, tree_to_json
from .errors import GenericityError, InvariantError
from .group import (LineOrder, PhaseOrder, exp_lie, factorization_to_json, factorize_logs,
                    group_product, ray_blocks)
from .lattice import (DegreeFunction, LatticeError, RationalCone, SkewLattice, quadratic_refinements)
from .liealg import DivFreeBackend, LieElement, LieError, Truncation, make_backend
from .quiver import (QuiverSpec, dt_invariants, kronecker_quiver, quiver_from_lattice, standard_central_charge,
                     table_to_csv, table_to_json)
from .scalars import QRational
from .suites import SUITES, run_suites
from .wheel import (WheelError, WheelOfCones, build_polygon_wheel, check_admissible, check_Z_compatible,
                    construct_compatible_wheel, scan_box)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_SCHEMA, EXIT_GENERICITY, EXIT_INVARIANT = 0, 1, 2, 3, 4
COMMANDS = ("factorize", "kronecker", "dt", "trees", "verify", "wheel-check", "refinements")


class SchemaError(ValueError):
    def __init__(self, message: str, path=()):
        super().__init__(message)
        self.path = list(path)


class CheckFailed(Exception):
    def __init__(self, result: dict):
        super().__init__("check failed")
        self.result = result


def load_schema(name: str = "job.v1.schema.json") -> dict:
    return json.loads(resources.files("wallcross").joinpath("schemas", name).read_text())


def validate_config(cfg) -> None:
    v = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(v.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errs:
        e = errs[0]
        raise SchemaError(e.message, e.absolute_path)


def read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not JSON: {exc.msg} at line {exc.lineno}") from None
    validate_config(cfg)
    return cfg


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- config decoding


def _rat(x) -> Fraction:
    return Fraction(x) if isinstance(x, str) else Fraction(int(x))


def _ratvec(xs) -> tuple:
    return tuple(_rat(x) for x in xs)


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise SchemaError(f"'{key}' is required for this command", [key])
    return cfg[key]


def _lattice(cfg: dict) -> SkewLattice:
    lat = _need(cfg, "lattice")
    L = SkewLattice(lat["gram"])
    if "rank" in lat and lat["rank"] != L.rank:
        raise SchemaError("rank does not match the gram matrix", ["lattice", "rank"])
    return L


def _truncation(cfg: dict, n: int) -> Truncation:
    k = _need(cfg, "k")
    cone = RationalCone(n, tuple(tuple(g) for g in cfg["cone"]["generators"])) if "cone" in cfg else RationalCone.octant(n)
    phi = DegreeFunction(cfg["phi"]["coeffs"]) if "phi" in cfg else DegreeFunction((1,) * n)
    return Truncation(cone, phi, k)


def _backend(cfg: dict, L: SkewLattice):
    kind = cfg.get("backend", "torus")
    if kind == "divfree" and "pairing" in cfg:
        return DivFreeBackend(cfg["pairing"])
    return make_backend(kind, L)


def _coeff(be, c):
    if isinstance(be, DivFreeBackend):
        if not isinstance(c, list):
            raise SchemaError("divfree coefficients are rational vectors")
        return _ratvec(c)
    if isinstance(c, list):
        raise SchemaError("vector coefficients need the divfree backend")
    if be.kind == "quantum":
        return c if isinstance(c, str) else int(c)
    return _rat(c)


def _lie(be, terms) -> LieElement:
    return LieElement(be, [(tuple(t["gamma"]), _coeff(be, t["coeff"])) for t in terms])


def _order(cfg: dict, tr: Truncation):
    o = _need(cfg, "order")
    if o["type"] == "phase":
        return PhaseOrder(_ratvec(o["re"]), _ratvec(o["im"]), tr.cone)
    return LineOrder(_ratvec(o["y_start"]), _ratvec(o["y_end"]))


def _omega_is_integral(c) -> bool:
    if isinstance(c, QRational):
        return c.is_laurent() and all(x.denominator == 1 for x in c.laurent_coeffs().values())
    return Fraction(c).denominator == 1


def _z_suggestion(re, im):
    return {"re": [str(x) for x in re], "im": [str(Fraction(x) + Fraction(1, 97) * (i + 1) ** 2) for i, x in enumerate(im)]}


# ---------------------------------------------------------------- commands


def cmd_factorize(cfg: dict, args) -> tuple[dict, dict]:
    L = _lattice(cfg)
    tr = _truncation(cfg, L.rank)
    be = _backend(cfg, L)
    if "log" in cfg:
        g = exp_lie(_lie(be, cfg["log"]), tr)
    else:
        g = group_product([exp_lie(_lie(be, f), tr) for f in _need(cfg, "factors")], be, tr)
    order = _order(cfg, tr)
    try:
        ray_blocks(tr, order)
    except GenericityError as exc:
        o = cfg["order"]
        sug = _z_suggestion(o["re"], o["im"]) if o["type"] == "phase" else None
        raise GenericityError(str(exc), suggestion=sug) from None
    fs = factorize_logs(g, order)
    if group_product([exp_lie(Lg, tr) for _, Lg in fs], be, tr) != g:
        raise InvariantError("ordered product of the factors does not reproduce g")
    out = {"version": 1, "command": "factorize", "backend": be.kind, "k": tr.k, "factors": factorization_to_json(fs)}
    files = {"factorization.json": dumps(out)}
    if args.svg and L.rank == 2 and cfg["order"]["type"] == "phase":
        labels = {}
        for r, Lg in fs:
            c = Lg.terms.get(tuple(r))
            labels[tuple(r)] = be.render_coeff(c) if c is not None and not isinstance(c, tuple) else "*"
        files["rays.svg"] = ("ray", labels, _ratvec(cfg["order"]["re"]), _ratvec(cfg["order"]["im"]), "factorization")
    return out, files


def _dt_run(Q: QuiverSpec, Z, k: int, quantum: bool, pipeline: str, init=None, provenance=None) -> dict:
    pipes = ("rays", "trees") if pipeline == "both" else (pipeline,)
    tables = {p: dt_invariants(Q, Z, k, p, quantum, init) for p in pipes}
    first = tables[pipes[0]]
    for p in pipes[1:]:
        if tables[p] != first:
            diff = sorted(set(first) ^ set(tables[p]) | {g for g in first if g in tables[p] and first[g] != tables[p][g]})
            raise InvariantError(f"pipelines disagree at {[list(g) for g in diff]}")
    # integrality is only expected for the canonical data
    for g, c in first.items() if init is None else ():
        if not _omega_is_integral(c):
            prov = dict(provenance or {}, gamma=list(g), omega=table_to_json({g: c})[0]["omega"], pipelines=list(pipes))
            exc = InvariantError(f"non-integral Omega{tuple(g)}")
            exc.provenance = prov
            raise exc
    return first


def _table_doc(table, k, quantum, pipeline, Q, Z) -> dict:
    return {"version": 1, "kind": "omega", "k": k, "quantum": quantum, "pipeline": pipeline, "quiver": Q.to_json(),
            "Z": {"re": [str(Fraction(x)) for x in Z[0]], "im": [str(Fraction(x)) for x in Z[1]]},
            "table": table_to_json(table)}


def _table_outputs(doc: dict, table, Z, args, title: str) -> dict:
    files = {"table.json": dumps(doc), "table.csv": table_to_csv(table)}
    if args.svg and len(Z[0]) == 2:
        files["rays.svg"] = ("ray", table, Z[0], Z[1], title)
    return files


def _quantum_flag(cfg: dict) -> bool:
    kind = cfg.get("backend", "torus")
    if kind == "divfree":
        raise SchemaError("DT tables need the torus or quantum backend", ["backend"])
    return kind == "quantum"


def cmd_kronecker(cfg: dict, args) -> tuple[dict, dict]:
    m = _need(cfg, "m")
    k = _need(cfg, "k")
    quantum = _quantum_flag(cfg)
    pipeline = cfg.get("pipeline", "rays")
    Q = kronecker_quiver(m)
    Z = standard_central_charge(2)
    table = _dt_run(Q, Z, k, quantum, pipeline, provenance={"command": "kronecker", "m": m, "k": k, "quantum": quantum})
    doc = _table_doc(table, k, quantum, pipeline, Q, Z)
    return doc, _table_outputs(doc, table, Z, args, f"Kronecker m={m}, k={k}")


def cmd_dt(cfg: dict, args) -> tuple[dict, dict]:
    k = _need(cfg, "k")
    quantum = _quantum_flag(cfg)
    pipeline = cfg.get("pipeline", "rays")
    if "quiver" in cfg:
        arrows = cfg["quiver"]["arrows"]
        Q = QuiverSpec(tuple(cfg["quiver"].get("vertices", range(1, len(arrows) + 1))), arrows)
    else:
        Q = quiver_from_lattice(_lattice(cfg))
    n = len(Q.vertices)
    Z = (_ratvec(cfg["Z"]["re"]), _ratvec(cfg["Z"]["im"])) if "Z" in cfg else standard_central_charge(n)
    if len(Z[0]) != n or len(Z[1]) != n:
        raise SchemaError("central charge length does not match the quiver", ["Z"])
    init = None
    if "initial_data" in cfg:
        be = make_backend("quantum" if quantum else "torus", Q.lattice)
        init = {tuple(t["gamma"]): _coeff(be, t["coeff"]) for t in cfg["initial_data"]}
    try:
        table = _dt_run(Q, Z, k, quantum, pipeline, init, provenance={"command": "dt", "quiver": Q.to_json(), "k": k})
    except GenericityError as exc:
        raise GenericityError(str(exc), suggestion=_z_suggestion(*Z)) from None
    doc = _table_doc(table, k, quantum, pipeline, Q, Z)
    return doc, _table_outputs(doc, table, Z, args, "DT invariants")


def cmd_trees(cfg: dict, args) -> tuple[dict, dict]:
    L = _lattice(cfg)
    tr = _truncation(cfg, L.rank)
    root = _need(cfg, "root")
    geo = AttractorGeometry(L, tr)
    try:
        p = AttractorPoint(_ratvec(root["b"]), tuple(root["gamma"]))
    except ValueError as exc:
        raise SchemaError(str(exc), ["root"]) from None
    if not tr.contains(p.gamma):
        raise SchemaError("root charge lies outside the truncation", ["root", "gamma"])
    trees = enumerate_trees(geo, p)
    for t in trees:
        try:
            check_tree(geo, t)
        except ValueError as exc:
            raise InvariantError(f"enumerated tree fails its checks: {exc}") from None
    dumps_ = [tree_to_json(t, L) for t in trees]
    out = {"version": 1, "command": "trees", "k": tr.k, "count": len(trees), "trees": dumps_}
    files = {"trees.json": dumps(out)}
    if args.svg and L.rank == 2:
        files["trees.svg"] = ("tree", dumps_, [list(q) for q in tr.points], L.gram, f"attractor trees of {list(p.gamma)}")
    return out, files


def cmd_verify(cfg: dict, args) -> tuple[dict, dict]:
    names = cfg.get("suite", ["all"])
    k = cfg.get("k", 6)
    seed = cfg.get("seed", 0)
    results = run_suites(names, k, seed)
    out = {"version": 1, "command": "verify", "k": k, "seed": seed, "suites": [r.to_json() for r in results]}
    bad = [r for r in results if not r.ok]
    if bad:
        exc = InvariantError("suite failures: " + ", ".join(r.name for r in bad))
        exc.provenance = out
        raise exc
    return out, {"verify.json": dumps(out)}


def _wheel_from_cfg(cfg: dict):
    w = _need(cfg, "wheel")
    Z = None
    if "cones" in w:
        cones = w["cones"]
        n = len(cones[0]["generators"][0]) if cones[0]["generators"] else 0
        wheel = WheelOfCones(tuple(RationalCone(n, tuple(tuple(g) for g in c["generators"])) for c in cones))
    elif "polygon" in w:
        wheel = build_polygon_wheel(w["polygon"]["P"], w["polygon"]["v"])
    else:
        c = w["compatible"]
        Z = (_ratvec(c["Z"]["re"]), _ratvec(c["Z"]["im"]))
        t = _rat(c["t"]) if "t" in c else None
        wheel = construct_compatible_wheel(Z[0], Z[1], c["S"], t=t)
    if "Z_check" in cfg:
        Z = (_ratvec(cfg["Z_check"]["re"]), _ratvec(cfg["Z_check"]["im"]))
    return wheel, Z


def cmd_wheel_check(cfg: dict, args) -> tuple[dict, dict]:
    wheel, Z = _wheel_from_cfg(cfg)
    rep = check_admissible(wheel)
    out = {"version": 1, "command": "wheel-check", "wheel": wheel.to_json(), "admissible": rep.to_json()}
    ok = rep.ok
    if Z is not None:
        zr = check_Z_compatible(wheel, *Z)
        out["Z_compatible"] = zr.to_json()
        ok = ok and zr.ok
    if cfg.get("scan"):
        res = scan_box(wheel, cfg["scan"])
        out["scan"] = {"N": cfg["scan"], "counts": res["counts"],
                       "witnesses": {k: list(v) for k, v in sorted(res["witnesses"].items())}}
        ok = ok and res["counts"].get("MultiInterval", 0) == 0
    out["ok"] = ok
    files = {"wheel.json": dumps(out)}
    if not ok:
        raise CheckFailed(out)
    return out, files


def cmd_refinements(cfg: dict, args) -> tuple[dict, dict]:
    L = _lattice(cfg)
    refs = quadratic_refinements(L)
    for r in refs:
        if not r.satisfies_identity(L):
            raise InvariantError(f"refinement {r.to_json()} violates its bilinear identity")
    if len(refs) != 2 ** (L.rank + 1):
        raise InvariantError(f"expected {2 ** (L.rank + 1)} refinements, found {len(refs)}")
    out = {"version": 1, "command": "refinements", "lattice": L.to_json(), "count": len(refs),
           "refinements": [r.to_json() for r in refs]}
    return out, {"refinements.json": dumps(out)}


HANDLERS = {
    "factorize": cmd_factorize,
    "kronecker": cmd_kronecker,
    "dt": cmd_dt,
    "trees": cmd_trees,
    "verify": cmd_verify,
    "wheel-check": cmd_wheel_check,
    "refinements": cmd_refinements,
}


# ---------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON job file (see schemas/job.v1.schema.json)")
    common.add_argument("--out", help="directory for artifacts; without it the main result goes to stdout only")
    common.add_argument("--k", type=int, help="truncation degree")
    common.add_argument("--backend", choices=("torus", "quantum", "divfree"))
    common.add_argument("--pipeline", choices=("rays", "trees", "both"))
    common.add_argument("--svg", action="store_true", help="also write rank-2 SVG pictures")
    p = argparse.ArgumentParser(prog="wallcross", description="Exact wall-crossing computations.")
    p.add_argument("--version", action="version", version=f"wallcross {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "kronecker":
            sp.add_argument("--m", type=int, help="number of arrows")
        if name == "verify":
            sp.add_argument("--suite", action="append", choices=sorted(SUITES) + ["all"])
            sp.add_argument("--seed", type=int)
        if name == "wheel-check":
            sp.add_argument("--scan", type=int, help="classify all monomials with |gamma|_inf <= N")
    return p


def _merge(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if cfg.get("command", args.command) != args.command:
        raise SchemaError(f"config is for '{cfg['command']}', not '{args.command}'", ["command"])
    cfg["command"] = args.command
    for key in ("k", "backend", "pipeline", "m", "seed", "scan"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "suite", None):
        cfg["suite"] = args.suite
    validate_config(cfg)
    return cfg


def _write(out_dir: Path, files: dict) -> list[str]:
    from . import report

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(files):
        body = files[name]
        path = out_dir / name
        if isinstance(body, tuple):
            if body[0] == "ray":
                report.ray_diagram(body[1], body[2], body[3], path, body[4])
            else:
                report.tree_diagram(body[1], body[2], body[3], path, body[4])
        else:
            path.write_text(body)
        written.append(name)
    return written


def _fail(code: int, kind: str, message: str, **extra) -> int:
    diag = {"status": "error", "exit": code, "kind": kind, "message": message, **extra}
    sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
    return code


def _bundle(cfg, args, message: str, provenance=None) -> dict:
    return {"version": __version__, "command": args.command, "config": cfg, "message": message,
            "provenance": provenance}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail(EXIT_SCHEMA, "usage", "invalid command line")
    cfg: dict = {}
    out_dir = Path(args.out) if args.out else None
    try:
        cfg = _merge(read_config(args.config), args)
        if args.svg and out_dir is None:
            raise SchemaError("--svg needs --out", ["svg"])
        result, files = HANDLERS[args.command](cfg, args)
    except SchemaError as exc:
        return _fail(EXIT_SCHEMA, "schema", str(exc), path=[str(x) for x in exc.path])
    except (LatticeError, LieError, WheelError) as exc:
        sug = getattr(exc, "suggestion", None)
        if sug is not None:
            return _fail(EXIT_GENERICITY, "genericity", str(exc), suggestion=sug)
        return _fail(EXIT_SCHEMA, "input", str(exc))
    except GenericityError as exc:
        return _fail(EXIT_GENERICITY, "genericity", str(exc), suggestion=_jsonable(exc.suggestion))
    except CheckFailed as exc:
        if out_dir is not None:
            _write(out_dir, {"wheel.json": dumps(exc.result)})
        sys.stdout.write(dumps(exc.result))
        return _fail(EXIT_CHECK_FAILED, "check", "wheel check reported a failure")
    except (InvariantError, ArithmeticError, AssertionError) as exc:
        bundle = _bundle(cfg, args, str(exc), getattr(exc, "provenance", None))
        if out_dir is not None:
            _write(out_dir, {"repro.json": dumps(bundle)})
        return _fail(EXIT_INVARIANT, "invariant", str(exc), bundle=bundle)
    except ValueError as exc:
        return _fail(EXIT_SCHEMA, "input", str(exc))
    if out_dir is not None:
        _write(out_dir, files)
    sys.stdout.write(dumps(result))
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, Fraction):
        return str(x)
    if x is None or isinstance(x, (int, str, bool)):
        return x
    return str(x)


if __name__ == "__main__":
    sys.exit(main())
