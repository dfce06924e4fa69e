"""Command-line driver: check, run, emit, soundness and laws.

Exit codes: 0 success, 1 parse/type/input error, 2 undischarged obligation,
3 dynamic soundness violation, 4 law failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple

from .constraints import DomainBounds, Valid, discharge_bounded, result_to_json, value_to_json
from .interp import InterpError, dist_decl, outcome_to_json, parse_runtime_value, run_decl
from .modelcheck import run_laws, run_mutants
from .prelude import EvalError
from .smt import emit_smtlib, smt_filename
from .soundness import SoundnessReport, run_matrix
from .syntax import ParseError, fresh_scope, parse_program
from .typecheck import CheckError, check_program

EXIT_OK, EXIT_INPUT, EXIT_UNDISCHARGED, EXIT_DYNAMIC, EXIT_LAW = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    paths: List[str] = field(default_factory=list)
    fuel: int = 1000
    trials: int = 10 ** 5
    seed: int = 0
    grid_bound: int = 64
    grid_density: int = 8
    delta: float = 1e-3
    json: bool = False
    emit_smt: Optional[str] = None

    def __post_init__(self):
        if self.fuel < 0:
            raise ValueError("fuel must be non-negative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.grid_bound < 1 or self.grid_density < 1:
            raise ValueError("grid bound and density must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie strictly between 0 and 1")


def resolve_path(path: str) -> Tuple[str, str]:
    """``(stem, source)`` for ``path``, falling back to the bundled corpus by basename."""
    p = Path(path)
    if p.is_file():
        return p.stem, p.read_text()
    name = p.name if p.suffix else p.name + ".dfx"
    root = resources.files("grady") / "corpus"
    for cand in (root / name, root / "mutants" / name):
        if cand.is_file():
            return Path(name).stem, cand.read_text()
    raise FileNotFoundError(f"no such file: {path}")


def bundled_corpus(with_mutants: bool = False) -> List[str]:
    root = resources.files("grady") / "corpus"
    out = sorted(f.name for f in root.iterdir() if f.name.endswith(".dfx"))
    if with_mutants:
        out += sorted(f.name for f in (root / "mutants").iterdir() if f.name.endswith(".dfx"))
    return out


def _scoped(paths):
    """Yield each path with fresh-name numbering restarted, so reports do not
    depend on what ran earlier in the process."""
    for p in paths:
        with fresh_scope():
            yield p


def _load(path: str):
    stem, src = resolve_path(path)
    return stem, check_program(parse_program(src), stem)


def _input_error(path: str, exc: Exception) -> dict:
    return {"file": path, "error": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------------------
# Commands


def cmd_check(cfg: RunConfig) -> Tuple[int, dict]:
    bounds = DomainBounds(int_bound=cfg.grid_bound, real_denominator=cfg.grid_density)
    files, code = [], EXIT_OK
    for path in _scoped(cfg.paths):
        try:
            stem, tp = _load(path)
        except (OSError, ParseError, CheckError, EvalError) as e:
            files.append(_input_error(path, e))
            code = EXIT_INPUT
            continue
        obs = []
        for ob in tp.obligations:
            res = discharge_bounded(ob, tp.instance, bounds)
            entry = ob.to_json()
            entry["result"] = result_to_json(res)
            if cfg.emit_smt:
                script = emit_smtlib(ob, tp.instance)
                if isinstance(script, str):
                    os.makedirs(cfg.emit_smt, exist_ok=True)
                    fname = smt_filename(stem, ob)
                    Path(cfg.emit_smt, fname).write_text(script)
                    entry["smt"] = fname
                else:
                    entry["smt"] = None
            obs.append(entry)
            if not isinstance(res, Valid) and code == EXIT_OK:
                code = EXIT_UNDISCHARGED
        files.append({"file": path, "program": stem, "instance": tp.instance.name,
                      "obligations": obs,
                      "undischarged": [o["id"] for o in obs if o["result"]["status"] != "valid"]})
    return code, {"command": "check", "grid": {"bound": cfg.grid_bound, "density": cfg.grid_density},
                  "files": files}


def cmd_emit(cfg: RunConfig) -> Tuple[int, dict]:
    out_dir = cfg.emit_smt or "."
    files, code = [], EXIT_OK
    for path in _scoped(cfg.paths):
        try:
            stem, tp = _load(path)
        except (OSError, ParseError, CheckError, EvalError) as e:
            files.append(_input_error(path, e))
            code = EXIT_INPUT
            continue
        written, skipped = [], []
        for ob in tp.obligations:
            script = emit_smtlib(ob, tp.instance)
            if isinstance(script, str):
                os.makedirs(out_dir, exist_ok=True)
                fname = smt_filename(stem, ob)
                Path(out_dir, fname).write_text(script)
                written.append(fname)
            else:
                skipped.append({"id": ob.id, "reason": script.reason})
        files.append({"file": path, "program": stem, "obligations": [o.to_json() for o in tp.obligations],
                      "written": written, "skipped": skipped})
    return code, {"command": "emit", "dir": out_dir, "files": files}


def cmd_run(cfg: RunConfig, decl: str, arg: Optional[str], params: List[str],
            dist: bool) -> Tuple[int, dict]:
    with fresh_scope():
        return _run_one(cfg, decl, arg, params, dist)


def _run_one(cfg: RunConfig, decl: str, arg: Optional[str], params: List[str],
             dist: bool) -> Tuple[int, dict]:
    try:
        stem, tp = _load(cfg.paths[0])
        pvals = {}
        for p in params:
            k, sep, v = p.partition("=")
            if not sep:
                raise ValueError(f"parameter {p!r} is not of the form name=value")
            pvals[k.strip()] = parse_runtime_value(v)
        argv = parse_runtime_value(arg) if arg is not None else None
        if dist:
            d = dist_decl(tp.program, decl, pvals, argv, cfg.fuel)
            return EXIT_OK, {"command": "run", "program": stem, "decl": decl, "distribution": d.to_json()}
        o = run_decl(tp.program, decl, pvals, argv, cfg.fuel, cfg.seed)
        return EXIT_OK, {"command": "run", "program": stem, "decl": decl, "seed": cfg.seed,
                         **outcome_to_json(o)}
    except (OSError, ParseError, CheckError, EvalError, InterpError, ValueError) as e:
        return EXIT_INPUT, {"command": "run", **_input_error(cfg.paths[0], e)}


def cmd_soundness(cfg: RunConfig) -> Tuple[int, dict]:
    rep, errors = SoundnessReport(), []
    for path in _scoped(cfg.paths):
        try:
            stem, tp = _load(path)
        except (OSError, ParseError, CheckError, EvalError) as e:
            errors.append(_input_error(path, e))
            continue
        rep.extend(run_matrix(tp, stem, fuel=cfg.fuel, trials=cfg.trials, seed=cfg.seed,
                              delta=cfg.delta))
    out = rep.to_json()
    out = {"command": "soundness", "trials": cfg.trials, "seed": cfg.seed, "delta": cfg.delta,
           "errors": errors, **out}
    code = EXIT_INPUT if errors else EXIT_OK if rep.ok else EXIT_DYNAMIC
    return code, out


def cmd_laws(universe: int, with_mutants: bool) -> Tuple[int, dict]:
    reports = run_laws(universe)
    out = {"command": "laws", "universe": universe, "laws": [r.to_json() for r in reports]}
    ok = all(r.passed for r in reports)
    if with_mutants:
        muts = run_mutants(universe)
        out["mutants"] = [{"mutant": m.name, "targets": m.law, **r.to_json()} for m, r in muts]
        ok = ok and all(r.passed for _, r in muts)
    return (EXIT_OK if ok else EXIT_LAW), out


# ---------------------------------------------------------------------------
# Text rendering


def _render_check(rep: dict) -> str:
    lines = []
    for f in rep["files"]:
        if "error" in f:
            lines.append(f"{f['file']}: {f['error']}")
            continue
        lines.append(f"{f['file']} ({f['instance']}): {len(f['obligations'])} obligation(s)")
        for o in f["obligations"]:
            r = o["result"]
            if r["status"] == "valid":
                status = "valid on grid" if "bounded" in r["method"] or "exp-atoms" in r["method"] else f"valid ({r['method']})"
            elif r["status"] == "counterexample":
                env = ", ".join(f"{k}={json.dumps(v)}" for k, v in r["env"].items())
                status = f"COUNTEREXAMPLE {env}"
            else:
                status = f"UNKNOWN {r.get('reason', '')}"
            lines.append(f"  #{o['id']} {o['decl']} {o['rule']}: {status}")
        if f["undischarged"]:
            lines.append(f"  undischarged: {', '.join('#' + str(i) for i in f['undischarged'])}")
    return "\n".join(lines)


def _render_soundness(rep: dict) -> str:
    lines = [f"{e['file']}: {e['error']}" for e in rep["errors"]]
    for r in rep["rows"]:
        env = ", ".join(f"{k}={json.dumps(value_to_json(v) if not isinstance(v, (int, str)) else v)}"
                        for k, v in r["env"].items())
        tol = f" tol={r['tolerance']:.6f}" if r["tolerance"] is not None else ""
        lines.append(f"{r['verdict'].upper():7} {r['program']}.{r['decl']} [{env}] "
                     f"observed={r['observed']} grade={r['grade']}{tol} {r['note']}".rstrip())
    s = rep["summary"]
    lines.append(f"pass={s['pass']} fail={s['fail']} skipped={s['skipped']}")
    return "\n".join(lines)


def _render_laws(rep: dict) -> str:
    lines = [f"{'law':18} {'lifting':20} {'checked':>8}  result"]
    for r in rep["laws"]:
        lines.append(f"{r['law']:18} {r['lifting']:20} {r['checked']:>8}  {'pass' if r['passed'] else 'FAIL'}")
    for r in rep.get("mutants", []):
        lines.append(f"{r['law']:18} {r['mutant']:20} {r['checked']:>8}  "
                     f"{'pass' if r['passed'] else 'FAIL'} (mutant)")
    return "\n".join(lines)


def _render(rep: dict) -> str:
    cmd = rep["command"]
    if cmd == "check":
        return _render_check(rep)
    if cmd == "soundness":
        return _render_soundness(rep)
    if cmd == "laws":
        return _render_laws(rep)
    return json.dumps(rep, indent=2, sort_keys=True, default=str)


def _dumps(rep: dict) -> str:
    return json.dumps(rep, indent=2, sort_keys=True, default=str)


# ---------------------------------------------------------------------------
# Entry point


def _default_seed() -> int:
    try:
        return int(os.environ.get("GRADY_SEED", "0"))
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON report")
    common.add_argument("--seed", type=int, default=_default_seed(),
                        help="random seed (default: $GRADY_SEED or 0)")
    common.add_argument("--fuel", type=int, default=1000)
    common.add_argument("--trials", type=int, default=10 ** 5)
    common.add_argument("--delta", type=float, default=1e-3)
    common.add_argument("--grid-bound", type=int, default=64)
    common.add_argument("--grid-density", type=int, default=8)
    common.add_argument("--emit-smt", metavar="DIR")

    ap = argparse.ArgumentParser(prog="grady", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("check", parents=[common], help="type-check and discharge obligations")
    p.add_argument("paths", nargs="*", help="program files (default: bundled corpus)")
    p.add_argument("--with-mutants", action="store_true", help="include bundled mutants by default")
    p = sub.add_parser("emit", parents=[common], help="write SMT-LIB2 scripts for obligations")
    p.add_argument("paths", nargs="+")
    p = sub.add_parser("run", parents=[common], help="evaluate a declaration")
    p.add_argument("paths", nargs=1, metavar="path")
    p.add_argument("--decl", required=True)
    p.add_argument("--arg", help="argument value in source syntax")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--dist", action="store_true", help="enumerate the output distribution")
    p = sub.add_parser("soundness", parents=[common], help="run the dynamic soundness matrix")
    p.add_argument("paths", nargs="*", help="program files (default: bundled corpus)")
    p.add_argument("--with-mutants", action="store_true", help="include bundled mutants by default")
    p = sub.add_parser("laws", parents=[common], help="run the finite-model law checks")
    p.add_argument("--universe", type=int, default=3)
    p.add_argument("--with-mutants", action="store_true")
    p.add_argument("--dump-witness", metavar="FILE", help="write failing witnesses as JSON")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    paths = list(getattr(args, "paths", []) or [])
    if args.command in ("check", "soundness") and not paths:
        paths = bundled_corpus(args.with_mutants)
    try:
        cfg = RunConfig(args.command, paths, args.fuel, args.trials, args.seed, args.grid_bound,
                        args.grid_density, args.delta, args.json, args.emit_smt)
    except ValueError as e:
        print(f"grady: {e}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "check":
        code, rep = cmd_check(cfg)
    elif args.command == "emit":
        code, rep = cmd_emit(cfg)
    elif args.command == "run":
        code, rep = cmd_run(cfg, args.decl, args.arg, args.param, args.dist)
    elif args.command == "soundness":
        code, rep = cmd_soundness(cfg)
    else:
        try:
            code, rep = cmd_laws(args.universe, args.with_mutants)
        except ValueError as e:
            print(f"grady: {e}", file=sys.stderr)
            return EXIT_INPUT
        if args.dump_witness:
            failing = [r for r in rep["laws"] + rep.get("mutants", []) if not r["passed"]]
            Path(args.dump_witness).write_text(_dumps({"failures": failing}) + "\n")
    print(_dumps(rep) if cfg.json else _render(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
