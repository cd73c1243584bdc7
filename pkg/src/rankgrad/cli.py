"""Batch front end.

Every subcommand reads an optional JSON config and lets flags override it::

    rankgrad rank-gradient --presentation "gens a b; rels [a,b];" \\
        --chain "derived p=2 depth=4" --out report.json --csv report.csv

Exit status: 0 success, 2 configuration error, 3 budget exhausted (the
partial report is still written), 4 internal invariant failure.  Failures
also produce a JSON error record on stderr and, when ``--out`` is given,
in the report file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .amalgam import index_condition_probe, search_almost_invariant, split
from .amenable import (C_STEP, folner_box, folner_interval, schreier_generators_from_transversal, weiss_iterate,
                       weiss_step1)
from .chains import Chain, derived_p_chain, lamplighter_chain, nested_chain
from .cosets import BudgetExhausted, default_budget, enumerate_cosets, parse_subgroup_spec
from .groups import FreeAbelianModel, FreeGroupModel
from .lueck import Field, approx_sequence, bounded_generation_probe, ow_limit_estimate, parse_matrix
from .presentations import Presentation, PresentationSyntaxError, parse_presentation
from .rank import free_product_rank, rank_bounds, rank_gradient
from .schreier import build_graph, reidemeister_schreier

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_INTERNAL = 4

TASKS = ("rank-gradient", "split-search", "weiss", "lueck", "bg-probe", "freeprod-check")


class ConfigError(ValueError):
    pass


class BudgetStop(RuntimeError):
    """Raised after the report is assembled when the chain stopped early."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


# --------------------------------------------------------------------------
# configuration

_TOP_LEVEL = ("presentation", "presentation_file", "chain", "budget", "effort", "seed", "out", "csv")


def load_config(args: argparse.Namespace, task: str) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    cfg = dict(cfg)
    cfg["params"] = dict(cfg.get("params", {}))
    if cfg.get("task") not in (None, task) and task != "verify":
        raise ConfigError(f"config is for task {cfg['task']!r}, not {task!r}")
    if task != "verify":
        cfg["task"] = task
    elif args.task:
        cfg["task"] = args.task
    for key in _TOP_LEVEL:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key, val in vars(args).items():
        if key.startswith("p_") and val is not None:
            cfg["params"][key[2:]] = val
    return cfg


def config_hash(cfg: dict) -> str:
    canon = {k: v for k, v in cfg.items() if k not in ("out", "csv")}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()


def versions() -> dict:
    import sympy

    return {"rankgrad": __version__, "numpy": np.__version__, "sympy": sympy.__version__}


def _presentation(cfg: dict, required: bool = True) -> Presentation | None:
    text = cfg.get("presentation")
    if text is None and cfg.get("presentation_file"):
        try:
            text = Path(cfg["presentation_file"]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read presentation file: {exc}") from None
    if text is None:
        if required:
            raise ConfigError("missing field 'presentation' (or 'presentation_file')")
        return None
    try:
        return parse_presentation(text)
    except PresentationSyntaxError as exc:
        raise ConfigError(f"presentation: {exc}") from None


def _budget(cfg: dict) -> int:
    b = cfg.get("budget")
    if b is None:
        return default_budget()
    if not isinstance(b, int) or b < 1:
        raise ConfigError("budget must be a positive integer")
    return b


_CHAIN_RE = re.compile(r"^\s*(?:chain\s+)?(\w+)\s*(.*)$")


def parse_chain_spec(spec: str) -> tuple[str, dict]:
    """``derived p=<prime> depth=<n>``, ``homs <file>`` or ``lamplighter depth=<n>``."""
    m = _CHAIN_RE.match(spec or "")
    if not m:
        raise ConfigError("missing field 'chain'")
    kind, rest = m.group(1), m.group(2).split()
    if kind == "homs":
        if len(rest) != 1:
            raise ConfigError("chain homs needs exactly one file name")
        return kind, {"file": rest[0]}
    if kind not in ("derived", "lamplighter"):
        raise ConfigError(f"unknown chain kind {kind!r}")
    opts = {}
    for tok in rest:
        if "=" not in tok:
            raise ConfigError(f"chain option {tok!r} must be key=value")
        k, v = tok.split("=", 1)
        try:
            opts[k] = int(v)
        except ValueError:
            raise ConfigError(f"chain option {k} must be an integer") from None
    need = ("p", "depth") if kind == "derived" else ("depth",)
    for k in need:
        if k not in opts:
            raise ConfigError(f"chain {kind} needs {k}=")
    if opts["depth"] < 0:
        raise ConfigError("chain depth must be nonnegative")
    return kind, opts


def _hom_lines(path: str) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read chain file: {exc}") from None
    lines = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            lines.append(ln if ln.startswith("sub ") else f"sub perm {ln}")
    return lines


def build_chain(cfg: dict, p: Presentation | None) -> Chain:
    kind, opts = parse_chain_spec(cfg.get("chain"))
    budget = _budget(cfg)
    if kind == "lamplighter":
        return lamplighter_chain(opts["depth"])
    if p is None:
        raise ConfigError("missing field 'presentation'")
    if kind == "derived":
        try:
            return derived_p_chain(p, opts["p"], opts["depth"], budget)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    specs = []
    for ln in _hom_lines(opts["file"]):
        try:
            specs.append(parse_subgroup_spec(ln, p))
        except ValueError as exc:
            raise ConfigError(f"chain file: {exc}") from None
    tables = []
    for spec in specs:
        tables.append(spec.direct_table(p) if spec.kind == "perm" else enumerate_cosets(p, spec, budget))
    return nested_chain(p, tables)


def _check_depth(chain: Chain, cfg: dict):
    kind, opts = parse_chain_spec(cfg.get("chain"))
    if chain.truncated and "depth" in opts and chain.depth < opts["depth"]:
        return chain.truncated
    return None


# --------------------------------------------------------------------------
# tasks

def task_rank_gradient(cfg: dict):
    params = cfg["params"]
    p = _presentation(cfg, required=parse_chain_spec(cfg.get("chain"))[0] != "lamplighter")
    chain = build_chain(cfg, p)
    mode = params.get("mode", "integer")
    if mode != "integer":
        mode = int(mode)
    report = rank_gradient(chain, mode=mode, tietze_budget=int(params.get("tietze_budget", 100_000)),
                           max_index=params.get("max_index"))
    out = report.as_dict()
    return out, report.to_csv(), _check_depth(chain, cfg)


def task_split_search(cfg: dict):
    params = cfg["params"]
    p = _presentation(cfg)
    chain = build_chain(cfg, p)
    alpha = float(Fraction(str(params.get("alpha", "3/8"))))
    eps = float(params.get("eps", 0.5))
    effort = int(cfg.get("effort", params.get("effort", 64)))
    levels = [int(params["level"])] if "level" in params else list(range(1, len(chain.levels)))
    best = None
    for n in levels:
        if n >= len(chain.levels):
            raise ConfigError(f"level {n} not built (chain depth {chain.depth})")
        g = build_graph(chain[n])
        if g.vertex_count < 2:
            continue
        w = search_almost_invariant(g, alpha, eps, effort, level=n)
        if best is None or w.key() < best[0].key():
            best = (w, g)
    if best is None:
        raise ConfigError("no level with at least two cosets")
    w, g = best
    sp = reidemeister_schreier(g)
    d = split(sp, g, w.A)
    probe = index_condition_probe(d, g, budget=int(params.get("probe_budget", 20_000)))
    out = {"witness": w.as_dict(), "split": d.as_dict(), "index_probe": probe}
    if params.get("export"):
        Path(params["export"]).write_text(d.export())
    csv = "level,size,index,boundary,hypotheses_met\n" + f"{w.level},{len(w.A)},{w.index},{w.boundary},{int(w.hypotheses_met)}\n"
    return out, csv, _check_depth(chain, cfg)


def _folner(spec, rank: int):
    """``interval <n>`` or ``box <n1> <n2> ...``."""
    toks = str(spec).split()
    try:
        nums = [int(t) for t in toks[1:]]
    except ValueError:
        raise ConfigError(f"bad Følner spec {spec!r}") from None
    if not toks or toks[0] not in ("interval", "box") or not nums:
        raise ConfigError("folner must be 'interval <n>' or 'box <n1> ... <nd>'")
    if toks[0] == "interval":
        return folner_interval(nums[0])
    if len(nums) != rank:
        raise ConfigError(f"box needs {rank} side lengths")
    return folner_box(nums)


def _model(p: Presentation, params: dict):
    kind = params.get("model", "abelian" if p.relators else "free")
    if kind == "abelian":
        return FreeAbelianModel(p.generator_count)
    if kind == "free":
        if p.relators:
            raise ConfigError("model 'free' needs a relator-free presentation")
        return FreeGroupModel(p.generator_count)
    raise ConfigError(f"unknown model {kind!r}")


def task_weiss(cfg: dict):
    params = cfg["params"]
    p = _presentation(cfg)
    chain = build_chain(cfg, p)
    model = _model(p, params)
    if "folner" not in params:
        raise ConfigError("weiss needs params.folner")
    A = _folner(params["folner"], p.generator_count)
    budget = _budget(cfg)
    max_depth = int(params.get("max_depth", 24))
    T = weiss_step1(chain, A, model, max_depth=max_depth, budget=budget)
    steps = weiss_iterate(chain, T, int(params.get("iterations", 3)), budget=budget,
                          effort=int(cfg.get("effort", 4)))
    eps0 = steps[0].epsilon_achieved
    reports = []
    for k, U in enumerate(steps):
        rec = U.report(epsilon_bound=C_STEP ** (k + 1))
        rec["checks"] = U.checks
        rec["decay_bound"] = eps0 * C_STEP ** k
        reports.append(rec)
    gens = schreier_generators_from_transversal(chain, steps[-1])
    out = {
        "steps": reports,
        "generating_set": {"level": gens.level, "index": gens.index, "size": len(gens.multiset),
                           "distinct": gens.rank_upper, "r_upper": str(gens.r_upper),
                           "r_upper_float": float(gens.r_upper), "certificate": gens.certificate},
    }
    if params.get("transversal_out"):
        last = steps[-1]
        Path(params["transversal_out"]).write_text(last.export(chain[last.level], p.generators))
    csv = "step,level,size,boundary,epsilon_achieved\n" + "".join(
        f"{k},{r['level']},{r['size']},{r['boundary']},{r['epsilon_achieved']!r}\n" for k, r in enumerate(reports))
    return out, csv, None


def _matrix(cfg: dict, p: Presentation):
    params = cfg["params"]
    if "matrix" in params:
        text = params["matrix"]
    elif "matrix_file" in params:
        try:
            text = Path(params["matrix_file"]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read matrix file: {exc}") from None
    else:
        raise ConfigError("lueck needs params.matrix or params.matrix_file")
    try:
        A = parse_matrix(text, p.generators)
    except ValueError as exc:
        raise ConfigError(f"matrix: {exc}") from None
    if "field" in params:
        A.field = Field.parse(params["field"])
        A.__post_init__()
    return A


def task_lueck(cfg: dict):
    params = cfg["params"]
    p = _presentation(cfg)
    A = _matrix(cfg, p)
    chain = build_chain(cfg, p)
    if not all(chain.normal_flags):
        raise ConfigError("lueck needs a normal chain; some level is not normal")
    seq = approx_sequence(A, chain)
    out = seq.as_dict()
    if params.get("ow_sides"):
        model = FreeAbelianModel(p.generator_count)
        fam = [[model.from_word(w) for w in folner_box([s] * p.generator_count)] for s in params["ow_sides"]]
        ow = ow_limit_estimate(A, fam, model)
        out["ow"] = ow.as_dict()
    return out, seq.to_csv(), _check_depth(chain, cfg)


def task_bg_probe(cfg: dict):
    params = cfg["params"]
    p = _presentation(cfg)
    chain = build_chain(cfg, p)
    if "t" not in params:
        raise ConfigError("bg-probe needs params.t")
    rep = bounded_generation_probe(chain, int(params["t"]))
    csv = "level,index,r,bound,ratio\n" + "".join(
        f"{r['level']},{r['index']},{r['r']},{r['bound']!r},{r['ratio']!r}\n" for r in rep["levels"])
    return rep, csv, _check_depth(chain, cfg)


def task_freeprod_check(cfg: dict):
    params = cfg["params"]
    rows = []
    if "subgroups" in params:
        p = _presentation(cfg)
        budget = _budget(cfg)
        for line in params["subgroups"]:
            try:
                spec = parse_subgroup_spec(line if line.startswith("sub ") else f"sub perm {line}", p)
            except ValueError as exc:
                raise ConfigError(f"subgroup: {exc}") from None
            table = spec.direct_table(p) if spec.kind == "perm" else enumerate_cosets(p, spec, budget)
            n = table.coset_count
            k1, k2 = int(params.get("k1")), int(params.get("k2"))
            d, r = free_product_rank(n, k1, k2, int(params.get("d1", 0)), int(params.get("d2", 0)))
            sp = reidemeister_schreier(build_graph(table))
            b = rank_bounds(sp, ambient_generators=p.generator_count, index=n)
            rows.append({"subgroup": line, "index": n, "normal": table.is_normal(), "formula": d,
                         "formula_r": str(r), "lower": b.lower, "upper": b.upper,
                         "agrees": b.lower <= d <= b.upper, "collapsed": b.lower == b.upper == d})
    else:
        try:
            n, k1, k2 = int(params["n"]), int(params["k1"]), int(params["k2"])
        except KeyError as exc:
            raise ConfigError(f"freeprod-check needs params.{exc.args[0]}") from None
        try:
            d, r = free_product_rank(n, k1, k2, int(params.get("d1", 0)), int(params.get("d2", 0)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rows.append({"index": n, "formula": d, "formula_r": str(r)})
    csv = "index,formula,lower,upper\n" + "".join(
        f"{r['index']},{r['formula']},{r.get('lower', '')},{r.get('upper', '')}\n" for r in rows)
    if any(r.get("agrees") is False for r in rows):
        raise AssertionError("formula outside the computed rank interval")
    return {"checks": rows}, csv, None


RUNNERS = {
    "rank-gradient": task_rank_gradient,
    "split-search": task_split_search,
    "weiss": task_weiss,
    "lueck": task_lueck,
    "bg-probe": task_bg_probe,
    "freeprod-check": task_freeprod_check,
}


def verify(cfg: dict) -> dict:
    """Validate a config without computing anything."""
    task = cfg.get("task")
    if task not in TASKS:
        raise ConfigError(f"missing or unknown field 'task' (one of {', '.join(TASKS)})")
    params = cfg["params"]
    budget = _budget(cfg)
    report: dict = {"task": task, "coset_budget": budget}
    needs_chain = task != "freeprod-check"
    if needs_chain:
        if not cfg.get("chain"):
            raise ConfigError("missing field 'chain'")
        kind, opts = parse_chain_spec(cfg["chain"])
        report["chain"] = {"kind": kind, **opts}
        p = _presentation(cfg, required=kind != "lamplighter")
        if kind == "homs":
            lines = _hom_lines(opts["file"])
            specs = []
            for ln in lines:
                try:
                    specs.append(parse_subgroup_spec(ln, p))
                except ValueError as exc:
                    raise ConfigError(f"chain file: {exc}") from None
            report["chain"]["levels"] = len(specs)
            report["chain"]["max_degree"] = max((s.degree for s in specs if s.kind == "perm"), default=None)
            if task == "lueck" and any(s.kind != "perm" or s.point is not None for s in specs):
                raise ConfigError("lueck needs a normal chain; stabilizer or word-generated levels "
                                  "are not certified normal")
        else:
            # derived and lamplighter indices are only known once built; the budget caps them
            report["chain"]["max_index"] = budget
    else:
        p = _presentation(cfg, required="subgroups" in params)
    if task == "lueck":
        A = _matrix(cfg, p)
        idx = report["chain"].get("max_index", budget)
        report["matrix"] = {"n": A.n, "m": A.m, "field": str(A.field),
                            "pushforward_rows_max": A.n * idx, "pushforward_cols_max": A.m * idx}
    if task == "weiss" and "folner" not in params:
        raise ConfigError("missing field 'params.folner'")
    if task == "bg-probe" and "t" not in params:
        raise ConfigError("missing field 'params.t'")
    if task == "freeprod-check":
        for k in ("k1", "k2") + (() if "subgroups" in params else ("n",)):
            if k not in params:
                raise ConfigError(f"missing field 'params.{k}'")
    report["status"] = "ok"
    return report


# --------------------------------------------------------------------------
# entry point

def _write(cfg: dict, record: dict, csv_text: str | None):
    text = json.dumps(record, sort_keys=True, indent=2, default=_json_default) + "\n"
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    if csv_text is not None and cfg.get("csv"):
        Path(cfg["csv"]).write_text(csv_text)


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _error(cfg: dict, kind: str, message: str, code: int) -> int:
    rec = {"error": {"kind": kind, "message": message, "exit_code": code},
           "config_hash": config_hash(cfg) if cfg else None, "versions": versions()}
    text = json.dumps(rec, sort_keys=True)
    sys.stderr.write(text + "\n")
    if cfg.get("out"):
        Path(cfg["out"]).write_text(json.dumps(rec, sort_keys=True, indent=2) + "\n")
    return code


_HELP = {
    "rank-gradient": "rank bounds along a chain",
    "split-search": "almost-invariant coset sets and the induced splitting",
    "weiss": "almost-invariant transversals and Schreier generating sets",
    "lueck": "normalized kernel dimensions over a chain",
    "bg-probe": "mod-2 ranks against the bounded-generation bound",
    "freeprod-check": "rank formula for normal subgroups of free products",
}


def _flags_rank(s):
    s.add_argument("--mode", dest="p_mode", help="'integer' or a prime for mod-p abelianization")
    s.add_argument("--max-index", dest="p_max_index", type=int)


def _flags_split(s):
    s.add_argument("--alpha", dest="p_alpha")
    s.add_argument("--eps", dest="p_eps", type=float)
    s.add_argument("--level", dest="p_level", type=int)
    s.add_argument("--export", dest="p_export", help="write T1/T2 presentations here")


def _flags_weiss(s):
    s.add_argument("--folner", dest="p_folner", help="'interval <n>' or 'box <n1> <n2> ...'")
    s.add_argument("--iterations", dest="p_iterations", type=int)
    s.add_argument("--model", dest="p_model", choices=("abelian", "free"))
    s.add_argument("--transversal-out", dest="p_transversal_out")


def _flags_lueck(s):
    s.add_argument("--matrix-file", dest="p_matrix_file")
    s.add_argument("--field", dest="p_field", help="override the matrix field: Q or Fp")


def _flags_bg(s):
    s.add_argument("--t", dest="p_t", type=int, help="declared number of cyclic factors")


def _flags_freeprod(s):
    for k in ("n", "k1", "k2", "d1", "d2"):
        s.add_argument(f"--{k}", dest=f"p_{k}", type=int)
    s.add_argument("--subgroup", dest="p_subgroups", action="append", help="subgroup spec; repeatable")


_TASK_FLAGS = {
    "rank-gradient": _flags_rank,
    "split-search": _flags_split,
    "weiss": _flags_weiss,
    "lueck": _flags_lueck,
    "bg-probe": _flags_bg,
    "freeprod-check": _flags_freeprod,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rankgrad", description="Rank gradient and related experiments.")
    ap.add_argument("--version", action="version", version=f"rankgrad {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config; flags override its fields")
        sp.add_argument("--presentation", help="presentation text, e.g. 'gens a b; rels [a,b];'")
        sp.add_argument("--presentation-file", dest="presentation_file")
        sp.add_argument("--chain", help="'derived p=<prime> depth=<n>', 'homs <file>' or 'lamplighter depth=<n>'")
        sp.add_argument("--budget", type=int, help="coset budget (default $RANKGRAD_COSET_BUDGET or 200000)")
        sp.add_argument("--effort", type=int)
        sp.add_argument("--seed", type=int, help="recorded in the report; all computations are deterministic")
        sp.add_argument("--out", help="JSON report path (stdout if omitted)")
        sp.add_argument("--csv", help="CSV output path")

    for task in TASKS:
        s = sub.add_parser(task, help=_HELP[task])
        common(s)
        _TASK_FLAGS[task](s)

    s = sub.add_parser("verify", help="validate a config without running it")
    common(s)
    s.add_argument("--task", choices=TASKS)
    for task in TASKS:
        _TASK_FLAGS[task](s.add_argument_group(task))
    return ap


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg: dict = {}
    try:
        cfg = load_config(args, args.command)
        if args.command == "verify":
            rec = verify(cfg)
            csv_text = None
        else:
            out, csv_text, stopped = RUNNERS[args.command](cfg)
            rec = {"task": args.command, "result": out}
            if stopped:
                raise BudgetStop(stopped, rec)
        rec["config_hash"] = config_hash(cfg)
        rec["versions"] = versions()
        rec["seed"] = cfg.get("seed")
        _write(cfg, rec, csv_text)
        return EXIT_OK
    except ConfigError as exc:
        return _error(cfg, "config", str(exc), EXIT_CONFIG)
    except BudgetStop as exc:
        rec = exc.report
        rec["config_hash"] = config_hash(cfg)
        rec["versions"] = versions()
        rec["error"] = {"kind": "budget", "message": str(exc), "exit_code": EXIT_BUDGET}
        _write(cfg, rec, None)
        sys.stderr.write(json.dumps({"error": rec["error"]}, sort_keys=True) + "\n")
        return EXIT_BUDGET
    except BudgetExhausted as exc:
        return _error(cfg, "budget", str(exc), EXIT_BUDGET)
    except (AssertionError, ArithmeticError) as exc:
        return _error(cfg, "internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL)
    except ValueError as exc:
        return _error(cfg, "config", str(exc), EXIT_CONFIG)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
