"""Command-line interface.

Subcommands::

    analyze    levelness report per constraint (JSON lines)
    transform  compile a model JSON into a QUBO (JSON, optional coordinate text)
    verify     check a penalty against a constraint, or a QUBO against a model
    encode     build QUBOs for max2sat / lop / cdp / mis instances
    gen        write seeded random instances
    solve      exhaustive or simulated-annealing solve of a QUBO
    bench      MIS compact-vs-augmented comparison over a gnp grid

Exit codes: 0 success, 1 failed check, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .levelness import InfeasibleConstraintError, compact_certificate, refine_and_classify
from .model import (
    ModelError,
    TwoSidedConstraint,
    WeightMatrix,
    model_from_dict,
    parse_dimacs_cnf,
    parse_dimacs_graph,
    parse_model_json,
)
from .pipeline import PipelineConfig, PipelineError, Variant, compile_model
from .polynomial import Polynomial, to_number
from .problems import encode_cdp, encode_lop, encode_max2sat, encode_mis, gnp_graph, random_2cnf, random_weights
from .qubo import QuboModel
from .solver import gap, solve_exhaustive, solve_sa
from .verify import EnumerationTooLarge, check_augmented_vip, check_equivalence, check_vip, sample_vip

log = logging.getLogger("levelqubo")


class UsageError(Exception):
    """Bad flags or inputs; reported with exit code 2."""


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, default=str)


def _load_qubo(path: str) -> QuboModel:
    text = _read(path)
    if text.lstrip().startswith("{"):
        return QuboModel.from_json(text)
    return QuboModel.from_coo_text(text)


def _parse_lambda(text: str):
    if text in ("auto", "search"):
        return text
    try:
        return to_number(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--lambda must be auto, search or a number, got {text!r}") from exc


def _csv_list(text: str, conv):
    try:
        return [conv(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}: {exc}") from exc


# -- analyze / transform / verify ----------------------------------------


def cmd_analyze(args) -> int:
    m = parse_model_json(_read(args.model))
    lines = [json.dumps(refine_and_classify(c).to_dict()) for c in m.constraints]
    if args.certificate:
        lines.append(json.dumps({"certificate": compact_certificate(m).to_dict()}))
    _write(args.out, "\n".join(lines))
    return 0


def cmd_transform(args) -> int:
    m = parse_model_json(_read(args.model))
    cfg = PipelineConfig(variant=Variant.parse(args.variant), penalty_mode=_parse_lambda(args.lambda_))
    q = compile_model(m, cfg)
    _write(args.out, q.qubo.to_json())
    if args.coo:
        _write(args.coo, q.qubo.to_coo_text())
    if args.trace:
        trace = q.trace.to_dict()
        trace["certificate"] = q.certificate.to_dict()
        trace["ancillary_count"] = q.ancillary_count
        _write(args.trace, _json(trace))
    return 0


def _load_constraint(path: str) -> TwoSidedConstraint:
    data = json.loads(_read(path))
    if "constraints" in data:
        cs = data["constraints"]
        if len(cs) != 1:
            raise UsageError(f"{path}: expected exactly one constraint, found {len(cs)}")
        data = cs[0]
    names = sorted({t["var"] for t in data.get("terms", [])})
    return model_from_dict({"variables": names, "constraints": [data]}).constraints[0]


def cmd_verify(args) -> int:
    if args.vip:
        if not args.constraint:
            raise UsageError("--vip needs --constraint")
        pdata = json.loads(_read(args.vip))
        text = pdata.get("poly", pdata.get("penalty"))
        if text is None:
            raise UsageError(f"{args.vip}: expected a 'poly' field")
        P = Polynomial.parse(text)
        anc = pdata.get("ancillaries", [])
        c = _load_constraint(args.constraint)
        try:
            if args.sample:
                v = sample_vip(P, c, args.sample, _need_seed(args), anc)
            elif anc:
                v = check_augmented_vip(P, c, anc)
            else:
                v = check_vip(P, c)
        except EnumerationTooLarge as exc:
            raise UsageError(f"{exc} (pass --sample N --seed S)") from exc
    elif args.model and args.qubo:
        m = parse_model_json(_read(args.model))
        try:
            v = check_equivalence(m, _load_qubo(args.qubo))
        except EnumerationTooLarge as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("give --vip P --constraint C, or --model M --qubo Q")
    _write(args.out, _json(v.to_dict()))
    return 0 if v.ok else 1


# -- encode / gen ----------------------------------------------------------


def _encode(problem: str, text: str, form, lam):
    if problem == "max2sat":
        return encode_max2sat(parse_dimacs_cnf(text), form)
    if problem == "lop":
        data = json.loads(text)
        return encode_lop(WeightMatrix(tuple(tuple(r) for r in data["weights"])), lam or "auto")
    if problem == "cdp":
        return encode_cdp(parse_dimacs_graph(text), form)
    if problem == "mis":
        g = parse_dimacs_graph(text)
        return encode_mis(g, form) if lam is None else encode_mis(g, form, lam)
    raise UsageError(f"unknown problem {problem}")


def cmd_encode(args) -> int:
    lam = None if args.lambda_ is None else _parse_lambda(args.lambda_)
    enc = _encode(args.problem, _read(args.input), args.form, lam)
    forms = list(enc.forms)
    if args.form is None and len(forms) > 1 and args.out not in (None, "-"):
        # several forms: one file per form next to --out
        base = Path(args.out)
        for f in forms:
            _write(str(base.with_name(f"{base.stem}.{f}{base.suffix}")), enc.forms[f].qubo.to_json())
    else:
        if len(forms) > 1:
            forms = forms[:1]
        _write(args.out, enc.forms[forms[0]].qubo.to_json())
        if args.coo:
            _write(args.coo, enc.forms[forms[0]].qubo.to_coo_text())
    if args.trace:
        _write(args.trace, _json({f: q.trace.to_dict() for f, q in enc.forms.items()}))
    return 0


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for randomized commands")
    return args.seed


def cmd_gen(args) -> int:
    seed = _need_seed(args)
    if args.kind == "graph":
        if args.p is None:
            raise UsageError("gen graph needs --p")
        _write(args.out, gnp_graph(args.n, args.p, seed).to_dimacs())
    elif args.kind == "cnf":
        if args.m is None:
            raise UsageError("gen cnf needs --m")
        _write(args.out, random_2cnf(args.n, args.m, seed).to_dimacs())
    else:
        lo, hi = _csv_list(args.range, int)
        W = random_weights(args.n, (lo, hi), seed)
        _write(args.out, json.dumps({"weights": [list(r) for r in W.rows]}))
    return 0


# -- solve -----------------------------------------------------------------


def cmd_solve(args) -> int:
    q = _load_qubo(args.qubo)
    if args.method == "exhaustive":
        r = solve_exhaustive(q)
    else:
        seed = _need_seed(args)
        if (args.iters is None) == (args.time_ms is None):
            raise UsageError("sa needs exactly one of --iters or --time-ms")
        r = solve_sa(q, seed, args.iters, args.time_ms, args.restarts, args.history_samples if args.history else 0)
        if args.history:
            buf = io.StringIO()
            w = csv.writer(buf)
            w.writerow(["seconds", "iteration", "best_energy"])
            w.writerows(r.history)
            _write(args.history, buf.getvalue())
    _write(args.out, _json(r.to_dict()))
    return 0


# -- bench -----------------------------------------------------------------

ROW_FIELDS = ["instance", "n", "p", "seed", "form", "dimension", "feasible", "objective", "gap", "elapsed"]


@dataclass
class BenchReport:
    """Per-instance rows and per-(n, p) aggregates."""

    rows: list
    aggregates: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows, "aggregates": self.aggregates}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ROW_FIELDS)
        w.writeheader()
        for r in self.rows:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in ROW_FIELDS})
        return buf.getvalue()


def aggregate_rows(rows) -> list:
    """Per (n, p, form): instance count, feasible count, mean objective
    (infeasible runs count as 0) and mean dimension."""
    buckets: dict = {}
    for r in rows:
        buckets.setdefault((r["n"], r["p"], r["form"]), []).append(r)
    out = []
    for (n, p, form), rs in buckets.items():
        out.append(
            {
                "n": n,
                "p": p,
                "form": form,
                "instances": len(rs),
                "feasible": sum(1 for r in rs if r["feasible"]),
                "mean_objective": sum((r["objective"] or 0) for r in rs) / len(rs),
                "mean_dimension": sum(r["dimension"] for r in rs) / len(rs),
            }
        )
    return out


def mis_bench(sizes, ps, seeds: int, iters: int, seed: int = 0, restarts: int = 1, workers=None) -> BenchReport:
    """Solve MIS QUBO2 (compact) and QUBO1 (augmented) on gnp instances with SA.

    Instance ``s`` of each (n, p) uses graph seed ``seed + s`` and the same
    annealing seed.  The gap of each row is taken against the best feasible
    objective found on that instance by either form.
    """
    jobs = [(n, p, seed + s) for n in sizes for p in ps for s in range(seeds)]

    def run(job):
        n, p, s = job
        g = gnp_graph(n, p, s)
        enc = encode_mis(g)
        out = []
        for form, name in (("compact", "QUBO2"), ("augmented", "QUBO1")):
            q = enc.forms[name].qubo
            r = solve_sa(q, s, iters=iters, restarts=restarts)
            d = enc.decode(name, r.best_bits)
            out.append(
                {
                    "instance": f"gnp-n{n}-p{p}-s{s}",
                    "n": n,
                    "p": p,
                    "seed": s,
                    "form": form,
                    "edges": g.m,
                    "dimension": q.n,
                    "feasible": d.feasible,
                    "objective": d.objective,
                    "gap": None,
                    "elapsed": round(r.elapsed, 6),
                }
            )
        best = max([r["objective"] for r in out if r["feasible"]], default=None)
        for r in out:
            if best:
                g_ = gap(r["objective"], best)
                r["gap"] = None if g_ is None else float(g_)
        return out

    nw = workers or int(os.environ.get("LEVELQUBO_WORKERS", 0) or (os.cpu_count() or 1))
    with ThreadPoolExecutor(max(1, nw)) as pool:
        results = list(pool.map(run, jobs))
    rows = [r for rs in results for r in rs]
    cfg = {"problem": "mis", "sizes": list(sizes), "p": list(ps), "seeds": seeds, "iters": iters, "seed": seed}
    return BenchReport(rows, aggregate_rows(rows), cfg)


def cmd_bench(args) -> int:
    if args.problem != "mis":
        raise UsageError("bench supports --problem mis only")
    seed = _need_seed(args)
    rep = mis_bench(
        _csv_list(args.sizes, int), _csv_list(args.p, float), args.seeds, args.budget_iters, seed, args.restarts
    )
    _write(args.json, _json(rep.to_dict()))
    if args.csv:
        _write(args.csv, rep.to_csv())
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levelqubo", description="Binary linear programs to QUBO.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="levelness report per constraint")
    p.add_argument("model")
    p.add_argument("--certificate", action="store_true", help="append the compactness certificate")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="compile a model into a QUBO")
    p.add_argument("model")
    p.add_argument("--variant", default=Variant.MLCTS_TR0_2N_TR6_2.value, choices=[v.value for v in Variant])
    p.add_argument("--lambda", dest="lambda_", default="auto", help="auto | search | <number>")
    p.add_argument("--trace", help="write the transformation trace JSON here")
    p.add_argument("--coo", help="also write the coordinate text format here")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="VIP check or model/QUBO equivalence")
    p.add_argument("--vip", help="penalty JSON {'poly': ..., 'ancillaries': [...]}")
    p.add_argument("--constraint", help="constraint JSON (model format)")
    p.add_argument("--model")
    p.add_argument("--qubo")
    p.add_argument("--sample", type=int, help="non-exhaustive check at N random points")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("encode", help="encode a combinatorial problem")
    p.add_argument("--problem", required=True, choices=["max2sat", "lop", "cdp", "mis"])
    p.add_argument("--input", required=True, help="DIMACS graph / CNF, or weights JSON for lop")
    p.add_argument("--form", choices=["QUBO1", "QUBO2"])
    p.add_argument("--lambda", dest="lambda_", help="penalty weight (mis, lop)")
    p.add_argument("--coo")
    p.add_argument("--trace")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("gen", help="write a seeded random instance")
    p.add_argument("kind", choices=["graph", "cnf", "weights"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--range", default="0,9")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve a QUBO (JSON or coordinate text)")
    p.add_argument("qubo")
    p.add_argument("--method", choices=["exhaustive", "sa"], default="sa")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--time-ms", type=float)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--history", help="CSV of incumbent samples")
    p.add_argument("--history-samples", type=int, default=100)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="MIS compact vs augmented benchmark")
    p.add_argument("--problem", default="mis")
    p.add_argument("--sizes", default="50,100,200")
    p.add_argument("--p", default="0.05,0.1")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--budget-iters", type=int, default=200000)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", default="-")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"levelqubo {args.command}: error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ModelError, InfeasibleConstraintError, PipelineError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"levelqubo {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
