"""Command-line front end: ``privmac <subcommand> [options]``.

Every subcommand reads a JSON spec (see :mod:`privmac.io`), writes either a
JSON record (``--format records``) or CSV sections (``--format csv``) with the
run manifest embedded, and exits with status 0 exactly when all of its checks
pass.  Bad input exits with status 2.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import os
import sys
from pathlib import Path

import numpy as np

from . import _config, aep, codesim, entropy, hashlemma, optimize, regions
from . import io as specio
from .errors import PrivmacError, UsageError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


class _Outcome:
    """Result of one subcommand: a JSON-able record, CSV sections and named checks."""

    def __init__(self):
        self.record: dict = {}
        self.sections: dict[str, str] = {}
        self.checks: dict[str, bool] = {}

    def check(self, name: str, ok) -> None:
        self.checks[name] = bool(ok)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _table(header, rows) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _pick(table: dict, name: str | None, what: str):
    if not table:
        raise UsageError(f"the input file has no {what} block")
    if name is None:
        name = sorted(table)[0]
    if name not in table:
        raise UsageError(f"no {what} named {name!r}; available: {', '.join(sorted(table))}")
    return name, table[name]


def _parse_ints(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_rates(text: str) -> tuple:
    out = []
    for pair in text.split(";"):
        parts = pair.split(",")
        if len(parts) != 2:
            raise UsageError(f"rates are 'RU,RDC;RU,RDC;...', got {text!r}")
        out.append((float(parts[0]), float(parts[1])))
    return tuple(out)


# --------------------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------------------


def cmd_entropy(spec: specio.Spec, args) -> _Outcome:
    out = _Outcome()
    rows = []
    if args.cq_state is not None or (not spec.states and spec.cq_states):
        name, cq = _pick(spec.cq_states, args.cq_state, "cq_states")
        reps = {r.quantity: r.value for r in entropy.report(cq)}
        reps["H(X)"] = entropy.shannon(cq.weights.ravel())
        reps["H(E)"] = entropy.von_neumann(cq.quantum_marginal())
        reps["H(XE)"] = entropy.cq_joint_entropy(cq, tuple(range(cq.num_registers)))
        out.check("h2_ge_hmin", reps["h2"] >= reps["hmin"] - args.tol)
        out.check("hmax_ge_hE", reps["hmax"] >= reps["H(E)"] - args.tol)
        kind = "cq"
    else:
        name, (rho, dims) = _pick(spec.states, args.state, "states")
        if len(dims) != 2:
            raise UsageError(f"state {name!r} must be bipartite, has dims {dims}")
        reps = {
            "H(A)": entropy.subsystem_entropy(rho, dims, [0]),
            "H(B)": entropy.subsystem_entropy(rho, dims, [1]),
            "H(AB)": entropy.von_neumann(rho),
            "H(A|B)": entropy.conditional_entropy(rho, dims, [1]),
            "H(B|A)": entropy.conditional_entropy(rho, dims, [0]),
            "I(A;B)": entropy.mutual_information(rho, dims, [0], [1]),
            "I(A>B)": entropy.coherent_information(rho, dims, [0], [1]),
            "Hmax(AB)": entropy.hmax(rho),
        }
        out.check("mutual_information_nonnegative", reps["I(A;B)"] >= -args.tol)
        out.check("conditional_entropy_bounds", abs(reps["H(A|B)"]) <= np.log2(dims[0]) + args.tol)
        kind = "bipartite"
    out.record = {"state": name, "kind": kind, "quantities": reps}
    out.sections["quantities"] = _table(["quantity", "value"], sorted(reps.items()))
    return out


def _region_state(spec: specio.Spec):
    if spec.ensemble is None:
        raise UsageError("region needs an ensemble block")
    if spec.cq_channel is not None:
        return spec.cq_channel.cq_state(spec.ensemble.pmfs)
    if spec.channel is not None:
        return optimize.ensemble_state(spec.channel, spec.ensemble)
    raise UsageError("region needs a channel or cq_channel block")


def cmd_region(spec: specio.Spec, args) -> _Outcome:
    out = _Outcome()
    rho = _region_state(spec)
    regions.check_product(rho)
    tables = regions.entropy_tables(rho)
    raw = regions.private_bound_values(rho, tables=tables)
    f = regions.region_set_function(rho, tables=tables)
    out.record = {"L": f.L, "bounds": {str(s): float(f.values[s]) for s in range(1, 1 << f.L)},
                  "unclipped": {str(s): float(raw[s]) for s in range(1, 1 << f.L)},
                  "sum_rate": regions.sum_rate(f)}
    out.sections["bounds"] = regions.bounds_csv(f, raw)
    try:
        c = regions.monotonize(f, args.tol)
    except PrivmacError as exc:
        out.record["polymatroid"] = False
        out.record["reason"] = str(exc)
        out.check("polymatroid", False)
        return out
    out.record["polymatroid"] = True
    out.check("polymatroid", True)
    verts = regions.vertices(c, args.tol)
    out.record["monotonized"] = {str(s): float(c.values[s]) for s in range(1, 1 << c.L)}
    out.record["vertices"] = [list(v) for v in verts]
    out.sections["vertices"] = regions.vertices_csv(verts)
    if c.L == 2:
        poly = regions.polygon(c, args.tol)
        out.record["polygon"] = [list(p) for p in poly]
        out.sections["polygon"] = regions.vertices_csv(poly)
    return out


def cmd_hashlemma(spec: specio.Spec | None, args) -> _Outcome:
    out = _Outcome()
    if args.mode == "instance":
        if spec is None:
            raise UsageError("instance mode needs a spec with a cq_states block")
        name, rho = _pick(spec.cq_states, args.cq_state, "cq_states")
        if args.r is None:
            raise UsageError("instance mode needs --r")
        r = _parse_ints(args.r)
        if len(r) != rho.num_registers:
            raise UsageError(f"--r needs {rho.num_registers} entries")
        records = [hashlemma.verify_instance(args.seed, hashlemma.pad_to_bits(rho), r, args.kind)]
    elif args.mode == "suite":
        records = hashlemma.soundness_suite(args.count, args.seed, args.kind)
    else:
        records = hashlemma.product_suite(args.count, seed=args.seed, kind=args.kind)
    violations = sum(not rec.passed(args.tol) for rec in records)
    out.check("no_violations", violations == 0)
    out.record = {"mode": args.mode, "kind": args.kind, "instances": len(records), "violations": violations,
                  "min_margin": min(rec.margin for rec in records),
                  "summary": f"{violations} violations in {len(records)} instances",
                  "records": [rec.as_dict(args.tol) for rec in records]}
    out.sections["summary"] = _table(["instances", "violations", "min_margin"],
                                     [[len(records), violations, out.record["min_margin"]]])
    out.sections["records"] = _table(["seed", "L", "dims", "r", "lhs", "rhs", "margin", "pass"],
                                     [[rec.seed, rec.L, " ".join(map(str, rec.dims)), " ".join(map(str, rec.r)),
                                       rec.lhs, rec.rhs, rec.margin, int(rec.passed(args.tol))]
                                      for rec in records])
    return out


def cmd_aep(spec: specio.Spec, args) -> _Outcome:
    out = _Outcome()
    if spec.pmf is None:
        raise UsageError("aep needs a pmf block")
    t = aep.build_truncation(spec.pmf, args.n, args.epsilon)
    rep = aep.verify_lemma2(t)
    out.check("variational", rep.variational_ok)
    out.check("hmin", rep.hmin_ok)
    out.check("hmax", rep.hmax_ok)
    out.record = {**rep.as_dict(), "kept_mass": t.kept_mass, "support_y": t.support_y,
                  "delta": t.delta, "delta_s": t.delta_s.tolist()}
    out.sections["report"] = _table(["n", "epsilon", "V", "min_hmin_slack", "hmax_slack", "pass"],
                                    [[rep.n, rep.epsilon, rep.variational, min(rep.hmin_slack), rep.hmax_slack,
                                      int(rep.passed)]])
    return out


def cmd_optimize(spec: specio.Spec, args) -> _Outcome:
    out = _Outcome()
    if spec.channel is None:
        raise UsageError("optimize needs a channel block")
    ch = spec.channel
    if args.at_ensemble:
        if spec.ensemble is None:
            raise UsageError("--at-ensemble needs an ensemble block")
        value = optimize.p_sum_objective(ch, spec.ensemble)
        raw = optimize.p_sum_raw(ch, spec.ensemble)
        out.record = {"objective": "p", "mode": "evaluate", "value": value, "raw": raw}
        out.sections["result"] = _table(["objective", "value", "raw"], [["p", value, raw]])
        return out
    if args.objective == "p":
        signals = spec.ensemble.states if spec.ensemble is not None else None
        sizes = tuple(len(s) for s in signals) if signals is not None else None
        res = optimize.maximize_p_sum(ch, args.restarts, args.budget, args.seed, alphabet_sizes=sizes,
                                      signals=signals)
    else:
        res = optimize.maximize_q_sum(ch, args.restarts, args.budget, args.seed)
    out.record = {"objective": args.objective, **res.as_dict()}
    out.sections["result"] = _table(["objective", "value", "raw", "status", "evaluations"],
                                    [[args.objective, res.value, res.raw, res.status, res.evaluations]])
    out.sections["trace"] = _table(["start", "value"], res.trace)
    return out


def cmd_simulate(spec: specio.Spec, args) -> _Outcome:
    out = _Outcome()
    if spec.cq_channel is None or spec.ensemble is None:
        raise UsageError("simulate needs cq_channel and ensemble blocks")
    rates = _parse_rates(args.rates) if args.rates is not None else spec.rates
    if rates is None:
        raise UsageError("simulate needs rates (spec block or --rates)")
    rep = codesim.simulate(spec.cq_channel, spec.ensemble.pmfs, rates, args.n, seed=args.seed,
                           trials=args.trials, epsilon=args.epsilon, alpha=args.alpha)
    out.check("expurgation_retains", rep.retained_fraction >= 1 - 2 * args.alpha)
    out.record = {**rep.as_dict(), "requested_rates": [list(r) for r in rates]}
    out.sections["summary"] = _table(
        ["n", "mode", "max_error", "avg_error", "leakage", "avg_leakage", "retained_fraction"],
        [[rep.n, rep.mode, rep.max_error, rep.avg_error, rep.leakage, rep.avg_leakage, rep.retained_fraction]])
    out.sections["messages"] = rep.per_message_csv()
    return out


def cmd_degradable(spec: specio.Spec, args) -> _Outcome:
    out = _Outcome()
    if spec.channel is None:
        raise UsageError("degradable needs a channel block")
    res = optimize.check_degradable(spec.channel, tol=args.tol if args.tol_given else optimize.DEGRADABLE_TOL)
    out.check("degradable", res.degradable)
    out.record = {"verdict": res.label, "residual": res.residual, "iterations": res.iterations}
    if res.map is not None:
        out.record["map_kraus_count"] = int(res.map.kraus.shape[0])
    out.sections["verdict"] = _table(["verdict", "residual", "iterations"],
                                     [[res.label, res.residual, res.iterations]])
    return out


COMMANDS = {
    "entropy": cmd_entropy,
    "region": cmd_region,
    "hashlemma": cmd_hashlemma,
    "aep": cmd_aep,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "degradable": cmd_degradable,
}


# --------------------------------------------------------------------------------------
# Argument parsing and dispatch
# --------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--tol", type=float, default=None, help="check tolerance (default 1e-9)")
    common.add_argument("--budget", type=int, default=40000, help="objective evaluations for optimize")
    common.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "records"), default="records")
    common.add_argument("--max-dim", type=int, default=None,
                        help="dimension cap; overrides the PRIVMAC_MAX_DIM environment variable")

    parser = argparse.ArgumentParser(prog="privmac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", parents=[common], help="entropic quantities of a named state")
    p.add_argument("spec", type=Path)
    p.add_argument("--state", default=None, help="bipartite state name")
    p.add_argument("--cq-state", default=None, help="cq state name")

    p = sub.add_parser("region", parents=[common], help="private rate region at the input ensemble")
    p.add_argument("spec", type=Path)

    p = sub.add_parser("hashlemma", parents=[common], help="leftover-hash verification")
    p.add_argument("spec", type=Path, nargs="?", default=None)
    p.add_argument("--mode", choices=("suite", "product", "instance"), default="suite")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--kind", choices=hashlemma.KINDS, default="toeplitz")
    p.add_argument("--r", default=None, help="output bits per user, e.g. 1,2")
    p.add_argument("--cq-state", default=None)

    p = sub.add_parser("aep", parents=[common], help="typical-set truncation of an i.i.d. pmf")
    p.add_argument("spec", type=Path)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.25)

    p = sub.add_parser("optimize", parents=[common], help="maximize the private or coherent sum objective")
    p.add_argument("spec", type=Path)
    p.add_argument("--objective", choices=("p", "q"), default="p")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--at-ensemble", action="store_true", help="evaluate at the input ensemble instead")

    p = sub.add_parser("simulate", parents=[common], help="random-binning code simulation")
    p.add_argument("spec", type=Path)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", default=None, help="per-user 'RU,RDC' pairs separated by ';'")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--alpha", type=float, default=0.1)

    p = sub.add_parser("degradable", parents=[common], help="search for a degrading map")
    p.add_argument("spec", type=Path)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    args.tol_given = args.tol is not None
    if args.tol is None:
        args.tol = _config.RATE_TOL
    if args.max_dim is not None:
        os.environ["PRIVMAC_MAX_DIM"] = str(args.max_dim)
    spec_path = getattr(args, "spec", None)
    try:
        spec = specio.load_spec(spec_path) if spec_path is not None else None
        outcome = COMMANDS[args.command](spec, args)
    except PrivmacError as exc:
        print(f"privmac {args.command}: error: {exc}", file=stderr)
        return EXIT_ERROR
    tolerances = {"check": args.tol, "rate": _config.RATE_TOL, "cptp": _config.CPTP_TOL,
                  "eig_cutoff": _config.EIG_CUTOFF, "max_dim": _config.max_dim()}
    if args.command == "optimize":
        tolerances["budget"] = args.budget
    manifest = specio.manifest_for(args.command, args.seed, tolerances, [spec_path] if spec_path else [])
    if args.format == "records":
        record = {**outcome.record, "checks": outcome.checks, "passed": outcome.passed}
        text = specio.render_records(manifest, record)
    else:
        checks = _table(["check", "pass"], [[k, int(v)] for k, v in outcome.checks.items()])
        text = specio.render_csv(manifest, {**outcome.sections, "checks": checks})
    if args.out is not None:
        args.out.write_text(text)
    else:
        stdout.write(text)
    return EXIT_OK if outcome.passed else EXIT_CHECK_FAILED


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
