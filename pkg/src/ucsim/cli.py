"""Command-line interface: ``ucsim validate|run|advantage|compose|sweep``.

Exit status is 0 on success, 1 on validation or compile failures and 2 on
runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import records as rec
from .circuit import CircuitError, validate_circuit
from .composition import ProtocolTree, compose_bottom_up
from .engine import QuantumWidthExceeded, run_exact, run_monte_carlo
from .pdl import LISTINGS, PdlError, compile_document, diagnose, load_listing
from .pdl.syntax import Diagnostic, Span
from .protocol import InvalidSimulator, Protocol, bind_overall_setting, compose_protocols
from .security import SecurityExperiment, distinguishing_advantage
from . import stdlib

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class CliFailure(Exception):
    def __init__(self, code: int, diagnostics: list[Diagnostic]):
        self.code = code
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.message for d in diagnostics))


def _fail(code: int, msg: str, suggestion: str = "", span: Span | None = None):
    raise CliFailure(code, [Diagnostic("error", span or Span(0, 0), msg, suggestion)])


# ---------------------------------------------------------------------------
# Builtins

MODULES = {
    "sot": stdlib.build_ideal_sot,
    "ideal-sot": stdlib.build_ideal_sot,
    "real-sot": stdlib.build_real_sot,
    "bc-module": lambda k: stdlib.build_bc_module(k, stdlib.build_real_sot(k)),
    "ct-module": lambda k: stdlib.build_ct_module(),
}

SIMULATORS = {
    "bc": stdlib.build_bc_simulator,
    "real-sot": stdlib.build_real_sot_simulator,
    "empty": lambda e, k: stdlib.build_identity_simulator(e, k),
}

CERTIFICATES = {
    "bc": stdlib.bc_certificate,
    "real-sot": stdlib.real_sot_certificate,
    "ct-self": stdlib.ct_self_certificate,
}

BUILTIN_TREES = {
    "bc": (stdlib.bc_tree, stdlib.bc_certificates),
    "ct": (stdlib.ct_tree, stdlib.ct_certificates),
}


def _environment(name: str, k: int):
    if name in stdlib.STDLIB_ENVIRONMENTS:
        return stdlib.STDLIB_ENVIRONMENTS[name](k)
    if name == "bias-attack/ct":
        return stdlib.build_bias_attack_environment(k, with_ct=False)
    if name == "honest/ct":
        return stdlib.build_bias_attack_environment(k, corrupt=False, with_ct=False)
    if os.path.exists(name):
        _fail(EXIT_INVALID, f"environment files are not supported: {name}", "use a builtin environment")
    choices = sorted(stdlib.STDLIB_ENVIRONMENTS) + ["bias-attack/ct", "honest/ct"]
    _fail(EXIT_INVALID, f"unknown environment {name!r}", f"choose from {', '.join(choices)}")


def _compile_file(path: str, k: int | None, known=()) -> Protocol:
    text = Path(path).read_text(encoding="utf-8")
    doc, diags = diagnose(text)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise CliFailure(EXIT_INVALID, errors)
    params = {p: k for p in doc.params}
    if doc.params and k is None:
        _fail(EXIT_INVALID, f"{path}: parameters {list(doc.params)} need --k")
    try:
        return compile_document(doc, params, known)
    except PdlError as err:
        raise CliFailure(EXIT_INVALID, err.diagnostics)


def _compile_listing(name: str, k: int | None, known=()) -> Protocol:
    from .pdl.syntax import parse

    doc = parse(load_listing(name))
    return compile_document(doc, {p: k for p in doc.params}, known)


def _callees(names, k) -> list[Protocol]:
    out = []
    known: list = []
    for name in names or ():
        p = _protocol(name, k, known)
        known.extend(p.channels)
        out.append(p)
    return out


def _protocol(name: str, k: int | None, known=()) -> Protocol:
    """A protocol from a .pdl file, a bundled listing (listing:sot) or a builtin."""
    if os.path.exists(name):
        return _compile_file(name, k, known)
    if name.startswith("listing:") and name[8:] in LISTINGS:
        return _compile_listing(name[8:], k, known)
    if k is None and name not in ("ideal-ct", "ct-module"):
        _fail(EXIT_INVALID, f"protocol {name!r} needs --k")
    if name in stdlib.PROTOCOLS:
        return stdlib.PROTOCOLS[name](k)
    if name in MODULES:
        return MODULES[name](k)
    choices = sorted(set(stdlib.PROTOCOLS) | set(MODULES))
    _fail(EXIT_INVALID, f"unknown protocol {name!r}", f"use a .pdl file, listing:<{'|'.join(LISTINGS)}> or one of {', '.join(choices)}")


def _with_callees(main: str, callees, k) -> Protocol:
    subs = _callees(callees, k)
    known = [c for p in subs for c in p.channels]
    p = _protocol(main, k, known)
    if subs:
        p = compose_protocols(p.name, p, *subs)
    return p


def _parse_k(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


# ---------------------------------------------------------------------------
# Commands


def _group_violations(protocol: Protocol, violations) -> list[Diagnostic]:
    """One diagnostic per pair of source statements (or per statement)."""
    origin = {g.id: g.origin for g in protocol.circuit.gates}
    groups: dict = {}
    for v in violations:
        spans = tuple(sorted({origin.get(g) or Span(0, 0) for g in v.gates}, key=lambda s: (s.line, s.column)))
        key = (v.kind, spans)
        groups.setdefault(key, []).append(v)
    out = []
    for (kind, spans), vs in groups.items():
        regs = sorted({v.register for v in vs if v.register})
        where = " and ".join(str(s) for s in spans) or "?"
        if kind == "unordered conflict":
            msg = f"statements at {where} touch {', '.join(regs)} without an order between them"
            hint = "order them through a message, or let one role do both"
        else:
            msg = f"{kind} at {where}: {vs[0].message}"
            hint = ""
        out.append(Diagnostic("error", spans[0] if spans else Span(0, 0), msg, hint))
    return out


def cmd_validate(args) -> list[dict]:
    p = _with_callees(args.file, args.callee, args.k)
    report = validate_circuit(p.circuit)
    if not report.ok:
        raise CliFailure(EXIT_INVALID, _group_violations(p, report.violations))
    return [{"file": args.file, "protocol": p.name, "roles": len(p.roles), "gates": len(p.circuit.gates), "status": "ok"}]


def _distribution_records(dist) -> list[dict]:
    out = []
    for value in sorted(dist.probs, key=lambda v: v if isinstance(v, tuple) else (v,)):
        vals = value if isinstance(value, tuple) else (value,)
        row = {reg: int(v) for reg, v in zip(dist.observe, vals)}
        row["p"] = float(dist.probs[value])
        if dist.stderr is not None:
            row["stderr"] = float(dist.stderr.get(value, 0.0))
        out.append(row)
    return out


def cmd_run(args) -> list[dict]:
    p = _with_callees(args.file, args.callee, args.k)
    c = p.circuit
    if args.env:
        c = bind_overall_setting(_environment(args.env, args.k), p)
    missing = [r for r in args.observe if r not in c.registers]
    if missing:
        _fail(EXIT_INVALID, f"unknown registers {missing}")
    if args.mode == "exact":
        dist = run_exact(c, args.observe)
    else:
        dist = run_monte_carlo(c, args.observe, samples=args.samples, seed=args.seed)
    return _distribution_records(dist)


def _experiment(args, k: int, seed: int):
    p = _with_callees(args.protocol, args.callee, k)
    ideal = _protocol(args.ideal, k) if args.ideal != "ideal-bc" else stdlib.build_ideal_bc(k, p)
    e = _environment(args.env, k)
    if args.simulator not in SIMULATORS:
        _fail(EXIT_INVALID, f"unknown simulator {args.simulator!r}", f"choose from {', '.join(sorted(SIMULATORS))}")
    sim = SIMULATORS[args.simulator](e, k)
    mode = "exact" if args.mode == "exact" else "sample"
    return SecurityExperiment(p, ideal, sim, e, k, mode, args.samples, seed)


def _advantage_record(x) -> dict:
    r = distinguishing_advantage(x).record()
    if r["mode"] == "exact":
        for key in ("seed", "samples", "stderr_real", "stderr_ideal"):
            r.pop(key)
    return r


def cmd_advantage(args) -> list[dict]:
    return [_advantage_record(_experiment(args, args.k, args.seed))]


def cmd_sweep(args) -> list[dict]:
    out = []
    for i, k in enumerate(_parse_k(args.k)):
        r = _advantage_record(_experiment(args, k, args.seed + i))
        r["k"] = k
        out.append(r)
    return out


def _load_manifest(path: str, k: int) -> tuple[ProtocolTree, dict]:
    try:
        m = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        _fail(EXIT_INVALID, f"cannot read manifest {path}: {err}")
    try:
        root = m["root"]
        children = {q: list(v) for q, v in m.get("children", {}).items()}
        nodes = m["nodes"]
    except (KeyError, TypeError):
        _fail(EXIT_INVALID, "manifest needs 'root', 'children' and 'nodes'")
    modules, certs = {}, {}
    base = Path(path).parent
    for q, entry in nodes.items():
        mod = entry["module"]
        cand = base / mod
        modules[q] = _compile_file(str(cand), k) if cand.suffix == ".pdl" and cand.exists() else _protocol(mod, k)
        cert = entry.get("certificate")
        if cert not in CERTIFICATES:
            _fail(EXIT_INVALID, f"node {q!r}: unknown certificate {cert!r}", f"choose from {', '.join(sorted(CERTIFICATES))}")
        certs[q] = CERTIFICATES[cert](k)
    return ProtocolTree(root, children, modules), certs


def cmd_compose(args) -> list[dict]:
    if args.tree in BUILTIN_TREES:
        tree_fn, certs_fn = BUILTIN_TREES[args.tree]
        tree, certs = tree_fn(args.k), certs_fn(args.k)
    else:
        tree, certs = _load_manifest(args.tree, args.k)
    e = _environment(args.env, args.k)
    res = compose_bottom_up(tree, certs, e, n=args.k, measure=not args.no_measure)
    out = res.ledger.records()
    total = {"node": "total", "definition_id": "", "epsilon": res.ledger.total, "env_size": e.size}
    total["measured_advantage"] = res.end_to_end.advantage if res.end_to_end else None
    out.append(total)
    return out


# ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive count, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ucsim", description="Circuit-level security experiments for composed protocols.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write records here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling (ignored in exact mode)")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="parse, compile and check a protocol file")
    v.add_argument("file")
    v.add_argument("--k", type=int)
    v.add_argument("--callee", action="append", help="protocol whose I/O channels the file uses (repeatable)")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", parents=[common], help="final distribution of some registers")
    r.add_argument("file")
    r.add_argument("--observe", nargs="+", required=True)
    r.add_argument("--mode", choices=("exact", "mc"), default="exact")
    r.add_argument("--samples", type=_positive, default=100_000)
    r.add_argument("--k", type=int)
    r.add_argument("--callee", action="append")
    r.add_argument("--env", help="bind a builtin environment first")
    r.set_defaults(func=cmd_run)

    def experiment_args(p):
        p.add_argument("--protocol", default="bc")
        p.add_argument("--callee", action="append")
        p.add_argument("--ideal", default="ideal-bc")
        p.add_argument("--simulator", default="bc")
        p.add_argument("--env", default="bias-attack")
        p.add_argument("--mode", choices=("exact", "mc"), default="exact")
        p.add_argument("--samples", type=_positive, default=100_000)

    a = sub.add_parser("advantage", parents=[common], help="distinguishing advantage of one environment")
    experiment_args(a)
    a.add_argument("--k", type=int, required=True)
    a.set_defaults(func=cmd_advantage)

    s = sub.add_parser("sweep", parents=[common], help="advantage for a range of k, e.g. --k 1..8")
    experiment_args(s)
    s.add_argument("--k", required=True)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compose", parents=[common], help="bottom-up replacement with epsilon ledger")
    c.add_argument("--tree", required=True, help="JSON manifest (root, children, nodes{module, certificate}) or builtin bc/ct")
    c.add_argument("--env", default="bias-attack")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--no-measure", action="store_true", help="skip the per-step advantage runs")
    c.set_defaults(func=cmd_compose)
    return ap


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as stop:
        # --help exits 0; usage errors are invalid input, not runtime failures
        return EXIT_OK if stop.code in (0, None) else EXIT_INVALID
    try:
        records = args.func(args)
    except CliFailure as err:
        return _report(args, err.code, err.diagnostics)
    except PdlError as err:
        return _report(args, EXIT_INVALID, err.diagnostics)
    except (InvalidSimulator, QuantumWidthExceeded, CircuitError, ValueError, KeyError, OSError) as err:
        return _report(args, EXIT_RUNTIME, [Diagnostic("error", Span(0, 0), f"{type(err).__name__}: {err}")])
    _write(rec.emit(records, args.format), args.out)
    return EXIT_OK


def _report(args, code: int, diagnostics) -> int:
    for d in diagnostics:
        print(str(d), file=sys.stderr)
    if args.format == "json":
        _write(rec.to_json([], [d.record() for d in diagnostics] or [{"message": "failed"}]), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
