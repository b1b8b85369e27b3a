"""Compile protocol documents to :class:`~ucsim.protocol.Protocol` objects.

Each role's statements become gates in program order through a
:class:`~ucsim.protocol.RoleBuilder`:

* ``picks`` draws one Hadamard-and-measure coin per bit,
* ``send``/``receive`` write and read channel registers; a receive guards
  every later gate of the role on the channel's activation bit,
* ``receive input``/``send output`` use the role's next input/output
  channel, ``send input``/``receive output`` the next one of the callee,
* ``if`` evaluates its condition into one bit and controls the gates of the
  two branches on opposite values of it.

Field names of a message are the sent variable names (``value`` for other
expressions) and its channel tag is their comma-joined list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from ..circuit import CircuitError, const_fn, copy_fn, eq_fn, select_fn, xor_fn
from ..protocol import (
    INTERNAL,
    Channel,
    Protocol,
    ProtocolBuilder,
    RoleBuilder,
    input_channel_id,
    output_channel_id,
)
from ..stdlib.protocols import BOTTOM, xor_bottom_fn
from .syntax import (
    Assign,
    BinOp,
    Bottom,
    Const,
    Diagnostic,
    Domain,
    For,
    If,
    PdlDocument,
    PdlError,
    Picks,
    Receive,
    ReceiveInput,
    ReceiveOutput,
    Send,
    SendInput,
    SendOutput,
    Span,
    Str,
    Var,
    _fmt_expr,
    parse,
)

__all__ = ["CompileError", "compile_document", "compile_text", "load_listing", "compile_listing", "LISTINGS"]

LISTINGS = ("sot", "bc", "ct")


class CompileError(PdlError):
    pass


@dataclass
class _Value:
    reg: str
    width: int
    bottom: bool = False


@dataclass
class _Expr:
    fn: object
    sources: tuple
    width: int
    bottom: bool
    label: str
    const: int | None = None
    reg: str | None = None  # set when the expression is a plain variable


@dataclass
class _RoleState:
    rb: RoleBuilder
    vars: dict = field(default_factory=dict)
    temps: int = 0
    out_counts: dict = field(default_factory=dict)
    in_counts: dict = field(default_factory=dict)


def _neq_fn(a, b):
    return (a != b).astype(np.uint64)


class _Compiler:
    def __init__(self, doc: PdlDocument, params: Mapping[str, int], known: Iterable[Channel]):
        self.doc = doc
        self.params = dict(params)
        self.pb = ProtocolBuilder(doc.name, known_channels=known)
        self.decls = {(c.sender, c.recipient, c.tag): c for c in doc.channels}
        self.roles: dict[str, _RoleState] = {}
        self.span: Span | None = None

    def fail(self, msg: str, suggestion: str = ""):
        raise CompileError([Diagnostic("error", self.span or Span(0, 0), msg, suggestion)])

    # values --------------------------------------------------------------
    def power(self, d: Domain) -> int:
        if d.bottom and d.power == 1:
            return 2
        p = d.power
        if isinstance(p, str):
            if p not in self.params:
                self.fail(f"parameter {p!r} is not bound", f"pass {p}=<value>")
            p = self.params[p]
        if not isinstance(p, (int, np.integer)) or p < 1:
            self.fail(f"domain exponent must be a positive integer, got {p!r}")
        return int(p) if not d.bottom else max(int(p), 2)

    def index_value(self, st: _RoleState, e, loop: dict):
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Var) and e.index is None and e.name in loop:
            return loop[e.name]
        if isinstance(e, Var) and e.index is None and e.name in self.params:
            return self.params[e.name]
        return None

    def name_of(self, st: _RoleState, v: Var, loop: dict) -> str:
        if v.index is None:
            return v.name
        i = self.index_value(st, v.index, loop)
        if i is None:
            self.fail(f"index of {v.name!r} must be a constant or loop variable here")
        return f"{v.name}{i}"

    def lookup(self, st: _RoleState, name: str) -> _Value:
        if name not in st.vars:
            self.fail(f"variable {name!r} used before assignment in role {st.rb.name}")
        return st.vars[name]

    def expr(self, st: _RoleState, e, loop: dict) -> _Expr:
        if isinstance(e, BinOp) and e.op in ("eq", "neq"):
            return self.comparison(st, e, loop)
        sources: list[str] = []

        def slot(reg: str) -> int:
            if reg not in sources:
                sources.append(reg)
            return sources.index(reg)

        def build(x):
            """Returns (evaluator over the source arrays, width, may be bottom)."""
            if isinstance(x, Const):
                v = np.uint64(x.value)
                return (lambda a: v), max(int(x.value).bit_length(), 1), False
            if isinstance(x, Str):
                return (lambda a: np.uint64(1)), 1, False
            if isinstance(x, Bottom):
                return (lambda a: np.uint64(BOTTOM)), 2, True
            if isinstance(x, Var):
                if x.index is None and x.name in loop:
                    v = np.uint64(loop[x.name])
                    return (lambda a: v), max(int(loop[x.name]).bit_length(), 1), False
                if x.index is None and x.name in self.params and x.name not in st.vars:
                    v = np.uint64(self.params[x.name])
                    return (lambda a: v), max(int(self.params[x.name]).bit_length(), 1), False
                if x.index is not None and self.index_value(st, x.index, loop) is None:
                    ix, _, _ = build(x.index)
                    elems = []
                    j = 0
                    while f"{x.name}{j}" in st.vars:
                        elems.append(st.vars[f"{x.name}{j}"])
                        j += 1
                    if not elems:
                        self.fail(f"array {x.name!r} used before assignment in role {st.rb.name}")
                    pos = [slot(v.reg) for v in elems]
                    w = max(v.width for v in elems)
                    return (lambda a: select_fn(ix(a), *(a[p] for p in pos))), w, any(v.bottom for v in elems)
                val = self.lookup(st, self.name_of(st, x, loop))
                p = slot(val.reg)
                return (lambda a: a[p]), val.width, val.bottom
            if isinstance(x, BinOp):
                parts = [build(y) for y in x.args]
                fns = [p[0] for p in parts]
                if x.op == "xor":
                    bot = any(p[2] for p in parts)
                    f = xor_bottom_fn if bot else xor_fn
                    return (lambda a: f(*(g(a) for g in fns))), max(p[1] for p in parts), bot
                f = eq_fn if x.op == "eq" else _neq_fn
                g0, g1 = fns
                return (lambda a: f(np.asarray(g0(a), dtype=np.uint64), np.asarray(g1(a), dtype=np.uint64))), 1, False
            self.fail(f"unsupported expression {x!r}")

        ev, width, bottom = build(e)
        srcs = tuple(sources)
        label = f"expr:{_fmt_expr(e)}"
        const = None
        reg = None
        # Use the builders' canonical functions where the shape allows it.
        if isinstance(e, (Const, Str, Bottom)):
            const = {Const: lambda: e.value, Str: lambda: 1, Bottom: lambda: BOTTOM}[type(e)]()
            fn, label = const_fn(const), "bottom" if isinstance(e, Bottom) else f"const{const}"
        elif isinstance(e, Var) and len(srcs) == 1 and not (e.index is None and e.name in loop):
            fn, label = copy_fn, "copy"
            reg = srcs[0]
        elif isinstance(e, Var) and e.index is not None and len(srcs) > 1:
            fn, label = select_fn, "select"
        elif isinstance(e, BinOp) and e.op == "xor" and all(isinstance(a, Var) and a.index is None for a in e.args) and len(srcs) == len(e.args):
            fn, label = (xor_bottom_fn, "xor_bottom") if bottom else (xor_fn, "xor")
        elif not srcs:
            value = int(ev([]))
            fn, label, const = const_fn(value), f"const{value}", value
        else:
            fn = lambda *a: np.asarray(ev(a), dtype=np.uint64)  # noqa: E731
        return _Expr(fn, srcs, width, bottom, label, const, reg)

    def comparison(self, st: _RoleState, e: BinOp, loop: dict) -> _Expr:
        """Operands other than plain variables are first stored in temporaries."""
        regs = []
        for a in e.args:
            x = self.expr(st, a, loop)
            regs.append(x.reg if x.reg is not None else self.materialize(st, x).reg)
        fn, label = (eq_fn, "eq") if e.op == "eq" else (_neq_fn, "neq")
        return _Expr(fn, tuple(regs), 1, False, label)

    def materialize(self, st: _RoleState, e: _Expr, name: str | None = None, width: int | None = None) -> _Value:
        if name is None:
            st.temps += 1
            name = f"_t{st.temps}"
        if name in st.vars:
            self.fail(f"variable {name!r} assigned twice in role {st.rb.name}", "use a fresh name")
        w = max(width or 0, e.width)
        reg = st.rb.reg(name, w)
        st.rb.xor_into(reg, list(e.sources), e.fn, e.label)
        val = _Value(reg, w, e.bottom)
        st.vars[name] = val
        return val

    def send_values(self, st: _RoleState, items, loop) -> list[tuple[str, object, int, bool]]:
        """(field name, register or constant, width, bottom) per sent item."""
        out = []
        for it in items:
            e = self.expr(st, it.expr, loop)
            if it.name is not None:
                v = self.materialize(st, e, it.name)
                out.append((it.name, v.reg, v.width, v.bottom))
            elif e.reg is not None:
                name = self.name_of(st, it.expr, loop)
                out.append((name, e.reg, e.width, e.bottom))
            elif e.const is not None:
                out.append(("value", e.const, e.width, False))
            else:
                v = self.materialize(st, e)
                out.append(("value", v.reg, v.width, v.bottom))
        return out

    def check_widths(self, ch: Channel, values):
        for f, (_, _, w, _) in zip(ch.fields, values):
            if w > f.width:
                self.fail(f"width mismatch on {ch.id}: field {f.id} has {f.width} bits, value has {w}")

    # statements ----------------------------------------------------------
    def stmt(self, st: _RoleState, s, loop: dict):
        self.span = getattr(s, "span", None) or self.span
        st.rb.origin = self.span
        rb = st.rb
        if isinstance(s, ReceiveInput):
            if s.source not in (None, "App"):
                self.fail("'receive input' comes from App")
            fields = []
            for t in s.targets:
                w = self.power(t.domain) if t.domain else 1
                fields.append((self.name_of(st, t.var, loop), w))
            regs = rb.receive_input(*fields)
            for (n, w), reg, t in zip(fields, regs, s.targets):
                self.define(st, n, _Value(reg, rb.width(reg), bool(t.domain and t.domain.bottom)))
        elif isinstance(s, ReceiveOutput):
            idx = st.out_counts.get(s.source, 0)
            st.out_counts[s.source] = idx + 1
            cid = output_channel_id(s.source, idx)
            names = [self.name_of(st, t.var, loop) for t in s.targets]
            ch = self.pb.channels.get(cid)
            if ch is None:
                if any(t.domain is None for t in s.targets):
                    self.fail(f"width of {cid} unknown", "annotate with ∈ {0,1}^n or compile against the callee")
                ch = self.pb.output_channel(s.source, idx, [(n, self.power(t.domain)) for n, t in zip(names, s.targets)])
            if len(ch.fields) != len(names):
                self.fail(f"{cid} carries {len(ch.fields)} values, {len(names)} received")
            for f, t in zip(ch.fields, s.targets):
                if t.domain is not None and self.power(t.domain) != f.width:
                    self.fail(f"width mismatch on {cid}: field has {f.width} bits, annotation {self.power(t.domain)}")
            regs = rb.recv(ch, *names)
            for n, reg, t in zip(names, regs, s.targets):
                self.define(st, n, _Value(reg, rb.width(reg), bool(t.domain and t.domain.bottom)))
        elif isinstance(s, Receive):
            names = [self.name_of(st, t.var, loop) for t in s.targets]
            tag = ",".join(names)
            cands = [
                c
                for c in self.pb.channels.values()
                if c.type.direction == INTERNAL and c.recipient == rb.name and c.id.endswith(":" + tag) and (s.source is None or c.sender == s.source)
            ]
            if not cands:
                self.fail(f"no message {tag!r} sent to {rb.name} before this receive", "send it in an earlier step")
            if len(cands) > 1:
                self.fail(f"message {tag!r} to {rb.name} is ambiguous", "name the sender with 'from'")
            ch = cands[0]
            regs = rb.recv(ch, *names)
            for n, reg in zip(names, regs):
                self.define(st, n, _Value(reg, rb.width(reg), self.bottom_fields.get((ch.id, n), False)))
        elif isinstance(s, (Send, SendInput, SendOutput)):
            values = self.send_values(st, s.items, loop)
            if isinstance(s, SendOutput):
                if s.to != "App":
                    self.fail("'send output' goes to App")
                ch = self.pb.output_channel(rb.name, rb.n_out, [(n, w) for n, _, w, _ in values])
                rb.n_out += 1
            elif isinstance(s, SendInput):
                idx = st.in_counts.get(s.to, 0)
                st.in_counts[s.to] = idx + 1
                ch = self.pb.channels.get(input_channel_id(s.to, idx))
                if ch is None:
                    ch = self.pb.input_channel(s.to, idx, [(n, w) for n, _, w, _ in values])
            else:
                tag = ",".join(n for n, _, _, _ in values)
                decl = self.decls.get((rb.name, s.to, tag))
                medium, security = (decl.medium, decl.security) if decl else ("classical", "hidden")
                try:
                    ch = self.pb.channel(rb.name, s.to, tag, [(n, w) for n, _, w, _ in values], medium, security)
                except CircuitError as err:
                    self.fail(str(err))
                for n, _, _, b in values:
                    self.bottom_fields[(ch.id, n)] = b
            if len(ch.fields) != len(values):
                self.fail(f"{ch.id} carries {len(ch.fields)} values, {len(values)} sent")
            self.check_widths(ch, values)
            rb.send(ch, *(v for _, v, _, _ in values))
        elif isinstance(s, Picks):
            name = self.name_of(st, s.target, loop)
            if name in st.vars:
                self.fail(f"variable {name!r} assigned twice in role {rb.name}")
            reg = rb.pick(name, self.power(s.domain))
            self.define(st, name, _Value(reg, rb.width(reg)))
        elif isinstance(s, Assign):
            name = self.name_of(st, s.target, loop)
            e = self.expr(st, s.expr, loop)
            hint = self.hints.get((rb.name, name))
            if hint is not None:
                val = st.vars.get(name) or _Value(rb.reg(name, hint[0]), hint[0], hint[1])
                if name in self.assigned_here:
                    self.fail(f"variable {name!r} assigned twice on one path in role {rb.name}")
                self.assigned_here.add(name)
                rb.xor_into(val.reg, list(e.sources), e.fn, e.label)
                st.vars[name] = val
            else:
                self.materialize(st, e, name)
        elif isinstance(s, If):
            cond = self.expr(st, s.cond, loop)
            if cond.reg is not None and cond.width == 1:
                c = cond.reg
            else:
                c = self.materialize(st, _Expr(cond.fn, cond.sources, 1, False, cond.label, cond.const, None)).reg
            self.hint_branches(st, s, loop)
            outer = self.assigned_here
            for pol, body in ((1, s.then), (0, s.orelse)):
                self.assigned_here = set()
                with rb.branch(c, pol):
                    for x in body:
                        self.stmt(st, x, loop)
            self.assigned_here = outer
        elif isinstance(s, For):
            if s.var in st.vars:
                self.fail(f"loop variable {s.var!r} shadows a variable")
            for v in s.values:
                for x in s.body:
                    self.stmt(st, x, {**loop, s.var: v})
        else:
            self.fail(f"cannot compile {type(s).__name__}")

    def define(self, st: _RoleState, name: str, val: _Value):
        if name in st.vars:
            self.fail(f"variable {name!r} assigned twice in role {st.rb.name}")
        st.vars[name] = val

    def hint_branches(self, st: _RoleState, s: If, loop: dict):
        """Give variables assigned in either branch one register wide enough for both."""
        found: dict[str, tuple[int, bool]] = {}

        def scan(stmts):
            for x in stmts:
                if isinstance(x, Assign):
                    name = self.name_of(st, x.target, loop)
                    try:
                        e = self.expr(st, x.expr, loop)
                    except CompileError:
                        continue
                    w, b = found.get(name, (0, False))
                    found[name] = (max(w, e.width), b or e.bottom)
                elif isinstance(x, If):
                    scan(x.then)
                    scan(x.orelse)

        scan(s.then)
        scan(s.orelse)
        for name, (w, b) in found.items():
            if name in st.vars:
                self.fail(f"variable {name!r} assigned twice in role {st.rb.name}")
            if (st.rb.name, name) not in self.hints:
                self.hints[(st.rb.name, name)] = (w, b)

    def run(self) -> Protocol:
        for p in self.doc.params:
            if p not in self.params:
                self.fail(f"parameter {p!r} is not bound", f"pass {p}=<value>")
        self.hints: dict = {}
        self.bottom_fields: dict = {}
        self.assigned_here: set = set()
        for r in self.doc.roles:
            self.roles[r.name] = _RoleState(self.pb.role(r.name, r.participant, corruptible=r.corruptible and not r.trusted))
        for stp in self.doc.steps:
            self.span = stp.span
            if stp.role not in self.roles:
                self.fail(f"unknown role {stp.role!r}")
            st = self.roles[stp.role]
            for s in stp.body:
                self.stmt(st, s, {})
        trusted = [r.name for r in self.doc.roles if r.trusted]
        try:
            return self.pb.build(trusted=trusted)
        except CircuitError as err:
            self.fail(str(err))


def compile_document(doc: PdlDocument, params: Mapping[str, int] | None = None, known_channels: Iterable[Channel] = ()) -> Protocol:
    """Compile ``doc``; ``known_channels`` fix the shapes of a callee's I/O channels."""
    return _Compiler(doc, params or {}, known_channels).run()


def compile_text(text: str, params: Mapping[str, int] | None = None, known_channels: Iterable[Channel] = ()) -> Protocol:
    return compile_document(parse(text), params, known_channels)


def load_listing(name: str) -> str:
    """Source text of a bundled listing: 'sot', 'bc' or 'ct'."""
    if name not in LISTINGS:
        raise KeyError(f"unknown listing {name!r}; choose from {LISTINGS}")
    return resources.files("ucsim.pdl").joinpath("listings", f"{name}.pdl").read_text(encoding="utf-8")


def compile_listing(name: str, k: int | None = None, known_channels: Iterable[Channel] = ()) -> Protocol:
    params = {"k": k} if k is not None else {}
    return compile_text(load_listing(name), params, known_channels)
