"""Protocol description language: syntax tree, parser and formatter.

A document looks like::

    protocol SOT
    param k
    role SOT-Bob participant Bob corruptible
    role SOT-Charlie participant Charlie trusted
    channel s0 from SOT-Bob to SOT-Charlie type classical hidden
    step 1
    SOT-Bob: for i = 0,1 { receive input (s[i] ∈ {0,1}^k) from App; send s[i] to SOT-Charlie; };

Statements end with ``;``; ``#`` starts a comment.  ``⊕``/``xor``,
``⊥``/``bot``, ``∈``/``in`` and ``∈_R``/``in_R`` are interchangeable, and
hatted names are spelled out (``ŝ`` is ``shat``).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

__all__ = [
    "Diagnostic",
    "PdlError",
    "Span",
    "Domain",
    "Var",
    "Const",
    "Str",
    "Bottom",
    "BinOp",
    "Item",
    "Target",
    "ReceiveInput",
    "ReceiveOutput",
    "Receive",
    "SendInput",
    "SendOutput",
    "Send",
    "Picks",
    "Assign",
    "If",
    "For",
    "Step",
    "RoleDecl",
    "ChannelDecl",
    "PdlDocument",
    "parse",
    "diagnose",
    "format_document",
    "normalize_name",
]

MEDIA = ("classical", "quantum")
SECURITIES = ("hidden", "authenticated", "insecure")


@dataclass(frozen=True)
class Span:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    span: Span
    message: str
    suggestion: str = ""

    def __str__(self):
        tail = f" ({self.suggestion})" if self.suggestion else ""
        where = f"{self.span}: " if self.span is not None and self.span.line > 0 else ""
        return f"{where}{self.severity}: {self.message}{tail}"

    def record(self) -> dict:
        return {
            "severity": self.severity,
            "line": self.span.line,
            "column": self.span.column,
            "message": self.message,
            "suggestion": self.suggestion,
        }


class PdlError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def _span():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Domain:
    """``{0,1}`` (width 1), ``{0,1}^k`` (width k) or ``{0,1,⊥}`` (width 2, may hold ⊥)."""

    power: object = 1  # int or parameter name
    bottom: bool = False


@dataclass(frozen=True)
class Var:
    name: str
    index: object = None
    span: Span | None = _span()


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Str:
    """A quoted constant such as "ok" or "open"; it denotes the bit 1."""

    text: str


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str  # "xor" | "eq" | "neq"
    args: tuple


@dataclass(frozen=True)
class Target:
    var: Var
    domain: Domain | None = None


@dataclass(frozen=True)
class Item:
    """A sent value, optionally bound to a name (``OK = "ok"``, ``shat := s[c]``)."""

    expr: object
    name: str | None = None
    binder: str = ""


@dataclass(frozen=True)
class ReceiveInput:
    targets: tuple
    source: str | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class ReceiveOutput:
    targets: tuple
    source: str = ""
    span: Span | None = _span()


@dataclass(frozen=True)
class Receive:
    targets: tuple
    source: str | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class SendInput:
    items: tuple
    to: str = ""
    span: Span | None = _span()


@dataclass(frozen=True)
class SendOutput:
    items: tuple
    to: str = "App"
    span: Span | None = _span()


@dataclass(frozen=True)
class Send:
    items: tuple
    to: str = ""
    span: Span | None = _span()


@dataclass(frozen=True)
class Picks:
    target: Var
    domain: Domain
    span: Span | None = _span()


@dataclass(frozen=True)
class Assign:
    target: Var
    expr: object
    span: Span | None = _span()


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple = ()
    span: Span | None = _span()


@dataclass(frozen=True)
class For:
    var: str
    values: tuple
    body: tuple
    span: Span | None = _span()


@dataclass(frozen=True)
class Step:
    number: int
    role: str
    body: tuple
    span: Span | None = _span()
    role_span: Span | None = _span()


@dataclass(frozen=True)
class RoleDecl:
    name: str
    participant: str | None = None
    corruptible: bool = True
    trusted: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class ChannelDecl:
    tag: str
    sender: str
    recipient: str
    medium: str = "classical"
    security: str = "hidden"
    span: Span | None = _span()


@dataclass(frozen=True)
class PdlDocument:
    name: str
    params: tuple = ()
    roles: tuple = ()
    channels: tuple = ()
    steps: tuple = ()

    def role(self, name: str) -> RoleDecl:
        for r in self.roles:
            if r.name == name:
                return r
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Lexer


def normalize_name(raw: str) -> str:
    """Spell out circumflexes (ŝ -> shat, x̂ -> xhat) and drop other marks."""
    s = unicodedata.normalize("NFD", raw)
    s = re.sub(r"(\w)\u0302", r"\1hat", s)
    return "".join(ch for ch in s if not unicodedata.combining(ch))


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<inr>∈_R|∈R|\bin_R\b)
  | (?P<sym>:=|!=|≠|[;:,(){}\[\]=⊕⊥∈^])
  | (?P<str>"[^"\n]*"|“[^”\n]*”|``[^'\n]*'')
  | (?P<int>\d+)
  | (?P<name>[^\W\d][\w\-\u0300-\u036f]*)
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "protocol", "param", "role", "participant", "corruptible", "trusted", "channel", "from", "to", "type",
    "step", "receive", "send", "input", "output", "picks", "if", "do", "else", "for", "in", "xor", "bot",
}


@dataclass
class Token:
    kind: str
    value: str
    span: Span


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    toks, diags = [], []
    line, col0, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        span = Span(line, pos - col0 + 1)
        if m is None:
            diags.append(Diagnostic("error", span, f"unexpected character {text[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        val = m.group()
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "inr":
            toks.append(Token("sym", "∈_R", span))
        elif kind == "sym":
            v = {"≠": "!=", "∈": "in"}.get(val, val)
            toks.append(Token("sym", v, span))
        elif kind == "str":
            toks.append(Token("str", val.strip('"“”`\''), span))
        elif kind == "int":
            toks.append(Token("int", val, span))
        else:
            name = normalize_name(val)
            low = name.lower()
            if low in ("xor",):
                toks.append(Token("sym", "⊕", span))
            elif low == "bot":
                toks.append(Token("sym", "⊥", span))
            elif low == "in":
                toks.append(Token("sym", "in", span))
            elif low in KEYWORDS:
                toks.append(Token("kw", low, span))
            else:
                toks.append(Token("name", name, span))
        nl = val.count("\n")
        if nl:
            line += nl
            col0 = m.start() + val.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", Span(line, pos - col0 + 1)))
    return toks, diags


# ---------------------------------------------------------------------------
# Parser


class _Bail(Exception):
    pass


class Parser:
    def __init__(self, text: str):
        self.toks, self.diags = tokenize(text)
        self.i = 0

    # helpers -------------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, *values) -> bool:
        return self.tok.kind == "kw" and self.tok.value in values

    def at_sym(self, *values) -> bool:
        return self.tok.kind == "sym" and self.tok.value in values

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, suggestion: str = "", span: Span | None = None):
        self.diags.append(Diagnostic("error", span or self.tok.span, msg, suggestion))
        raise _Bail

    def expect(self, kind: str, value: str | None = None, what: str = "") -> Token:
        if not self.at(kind, value):
            shown = self.tok.value or "end of input"
            self.error(f"expected {what or value or kind}, found {shown!r}")
        return self.advance()

    def name(self, what="name") -> str:
        if self.tok.kind == "name":
            return self.advance().value
        self.error(f"expected {what}, found {self.tok.value or 'end of input'!r}")

    def sync(self, stops=(";",)):
        """Skip to just after the next statement separator."""
        depth = 0
        while not self.at("eof"):
            if self.at_kw("step") and depth == 0:
                return
            if self.at_sym("{"):
                depth += 1
            elif self.at_sym("}"):
                if depth == 0:
                    return
                depth -= 1
            elif self.at_sym(*stops) and depth == 0:
                self.advance()
                return
            self.advance()

    # document ------------------------------------------------------------
    def document(self) -> PdlDocument:
        name = "protocol"
        params, roles, channels, steps = [], [], [], []
        if self.at_kw("protocol"):
            self.advance()
            try:
                name = self.name("protocol name")
            except _Bail:
                pass
        while not self.at("eof"):
            try:
                if self.at_kw("param"):
                    self.advance()
                    params.append(self.name("parameter name"))
                    while self.at_sym(","):
                        self.advance()
                        params.append(self.name("parameter name"))
                elif self.at_kw("role"):
                    roles.append(self.role_decl())
                elif self.at_kw("channel"):
                    channels.append(self.channel_decl())
                elif self.at_kw("step"):
                    steps.append(self.step())
                else:
                    self.error(f"unexpected {self.tok.value!r}", "expected param, role, channel or step")
            except _Bail:
                self.advance()
                while not (self.at("eof") or self.at_kw("param", "role", "channel", "step")):
                    self.advance()
        return PdlDocument(name, tuple(params), tuple(roles), tuple(channels), tuple(steps))

    def role_decl(self) -> RoleDecl:
        span = self.advance().span
        name = self.name("role name")
        participant, corruptible, trusted = None, True, False
        while self.at_kw("participant", "corruptible", "trusted"):
            kw = self.advance().value
            if kw == "participant":
                participant = self.name("participant name")
            elif kw == "trusted":
                trusted, corruptible = True, False
        return RoleDecl(name, participant, corruptible, trusted, span)

    def channel_decl(self) -> ChannelDecl:
        span = self.advance().span
        tag = [self.name("channel tag")]
        while self.at_sym(","):
            self.advance()
            tag.append(self.name("channel tag"))
        self.expect("kw", "from")
        a = self.name("sender role")
        self.expect("kw", "to")
        b = self.name("recipient role")
        self.expect("kw", "type")
        medium = self.name("medium")
        security = self.name("security class")
        if medium not in MEDIA:
            self.diags.append(Diagnostic("error", span, f"unknown medium {medium!r}", "use classical or quantum"))
        if security not in SECURITIES:
            self.diags.append(Diagnostic("error", span, f"unknown security class {security!r}", "use hidden, authenticated or insecure"))
        return ChannelDecl(",".join(tag), a, b, medium, security, span)

    def step(self) -> Step:
        span = self.advance().span
        num = int(self.expect("int", what="step number").value)
        role_span = self.tok.span
        role = self.name("role name")
        self.expect("sym", ":")
        body = self.statements(stop_at_brace=False)
        return Step(num, role, tuple(body), span, role_span)

    def statements(self, stop_at_brace: bool) -> list:
        out = []
        while not (self.at("eof") or self.at_kw("step") or (stop_at_brace and self.at_sym("}"))):
            if self.at_sym(";"):
                self.advance()
                continue
            if not stop_at_brace and self.at_sym("}"):
                self.diags.append(Diagnostic("error", self.tok.span, "unbalanced '}'"))
                self.advance()
                continue
            try:
                out.extend(self.statement())
                if self.at_sym(";"):
                    self.advance()
                elif not (self.at("eof") or self.at_kw("step") or self.at_sym("}") or self.at_kw("else")):
                    if not isinstance(out[-1] if out else None, (If, For)):
                        self.error(f"expected ';', found {self.tok.value!r}")
            except _Bail:
                self.sync()
        return out

    def block(self) -> list:
        self.expect("sym", "{")
        body = self.statements(stop_at_brace=True)
        self.expect("sym", "}")
        return body

    def statement(self) -> list:
        t = self.tok
        span = t.span
        if self.at_sym("{"):
            return self.block()
        if self.at_kw("receive"):
            self.advance()
            if self.at_kw("input"):
                self.advance()
                targets = self.targets()
                src = self.opt_from()
                return [ReceiveInput(targets, src, span)]
            if self.at_kw("output"):
                self.advance()
                targets = self.targets()
                src = self.opt_from()
                if src is None:
                    self.error("'receive output' needs 'from <role>'", span=span)
                return [ReceiveOutput(targets, src, span)]
            targets = self.targets()
            return [Receive(targets, self.opt_from(), span)]
        if self.at_kw("send"):
            self.advance()
            kind = Send
            if self.at_kw("input"):
                self.advance()
                kind = SendInput
            elif self.at_kw("output"):
                self.advance()
                kind = SendOutput
            items = self.items()
            self.expect("kw", "to")
            to = self.name("recipient")
            return [kind(items, to, span)]
        if self.at_kw("picks"):
            self.advance()
            v = self.var()
            if not self.at_sym("∈_R", "in"):
                self.error("expected '∈_R {0,1}...' after picks")
            self.advance()
            return [Picks(v, self.domain_body(), span)]
        if self.at_kw("if"):
            self.advance()
            self.expect("sym", "(")
            cond = self.expr()
            self.expect("sym", ")")
            if self.at_kw("do"):
                self.advance()
            then = self.block()
            orelse = []
            if self.at_kw("else"):
                self.advance()
                orelse = self.block()
            return [If(cond, tuple(then), tuple(orelse), span)]
        if self.at_kw("for"):
            self.advance()
            var = self.name("loop variable")
            self.expect("sym", "=")
            vals = [int(self.expect("int").value)]
            while self.at_sym(","):
                self.advance()
                vals.append(int(self.expect("int").value))
            if self.at_kw("do"):
                self.advance()
            body = self.block()
            return [For(var, tuple(vals), tuple(body), span)]
        if t.kind == "name":
            v = self.var()
            if not self.at_sym(":=", "="):
                self.error(f"expected ':=' after {v.name!r}")
            self.advance()
            return [Assign(v, self.expr(), span)]
        self.error(f"unexpected {t.value or 'end of input'!r}", "statements start with receive, send, picks, if, for or a variable")

    def opt_from(self) -> str | None:
        if self.at_kw("from"):
            self.advance()
            return self.name("role name")
        return None

    def var(self) -> Var:
        span = self.tok.span
        name = self.name("variable")
        idx = None
        if self.at_sym("["):
            self.advance()
            idx = self.expr()
            self.expect("sym", "]")
        return Var(name, idx, span)

    def target(self) -> Target:
        v = self.var()
        dom = None
        if self.at_sym("in"):
            self.advance()
            dom = self.domain_body()
        return Target(v, dom)

    def targets(self) -> tuple:
        if self.at_sym("("):
            self.advance()
            out = [self.target()]
            while self.at_sym(","):
                self.advance()
                out.append(self.target())
            self.expect("sym", ")")
            if self.at_sym("in") and len(out) == 1:
                self.advance()
                out = [Target(out[0].var, self.domain_body())]
            return tuple(out)
        return (self.target(),)

    def domain_body(self) -> Domain:
        self.expect("sym", "{")
        elems = []
        while not self.at_sym("}"):
            if self.at_sym("⊥"):
                elems.append("⊥")
                self.advance()
            else:
                elems.append(self.expect("int", what="0, 1 or ⊥").value)
            if self.at_sym(","):
                self.advance()
            elif not self.at_sym("}"):
                self.error("expected ',' or '}' in domain")
        self.advance()
        if sorted(e for e in elems if e != "⊥") != ["0", "1"]:
            self.error("domains are {0,1}, {0,1}^n or {0,1,⊥}")
        power: object = 1
        if self.at_sym("^"):
            self.advance()
            if self.at("int"):
                power = int(self.advance().value)
            else:
                power = self.name("exponent")
        return Domain(power, "⊥" in elems)

    def items(self) -> tuple:
        if self.at_sym("(") and self._tuple_ahead():
            self.advance()
            out = [self.item()]
            while self.at_sym(","):
                self.advance()
                out.append(self.item())
            self.expect("sym", ")")
            return tuple(out)
        return (self.item(),)

    def _tuple_ahead(self) -> bool:
        depth = 0
        for t in self.toks[self.i :]:
            if t.kind == "sym" and t.value in "([":
                depth += 1
            elif t.kind == "sym" and t.value in ")]":
                depth -= 1
                if depth == 0:
                    return False
            elif t.kind == "sym" and t.value == "," and depth == 1:
                return True
            elif t.kind == "eof":
                return False
        return False

    def item(self) -> Item:
        if self.tok.kind == "name" and self.peek().kind == "sym" and self.peek().value in ("=", ":="):
            name = self.advance().value
            binder = self.advance().value
            return Item(self.expr(), name, binder)
        return Item(self.expr())

    def expr(self):
        left = self.xor_expr()
        if self.at_sym("=", "!="):
            op = "eq" if self.advance().value == "=" else "neq"
            return BinOp(op, (left, self.xor_expr()))
        return left

    def xor_expr(self):
        args = [self.atom()]
        while self.at_sym("⊕"):
            self.advance()
            args.append(self.atom())
        return args[0] if len(args) == 1 else BinOp("xor", tuple(args))

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Const(int(t.value))
        if t.kind == "str":
            self.advance()
            return Str(t.value)
        if self.at_sym("⊥"):
            self.advance()
            return Bottom()
        if self.at_sym("("):
            self.advance()
            e = self.expr()
            self.expect("sym", ")")
            return e
        if t.kind == "name":
            return self.var()
        self.error(f"expected an expression, found {t.value or 'end of input'!r}")


def _walk(stmts):
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from _walk(s.then)
            yield from _walk(s.orelse)
        elif isinstance(s, For):
            yield from _walk(s.body)


def _expr_vars(e):
    if isinstance(e, Var):
        yield e
        if e.index is not None:
            yield from _expr_vars(e.index)
    elif isinstance(e, BinOp):
        for a in e.args:
            yield from _expr_vars(a)


def _check(doc: PdlDocument) -> list[Diagnostic]:
    diags = []
    roles = {r.name for r in doc.roles}
    params = set(doc.params)
    seen_roles = set()
    for r in doc.roles:
        if r.name in seen_roles:
            diags.append(Diagnostic("error", r.span, f"role {r.name!r} declared twice"))
        seen_roles.add(r.name)
    for c in doc.channels:
        for who in (c.sender, c.recipient):
            if who not in roles:
                diags.append(Diagnostic("error", c.span, f"unknown role {who!r} in channel {c.tag!r}", "declare it with 'role'"))
    last = None
    defined: dict[str, set[str]] = {r: set() for r in roles}
    for st in doc.steps:
        if last is not None and st.number <= last:
            diags.append(Diagnostic("error", st.span, f"step {st.number} does not follow step {last}", "number steps in increasing order"))
        last = st.number
        if st.role not in roles:
            diags.append(Diagnostic("error", st.role_span or st.span, f"unknown role {st.role!r}", "declare it with 'role'"))
            continue
        diags.extend(_check_body(st.body, defined[st.role], set(), params, roles))
    return diags


def _check_body(stmts, defined: set, loopvars: set, params: set, roles: set) -> list[Diagnostic]:
    diags = []

    def use(e, span):
        for v in _expr_vars(e):
            if v.name in loopvars or v.name in params:
                continue
            if v.index is None and v.name not in defined and not any(d.startswith(v.name + "[") for d in defined):
                diags.append(Diagnostic("error", v.span or span, f"variable {v.name!r} used before assignment"))
            if v.index is not None and not any(d == v.name or d.startswith(v.name + "[") for d in defined):
                diags.append(Diagnostic("error", v.span or span, f"variable {v.name!r} used before assignment"))

    def define(v: Var):
        defined.add(v.name if v.index is None else f"{v.name}[]")

    def role_ref(name, span):
        if name is not None and name != "App" and name not in roles:
            diags.append(Diagnostic("error", span, f"unknown role {name!r}"))

    for s in stmts:
        sp = getattr(s, "span", None)
        if isinstance(s, (ReceiveInput, ReceiveOutput, Receive)):
            if not isinstance(s, ReceiveOutput):
                role_ref(s.source, sp)
            for t in s.targets:
                if t.var.index is not None:
                    use(t.var.index, sp)
                define(t.var)
        elif isinstance(s, (Send, SendInput, SendOutput)):
            for it in s.items:
                use(it.expr, sp)
                if it.name:
                    defined.add(it.name)
            if isinstance(s, Send):
                role_ref(s.to, sp)
        elif isinstance(s, Picks):
            define(s.target)
        elif isinstance(s, Assign):
            use(s.expr, sp)
            define(s.target)
        elif isinstance(s, If):
            use(s.cond, sp)
            a, b = set(defined), set(defined)
            diags += _check_body(s.then, a, loopvars, params, roles)
            diags += _check_body(s.orelse, b, loopvars, params, roles)
            defined |= a | b
        elif isinstance(s, For):
            diags += _check_body(s.body, defined, loopvars | {s.var}, params, roles)
    return diags


def diagnose(text: str) -> tuple[PdlDocument, list[Diagnostic]]:
    """Parse ``text`` and return the document with every diagnostic found."""
    p = Parser(text)
    doc = p.document()
    diags = list(p.diags)
    diags += _check(doc)
    diags.sort(key=lambda d: (d.span.line, d.span.column))
    return doc, diags


def parse(text: str) -> PdlDocument:
    """Parse a document; raise :class:`PdlError` listing every error found."""
    doc, diags = diagnose(text)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise PdlError(errors)
    return doc


# ---------------------------------------------------------------------------
# Formatter


def _fmt_domain(d: Domain) -> str:
    if d.bottom:
        return "{0,1,⊥}" if d.power == 1 else f"{{0,1,⊥}}^{d.power}"
    return "{0,1}" if d.power == 1 else f"{{0,1}}^{d.power}"


def _fmt_expr(e, top=True) -> str:
    if isinstance(e, Var):
        return e.name if e.index is None else f"{e.name}[{_fmt_expr(e.index)}]"
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Str):
        return f'"{e.text}"'
    if isinstance(e, Bottom):
        return "⊥"
    if isinstance(e, BinOp):
        if e.op == "xor":
            s = " ⊕ ".join(_fmt_expr(a, False) for a in e.args)
        else:
            s = f" {'=' if e.op == 'eq' else '!='} ".join(_fmt_expr(a, False) for a in e.args)
        return s if top else f"({s})"
    raise TypeError(e)


def _fmt_target(t: Target) -> str:
    s = _fmt_expr(t.var)
    return s if t.domain is None else f"{s} ∈ {_fmt_domain(t.domain)}"


def _fmt_targets(ts) -> str:
    if len(ts) == 1 and ts[0].domain is None:
        return _fmt_target(ts[0])
    return "(" + ", ".join(_fmt_target(t) for t in ts) + ")"


def _fmt_item(it: Item) -> str:
    e = _fmt_expr(it.expr)
    return e if it.name is None else f"{it.name} {it.binder or ':='} {e}"


def _fmt_items(items) -> str:
    if len(items) == 1:
        s = _fmt_item(items[0])
        return f"({s})" if s.startswith("(") else s
    return "(" + ", ".join(_fmt_item(i) for i in items) + ")"


def _fmt_stmt(s) -> str:
    if isinstance(s, ReceiveInput):
        src = f" from {s.source}" if s.source else ""
        return f"receive input {_fmt_targets(s.targets)}{src}"
    if isinstance(s, ReceiveOutput):
        return f"receive output {_fmt_targets(s.targets)} from {s.source}"
    if isinstance(s, Receive):
        src = f" from {s.source}" if s.source else ""
        return f"receive {_fmt_targets(s.targets)}{src}"
    if isinstance(s, SendInput):
        return f"send input {_fmt_items(s.items)} to {s.to}"
    if isinstance(s, SendOutput):
        return f"send output {_fmt_items(s.items)} to {s.to}"
    if isinstance(s, Send):
        return f"send {_fmt_items(s.items)} to {s.to}"
    if isinstance(s, Picks):
        return f"picks {_fmt_expr(s.target)} ∈_R {_fmt_domain(s.domain)}"
    if isinstance(s, Assign):
        return f"{_fmt_expr(s.target)} := {_fmt_expr(s.expr)}"
    if isinstance(s, If):
        out = f"if ({_fmt_expr(s.cond)}) {{ {_fmt_body(s.then)} }}"
        if s.orelse:
            out += f" else {{ {_fmt_body(s.orelse)} }}"
        return out
    if isinstance(s, For):
        vals = ",".join(str(v) for v in s.values)
        return f"for {s.var} = {vals} {{ {_fmt_body(s.body)} }}"
    raise TypeError(s)


def _fmt_body(stmts) -> str:
    return " ".join(_fmt_stmt(s) + ";" for s in stmts)


def format_document(doc: PdlDocument) -> str:
    lines = [f"protocol {doc.name}"]
    if doc.params:
        lines.append("param " + ", ".join(doc.params))
    for r in doc.roles:
        s = f"role {r.name}"
        if r.participant:
            s += f" participant {r.participant}"
        s += " trusted" if r.trusted else (" corruptible" if r.corruptible else "")
        lines.append(s)
    for c in doc.channels:
        lines.append(f"channel {c.tag} from {c.sender} to {c.recipient} type {c.medium} {c.security}")
    for st in doc.steps:
        lines.append(f"step {st.number}")
        lines.append(f"{st.role}: {_fmt_body(st.body)}")
    return "\n".join(lines) + "\n"
