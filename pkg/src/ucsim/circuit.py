"""Circuits as partially ordered sets of gates acting on registers.

A circuit is a set of gates, a strict partial order over their ids and the
registers they touch.  Gates are either basic operations (classical
permutations, unitaries, measurements) or basic operations wrapped in
single-bit classical controls.  Two gates that may touch the same register
in a conflicting way (a write on either side, or any access to a qubit) must
be ordered, unless no assignment of their control bits activates both.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

CLASSICAL = "classical"
QUANTUM = "quantum"

# Classical permutations are checked for bijectivity when their joint
# domain has at most this many bits.
BIJECTIVITY_CHECK_BITS = 16


class CircuitError(Exception):
    """Base class for malformed-circuit errors."""


class CycleError(CircuitError):
    """The order relation contains a cycle."""

    def __init__(self, gates: Sequence[str] = ()):
        self.gates = tuple(gates)
        super().__init__(f"order relation has a cycle through {list(self.gates)[:6]}")


class UnorderedConflict(CircuitError):
    """Two gates conflict on a register but neither precedes the other."""

    def __init__(self, pairs: Sequence[tuple[str, str, str]]):
        self.pairs = tuple(pairs)
        a, b, reg = self.pairs[0]
        more = f" (+{len(self.pairs) - 1} more)" if len(self.pairs) > 1 else ""
        super().__init__(f"unordered conflicting access to {reg!r} by {a!r} and {b!r}{more}")


class MissingControl(CircuitError):
    """An assignment does not cover every control register."""


class DuplicateGate(CircuitError):
    pass


@dataclass(frozen=True)
class Register:
    """A named classical or quantum register.

    Quantum registers are single qubits.  ``initial`` is the starting value
    (a basis state for qubits).
    """

    id: str
    kind: str = CLASSICAL
    width: int = 1
    initial: int = 0

    def __post_init__(self):
        if self.kind not in (CLASSICAL, QUANTUM):
            raise ValueError(f"register {self.id!r}: unknown kind {self.kind!r}")
        if self.width < 1 or self.width > 63:
            raise ValueError(f"register {self.id!r}: width must be in 1..63")
        if self.kind == QUANTUM and self.width != 1:
            raise ValueError(f"quantum register {self.id!r} must have width 1")
        if not 0 <= self.initial < (1 << self.width):
            raise ValueError(f"register {self.id!r}: initial value out of range")

    @property
    def quantum(self) -> bool:
        return self.kind == QUANTUM

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1


# ---------------------------------------------------------------------------
# Operations


class Op:
    """Base class of gate operations."""

    def accesses(self) -> dict[str, str]:
        """Registers touched by the basic operation, mapped to 'r' or 'w'."""
        raise NotImplementedError

    def signature(self) -> tuple:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Xor(Op):
    """``target ^= fn(*sources)``, a classical permutation of ``target``.

    ``fn`` receives one uint64 array per source and returns a uint64 array.
    With no sources it is called with no arguments and must return a scalar.
    """

    target: str
    sources: tuple[str, ...]
    fn: Callable
    label: str = "xor"

    def accesses(self):
        acc = {s: "r" for s in self.sources}
        acc[self.target] = "w"
        return acc

    def signature(self):
        return ("xor", self.target, self.sources, self.label)


@dataclass(frozen=True, eq=False)
class ClassicalPermutation(Op):
    """Replace ``targets`` by ``fn(*reads, *targets)``.

    For every fixed value of ``reads`` the map on ``targets`` must be a
    bijection.  ``fn`` returns a tuple with one array per target.
    """

    targets: tuple[str, ...]
    reads: tuple[str, ...]
    fn: Callable
    label: str = "perm"

    def accesses(self):
        acc = {s: "r" for s in self.reads}
        for t in self.targets:
            acc[t] = "w"
        return acc

    def signature(self):
        return ("perm", self.targets, self.reads, self.label)


@dataclass(frozen=True, eq=False)
class Unitary(Op):
    """A unitary on one or more qubits; ``matrix`` is 2^t x 2^t, first target most significant."""

    targets: tuple[str, ...]
    matrix: np.ndarray
    label: str = "U"

    def accesses(self):
        return {t: "w" for t in self.targets}

    def signature(self):
        m = np.round(np.asarray(self.matrix, dtype=complex), 12)
        return ("unitary", self.targets, self.label, m.tobytes())


@dataclass(frozen=True, eq=False)
class Measurement(Op):
    """Computational-basis measurement of ``qubit`` into the fresh bit ``outcome``."""

    qubit: str
    outcome: str

    def accesses(self):
        return {self.qubit: "w", self.outcome: "w"}

    def signature(self):
        return ("measure", self.qubit, self.outcome)


@dataclass(frozen=True, eq=False)
class Controlled(Op):
    """Apply ``body`` iff the 1-bit classical register ``control`` equals ``polarity``."""

    control: str
    polarity: int
    body: Op

    def __post_init__(self):
        if self.polarity not in (0, 1):
            raise ValueError("polarity must be 0 or 1")

    def accesses(self):
        acc = dict(self.body.accesses())
        acc.setdefault(self.control, "r")
        return acc

    def signature(self):
        return ("ctrl", self.control, self.polarity, self.body.signature())


def flatten(op: Op) -> tuple[tuple[tuple[str, int], ...], Op]:
    """Split an operation into its control literals (outermost first) and base op."""
    lits = []
    while isinstance(op, Controlled):
        lits.append((op.control, op.polarity))
        op = op.body
    return tuple(lits), op


def wrap(op: Op, literals: Iterable[tuple[str, int]]) -> Op:
    """Wrap ``op`` in controls; the first literal ends up outermost."""
    for reg, pol in reversed(list(literals)):
        op = Controlled(reg, pol, op)
    return op


H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)


def hadamard(qubit: str) -> Unitary:
    return Unitary((qubit,), H_MATRIX, "H")


# ---------------------------------------------------------------------------
# Small library of vectorised functions for Xor gates.  Each carries a label
# so that structurally equal circuits compare equal.


def const_fn(value: int) -> Callable:
    def f(*args):
        return np.uint64(value)

    return f


def copy_fn(x):
    return x


def xor_fn(*xs):
    out = np.zeros_like(xs[0])
    for x in xs:
        out = out ^ x
    return out


def xor_const_fn(value: int) -> Callable:
    def f(x):
        return x ^ np.uint64(value)

    return f


def eq_fn(a, b):
    return (a == b).astype(np.uint64)


def neq_const_fn(value: int) -> Callable:
    def f(x):
        return (x != np.uint64(value)).astype(np.uint64)

    return f


def select_fn(index, *options):
    """``options[index]``; indices beyond the last option pick the last one."""
    out = options[-1].copy() if isinstance(options[-1], np.ndarray) else np.uint64(options[-1])
    out = np.broadcast_to(out, np.broadcast(index, *options).shape).copy()
    for i, opt in enumerate(options[:-1]):
        out = np.where(index == np.uint64(i), opt, out)
    return out.astype(np.uint64)


def pack_fn(*bits):
    """Pack bits (first argument = least significant) into one integer."""
    out = np.zeros_like(bits[0])
    for i, b in enumerate(bits):
        out = out | (b << np.uint64(i))
    return out


def bit_fn(i: int) -> Callable:
    def f(x):
        return (x >> np.uint64(i)) & np.uint64(1)

    return f


# ---------------------------------------------------------------------------
# Gates and circuits


@dataclass(frozen=True, eq=False)
class Gate:
    """A gate with a unique id.

    ``comm`` marks communication gates as ``(channel_id, 'send'|'recv')``.
    ``role`` names the circuit the gate belongs to, ``origin`` is an optional
    source location used for diagnostics.
    """

    id: str
    op: Op
    role: str | None = None
    tags: frozenset = frozenset()
    comm: tuple[str, str] | None = None
    origin: object = None

    @cached_property
    def literals(self) -> tuple[tuple[str, int], ...]:
        return flatten(self.op)[0]

    @cached_property
    def base(self) -> Op:
        return flatten(self.op)[1]

    @cached_property
    def controls(self) -> frozenset[str]:
        return frozenset(r for r, _ in self.literals)

    @cached_property
    def base_access(self) -> dict[str, str]:
        return self.base.accesses()

    @cached_property
    def registers(self) -> frozenset[str]:
        return frozenset(self.base_access) | self.controls

    def access_modes(self, reg: str) -> list[tuple[str, bool]]:
        """Ways this gate touches ``reg``: (mode, needs-active) pairs."""
        out = []
        if reg in self.controls:
            out.append(("r", False))
        mode = self.base_access.get(reg)
        if mode is not None:
            out.append((mode, True))
        return out

    def writes(self, reg: str) -> bool:
        return self.base_access.get(reg) == "w"

    def replace(self, **kw) -> "Gate":
        d = dict(id=self.id, op=self.op, role=self.role, tags=self.tags, comm=self.comm, origin=self.origin)
        d.update(kw)
        return Gate(**d)

    def signature(self) -> tuple:
        return (self.id, self.op.signature(), self.role, tuple(sorted(self.tags)), self.comm)


def literals_consistent(lits: Iterable[tuple[str, int]]) -> bool:
    seen: dict[str, int] = {}
    for reg, pol in lits:
        if seen.setdefault(reg, pol) != pol:
            return False
    return True


@dataclass(frozen=True, eq=False)
class Circuit:
    """Gates, a strict partial order over their ids, and declared registers."""

    gates: tuple[Gate, ...] = ()
    order: frozenset = frozenset()
    registers: Mapping[str, Register] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "order", frozenset(self.order))
        object.__setattr__(self, "registers", dict(self.registers))

    def __len__(self):
        return len(self.gates)

    @cached_property
    def gate_map(self) -> dict[str, Gate]:
        return {g.id: g for g in self.gates}

    def gate(self, gid: str) -> Gate:
        return self.gate_map[gid]

    @cached_property
    def _index(self) -> dict[str, int]:
        return {g.id: i for i, g in enumerate(self.gates)}

    @cached_property
    def topological(self) -> list[str]:
        """Canonical linear extension: smallest available id first."""
        return canonical_schedule(self)

    @cached_property
    def _reach(self) -> list[int]:
        """Bitset of strict descendants for every gate index."""
        idx = self._index
        succ: list[list[int]] = [[] for _ in self.gates]
        for a, b in self.order:
            succ[idx[a]].append(idx[b])
        reach = [0] * len(self.gates)
        for gid in reversed(self.topological):
            i = idx[gid]
            r = 0
            for j in succ[i]:
                r |= (1 << j) | reach[j]
            reach[i] = r
        return reach

    def precedes(self, a: str, b: str) -> bool:
        return bool(self._reach[self._index[a]] >> self._index[b] & 1)

    def ordered(self, a: str, b: str) -> bool:
        return self.precedes(a, b) or self.precedes(b, a)

    def descendants(self, gid: str) -> set[str]:
        r = self._reach[self._index[gid]]
        return {self.gates[j].id for j in _bits(r)}

    @cached_property
    def control_registers(self) -> frozenset[str]:
        out = set()
        for g in self.gates:
            out |= g.controls
        return frozenset(out)

    def gates_of(self, role: str) -> list[Gate]:
        return [g for g in self.gates if g.role == role]

    def signature(self) -> tuple:
        return (
            tuple(sorted(g.signature() for g in self.gates)),
            tuple(sorted(self.order)),
            tuple(sorted((r.id, r.kind, r.width, r.initial) for r in self.registers.values())),
        )

    def with_gates(self, gates, order=None, registers=None) -> "Circuit":
        return Circuit(gates, self.order if order is None else order, self.registers if registers is None else registers)


def _bits(x: int):
    j = 0
    while x:
        if x & 1:
            yield j
        x >>= 1
        j += 1


def canonical_schedule(c: Circuit) -> list[str]:
    """Linear extension choosing the lexicographically smallest available id.

    Raises :class:`CycleError` if the order is cyclic.
    """
    ids = {g.id for g in c.gates}
    indeg = {g: 0 for g in ids}
    succ: dict[str, list[str]] = {g: [] for g in ids}
    for a, b in c.order:
        if a not in ids or b not in ids:
            raise CircuitError(f"order edge ({a!r}, {b!r}) names an unknown gate")
        succ[a].append(b)
        indeg[b] += 1
    heap = [g for g, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        g = heapq.heappop(heap)
        out.append(g)
        for h in succ[g]:
            indeg[h] -= 1
            if indeg[h] == 0:
                heapq.heappush(heap, h)
    if len(out) != len(ids):
        raise CycleError(sorted(g for g, d in indeg.items() if d > 0))
    return out


def random_linear_extension(c: Circuit, rng: np.random.Generator) -> list[str]:
    """A uniformly chosen available gate at every step (not uniform over extensions)."""
    indeg = {g.id: 0 for g in c.gates}
    succ: dict[str, list[str]] = {g.id: [] for g in c.gates}
    for a, b in c.order:
        succ[a].append(b)
        indeg[b] += 1
    avail = sorted(g for g, d in indeg.items() if d == 0)
    out = []
    while avail:
        g = avail.pop(int(rng.integers(len(avail))))
        out.append(g)
        for h in succ[g]:
            indeg[h] -= 1
            if indeg[h] == 0:
                avail.append(h)
    if len(out) != len(indeg):
        raise CycleError(sorted(g for g, d in indeg.items() if d > 0))
    return out


def is_linear_extension(c: Circuit, schedule: Sequence[str]) -> bool:
    if sorted(schedule) != sorted(g.id for g in c.gates):
        return False
    pos = {g: i for i, g in enumerate(schedule)}
    return all(pos[a] < pos[b] for a, b in c.order)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    gates: tuple[str, ...] = ()
    register: str | None = None


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind, message, gates=(), register=None):
        self.violations.append(Violation(kind, message, tuple(gates), register))


def _op_registers(op: Op) -> list[str]:
    lits, base = flatten(op)
    return [r for r, _ in lits] + list(base.accesses())


def _check_op(g: Gate, regs: Mapping[str, Register], report: ValidationReport):
    lits, base = flatten(g.op)
    for reg, _ in lits:
        r = regs[reg]
        if r.quantum or r.width != 1:
            report.add("bad control", f"gate {g.id}: control {reg!r} is not a classical bit", [g.id], reg)
    if not literals_consistent(lits):
        report.add("contradictory controls", f"gate {g.id} can never be active", [g.id])
    if isinstance(base, Unitary):
        m = np.asarray(base.matrix, dtype=complex)
        dim = 1 << len(base.targets)
        if m.shape != (dim, dim):
            report.add("bad unitary", f"gate {g.id}: matrix shape {m.shape} does not match targets", [g.id])
        elif not np.allclose(m.conj().T @ m, np.eye(dim), atol=1e-10):
            report.add("bad unitary", f"gate {g.id}: matrix is not unitary", [g.id])
        if len(set(base.targets)) != len(base.targets):
            report.add("bad unitary", f"gate {g.id}: repeated target", [g.id])
        for t in base.targets:
            if not regs[t].quantum:
                report.add("bad unitary", f"gate {g.id}: target {t!r} is classical", [g.id], t)
    elif isinstance(base, Measurement):
        if not regs[base.qubit].quantum:
            report.add("bad measurement", f"gate {g.id}: {base.qubit!r} is not a qubit", [g.id], base.qubit)
        o = regs[base.outcome]
        if o.quantum or o.width != 1 or o.initial != 0:
            report.add("bad measurement", f"gate {g.id}: outcome {base.outcome!r} must be a fresh classical bit", [g.id], base.outcome)
    elif isinstance(base, (Xor, ClassicalPermutation)):
        targets = (base.target,) if isinstance(base, Xor) else base.targets
        reads = base.sources if isinstance(base, Xor) else base.reads
        for t in targets:
            if regs[t].quantum:
                report.add("bad permutation", f"gate {g.id}: target {t!r} is a qubit", [g.id], t)
        for s in reads:
            if regs[s].quantum:
                report.add("bad permutation", f"gate {g.id}: source {s!r} is a qubit", [g.id], s)
        if set(targets) & set(reads) or len(set(targets)) != len(targets):
            report.add("bad permutation", f"gate {g.id}: targets overlap sources", [g.id])
        if isinstance(base, ClassicalPermutation) and not _bijective(base, regs):
            report.add("bad permutation", f"gate {g.id}: map is not a bijection", [g.id])


def _bijective(op: ClassicalPermutation, regs: Mapping[str, Register]) -> bool:
    rw = [regs[r].width for r in op.reads]
    tw = [regs[t].width for t in op.targets]
    if sum(rw) + sum(tw) > BIJECTIVITY_CHECK_BITS:
        return True
    tdom = np.array(list(itertools.product(*[range(1 << w) for w in tw])), dtype=np.uint64).reshape(-1, len(tw))
    for rv in itertools.product(*[range(1 << w) for w in rw]):
        args = [np.full(len(tdom), v, dtype=np.uint64) for v in rv] + [tdom[:, i] for i in range(len(tw))]
        out = op.fn(*args)
        cols = np.stack([np.asarray(o, dtype=np.uint64) & np.uint64((1 << w) - 1) for o, w in zip(out, tw)], axis=1)
        if len(np.unique(cols, axis=0)) != len(tdom):
            return False
    return True


def conflicting_pairs(c: Circuit, stop_at_first: bool = False) -> list[tuple[str, str, str]]:
    """Unordered gate pairs that may conflict on some register.

    A pair conflicts on register R when, under a control valuation that
    activates whatever the two accesses require, at least one access writes R
    or R is a qubit.  Read/read access to classical registers never conflicts.
    """
    by_reg: dict[str, list[Gate]] = {}
    for g in c.gates:
        for r in g.registers:
            by_reg.setdefault(r, []).append(g)
    out = []
    for reg in sorted(by_reg):
        users = by_reg[reg]
        if len(users) < 2:
            continue
        quantum = reg in c.registers and c.registers[reg].quantum
        if not quantum and not any(g.writes(reg) for g in users):
            continue
        for a, b in itertools.combinations(users, 2):
            if c.ordered(a.id, b.id):
                continue
            if _may_conflict(a, b, reg, quantum):
                out.append((a.id, b.id, reg))
                if stop_at_first:
                    return out
    return out


def _may_conflict(a: Gate, b: Gate, reg: str, quantum: bool) -> bool:
    for ma, need_a in a.access_modes(reg):
        for mb, need_b in b.access_modes(reg):
            if not (quantum or ma == "w" or mb == "w"):
                continue
            lits = (a.literals if need_a else ()) + (b.literals if need_b else ())
            if literals_consistent(lits):
                return True
    return False


def validate_circuit(c: Circuit) -> ValidationReport:
    """Check well-formedness; returns every violation found."""
    report = ValidationReport()
    seen = set()
    for g in c.gates:
        if g.id in seen:
            report.add("duplicate gate", f"gate id {g.id!r} used twice", [g.id])
        seen.add(g.id)
    unknown = False
    for g in c.gates:
        for r in _op_registers(g.op):
            if r not in c.registers:
                report.add("unknown register", f"gate {g.id} uses undeclared register {r!r}", [g.id], r)
                unknown = True
    for a, b in c.order:
        if a not in seen or b not in seen:
            report.add("unknown gate", f"order edge ({a}, {b}) names an unknown gate", [a, b])
            unknown = True
    if unknown or not report.ok:
        return report
    try:
        canonical_schedule(c)
    except CycleError as e:
        report.add("cycle", str(e), e.gates)
        return report
    for g in c.gates:
        _check_op(g, c.registers, report)
    _check_fresh_outcomes(c, report)
    for a, b, reg in conflicting_pairs(c):
        report.add("unordered conflict", f"gates {a} and {b} both access {reg!r} without an order", [a, b], reg)
    return report


def _check_fresh_outcomes(c: Circuit, report: ValidationReport):
    users: dict[str, list[Gate]] = {}
    for g in c.gates:
        for r in g.registers:
            users.setdefault(r, []).append(g)
    for g in c.gates:
        if not isinstance(g.base, Measurement):
            continue
        for h in users.get(g.base.outcome, ()):
            if h is g:
                continue
            if not c.precedes(g.id, h.id):
                report.add(
                    "non-fresh outcome",
                    f"outcome register {g.base.outcome!r} of measurement {g.id} is touched by {h.id} before or alongside it",
                    [g.id, h.id],
                    g.base.outcome,
                )


def check_circuit(c: Circuit) -> Circuit:
    """Raise on the first structural problem: CycleError, UnorderedConflict or CircuitError."""
    report = validate_circuit(c)
    if report.ok:
        return c
    kinds = report.kinds()
    if "cycle" in kinds:
        v = next(v for v in report.violations if v.kind == "cycle")
        raise CycleError(v.gates)
    if kinds == {"unordered conflict"}:
        raise UnorderedConflict([(v.gates[0], v.gates[1], v.register) for v in report.violations])
    raise CircuitError("; ".join(v.message for v in report.violations[:5]))


# ---------------------------------------------------------------------------
# Complexity and composition


def _is_identity(op: Op, regs: Mapping[str, Register]) -> bool:
    if isinstance(op, Unitary):
        m = np.asarray(op.matrix, dtype=complex)
        return np.allclose(m, np.eye(len(m)), atol=1e-12)
    if isinstance(op, Xor):
        widths = [regs[s].width for s in op.sources]
        if sum(widths) > BIJECTIVITY_CHECK_BITS:
            return False
        if not op.sources:
            return int(op.fn()) & regs[op.target].mask == 0
        grid = np.array(list(itertools.product(*[range(1 << w) for w in widths])), dtype=np.uint64)
        out = np.asarray(op.fn(*[grid[:, i] for i in range(len(widths))]), dtype=np.uint64)
        return not np.any(out & np.uint64(regs[op.target].mask))
    return False


def active_complexity(c: Circuit, assignment: Mapping[str, int]) -> int:
    """Number of gates that are active and differ from the identity under ``assignment``."""
    missing = sorted(c.control_registers - set(assignment))
    if missing:
        raise MissingControl(f"no value for control registers {missing}")
    n = 0
    for g in c.gates:
        if all(int(assignment[r]) == p for r, p in g.literals) and not _is_identity(g.base, c.registers):
            n += 1
    return n


def merge_registers(*maps: Mapping[str, Register]) -> dict[str, Register]:
    out: dict[str, Register] = {}
    for m in maps:
        for rid, r in m.items():
            prev = out.get(rid)
            if prev is not None and prev != r:
                raise CircuitError(f"register {rid!r} declared twice with different shapes: {prev} vs {r}")
            out[rid] = r
    return out


def union(*circuits: Circuit, extra_order: Iterable[tuple[str, str]] = (), drop_dangling: bool = False) -> Circuit:
    """Disjoint union of gates, union of orders and registers; no validation."""
    gates: list[Gate] = []
    seen: set[str] = set()
    for c in circuits:
        for g in c.gates:
            if g.id in seen:
                raise DuplicateGate(f"gate id {g.id!r} occurs in two circuits")
            seen.add(g.id)
            gates.append(g)
    order = set()
    for c in circuits:
        order |= c.order
    for a, b in extra_order:
        if a in seen and b in seen:
            order.add((a, b))
        elif not drop_dangling:
            raise CircuitError(f"order edge ({a!r}, {b!r}) names an unknown gate")
    regs = merge_registers(*(c.registers for c in circuits))
    return Circuit(tuple(gates), frozenset(order), regs)


def compose_circuits(*circuits: Circuit, extra_order: Iterable[tuple[str, str]] = ()) -> Circuit:
    """Union of circuits plus extra order edges; checked for cycles and conflicts."""
    c = union(*circuits, extra_order=extra_order)
    try:
        canonical_schedule(c)
    except CycleError:
        raise
    pairs = conflicting_pairs(c)
    if pairs:
        raise UnorderedConflict(pairs)
    return c


def sequential(gates: Sequence[Gate], registers: Mapping[str, Register]) -> Circuit:
    """A circuit whose gates are totally ordered in the given sequence."""
    order = {(a.id, b.id) for a, b in zip(gates, gates[1:])}
    return Circuit(tuple(gates), frozenset(order), registers)


def transitive_reduction_edges(c: Circuit) -> set[tuple[str, str]]:
    """Edges of ``c.order`` that are not implied by other edges."""
    out = set()
    for a, b in c.order:
        implied = any(c.precedes(a, m) and c.precedes(m, b) for (x, m) in c.order if x == a and m != b)
        if not implied:
            out.add((a, b))
    return out


class CircuitBuilder:
    """Incrementally assemble a circuit, with optional sequential chaining."""

    def __init__(self, registers: Mapping[str, Register] | None = None):
        self.gates: list[Gate] = []
        self.order: set[tuple[str, str]] = set()
        self.registers: dict[str, Register] = dict(registers or {})

    def register(self, rid: str, kind: str = CLASSICAL, width: int = 1, initial: int = 0) -> str:
        r = Register(rid, kind, width, initial)
        prev = self.registers.get(rid)
        if prev is not None and prev != r:
            raise CircuitError(f"register {rid!r} redeclared with a different shape")
        self.registers[rid] = r
        return rid

    def add(self, gid: str, op: Op, after: Iterable[str] = (), **kw) -> str:
        self.gates.append(Gate(gid, op, **kw))
        for a in after:
            self.order.add((a, gid))
        return gid

    def build(self) -> Circuit:
        return Circuit(tuple(self.gates), frozenset(self.order), dict(self.registers))


def rename(op: Op, mapping: Mapping[str, str]) -> Op:
    """The same operation acting on renamed registers."""
    m = lambda r: mapping.get(r, r)  # noqa: E731
    if isinstance(op, Controlled):
        return Controlled(m(op.control), op.polarity, rename(op.body, mapping))
    if isinstance(op, Xor):
        return Xor(m(op.target), tuple(m(s) for s in op.sources), op.fn, op.label)
    if isinstance(op, ClassicalPermutation):
        return ClassicalPermutation(tuple(m(t) for t in op.targets), tuple(m(s) for s in op.reads), op.fn, op.label)
    if isinstance(op, Unitary):
        return Unitary(tuple(m(t) for t in op.targets), op.matrix, op.label)
    if isinstance(op, Measurement):
        return Measurement(m(op.qubit), m(op.outcome))
    raise TypeError(f"cannot rename registers of {op!r}")


SWAP_MATRIX = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def _swap_fn(a, b):
    return b, a


def swap(a: Register, b: Register) -> Op:
    """Exchange the contents of two registers of the same shape."""
    if a.kind != b.kind or a.width != b.width:
        raise CircuitError(f"cannot swap {a.id} and {b.id}: shapes differ")
    if a.quantum:
        return Unitary((a.id, b.id), SWAP_MATRIX, "SWAP")
    return ClassicalPermutation((a.id, b.id), (), _swap_fn, "swap")
