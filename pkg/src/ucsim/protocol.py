"""Protocols, channels, corruption and environments.

Registers are namespaced by the circuit that owns them (``"BC-Alice.x"``).
Channels carry one or more fields plus an activation bit; a sender writes the
fields and then sets the activation bit, and everything a recipient does after
a ``receive`` is controlled on that bit.  A message that never arrives thus
leaves the recipient asleep.

Input and output channels of a role ``r`` have ids ``"r<in{i}"`` and
``"r>out{i}"`` where ``i`` counts the role's inputs (outputs) in program
order.  Internal channels have ids ``"sender>recipient:tag"``.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from .circuit import (
    CLASSICAL,
    QUANTUM,
    Circuit,
    CircuitError,
    Controlled,
    CycleError,
    Gate,
    Measurement,
    Op,
    Register,
    UnorderedConflict,
    ValidationReport,
    Xor,
    canonical_schedule,
    const_fn,
    copy_fn,
    hadamard,
    pack_fn,
    union,
    validate_circuit,
    wrap,
)

HIDDEN, AUTHENTICATED, INSECURE = "hidden", "authenticated", "insecure"
INTERNAL, INPUT, OUTPUT = "internal", "input", "output"


class ControlClash(CircuitError):
    """A gate is already controlled on the opposite value of the corruption bit."""


class MissingIO(CircuitError):
    """The functionality does not serve every input/output of the protocol."""


class InvalidSimulator(Exception):
    """A simulator cannot serve the given environment or does not bind."""


class ChannelMismatch(CircuitError):
    pass


def corruption_register(role: str) -> str:
    return f"C[{role}]"


def input_channel_id(role: str, index: int) -> str:
    return f"{role}<in{index}"


def output_channel_id(role: str, index: int) -> str:
    return f"{role}>out{index}"


def internal_channel_id(sender: str, recipient: str, tag: str) -> str:
    return f"{sender}>{recipient}:{tag}"


def dummy_name(role: str) -> str:
    return f"I({role})"


def adversary_name(role: str) -> str:
    return f"Adv({role})"


@dataclass(frozen=True)
class ChannelType:
    medium: str = CLASSICAL
    security: str = HIDDEN
    direction: str = INTERNAL

    def __post_init__(self):
        if self.medium not in (CLASSICAL, QUANTUM):
            raise ValueError(f"unknown medium {self.medium!r}")
        if self.security not in (HIDDEN, AUTHENTICATED, INSECURE):
            raise ValueError(f"unknown security {self.security!r}")
        if self.direction not in (INTERNAL, INPUT, OUTPUT):
            raise ValueError(f"unknown direction {self.direction!r}")

    def adversary_rights(self) -> str:
        """Rights of an adversary that does not act for an endpoint.

        One of ``'none'``, ``'read'``, ``'readwrite'`` or ``'full'``.
        """
        if self.direction != INTERNAL or self.security == HIDDEN:
            return "none"
        if self.security == AUTHENTICATED:
            return "read" if self.medium == CLASSICAL else "none"
        return "readwrite" if self.medium == CLASSICAL else "full"


@dataclass(frozen=True)
class Channel:
    id: str
    sender: str
    recipient: str
    type: ChannelType
    fields: tuple[Register, ...]
    activation: Register

    @property
    def registers(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.fields) + (self.activation.id,)

    def field(self, name: str) -> Register:
        for f in self.fields:
            if f.id == f"{self.id}.{name}":
                return f
        raise KeyError(name)

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f.id[len(self.id) + 1 :] for f in self.fields)


def make_channel(cid: str, sender: str, recipient: str, fields: Sequence[tuple[str, int]], ctype: ChannelType) -> Channel:
    kind = QUANTUM if ctype.medium == QUANTUM else CLASSICAL
    regs = tuple(Register(f"{cid}.{name}", kind, width) for name, width in fields)
    return Channel(cid, sender, recipient, ctype, regs, Register(f"{cid}!act"))


@dataclass(frozen=True, eq=False)
class ModuleRoleCircuit:
    """The circuit run by one role of a protocol on behalf of one participant."""

    name: str
    circuit: Circuit
    participant: str | None = None
    corruptible: bool = True
    exposed: frozenset = frozenset()

    @property
    def corruption(self) -> str | None:
        return corruption_register(self.name) if self.corruptible else None


def _merge_channels(*groups: Iterable[Channel]) -> tuple[Channel, ...]:
    out: dict[str, Channel] = {}
    for g in groups:
        for ch in g:
            prev = out.get(ch.id)
            if prev is not None and prev != ch:
                raise ChannelMismatch(f"channel {ch.id!r} declared twice with different shapes")
            out[ch.id] = ch
    return tuple(out.values())


@dataclass(frozen=True, eq=False)
class Protocol:
    """A set of module-role circuits together with the channels they use."""

    name: str
    roles: tuple[ModuleRoleCircuit, ...]
    channels: tuple[Channel, ...] = ()
    auxiliary: str | None = None
    trusted: tuple[str, ...] = ()

    def __post_init__(self):
        names = [r.name for r in self.roles]
        if len(set(names)) != len(names):
            raise CircuitError(f"protocol {self.name}: duplicate role names")

    @cached_property
    def role_map(self) -> dict[str, ModuleRoleCircuit]:
        return {r.name: r for r in self.roles}

    def role(self, name: str) -> ModuleRoleCircuit:
        return self.role_map[name]

    @cached_property
    def channel_map(self) -> dict[str, Channel]:
        return {c.id: c for c in self.channels}

    def channel(self, cid: str) -> Channel:
        return self.channel_map[cid]

    def find_channel(self, sender: str, recipient: str, security: str | None = None) -> Channel:
        found = [
            c
            for c in self.channels
            if c.sender == sender and c.recipient == recipient and (security is None or c.type.security == security)
        ]
        if len(found) != 1:
            raise ChannelMismatch(f"expected one channel {sender} -> {recipient}, found {len(found)}")
        return found[0]

    @cached_property
    def circuit(self) -> Circuit:
        """All role circuits, with channel registers and transmission order."""
        regs = {r.id: r for ch in self.channels for r in ch.fields + (ch.activation,)}
        for role in self.roles:
            if role.corruptible:
                regs[role.corruption] = Register(role.corruption)
        base = union(*(r.circuit for r in self.roles), Circuit((), frozenset(), regs))
        return union(base, extra_order=transmission_edges(base.gates))

    @cached_property
    def registers(self) -> frozenset[str]:
        return frozenset(self.circuit.registers)

    @cached_property
    def channel_registers(self) -> dict[str, Channel]:
        return {rid: ch for ch in self.channels for rid in ch.registers}

    @cached_property
    def corruptible(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.roles if r.corruptible)

    @cached_property
    def corruption_registers(self) -> frozenset[str]:
        """Corruption bits read by this protocol (dummy roles share their role's bit)."""
        return frozenset(r for r in self.circuit.registers if r.startswith("C[") and r.endswith("]"))

    @cached_property
    def io_roles(self) -> tuple[str, ...]:
        """Roles with an input or output channel whose other end lies outside the protocol."""
        senders: dict[str, set[str]] = {}
        receivers: dict[str, set[str]] = {}
        for g in self.circuit.gates:
            if g.comm:
                (senders if g.comm[1] == "send" else receivers).setdefault(g.comm[0], set()).add(g.role)
        out = []
        for role in self.roles:
            for ch in self.channels:
                if ch.type.direction == INPUT and ch.recipient == role.name and not senders.get(ch.id, set()) - {role.name}:
                    out.append(role.name)
                    break
                if ch.type.direction == OUTPUT and ch.sender == role.name and not receivers.get(ch.id, set()) - {role.name}:
                    out.append(role.name)
                    break
        return tuple(out)

    def io_channels(self, role: str) -> list[tuple[Channel, str]]:
        """Input/output channels of ``role`` in program order, with 'in'/'out'."""
        gates = canonical_role_order(self.role(role).circuit)
        seen = []
        for g in gates:
            if g.comm is None:
                continue
            ch = self.channel_map.get(g.comm[0])
            if ch is None or ch.type.direction == INTERNAL or ch in [c for c, _ in seen]:
                continue
            if ch.type.direction == INPUT and ch.recipient == role and g.comm[1] == "recv":
                seen.append((ch, "in"))
            elif ch.type.direction == OUTPUT and ch.sender == role and g.comm[1] == "send":
                seen.append((ch, "out"))
        return seen

    def endpoints(self, cid: str) -> set[str]:
        """Roles that may use channel ``cid`` legitimately."""
        ch = self.channel_map[cid]
        out = {ch.sender, ch.recipient}
        for g in self.circuit.gates:
            if g.comm and g.comm[0] == cid and g.role:
                out.add(g.role)
        return out

    def owner_of(self, reg: str) -> str | None:
        """Role whose private register ``reg`` is (None for channel registers)."""
        if reg in self.channel_registers:
            return None
        head = reg.split(".", 1)[0]
        return head if head in self.role_map else None

    def __add__(self, other: "Protocol") -> "Protocol":
        return compose_protocols(f"{self.name}+{other.name}", self, other)


def compose_protocols(name: str, *parts: Protocol, auxiliary: str | None = None) -> Protocol:
    roles = tuple(r for p in parts for r in p.roles)
    aux = auxiliary or next((p.auxiliary for p in parts if p.auxiliary), None)
    trusted = tuple(t for p in parts for t in p.trusted)
    return Protocol(name, roles, _merge_channels(*(p.channels for p in parts)), aux, trusted)


def canonical_role_order(c: Circuit) -> list[Gate]:
    return [c.gate(g) for g in canonical_schedule(c)]


def transmission_edges(gates: Iterable[Gate]) -> set[tuple[str, str]]:
    """Every send gate on a channel precedes every receive gate on it."""
    sends: dict[str, list[str]] = {}
    recvs: dict[str, list[str]] = {}
    for g in gates:
        if g.comm:
            (sends if g.comm[1] == "send" else recvs).setdefault(g.comm[0], []).append(g.id)
    return {(s, r) for cid, ss in sends.items() for s in ss for r in recvs.get(cid, ())}


# ---------------------------------------------------------------------------
# Building role circuits


class RoleBuilder:
    """Emit the gates of one role in program order.

    Every gate is chained after the previous one.  After ``recv`` all later
    gates are controlled on the channel's activation bit; ``branch`` adds a
    control literal for the gates emitted inside it.
    """

    def __init__(self, pb: "ProtocolBuilder", name: str, participant=None, corruptible=True, prefix: str | None = None):
        self.pb = pb
        self.name = name
        self.participant = participant
        self.corruptible = corruptible
        self.prefix = prefix or name
        self.gates: list[Gate] = []
        self.registers: dict[str, Register] = {}
        self.guards: list[tuple[str, int]] = []
        self.n_in = 0
        self.n_out = 0
        self.origin = None
        self.exposed: set[str] = set()

    # registers -----------------------------------------------------------
    def reg(self, name: str, width: int = 1, kind: str = CLASSICAL) -> str:
        rid = f"{self.prefix}.{name}"
        r = Register(rid, kind, width)
        prev = self.registers.get(rid)
        if prev is not None and prev != r:
            raise CircuitError(f"{rid} redeclared with a different width")
        self.registers[rid] = r
        self.exposed.add(rid)
        return rid

    def width(self, rid: str) -> int:
        if rid in self.registers:
            return self.registers[rid].width
        return self.pb.register_width(rid)

    def _declare(self, r: Register):
        self.registers.setdefault(r.id, r)

    # gates ---------------------------------------------------------------
    def emit(self, op: Op, comm=None, tags=(), guarded: bool = True) -> str:
        gid = f"{self.prefix}/{len(self.gates):03d}"
        if guarded:
            op = wrap(op, self.guards)
        self.gates.append(Gate(gid, op, role=self.name, tags=frozenset(tags), comm=comm, origin=self.origin))
        return gid

    def pick(self, name: str, width: int = 1) -> str:
        """Uniformly random value: one Hadamard and one measurement per bit."""
        if width == 1:
            q = self.reg(f"{name}#q0", kind=QUANTUM)
            out = self.reg(name)
            self.emit(hadamard(q))
            self.emit(Measurement(q, out))
            return out
        bits = []
        for i in range(width):
            q = self.reg(f"{name}#q{i}", kind=QUANTUM)
            m = self.reg(f"{name}#m{i}")
            self.emit(hadamard(q))
            self.emit(Measurement(q, m))
            bits.append(m)
        out = self.reg(name, width)
        self.emit(Xor(out, tuple(bits), pack_fn, "pack"))
        return out

    def assign(self, name: str, width: int, fn: Callable, sources: Sequence[str] = (), label: str = "fn") -> str:
        """Fresh register ``name := fn(*sources)``."""
        out = self.reg(name, width)
        self.emit(Xor(out, tuple(sources), fn, label))
        return out

    def xor_into(self, target: str, sources: Sequence[str], fn: Callable = copy_fn, label="copy", tags=()) -> str:
        return self.emit(Xor(target, tuple(sources), fn, label), tags=tags)

    def send(self, ch: Channel, *values: str | int, tags=()) -> list[str]:
        """Write each field, then raise the activation bit."""
        if len(values) != len(ch.fields):
            raise ChannelMismatch(f"{ch.id} has {len(ch.fields)} fields, got {len(values)} values")
        self.pb.use_channel(ch)
        out = []
        for f, v in zip(ch.fields, values):
            if isinstance(v, str):
                op = Xor(f.id, (v,), copy_fn, "copy")
            else:
                op = Xor(f.id, (), const_fn(int(v) & f.mask), f"const{int(v)}")
            out.append(self.emit(op, comm=(ch.id, "send"), tags=tags))
        out.append(self.emit(Xor(ch.activation.id, (), const_fn(1), "wake"), comm=(ch.id, "send"), tags=tags))
        return out

    def recv(self, ch: Channel, *names: str, tags=()) -> list[str]:
        """Copy the fields into fresh locals; later gates wait for the message."""
        if len(names) != len(ch.fields):
            raise ChannelMismatch(f"{ch.id} has {len(ch.fields)} fields, got {len(names)} names")
        self.pb.use_channel(ch)
        self.guards.append((ch.activation.id, 1))
        out = []
        for f, name in zip(ch.fields, names):
            local = self.reg(name, f.width)
            out.append(local)
            self.emit(Xor(local, (f.id,), copy_fn, "copy"), comm=(ch.id, "recv"), tags=tags)
        return out

    def receive_input(self, *fields: tuple[str, int]) -> list[str]:
        ch = self.pb.input_channel(self.name, self.n_in, fields)
        self.n_in += 1
        return self.recv(ch, *(n for n, _ in fields))

    def send_output(self, *values: tuple[str, str | int, int]) -> list[str]:
        """``values`` are (field name, register or constant, width)."""
        ch = self.pb.output_channel(self.name, self.n_out, [(n, w) for n, _, w in values])
        self.n_out += 1
        return self.send(ch, *(v for _, v, _ in values))

    @contextlib.contextmanager
    def branch(self, control: str, polarity: int = 1):
        self.guards.append((control, polarity))
        try:
            yield
        finally:
            self.guards.pop()

    def build(self) -> ModuleRoleCircuit:
        order = {(a.id, b.id) for a, b in zip(self.gates, self.gates[1:])}
        regs = dict(self.registers)
        for g in self.gates:
            for rid in g.registers:
                if rid not in regs:
                    regs[rid] = self.pb.lookup_register(rid)
        circuit = Circuit(tuple(self.gates), frozenset(order), regs)
        if self.corruptible:
            circuit = make_corruptible(circuit, corruption_register(self.name))
        return ModuleRoleCircuit(self.name, circuit, self.participant, self.corruptible, frozenset(self.exposed))


class ProtocolBuilder:
    """Declare channels and roles, then build a :class:`Protocol`."""

    def __init__(self, name: str, known_channels: Iterable[Channel] = ()):
        self.name = name
        self.channels: dict[str, Channel] = {c.id: c for c in known_channels}
        self.used: dict[str, Channel] = {}
        self.roles: list[RoleBuilder] = []
        self.extra_registers: dict[str, Register] = {}

    def role(self, name: str, participant=None, corruptible=True) -> RoleBuilder:
        rb = RoleBuilder(self, name, participant, corruptible)
        self.roles.append(rb)
        return rb

    def channel(self, sender, recipient, tag, fields, medium=CLASSICAL, security=HIDDEN) -> Channel:
        cid = internal_channel_id(sender, recipient, tag)
        return self._declare(make_channel(cid, sender, recipient, fields, ChannelType(medium, security, INTERNAL)))

    def input_channel(self, role: str, index: int, fields) -> Channel:
        cid = input_channel_id(role, index)
        if cid in self.channels:
            return self.channels[cid]
        return self._declare(make_channel(cid, "App", role, fields, ChannelType(CLASSICAL, HIDDEN, INPUT)))

    def output_channel(self, role: str, index: int, fields) -> Channel:
        cid = output_channel_id(role, index)
        if cid in self.channels:
            return self.channels[cid]
        return self._declare(make_channel(cid, role, "App", fields, ChannelType(CLASSICAL, HIDDEN, OUTPUT)))

    def _declare(self, ch: Channel) -> Channel:
        prev = self.channels.get(ch.id)
        if prev is not None and prev != ch:
            raise ChannelMismatch(f"channel {ch.id} redeclared with a different shape")
        self.channels[ch.id] = ch
        return ch

    def use_channel(self, ch: Channel):
        self._declare(ch)
        self.used[ch.id] = ch

    def register_width(self, rid: str) -> int:
        return self.lookup_register(rid).width

    def lookup_register(self, rid: str) -> Register:
        for ch in self.channels.values():
            for r in ch.fields + (ch.activation,):
                if r.id == rid:
                    return r
        for rb in self.roles:
            if rid in rb.registers:
                return rb.registers[rid]
        if rid in self.extra_registers:
            return self.extra_registers[rid]
        if rid.startswith("C[") and rid.endswith("]"):
            return Register(rid)
        raise CircuitError(f"unknown register {rid!r}")

    def build(self, auxiliary: str | None = None, trusted: Sequence[str] = ()) -> Protocol:
        roles = tuple(rb.build() for rb in self.roles)
        return Protocol(self.name, roles, tuple(self.used.values()), auxiliary, tuple(trusted))


# ---------------------------------------------------------------------------
# Corruption


def make_corruptible(c: Circuit, corruption: str) -> Circuit:
    """Make every gate inactive once ``corruption`` is 1."""
    return _wrap_all(c, corruption, 0)


def make_adversarial(c: Circuit, corruption: str) -> Circuit:
    """Make every gate active only once ``corruption`` is 1."""
    return _wrap_all(c, corruption, 1)


def _wrap_all(c: Circuit, corruption: str, polarity: int) -> Circuit:
    gates = []
    for g in c.gates:
        if g.writes(corruption):
            raise CircuitError(f"gate {g.id} writes the corruption register {corruption!r}")
        pols = {p for r, p in g.literals if r == corruption}
        if 1 - polarity in pols:
            raise ControlClash(f"gate {g.id} is already controlled on {corruption}={1 - polarity}")
        if polarity in pols:
            gates.append(g)
        else:
            gates.append(g.replace(op=Controlled(corruption, polarity, g.op)))
    regs = dict(c.registers)
    regs.setdefault(corruption, Register(corruption))
    return Circuit(tuple(gates), c.order, regs)


def corrupt_role(role: ModuleRoleCircuit) -> ModuleRoleCircuit:
    """The role's circuit made corruptible with its own corruption register."""
    return replace(role, circuit=make_corruptible(role.circuit, corruption_register(role.name)), corruptible=True)


# ---------------------------------------------------------------------------
# Ideal protocols


@dataclass(frozen=True, eq=False)
class IdealProtocol(Protocol):
    """A protocol of dummy roles that forward to a trusted role."""

    dummies: Mapping[str, str] = field(default_factory=dict)


def make_dummy_ideal(p: Protocol, trusted: ModuleRoleCircuit, trusted_channels: Sequence[Channel], name: str | None = None) -> IdealProtocol:
    """Build I(P): one forwarding dummy per input/output role of ``p`` plus ``trusted``.

    For an input ``r<in{i}`` the dummy ``I(r)`` forwards to the hidden channel
    ``"I(r)>{trusted}:in{i}"``; for an output ``r>out{i}`` it relays the hidden
    channel ``"{trusted}>I(r):out{i}"``.  ``trusted`` must receive (send) on all
    of these, otherwise :class:`MissingIO` is raised.
    """
    tmap = {c.id: c for c in trusted_channels}
    t_sends = {g.comm[0] for g in trusted.circuit.gates if g.comm and g.comm[1] == "send"}
    t_recvs = {g.comm[0] for g in trusted.circuit.gates if g.comm and g.comm[1] == "recv"}
    pb = ProtocolBuilder(name or f"I({p.name})", known_channels=list(p.channels) + list(trusted_channels))
    dummies = {}
    roles = []
    for r in p.io_roles:
        role = p.role(r)
        d = pb.role(dummy_name(r), participant=role.participant, corruptible=False)
        d.prefix = dummy_name(r)
        for ch, kind in p.io_channels(r):
            idx = ch.id.rsplit("<in" if kind == "in" else ">out", 1)[1]
            if kind == "in":
                hid = internal_channel_id(dummy_name(r), trusted.name, f"in{idx}")
                if hid not in tmap or hid not in t_recvs:
                    raise MissingIO(f"trusted role does not receive {hid}")
                locals_ = d.recv(ch, *[f"in{idx}.{n}" for n in ch.field_names])
                d.send(tmap[hid], *locals_[: len(tmap[hid].fields)])
            else:
                hid = internal_channel_id(trusted.name, dummy_name(r), f"out{idx}")
                if hid not in tmap or hid not in t_sends:
                    raise MissingIO(f"trusted role does not send {hid}")
                locals_ = d.recv(tmap[hid], *[f"out{idx}.{n}" for n in tmap[hid].field_names])
                d.send(ch, *locals_[: len(ch.fields)])
        built = d.build()
        if role.corruptible:
            built = replace(
                built,
                circuit=make_corruptible(built.circuit, corruption_register(r)),
                corruptible=False,
            )
        roles.append(built)
        dummies[r] = built.name
    pb.roles = []
    if p.auxiliary:
        aux = ModuleRoleCircuit(dummy_name(p.auxiliary), Circuit(), corruptible=False)
        roles.append(aux)
        dummies[p.auxiliary] = aux.name
    used = {c.id: c for c in p.channels if c.type.direction != INTERNAL}
    used.update(tmap)
    return IdealProtocol(
        name or f"I({p.name})",
        tuple(roles) + (trusted,),
        tuple(used.values()),
        auxiliary=p.auxiliary,
        trusted=(trusted.name,),
        dummies=dummies,
    )


# ---------------------------------------------------------------------------
# Access rules


@dataclass(frozen=True)
class AccessRule:
    """A family of role sets that may be corrupted together; closed under subsets."""

    allowed: frozenset

    @staticmethod
    def of(sets: Iterable[Iterable[str]]) -> "AccessRule":
        out = set()
        for s in sets:
            s = frozenset(s)
            items = sorted(s)
            for mask in range(1 << len(items)):
                out.add(frozenset(x for i, x in enumerate(items) if mask >> i & 1))
        out.add(frozenset())
        return AccessRule(frozenset(out))

    @staticmethod
    def any_of(roles: Iterable[str]) -> "AccessRule":
        return AccessRule.of([roles])

    @staticmethod
    def at_most(roles: Iterable[str], t: int) -> "AccessRule":
        import itertools

        roles = sorted(roles)
        return AccessRule.of(itertools.combinations(roles, min(t, len(roles))))

    def permits(self, corrupted: Iterable[str]) -> bool:
        return frozenset(corrupted) in self.allowed


# ---------------------------------------------------------------------------
# Environments and simulators


@dataclass(frozen=True, eq=False)
class Environment:
    """Application circuits, adversary circuits keyed by the role they act for,
    and the register ``z`` holding the environment's verdict bit."""

    name: str
    application: Mapping[str, Circuit]
    adversaries: Mapping[str, Circuit] = field(default_factory=dict)
    z: str = "Z"
    comm_order: frozenset = frozenset()
    rewiring: Mapping[str, tuple[str, str]] = field(default_factory=dict)
    forwarding: tuple = ()

    @cached_property
    def circuit(self) -> Circuit:
        return union(*self.application.values(), *self.adversaries.values())

    @property
    def size(self) -> int:
        return len(self.circuit.gates)

    def adversary_gates(self) -> list[Gate]:
        return [g for c in self.adversaries.values() for g in c.gates]


@dataclass(frozen=True, eq=False)
class Simulator:
    """Circuits placed between an environment and an ideal protocol."""

    circuits: Mapping[str, Circuit] = field(default_factory=dict)
    order: frozenset = frozenset()
    name: str = "S"

    @cached_property
    def circuit(self) -> Circuit:
        return union(*self.circuits.values(), extra_order=(), drop_dangling=True)

    def __add__(self, other: "Simulator") -> "Simulator":
        circuits = dict(self.circuits)
        for k, v in other.circuits.items():
            if k in circuits:
                raise CircuitError(f"simulator circuit {k!r} present twice")
            circuits[k] = v
        return Simulator(circuits, self.order | other.order, f"{self.name}+{other.name}")


EMPTY_SIMULATOR = Simulator({}, frozenset(), "empty")


def _corruption_writers(c: Circuit) -> dict[str, list[Gate]]:
    out: dict[str, list[Gate]] = {}
    for g in c.gates:
        for reg, mode in g.base_access.items():
            if mode == "w" and reg.startswith("C["):
                out.setdefault(reg, []).append(g)
    return out


def corruption_edges(c: Circuit) -> set[tuple[str, str]]:
    """Order every reader of a corruption bit relative to the gate that writes it.

    Gates enabled by corruption run after the write.  Gates disabled by
    corruption that are not already after it then run before it.
    """
    writers = _corruption_writers(c)
    if not writers:
        return set()
    edges: set[tuple[str, str]] = set()
    current = c
    topo = c.topological
    for reg in sorted(writers):
        readers = [c.gate(gid) for gid in topo if any(r == reg for r, _ in c.gate(gid).literals)]
        for w in writers[reg]:
            honest = [g for g in reversed(readers) if (reg, 0) in g.literals]
            enabled = [g for g in readers if (reg, 1) in g.literals and (reg, 0) not in g.literals]
            for g, e in [(g, (w.id, g.id)) for g in enabled] + [(g, (g.id, w.id)) for g in honest]:
                if g is w or current.ordered(g.id, w.id):
                    continue
                edges.add(e)
                current = Circuit(current.gates, current.order | {e}, current.registers)
    return edges


def setting_circuit(parts: Sequence[Circuit], order: Iterable[tuple[str, str]]) -> Circuit:
    """Union of parts with transmission and corruption edges added."""
    base = union(*parts, extra_order=order, drop_dangling=True)
    base = Circuit(base.gates, base.order | transmission_edges(base.gates), base.registers)
    canonical_schedule(base)
    extra = corruption_edges(base)
    return Circuit(base.gates, base.order | extra, base.registers)


def bind_overall_setting(e: Environment, p: Protocol | None = None, *, ideal: Protocol | None = None, simulator: Simulator | None = None) -> Circuit:
    """The circuit of environment plus protocol (or plus ideal protocol and simulator).

    Raises :class:`CycleError` or :class:`UnorderedConflict` if the result is
    not a valid circuit.
    """
    parts = [e.circuit]
    order = set(e.comm_order)
    if p is not None:
        parts.append(p.circuit)
    if ideal is not None:
        parts.append(ideal.circuit)
    if simulator is not None:
        parts.append(simulator.circuit)
        order |= set(simulator.order)
    c = setting_circuit(parts, order)
    report = validate_circuit(c)
    if not report.ok:
        kinds = report.kinds()
        if "cycle" in kinds:
            raise CycleError(next(v.gates for v in report.violations if v.kind == "cycle"))
        if kinds == {"unordered conflict"}:
            raise UnorderedConflict([(v.gates[0], v.gates[1], v.register) for v in report.violations])
        raise CircuitError("; ".join(v.message for v in report.violations[:5]))
    return c


def validate_environment(e: Environment, p: Protocol, rule: AccessRule | None = None) -> ValidationReport:
    """Check that ``e`` is a valid environment for ``p`` under ``rule``."""
    report = ValidationReport()
    try:
        c = setting_circuit([e.circuit, p.circuit], e.comm_order)
    except CycleError as err:
        report.add("cycle", str(err), err.gates)
        return report
    except CircuitError as err:
        report.add("malformed", str(err))
        return report
    for v in validate_circuit(c).violations:
        report.violations.append(v)
    if e.z not in c.registers:
        report.add("missing output", f"environment output register {e.z!r} is not declared", register=e.z)
    p_regs = set(p.circuit.registers)
    corr_regs = set(p.corruption_registers)
    app_ids = {g.id for a in e.application.values() for g in a.gates}
    for role, adv in e.adversaries.items():
        creg = corruption_register(role)
        for g in adv.gates:
            if (creg, 1) not in g.literals:
                report.add("unguarded adversary", f"adversary gate {g.id} is not controlled on {creg}=1", [g.id])
            for reg in g.registers:
                if reg not in p_regs or reg in corr_regs and reg in g.controls and not g.writes(reg):
                    continue
                _check_adversary_access(p, g, reg, role, report)
    written: set[str] = set()
    for g in c.gates:
        for reg in corr_regs:
            if g.writes(reg):
                if g.id not in app_ids:
                    report.add("corruption by non-application", f"gate {g.id} writes {reg}", [g.id], reg)
                written.add(reg)
    for name, app in e.application.items():
        for g in app.gates:
            for reg in g.base_access:
                if reg in p_regs and reg not in corr_regs:
                    ch = p.channel_registers.get(reg)
                    if ch is None or ch.type.direction == INTERNAL:
                        report.add("application access", f"application gate {g.id} touches protocol register {reg!r}", [g.id], reg)
    corrupted = {r[2:-1] for r in written}
    if rule is not None and not rule.permits(corrupted):
        report.add("access rule", f"corrupted set {sorted(corrupted)} not permitted")
    return report


def _check_adversary_access(p: Protocol, g: Gate, reg: str, role: str, report: ValidationReport):
    mode = "w" if g.writes(reg) else "r"
    ch = p.channel_registers.get(reg)
    if ch is not None:
        if role in p.endpoints(ch.id):
            return
        rights = ch.type.adversary_rights()
        if rights == "none":
            report.add(
                "channel access",
                f"adversary gate {g.id} accesses {ch.type.security} {ch.type.medium} channel {ch.id}",
                [g.id],
                reg,
            )
        elif rights == "read" and mode == "w":
            report.add("channel write", f"adversary gate {g.id} writes authenticated channel {ch.id}", [g.id], reg)
        return
    owner = p.owner_of(reg)
    if owner != role:
        report.add("private access", f"adversary for {role} touches register {reg!r} of {owner}", [g.id], reg)


def check_channel_access(ctype: ChannelType, mode: str, in_name_of_endpoint: bool = False) -> bool:
    """Whether an adversary may access a channel of type ``ctype`` with ``mode`` ('r'/'w')."""
    if in_name_of_endpoint:
        return True
    rights = ctype.adversary_rights()
    if rights == "none":
        return False
    if rights == "read":
        return mode == "r"
    return True
