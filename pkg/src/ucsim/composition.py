"""Protocol trees, tilde protocols, bottom-up replacement and the epsilon ledger."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .circuit import Circuit, CircuitError
from .protocol import (
    INPUT,
    OUTPUT,
    ChannelMismatch,
    Environment,
    InvalidSimulator,
    Protocol,
    Simulator,
    compose_protocols,
)
from .security import AdvantageReport, SecurityExperiment, distinguishing_advantage

__all__ = [
    "ProtocolTree",
    "SecurityCertificate",
    "LedgerEntry",
    "EpsilonLedger",
    "BindFailure",
    "CompositionResult",
    "build_tilde",
    "bottom_up_order",
    "compose_bottom_up",
    "ProtocolDag",
    "AmbiguousOrder",
    "DagRewrite",
    "dag_to_tree",
    "check_interface",
    "corrupted_roles",
]


class TreeError(ValueError):
    pass


class BindFailure(CircuitError):
    """A replacement step produced an invalid setting."""

    def __init__(self, node: str, cause: Exception):
        self.node = node
        self.cause = cause
        super().__init__(f"step {node!r}: {cause}")


@dataclass(frozen=True, eq=False)
class ProtocolTree:
    """Sub-protocols keyed by node id; ``modules[q]`` is M(q), ``children[q]`` its callees."""

    root: str
    children: Mapping[str, Sequence[str]]
    modules: Mapping[str, Protocol] = field(default_factory=dict)

    def __post_init__(self):
        seen, stack = set(), [self.root]
        parents: dict[str, str] = {}
        while stack:
            q = stack.pop()
            if q in seen:
                raise TreeError(f"node {q!r} reachable twice; not a tree")
            seen.add(q)
            for r in self.children.get(q, ()):
                if r in parents:
                    raise TreeError(f"node {r!r} has two callers")
                parents[r] = q
                stack.append(r)
        extra = set(self.children) - seen
        if extra:
            raise TreeError(f"nodes {sorted(extra)} are not reachable from {self.root!r}")

    @property
    def nodes(self) -> list[str]:
        return preorder(self)

    def kids(self, q: str) -> list[str]:
        return sorted(self.children.get(q, ()))

    def subtree(self, q: str) -> list[str]:
        out, stack = [], [q]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(reversed(self.kids(x)))
        return out

    def protocol(self, q: str | None = None) -> Protocol:
        """The full sub-protocol Q = M(Q) + sum of children's sub-protocols."""
        q = q or self.root
        return compose_protocols(q, *(self.modules[x] for x in self.subtree(q)))

    def edges(self) -> set[tuple[str, str]]:
        return {(q, r) for q, rs in self.children.items() for r in rs}


def preorder(t: ProtocolTree) -> list[str]:
    return t.subtree(t.root)


def bottom_up_order(t: ProtocolTree) -> list[str]:
    """Children before parents: the reverse of the preorder with siblings by id."""
    return list(reversed(preorder(t)))


@dataclass(frozen=True, eq=False)
class SecurityCertificate:
    """Claim that tilde-``node`` realizes ``ideal`` with advantage at most ``epsilon(n, |E|)``."""

    node: str
    ideal: Protocol
    simulator_factory: Callable[[Environment], Simulator]
    epsilon: Callable[[int | None, int], float]
    definition_id: str = ""

    @property
    def definition(self) -> str:
        return self.definition_id or self.node


@dataclass
class LedgerEntry:
    node: str
    definition_id: str
    epsilon: float
    env_size: int
    measured: float | None = None

    def record(self) -> dict:
        return {
            "node": self.node,
            "definition_id": self.definition_id,
            "epsilon": self.epsilon,
            "env_size": self.env_size,
            "measured_advantage": self.measured,
        }


@dataclass
class EpsilonLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(sum(e.epsilon for e in self.entries))

    def add(self, entry: LedgerEntry):
        self.entries.append(entry)

    def by_definition(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for e in self.entries:
            out[e.definition_id] = out.get(e.definition_id, 0.0) + e.epsilon
        return out

    def __add__(self, other: "EpsilonLedger") -> "EpsilonLedger":
        return EpsilonLedger(self.entries + other.entries)

    def records(self) -> list[dict]:
        return [e.record() for e in self.entries]


def _io_shapes(p: Protocol) -> dict[str, tuple]:
    out = {}
    for ch in p.channels:
        if ch.type.direction in (INPUT, OUTPUT):
            out[ch.id] = tuple((r.id.rsplit(".", 1)[-1], r.kind, r.width) for r in ch.fields)
    return out


def check_interface(real: Protocol, ideal: Protocol):
    """Raise ChannelMismatch unless ``ideal`` exposes the I/O channels of ``real`` with equal shapes."""
    a, b = _io_shapes(real), _io_shapes(ideal)
    for cid, shape in a.items():
        if cid not in b:
            raise ChannelMismatch(f"ideal {ideal.name} lacks I/O channel {cid!r} of {real.name}")
        if b[cid] != shape:
            raise ChannelMismatch(f"I/O channel {cid!r} differs: {shape} vs {b[cid]}")
    extra = set(b) - set(a)
    if extra:
        raise ChannelMismatch(f"ideal {ideal.name} has extra I/O channels {sorted(extra)}")


def build_tilde(t: ProtocolTree, q: str, certs: Mapping[str, SecurityCertificate]) -> Protocol:
    """M(q) with each child sub-protocol replaced by the child's ideal protocol."""
    parts = [t.modules[q]]
    for r in t.kids(q):
        if r not in certs:
            raise KeyError(f"no certificate for child {r!r} of {q!r}")
        check_interface(t.protocol(r), certs[r].ideal)
        parts.append(certs[r].ideal)
    if len(parts) == 1:
        return parts[0]
    return compose_protocols(f"~{q}", *parts)


def _roles_of(p: Protocol) -> set[str]:
    return {reg[2:-1] for reg in p.corruption_registers}


@dataclass
class CompositionResult:
    simulator: Simulator
    ledger: EpsilonLedger
    steps: list[AdvantageReport]
    environments: dict[str, Environment]
    end_to_end: AdvantageReport | None = None


def _environment_for(
    e: Environment,
    tilde: Protocol,
    node: str,
    others: Sequence[Protocol],
    sims: Sequence[Simulator],
) -> Environment:
    """E(tilde-Q): everything in the current setting outside tilde-Q, as one environment."""
    inside = _roles_of(tilde)
    application: dict[str, Circuit] = dict(e.application)
    adversaries = {}
    for role, adv in e.adversaries.items():
        if role in inside:
            adversaries[role] = adv
        elif adv.gates:
            application[f"adv:{role}"] = adv
    for p in others:
        for r in p.roles:
            application[f"{p.name}:{r.name}"] = r.circuit
        extra = p.circuit.registers
        channel_regs = {rid: extra[rid] for rid in p.channel_registers if rid in extra}
        if channel_regs:
            application[f"{p.name}:channels"] = Circuit((), frozenset(), channel_regs)
    order = set(e.comm_order)
    for s in sims:
        for name, c in s.circuits.items():
            application[f"{s.name}:{name}"] = c
        order |= set(s.order)
    return Environment(f"E(~{node})", application, adversaries, e.z, frozenset(order))


def compose_bottom_up(
    t: ProtocolTree,
    certs: Mapping[str, SecurityCertificate],
    e: Environment,
    n: int | None = None,
    measure: bool = True,
    mode: str = "exact",
) -> CompositionResult:
    """Replace tilde-Q by I(Q) + S(tilde-Q) node by node, children first.

    At each step the environment E(tilde-Q) holds the original application,
    adversaries acting for roles outside tilde-Q, the not yet replaced
    modules, ideals of earlier replaced subtrees outside tilde-Q and all
    simulators built so far.  The ledger records epsilon(n, |E(tilde-Q)|)
    per node; with ``measure`` each step's advantage and the end-to-end
    advantage are computed as well.
    """
    order = bottom_up_order(t)
    replaced: dict[str, Protocol] = {}  # topmost replaced nodes -> their ideal
    sims: list[Simulator] = []
    ledger = EpsilonLedger()
    steps: list[AdvantageReport] = []
    envs: dict[str, Environment] = {}
    for q in order:
        cert = certs.get(q)
        if cert is None:
            raise KeyError(f"no certificate for node {q!r}")
        tilde = build_tilde(t, q, certs)
        kids = set(t.kids(q))
        covered = set(t.subtree(q))
        others: list[Protocol] = []
        for x in preorder(t):
            if x in covered:
                continue
            top = next((y for y in replaced if x in t.subtree(y)), None)
            if top is None:
                others.append(t.modules[x])
            elif top == x:
                others.append(replaced[x])
        env = _environment_for(e, tilde, q, others, sims)
        envs[q] = env
        try:
            sim = cert.simulator_factory(env)
        except InvalidSimulator:
            raise
        except CircuitError as err:
            raise BindFailure(q, err) from err
        measured = None
        if measure:
            try:
                rep = distinguishing_advantage(SecurityExperiment(tilde, cert.ideal, sim, env, n, mode))
            except CircuitError as err:
                raise BindFailure(q, err) from err
            steps.append(rep)
            measured = rep.advantage
        ledger.add(LedgerEntry(q, cert.definition, float(cert.epsilon(n, env.size)), env.size, measured))
        for r in kids:
            replaced.pop(r, None)
        replaced[q] = cert.ideal
        sims.append(sim)
    total_sim = _sum_simulators(sims)
    end = None
    if measure:
        x = SecurityExperiment(t.protocol(), certs[t.root].ideal, total_sim, e, n, mode)
        try:
            end = distinguishing_advantage(x)
        except CircuitError as err:
            raise BindFailure(t.root, err) from err
    return CompositionResult(total_sim, ledger, steps, envs, end)


def _sum_simulators(sims: Sequence[Simulator]) -> Simulator:
    circuits: dict[str, Circuit] = {}
    order: set = set()
    for s in sims:
        for name, c in s.circuits.items():
            circuits[f"{s.name}:{name}"] = c
        order |= set(s.order)
    return Simulator(circuits, frozenset(order), "+".join(s.name for s in sims) or "empty")


# ---------------------------------------------------------------------------
# DAG to tree


class AmbiguousOrder(Exception):
    """Callers of a shared node tie on longest-path length."""


@dataclass(frozen=True)
class ProtocolDag:
    root: str
    edges: frozenset  # (caller, callee)

    @staticmethod
    def of(root: str, children: Mapping[str, Sequence[str]]) -> "ProtocolDag":
        return ProtocolDag(root, frozenset((a, b) for a, bs in children.items() for b in bs))

    @property
    def nodes(self) -> set[str]:
        return {self.root} | {x for e in self.edges for x in e}


@dataclass
class DagRewrite:
    tree: ProtocolTree
    parts: dict[str, tuple[str, ...]]  # node -> nodes whose ideals make up I'(node)
    ideals: dict[str, tuple]  # node -> ideal objects in ``parts`` order
    ambiguities: list[tuple[str, tuple[str, ...]]]

    @property
    def rewritten(self) -> dict[str, tuple[str, ...]]:
        return {q: p for q, p in self.parts.items() if p != (q,)}


def _longest(root: str, edges: set) -> dict[str, int]:
    kids: dict[str, list[str]] = {}
    indeg: dict[str, int] = {}
    for a, b in edges:
        kids.setdefault(a, []).append(b)
        indeg[b] = indeg.get(b, 0) + 1
        indeg.setdefault(a, 0)
    depth = {root: 0}
    ready = [x for x, d in indeg.items() if d == 0] or [root]
    seen = 0
    while ready:
        x = ready.pop()
        seen += 1
        for y in kids.get(x, ()):
            if x in depth:
                depth[y] = max(depth.get(y, 0), depth[x] + 1)
            indeg[y] -= 1
            if indeg[y] == 0:
                ready.append(y)
    if seen < len(indeg):
        raise TreeError("call graph has a cycle")
    return depth


def _reaches(edges: set, a: str, b: str) -> bool:
    stack, seen = [a], set()
    while stack:
        x = stack.pop()
        if x == b:
            return True
        if x in seen:
            continue
        seen.add(x)
        stack.extend(y for (u, y) in edges if u == x)
    return False


def dag_to_tree(d: ProtocolDag, ideals: Mapping[str, object] | None = None) -> DagRewrite:
    """Chain the callers of each shared node so that every node has one caller.

    Callers R_1 < ... < R_m of a shared node Q are sorted by decreasing
    longest path from the root, ties broken by node id and reported.  R_1
    keeps the call to Q, R_{i+1} calls R_i, and every other caller of R_i is
    re-pointed to the latest R_j (j >= i) it can call without a cycle.  The
    ideal of R_i becomes I(Q) + I(R_1) + ... + I(R_i).
    """
    ideals = ideals or {}
    edges = set(d.edges)
    nodes = d.nodes
    _longest(d.root, edges)
    parts: dict[str, tuple[str, ...]] = {q: (q,) for q in nodes}
    ambiguities: list[tuple[str, tuple[str, ...]]] = []
    for _ in range(4 * len(nodes) ** 2 + 4):
        depth = _longest(d.root, edges)
        parents: dict[str, list[str]] = {}
        for a, b in edges:
            parents.setdefault(b, []).append(a)
        shared = [q for q, ps in parents.items() if len(ps) > 1]
        if not shared:
            break
        q = max(shared, key=lambda x: (depth.get(x, 0), x))
        callers = sorted(parents[q], key=lambda r: (-depth.get(r, 0), r))
        lengths = [depth.get(r, 0) for r in callers]
        if len(set(lengths)) < len(lengths):
            ambiguities.append((q, tuple(callers)))
        for r in callers[1:]:
            edges.discard((r, q))
        old_parts = dict(parts)
        acc = list(old_parts[q])
        for r in callers:
            for x in old_parts[r]:
                if x not in acc:
                    acc.append(x)
            parts[r] = tuple(acc)
        outer: list[tuple[str, int]] = []
        for i, r in enumerate(callers[:-1]):
            for x in [a for a, b in edges if b == r]:
                if x not in callers:
                    outer.append((x, i))
                    edges.discard((x, r))
            edges.add((callers[i + 1], r))
        for x, i in outer:
            target = callers[i]
            for j in range(len(callers) - 1, i - 1, -1):
                cand = callers[j]
                if cand != x and not _reaches(edges, cand, x):
                    target = cand
                    break
            edges.add((x, target))
    else:
        raise TreeError("DAG rewrite did not converge")
    children: dict[str, list[str]] = {}
    for a, b in edges:
        children.setdefault(a, []).append(b)
    tree = ProtocolTree(d.root, {k: sorted(v) for k, v in children.items()})
    resolved = {q: tuple(ideals[x] for x in p if x in ideals) for q, p in parts.items()}
    return DagRewrite(tree, parts, resolved, ambiguities)


def corrupted_roles(e: Environment) -> set[str]:
    """Roles whose corruption bit some gate of ``e`` writes."""
    out = set()
    for g in e.circuit.gates:
        for reg in g.base_access:
            if reg.startswith("C[") and g.writes(reg):
                out.add(reg[2:-1])
    return out

