"""Distinguishing experiments, realization checks and supporting analyses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, Gate, Register, Xor, copy_fn, rename, swap, wrap
from .engine import Distribution, run_exact, run_monte_carlo
from .protocol import (
    Environment,
    InvalidSimulator,
    Protocol,
    Simulator,
    bind_overall_setting,
)

__all__ = [
    "SecurityExperiment",
    "AdvantageReport",
    "RealizationVerdict",
    "InvalidSimulator",
    "distinguishing_advantage",
    "check_secure_realization",
    "dummy_adversary_transform",
    "rewire_simulator",
    "ParityBound",
    "WidthMismatch",
    "parity_distance_bound",
    "NegligibilityFit",
    "InsufficientSamples",
    "negligibility_fit",
]


@dataclass
class SecurityExperiment:
    """Environment ``environment`` facing either ``protocol`` or ``ideal`` plus ``simulator``."""

    protocol: Protocol
    ideal: Protocol
    simulator: Simulator
    environment: Environment
    n: int | None = None
    mode: str = "exact"
    samples: int = 100_000
    seed: int = 0

    def real_circuit(self) -> Circuit:
        return bind_overall_setting(self.environment, self.protocol)

    def ideal_circuit(self) -> Circuit:
        return bind_overall_setting(self.environment, ideal=self.ideal, simulator=self.simulator)


@dataclass
class AdvantageReport:
    environment: str
    protocol: str
    ideal: str
    n: int | None
    mode: str
    p_real: float
    p_ideal: float
    advantage: float
    env_size: int
    seed: int | None = None
    samples: int | None = None
    stderr_real: float | None = None
    stderr_ideal: float | None = None
    prng: str | None = None
    meta: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "environment": self.environment,
            "protocol": self.protocol,
            "ideal": self.ideal,
            "n": self.n,
            "mode": self.mode,
            "p_real": self.p_real,
            "p_ideal": self.p_ideal,
            "advantage": self.advantage,
            "env_size": self.env_size,
            "seed": self.seed,
            "samples": self.samples,
            "stderr_real": self.stderr_real,
            "stderr_ideal": self.stderr_ideal,
        }


def _run(c: Circuit, z: str, x: SecurityExperiment, offset: int) -> Distribution:
    if x.mode == "exact":
        return run_exact(c, [z])
    if x.mode in ("sample", "monte-carlo", "mc"):
        return run_monte_carlo(c, [z], samples=x.samples, seed=x.seed + offset)
    raise ValueError(f"unknown mode {x.mode!r}")


def distinguishing_advantage(x: SecurityExperiment) -> AdvantageReport:
    """|Pr(Z=0 | real) - Pr(Z=0 | ideal)| for the experiment's environment."""
    e = x.environment
    real = _run(x.real_circuit(), e.z, x, 0)
    ideal = _run(x.ideal_circuit(), e.z, x, 1)
    pr, pi = real[0], ideal[0]
    sampled = x.mode != "exact"
    return AdvantageReport(
        environment=e.name,
        protocol=x.protocol.name,
        ideal=x.ideal.name,
        n=x.n,
        mode="exact" if not sampled else "sample",
        p_real=pr,
        p_ideal=pi,
        advantage=abs(pr - pi),
        env_size=e.size,
        seed=x.seed if sampled else None,
        samples=x.samples if sampled else None,
        stderr_real=real.stderr.get(0, 0.0) if sampled else None,
        stderr_ideal=ideal.stderr.get(0, 0.0) if sampled else None,
        prng="PCG64" if sampled else None,
    )


@dataclass
class RealizationVerdict:
    passed: bool
    reports: list[AdvantageReport]
    bound: list[float]
    note: str = ""

    def __bool__(self):
        return self.passed

    def failures(self) -> list[AdvantageReport]:
        return [r for r, b in zip(self.reports, self.bound) if r.advantage > b + 1e-12]


def check_secure_realization(
    p: Protocol,
    ideal: Protocol,
    simulator_factory: Callable[[Environment], Simulator],
    environments: Iterable[Environment],
    bound: Callable[[int | None], float] | float,
    n: int | None = None,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
) -> RealizationVerdict:
    """Check advantage <= bound(n) for every environment, using one simulator per environment.

    Exact runs allow 1e-12 slack; sampled runs allow three standard errors.
    """
    envs = list(environments)
    b = bound(n) if callable(bound) else float(bound)
    reports, bounds = [], []
    ok = True
    for e in envs:
        sim = simulator_factory(e)
        if not isinstance(sim, Simulator):
            raise InvalidSimulator(f"factory returned {type(sim).__name__}, not a Simulator")
        rep = distinguishing_advantage(SecurityExperiment(p, ideal, sim, e, n, mode, samples, seed))
        slack = 1e-12
        if rep.mode == "sample":
            slack = 3 * math.hypot(rep.stderr_real or 0.0, rep.stderr_ideal or 0.0)
        reports.append(rep)
        bounds.append(b)
        ok = ok and rep.advantage <= b + slack
    return RealizationVerdict(ok, reports, bounds, "" if envs else "no environments: vacuously satisfied")


# ---------------------------------------------------------------------------
# Dummy-adversary transform


def _p_registers(p: Protocol) -> set[str]:
    return set(p.circuit.registers) - set(p.corruption_registers)


def _group(p: Protocol, reg: str) -> str:
    ch = p.channel_registers.get(reg)
    if ch is not None:
        return f"channel:{ch.id}"
    return f"handoff:{p.owner_of(reg) or reg}"


def dummy_adversary_transform(e: Environment, p: Protocol) -> Environment:
    """Move every adversary into the application behind a forwarding dummy.

    Each adversary gate that touches a register of ``p`` is rewritten to act
    on private mirror registers.  The dummy copies (reads) or swaps (writes)
    the protocol registers into the mirrors just before the gate, under the
    gate's own controls, and swaps written ones back after it.  The rest of
    the adversary becomes the application circuit ``SAdv(role)``.

    The result's ``rewiring`` maps each rewritten gate id to its first and
    last dummy gate; ``forwarding`` lists (group, gate id) for every
    forwarded access, grouped by channel or by the role whose private
    registers are handed over.
    """
    preg = _p_registers(p)
    application = dict(e.application)
    adversaries: dict[str, Circuit] = {}
    rewiring: dict[str, tuple[str, str]] = {}
    forwarding = set()
    cross: set[tuple[str, str]] = set()
    for role, adv in e.adversaries.items():
        dname, sname = f"Dummy({role})", f"SAdv({role})"
        dummy_gates: list[Gate] = []
        sadv_gates: list[Gate] = []
        dummy_regs: dict[str, Register] = {}
        sadv_regs = dict(adv.registers)
        head: dict[str, str] = {}
        tail: dict[str, str] = {}
        links: set[tuple[str, str]] = set()
        for gid in adv.topological:
            g = adv.gate(gid)
            touched = sorted(r for r in g.registers if r in preg)
            if not touched:
                sadv_gates.append(g)
                continue
            mapping = {r: f"Fwd[{g.id}].{r}" for r in touched}
            for r in touched:
                reg = adv.registers[r]
                mirror = Register(mapping[r], reg.kind, reg.width, reg.initial if reg.quantum else 0)
                dummy_regs[r] = reg
                dummy_regs[mirror.id] = sadv_regs[mirror.id] = mirror
            ins, outs = [], []
            for r in touched:
                if g.writes(r) or adv.registers[r].quantum:
                    op = wrap(swap(adv.registers[r], dummy_regs[mapping[r]]), g.literals)
                    ins.append(Gate(f"{g.id}~in:{r}", op, role=dname))
                    outs.append(Gate(f"{g.id}~out:{r}", op, role=dname, comm=g.comm))
                else:
                    op = wrap(Xor(mapping[r], (r,), copy_fn, "copy"), g.literals)
                    ins.append(Gate(f"{g.id}~in:{r}", op, role=dname, comm=g.comm))
            sadv_gates.append(Gate(g.id, rename(g.op, mapping), role=sname, tags=g.tags, comm=None, origin=g.origin))
            dummy_gates.extend(ins + outs)
            links |= set(zip(ins, ins[1:])) | set(zip(outs, outs[1:]))
            cross.update((a.id, g.id) for a in ins)
            cross.update((g.id, b.id) for b in outs)
            head[g.id] = ins[0].id
            tail[g.id] = outs[-1].id if outs else g.id
            rewiring[g.id] = (head[g.id], tail[g.id])
            forwarding.update((_group(p, r), g.id) for r in touched)
        for gate in dummy_gates:
            for r in gate.registers:
                dummy_regs.setdefault(r, sadv_regs.get(r) or adv.registers[r])
        order = {(a.id, b.id) for a, b in links}
        sadv_ids = {x.id for x in sadv_gates}
        for a, b in adv.order:
            order.add((a, b))
            order.add((tail.get(a, a), head.get(b, b)))
        dummy_ids = {x.id for x in dummy_gates}
        for a, b in order:
            if (a in sadv_ids) != (b in sadv_ids):
                cross.add((a, b))
        sadv = Circuit(tuple(sadv_gates), frozenset((a, b) for a, b in order if a in sadv_ids and b in sadv_ids), sadv_regs)
        dummy = Circuit(tuple(dummy_gates), frozenset((a, b) for a, b in order if a in dummy_ids and b in dummy_ids), dummy_regs)
        if sadv_gates:
            application[sname] = sadv
        adversaries[role] = dummy
    comm = set(cross)
    for a, b in e.comm_order:
        comm.add((a, b))
        comm.add((rewiring.get(a, (a, a))[1], rewiring.get(b, (b, b))[0]))
    return Environment(e.name + "'", application, adversaries, e.z, frozenset(comm), rewiring, tuple(sorted(forwarding)))


def forwarding_groups(e: Environment) -> list[str]:
    return sorted({grp for grp, _ in e.forwarding})


def rewire_simulator(s: Simulator, e_prime: Environment) -> Simulator:
    """Point simulator order edges at the dummy gates that replaced adversary accesses."""
    order = set()
    for a, b in s.order:
        order.add((a, b))
        if a in e_prime.rewiring:
            order.add((e_prime.rewiring[a][1], b))
        if b in e_prime.rewiring:
            order.add((a, e_prime.rewiring[b][0]))
    return Simulator(dict(s.circuits), frozenset(order), s.name + "'")


# ---------------------------------------------------------------------------
# Parity bound


class WidthMismatch(ValueError):
    pass


@dataclass
class ParityBound:
    max_parity_deviation: float
    l2_distance: float
    bound_holds: bool

    def __iter__(self):
        return iter((self.max_parity_deviation, self.l2_distance, self.bound_holds))


def _as_vector(p) -> np.ndarray:
    if isinstance(p, Distribution):
        p = p.probs
    if isinstance(p, Mapping):
        size = 1
        top = max(p) if p else 0
        while size <= top:
            size <<= 1
        v = np.zeros(size)
        for k, val in p.items():
            v[int(k)] = val
        return v
    return np.asarray(p, dtype=float)


def parity_distance_bound(p, q) -> ParityBound:
    """Largest parity deviation over masks X, and the check ||P - Q||_2 <= 2 max_X dev(X).

    dev(X) = |Pr_P(X . Z = 0) - Pr_Q(X . Z = 0)| where X . Z is the parity of
    the bitwise AND.  Computed with a fast Walsh-Hadamard transform.
    """
    a, b = _as_vector(p), _as_vector(q)
    n = max(len(a), len(b))
    if len(a) != len(b):
        if isinstance(p, (Mapping, Distribution)) or isinstance(q, (Mapping, Distribution)):
            a = np.pad(a, (0, n - len(a)))
            b = np.pad(b, (0, n - len(b)))
        else:
            raise WidthMismatch(f"distributions over {len(a)} and {len(b)} outcomes")
    if n & (n - 1) or n == 0:
        raise WidthMismatch(f"support size {n} is not a power of two")
    d = a - b
    h = d.copy()
    step = 1
    while step < n:
        h = h.reshape(-1, 2, step)
        h = np.stack([h[:, 0] + h[:, 1], h[:, 0] - h[:, 1]], axis=1).reshape(-1)
        step *= 2
    # h[X] = sum_z (-1)^{X.z} d(z); Pr(X.Z = 0) difference = (sum d + h[X]) / 2
    dev = np.abs(d.sum() + h) / 2
    dev_max = float(dev.max())
    l2 = float(np.linalg.norm(d))
    return ParityBound(dev_max, l2, l2 <= 2 * dev_max + 1e-12)


# ---------------------------------------------------------------------------
# Negligibility heuristic


class InsufficientSamples(ValueError):
    pass


@dataclass
class NegligibilityFit:
    alpha: float
    intercept: float
    verdict: str
    max_residual: float
    exp_rss: float
    poly_rss: float
    flag: str = "HEURISTIC"

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def negligibility_fit(samples: Sequence[Sequence[float]]) -> NegligibilityFit:
    """Fit log2(eps) = c - alpha * n to (n, [env_size,] eps) samples.

    The verdict is "consistent" with negligibility when alpha > 0, the fit is
    tight (max residual <= 0.5 in log2 units) and an exponential model fits at
    least as well as a polynomial one (log2 eps linear in log2 n).  Samples at
    eps = 0 are skipped; if every sample is 0 the rate is infinite.  This is a
    heuristic and is always flagged as such.
    """
    pts = []
    for s in samples:
        s = tuple(s)
        n, eps = float(s[0]), float(s[-1])
        if eps < 0 or not math.isfinite(eps):
            raise ValueError(f"advantage must be a finite non-negative number, got {eps}")
        pts.append((n, eps))
    if len({n for n, _ in pts}) < 3:
        raise InsufficientSamples("need at least three distinct values of n")
    nonzero = [(n, e) for n, e in pts if e > 0]
    if not nonzero:
        return NegligibilityFit(math.inf, -math.inf, "consistent", 0.0, 0.0, 0.0)
    if len({n for n, _ in nonzero}) < 3:
        raise InsufficientSamples("need at least three distinct n with non-zero advantage")
    ns = np.array([n for n, _ in nonzero])
    ys = np.log2([e for _, e in nonzero])
    A = np.stack([np.ones_like(ns), -ns], axis=1)
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    res = ys - A @ coef
    if np.all(ns > 0):
        B = np.stack([np.ones_like(ns), -np.log2(ns)], axis=1)
        pc, *_ = np.linalg.lstsq(B, ys, rcond=None)
        poly_rss = float(np.sum((ys - B @ pc) ** 2))
    else:
        poly_rss = math.inf
    exp_rss = float(np.sum(res**2))
    alpha = float(coef[1])
    ok = alpha > 0 and float(np.max(np.abs(res))) <= 0.5 and exp_rss <= poly_rss + 1e-12
    return NegligibilityFit(alpha, float(coef[0]), "consistent" if ok else "inconsistent", float(np.max(np.abs(res))), exp_rss, poly_rss)
