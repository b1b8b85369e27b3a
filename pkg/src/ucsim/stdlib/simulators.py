"""Simulators for the commitment and oblivious-transfer certificates."""

from __future__ import annotations

import numpy as np

from ..circuit import Circuit, Register, const_fn
from ..protocol import (
    AUTHENTICATED,
    EMPTY_SIMULATOR,
    ChannelType,
    make_channel,
    Environment,
    InvalidSimulator,
    ProtocolBuilder,
    Simulator,
    corruption_register,
    internal_channel_id,
    make_adversarial,
)
from .protocols import BOTTOM, _check_k, bc_open_channel, sot_io


def _corrupts(e: Environment, role: str) -> bool:
    creg = corruption_register(role)
    return any(g.writes(creg) for g in e.circuit.gates)


def _first_gate(c: Circuit) -> str | None:
    return c.topological[0] if c.gates else None


def _hidden(sender: str, recipient: str, tag: str, fields):
    return make_channel(internal_channel_id(sender, recipient, tag), sender, recipient, fields, ChannelType())


def _committer_part(k: int, e: Environment) -> tuple[dict, set]:
    """Stand in for a committer corrupted after the commit phase.

    On corruption it copies the committed bit from the dummy into the
    committer's register and draws a fresh OT string.  When the adversary
    later announces (x', t) it tells the trusted party to open iff
    x' = x and t equals that string, and to abort otherwise.
    """
    creg = corruption_register("BC-Alice")
    pb = ProtocolBuilder("S")
    ch_open = bc_open_channel(k)
    ch_instr = _hidden("I(BC-Alice)", "BC-Charlie", "in1", [("FOO", 2)])

    handoff = pb.role("Aideal(BC-Alice)", corruptible=False)
    handoff.registers["I(BC-Alice).in0.x"] = Register("I(BC-Alice).in0.x")
    handoff.registers["BC-Alice.x"] = Register("BC-Alice.x")
    handoff.registers["BC-Alice.shat"] = Register("BC-Alice.shat", width=k)
    handoff.xor_into("BC-Alice.x", ["I(BC-Alice).in0.x"])
    shat = handoff.pick("shat", k)
    last = handoff.xor_into("BC-Alice.shat", [shat])
    h = make_adversarial(handoff.build().circuit, creg)

    sym = pb.role("Sym(BC-Alice)", corruptible=False)
    sym.registers["BC-Alice.x"] = Register("BC-Alice.x")
    sym.registers["BC-Alice.shat"] = Register("BC-Alice.shat", width=k)
    xo, to = sym.recv(ch_open, "x", "shat")
    good = sym.assign(
        "good", 1, lambda a, b, c, d: ((a == b) & (c == d)).astype(np.uint64), [xo, "BC-Alice.x", to, "BC-Alice.shat"], label="match"
    )
    instr = sym.reg("instr", 2)
    with sym.branch(good, 0):
        sym.xor_into(instr, [], const_fn(BOTTOM), "bottom")
    sym.send(ch_instr, instr)
    s = make_adversarial(sym.build().circuit, creg)

    order = {(last, _first_gate(s))}
    adv = e.adversaries.get("BC-Alice")
    if adv is not None and adv.gates:
        order.add((last, _first_gate(adv)))
    return {"Aideal(BC-Alice)": h, "Sym(BC-Alice)": s}, order


def _receiver_part(k: int, e: Environment) -> tuple[dict, set]:
    """Stand in for a receiver corrupted before the commit phase.

    Absorbs the adversary's OT inputs and, once the trusted party confirms
    the commitment, answers with the OT receipt.
    """
    creg = corruption_register("BC-Bob")
    pb = ProtocolBuilder("S")
    sio = sot_io(pb, k)
    ch_ok = _hidden("BC-Charlie", "I(BC-Bob)", "out0", [("OK", 1)])
    sym = pb.role("Sym(BC-Bob)", corruptible=False)
    sym.recv(sio["bob_s0"], "s0")
    sym.recv(sio["bob_s1"], "s1")
    (ok,) = sym.recv(ch_ok, "OK")
    sym.send(sio["bob_ok"], ok)
    return {"Sym(BC-Bob)": make_adversarial(sym.build().circuit, creg)}, set()


def _devil() -> Circuit:
    """Reads the opening event that the trusted party leaks to the auxiliary dummy."""
    pb = ProtocolBuilder("S")
    cid = internal_channel_id("BC-Charlie", "I(Auxiliary)", "open")
    ch = make_channel(cid, "BC-Charlie", "I(Auxiliary)", [("opened", 1)], ChannelType(security=AUTHENTICATED))
    d = pb.role("Devil", corruptible=False)
    d.recv(ch, "opened")
    return d.build().circuit


def build_bc_simulator(e: Environment, k: int) -> Simulator:
    """Simulator for commitment over ideal OT against ``e``.

    Handles a committer corrupted after committing and a receiver corrupted
    before the protocol starts; the opening event leaked by the trusted party
    is read by the Devil.
    """
    _check_k(k)
    circuits = {"Devil": _devil()}
    order: set = set()
    if "BC-Alice" in e.adversaries or _corrupts(e, "BC-Alice"):
        c, o = _committer_part(k, e)
        circuits.update(c)
        order |= o
    if _corrupts(e, "BC-Bob"):
        c, o = _receiver_part(k, e)
        circuits.update(c)
        order |= o
    for role in ("SOT-Alice", "SOT-Bob"):
        if _corrupts(e, role):
            raise InvalidSimulator(f"the commitment simulator does not handle corruption of {role}")
    return Simulator(circuits, frozenset(order), f"S_BC[{e.name}]")


def build_real_sot_simulator(e: Environment, k: int) -> Simulator:
    """Simulator for the dealer-based OT; only environments that corrupt no OT role are served."""
    _check_k(k)
    for role in ("SOT-Alice", "SOT-Bob"):
        if _corrupts(e, role):
            raise InvalidSimulator(f"the dealer-based OT simulator does not handle corruption of {role}")
    return Simulator({}, frozenset(), "S_RealSOT")


def build_identity_simulator(e: Environment | None = None, k: int | None = None) -> Simulator:
    return EMPTY_SIMULATOR
