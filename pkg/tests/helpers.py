"""Settings shared by several test modules."""

import itertools

from ucsim.circuit import (
    CLASSICAL,
    QUANTUM,
    Circuit,
    Controlled,
    Gate,
    Measurement,
    Register,
    Xor,
    const_fn,
    copy_fn,
    hadamard,
)
from ucsim.protocol import AUTHENTICATED, HIDDEN, INSECURE, Environment, ProtocolBuilder

CELLS = list(itertools.product((CLASSICAL, QUANTUM), (HIDDEN, AUTHENTICATED, INSECURE)))
EXPECTED_RIGHTS = {
    (CLASSICAL, HIDDEN): "none",
    (CLASSICAL, AUTHENTICATED): "read",
    (CLASSICAL, INSECURE): "readwrite",
    (QUANTUM, HIDDEN): "none",
    (QUANTUM, AUTHENTICATED): "none",
    (QUANTUM, INSECURE): "full",
}



def sot_driver(p, s0, s1, c):
    pb = ProtocolBuilder("E", known_channels=p.channels)
    app = pb.role("App", corruptible=False)
    app.registers["Z"] = Register("Z")
    app.send(p.channel("SOT-Bob<in0"), s0)
    app.send(p.channel("SOT-Bob<in1"), s1)
    app.send(p.channel("SOT-Alice<in0"), c)
    app.recv(p.channel("SOT-Bob>out0"), "ok")
    app.recv(p.channel("SOT-Alice>out0"), "shat")
    return Environment("sot-driver", {"App": app.build().circuit}, {}, "Z")


def eavesdrop_setting(medium, security, mode, acting_for="E"):
    """Sender S, recipient R and an adversary acting for ``acting_for`` touching the channel in between."""
    pb = ProtocolBuilder("Chan")
    ch = pb.channel("S", "R", "m", [("m", 1)], medium=medium, security=security)
    field, act = ch.fields[0].id, ch.activation.id
    s = pb.role("S")
    if medium == QUANTUM:
        s.pb.use_channel(ch)
        s.emit(hadamard(field), comm=(ch.id, "send"))
        s.emit(Xor(act, (), const_fn(1), "wake"), comm=(ch.id, "send"))
    else:
        s.send(ch, 1)
    r = pb.role("R")
    if medium == QUANTUM:
        r.guards.append((act, 1))
        r.emit(Measurement(field, r.reg("m")), comm=(ch.id, "recv"))
    else:
        r.recv(ch, "m")
    pb.role("E")
    p = pb.build()

    creg = f"C[{acting_for}]"
    regs = {field: ch.fields[0], creg: Register(creg), "Adv.m": Register("Adv.m")}
    if medium == QUANTUM:
        op = hadamard(field)
    elif mode == "r":
        op = Xor("Adv.m", (field,), copy_fn, "copy")
    else:
        op = Xor(field, (), const_fn(1), "const1")
    adv = Circuit((Gate("adv", Controlled(creg, 1, op)),), frozenset(), regs)
    order = {(g.id, "adv") for g in p.role("S").circuit.gates}
    order |= {("adv", g.id) for g in p.role("R").circuit.gates}
    app = Circuit((), frozenset(), {"Z": Register("Z")})
    return Environment("eve", {"App": app}, {acting_for: adv}, "Z", frozenset(order)), p
