"""Environments that drive coin tossing over bit commitment.

All of them run the two coin-tossing roles as application circuits and end
with ``Z := 0`` iff the quantity they test equals 0.
"""

from __future__ import annotations

import numpy as np

from ..circuit import Circuit, Register, Xor, const_fn, copy_fn, neq_const_fn, xor_fn
from ..protocol import (
    Environment,
    ProtocolBuilder,
    adversary_name,
    corruption_register,
    make_adversarial,
)
from .protocols import _check_k, bc_io, build_ct_module, bc_open_channel, ct_io, ct_roles, sot_io

Z = "Z"


def _empty() -> Circuit:
    return Circuit()


def _first_send(c: Circuit, channel_id: str) -> str:
    for gid in c.topological:
        g = c.gate(gid)
        if g.comm == (channel_id, "send"):
            return gid
    raise KeyError(channel_id)


def _z_register(app) -> None:
    app.registers[Z] = Register(Z)
    app.exposed.discard(Z)


def _coin_application(pb: ProtocolBuilder, corrupt_on_wa: bool, with_ct: bool = True):
    """CT roles (unless ``with_ct`` is False) plus an 'App' circuit.

    Returns (CT-Alice builder, CT-Bob builder, app builder, corruption gate id).
    """
    ct_alice = ct_bob = None
    if with_ct:
        ct_alice, ct_bob = ct_roles(pb, corruptible=False)
    io = ct_io(pb)
    app = pb.role("App", "Environment", corruptible=False)
    _z_register(app)
    (wa,) = app.recv(io["alice_w"], "wA")
    corr = None
    if corrupt_on_wa:
        creg = corruption_register("BC-Alice")
        app.registers[creg] = Register(creg)
        corr = app.emit(Xor(creg, (wa,), copy_fn, "corrupt_if"), tags={"corruption"})
    (wb,) = app.recv(io["bob_w"], "wB")
    app.emit(Xor(Z, (wb,), neq_const_fn(0), "nonzero"))
    return ct_alice, ct_bob, app, corr


def _adv_bc_alice(k: int) -> Circuit:
    """Announce the flipped committed bit with a guessed OT string."""
    pb = ProtocolBuilder("adv")
    ch_open = bc_open_channel(k)
    adv = pb.role(adversary_name("BC-Alice"), corruptible=False)
    adv.registers["BC-Alice.x"] = Register("BC-Alice.x")
    xp = adv.assign("xp", 1, lambda x: x ^ np.uint64(1), ["BC-Alice.x"], label="flip")
    t = adv.pick("t", k)
    adv.send(ch_open, xp, t)
    role = adv.build()
    return make_adversarial(role.circuit, corruption_register("BC-Alice"))


def build_bias_attack_environment(k: int, corrupt: bool = True, with_ct: bool = True) -> Environment:
    """Corrupt the committer iff Alice's coin output is 1, then open the other bit.

    Bob's coin is 0 with probability (1 + 2^-k)/2 against the real commitment.
    With ``corrupt=False`` the corruption gate is omitted (honest run).  With
    ``with_ct=False`` the coin-tossing roles are left to the protocol, so the
    environment suits coin tossing over commitment.
    """
    _check_k(k)
    pb = ProtocolBuilder("E")
    ct_alice, ct_bob, app, corr = _coin_application(pb, corrupt, with_ct)
    proto = pb.build()
    application = {r.name: r.circuit for r in proto.roles}
    adversaries = {
        "BC-Alice": _adv_bc_alice(k),
        "BC-Bob": _empty(),
        "SOT-Alice": _empty(),
        "SOT-Bob": _empty(),
    }
    order = set()
    if corr is not None:
        ct_alice = application["CT-Alice"] if with_ct else build_ct_module().role("CT-Alice").circuit
        open_send = _first_send(ct_alice, bc_io(ProtocolBuilder("tmp"))["alice_open"].id)
        order.add((corr, open_send))
    name = "bias-attack" if corrupt else "honest"
    if not with_ct:
        name += "/ct"
    return Environment(name, application, adversaries, Z, frozenset(order))


def build_honest_environment(k: int) -> Environment:
    return build_bias_attack_environment(k, corrupt=False)


def build_corrupt_bob_environment(k: int) -> Environment:
    """Corrupt the receiver before anything runs and guess the committed bit from its view.

    ``Z = x XOR g`` where x is Alice's coin bit and g the guess, so Z is uniform
    whenever the commitment hides x.
    """
    _check_k(k)
    pb = ProtocolBuilder("E")
    ct_alice, ct_bob = ct_roles(pb, corruptible=False)
    app = pb.role("App", "Environment", corruptible=False)
    _z_register(app)
    creg = corruption_register("BC-Bob")
    app.registers[creg] = Register(creg)
    corr = app.emit(Xor(creg, (), const_fn(1), "corrupt"), tags={"corruption"})
    app.registers["CT-Alice.x"] = Register("CT-Alice.x")
    app.registers["Adv(BC-Bob).g"] = Register("Adv(BC-Bob).g")
    zgate = app.emit(Xor(Z, ("CT-Alice.x", "Adv(BC-Bob).g"), xor_fn, "xor"))
    proto = pb.build()
    application = {r.name: r.circuit for r in proto.roles}

    apb = ProtocolBuilder("adv")
    sio = sot_io(apb, k)
    bio = bc_io(apb)
    adv = apb.role(adversary_name("BC-Bob"), corruptible=False)
    s0 = adv.pick("s0", k)
    adv.send(sio["bob_s0"], s0)
    s1 = adv.pick("s1", k)
    adv.send(sio["bob_s1"], s1)
    (ok,) = adv.recv(sio["bob_ok"], "OK")
    adv.send(bio["bob_ok"], ok)
    adv.assign("g", 1, lambda s: s & np.uint64(1), [s0], label="lsb")
    adv_circuit = make_adversarial(adv.build().circuit, creg)
    guess_gate = adv_circuit.gates[-1].id

    ct_a = application["CT-Alice"]
    ct_b = application["CT-Bob"]
    x_gate = next(g.id for g in ct_a.gates if g.writes("CT-Alice.x"))
    order = {
        (corr, ct_a.topological[0]),
        (corr, ct_b.topological[0]),
        (corr, "BC-Bob/000"),
        (x_gate, zgate),
        (guess_gate, zgate),
    }
    adversaries = {"BC-Bob": adv_circuit, "BC-Alice": _empty(), "SOT-Alice": _empty(), "SOT-Bob": _empty()}
    return Environment("corrupt-bob", application, adversaries, Z, frozenset(order))


def build_ct_environment() -> Environment:
    """Honest application for the coin-tossing protocol alone: Z = 0 iff Bob's coin is 0."""
    pb = ProtocolBuilder("E")
    io = ct_io(pb)
    app = pb.role("App", "Environment", corruptible=False)
    _z_register(app)
    app.recv(io["alice_w"], "wA")
    (wb,) = app.recv(io["bob_w"], "wB")
    app.emit(Xor(Z, (wb,), neq_const_fn(0), "nonzero"))
    return Environment("ct-honest", {"App": app.build().circuit}, {}, Z)


STDLIB_ENVIRONMENTS = {
    "bias-attack": build_bias_attack_environment,
    "honest": build_honest_environment,
    "corrupt-bob": build_corrupt_bob_environment,
}
