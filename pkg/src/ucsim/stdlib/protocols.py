"""Oblivious transfer, bit commitment and coin tossing as circuits.

Values: strings are ``k``-bit integers, ``BOTTOM`` (2) encodes a failed
opening in 2-bit registers, and ``"ok"``/``"open"`` are the constant 1.
"""

from __future__ import annotations

import numpy as np

from ..circuit import const_fn, eq_fn, select_fn, xor_fn
from ..protocol import (
    AUTHENTICATED,
    IdealProtocol,
    Protocol,
    ProtocolBuilder,
    compose_protocols,
    internal_channel_id,
    make_channel,
    make_dummy_ideal,
    ChannelType,
)

BOTTOM = 2

SOT_ROLES = ("SOT-Alice", "SOT-Bob")
BC_ROLES = ("BC-Alice", "BC-Bob")
CT_ROLES = ("CT-Alice", "CT-Bob")


def xor_bottom_fn(*xs):
    """XOR in which any operand equal to BOTTOM yields BOTTOM."""
    out = xor_fn(*xs)
    bad = np.zeros(np.broadcast(*xs).shape, dtype=bool)
    for x in xs:
        bad = bad | (x == np.uint64(BOTTOM))
    return np.where(bad, np.uint64(BOTTOM), out).astype(np.uint64)


def is_bottom_fn(x):
    return (x == np.uint64(BOTTOM)).astype(np.uint64)


def _check_k(k: int):
    if not isinstance(k, (int, np.integer)) or k < 1 or k > 24:
        raise ValueError(f"security parameter k must be an integer in 1..24, got {k!r}")


def sot_io(pb: ProtocolBuilder, k: int) -> dict:
    return {
        "bob_s0": pb.input_channel("SOT-Bob", 0, [("s0", k)]),
        "bob_s1": pb.input_channel("SOT-Bob", 1, [("s1", k)]),
        "bob_ok": pb.output_channel("SOT-Bob", 0, [("OK", 1)]),
        "alice_c": pb.input_channel("SOT-Alice", 0, [("c", 1)]),
        "alice_s": pb.output_channel("SOT-Alice", 0, [("shat", k)]),
    }


def bc_io(pb: ProtocolBuilder) -> dict:
    return {
        "alice_x": pb.input_channel("BC-Alice", 0, [("x", 1)]),
        "alice_open": pb.input_channel("BC-Alice", 1, [("FOO", 1)]),
        "bob_ok": pb.output_channel("BC-Bob", 0, [("OK", 1)]),
        "bob_xhat": pb.output_channel("BC-Bob", 1, [("xhat", 2)]),
    }


def bc_open_channel(k: int):
    """The committer's opening message (x, s_hat), public but authenticated."""
    cid = internal_channel_id("BC-Alice", "BC-Bob", "x,shat")
    return make_channel(cid, "BC-Alice", "BC-Bob", [("x", 1), ("shat", k)], ChannelType(security=AUTHENTICATED))


def ct_io(pb: ProtocolBuilder) -> dict:
    return {
        "alice_w": pb.output_channel("CT-Alice", 0, [("value", 1)]),
        "bob_w": pb.output_channel("CT-Bob", 0, [("value", 2)]),
    }


# ---------------------------------------------------------------------------
# Oblivious transfer


def build_ideal_sot(k: int) -> Protocol:
    """Trusted-party string OT: Bob inputs s[0], s[1]; Alice inputs c and learns s[c]."""
    _check_k(k)
    pb = ProtocolBuilder("SOT")
    io = sot_io(pb, k)
    ch_s0 = pb.channel("SOT-Bob", "SOT-Charlie", "s0", [("s0", k)])
    ch_s1 = pb.channel("SOT-Bob", "SOT-Charlie", "s1", [("s1", k)])
    ch_c = pb.channel("SOT-Alice", "SOT-Charlie", "c", [("c", 1)])
    ch_ok = pb.channel("SOT-Charlie", "SOT-Bob", "OK", [("OK", 1)])
    ch_s = pb.channel("SOT-Charlie", "SOT-Alice", "shat", [("shat", k)])

    bob = pb.role("SOT-Bob", "Bob")
    (s0,) = bob.recv(io["bob_s0"], "s0")
    bob.send(ch_s0, s0)
    (s1,) = bob.recv(io["bob_s1"], "s1")
    bob.send(ch_s1, s1)

    charlie = pb.role("SOT-Charlie", "Charlie", corruptible=False)
    cs0, cs1 = charlie.recv(ch_s0, "s0")[0], charlie.recv(ch_s1, "s1")[0]

    alice = pb.role("SOT-Alice", "Alice")
    (c,) = alice.recv(io["alice_c"], "c")
    alice.send(ch_c, c)

    (cc,) = charlie.recv(ch_c, "c")
    ok = charlie.assign("OK", 1, const_fn(1), label="const1")
    charlie.send(ch_ok, ok)

    (bok,) = bob.recv(ch_ok, "OK")
    bob.send_output(("OK", bok, 1))

    shat = charlie.assign("shat", k, select_fn, [cc, cs0, cs1], label="select")
    charlie.send(ch_s, shat)

    (ashat,) = alice.recv(ch_s, "shat")
    alice.send_output(("shat", ashat, k))
    return pb.build(trusted=["SOT-Charlie"])


def build_real_sot(k: int) -> Protocol:
    """OT from a dealer's precomputed random OT instance.

    The dealer gives Bob (r[0], r[1]) and Alice (d, r[d]).  Alice announces
    e = c XOR d, Bob answers f[i] = s[i] XOR r[i XOR e] and Alice outputs
    f[c] XOR r[d] = s[c].
    """
    _check_k(k)
    pb = ProtocolBuilder("RealSOT")
    io = sot_io(pb, k)
    ch_r = pb.channel("Dealer", "SOT-Bob", "r", [("r0", k), ("r1", k)])
    ch_d = pb.channel("Dealer", "SOT-Alice", "d", [("d", 1), ("rd", k)])
    ch_e = pb.channel("SOT-Alice", "SOT-Bob", "e", [("e", 1)], security=AUTHENTICATED)
    ch_f = pb.channel("SOT-Bob", "SOT-Alice", "f", [("f0", k), ("f1", k)], security=AUTHENTICATED)

    dealer = pb.role("Dealer", "Dealer", corruptible=False)
    r0 = dealer.pick("r0", k)
    r1 = dealer.pick("r1", k)
    d = dealer.pick("d", 1)
    dealer.send(ch_r, r0, r1)
    rd = dealer.assign("rd", k, select_fn, [d, r0, r1], label="select")
    dealer.send(ch_d, d, rd)

    bob = pb.role("SOT-Bob", "Bob")
    (s0,) = bob.recv(io["bob_s0"], "s0")
    (s1,) = bob.recv(io["bob_s1"], "s1")
    br0, br1 = bob.recv(ch_r, "r0", "r1")

    alice = pb.role("SOT-Alice", "Alice")
    (c,) = alice.recv(io["alice_c"], "c")
    ad, ard = alice.recv(ch_d, "d", "rd")
    e = alice.assign("e", 1, xor_fn, [c, ad], label="xor")
    alice.send(ch_e, e)

    (be,) = bob.recv(ch_e, "e")
    ok = bob.assign("OK", 1, const_fn(1), label="const1")
    bob.send_output(("OK", ok, 1))
    f0 = bob.assign("f0", k, lambda s, e_, a, b: s ^ select_fn(e_, a, b), [s0, be, br0, br1], label="mask0")
    f1 = bob.assign("f1", k, lambda s, e_, a, b: s ^ select_fn(e_ ^ np.uint64(1), a, b), [s1, be, br0, br1], label="mask1")
    bob.send(ch_f, f0, f1)

    af0, af1 = alice.recv(ch_f, "f0", "f1")
    shat = alice.assign("shat", k, lambda c_, a, b, r: select_fn(c_, a, b) ^ r, [c, af0, af1, ard], label="unmask")
    alice.send_output(("shat", shat, k))
    return pb.build(trusted=["Dealer"])


# ---------------------------------------------------------------------------
# Bit commitment


def build_bc_module(k: int, sot: Protocol | None = None) -> Protocol:
    """The two commitment roles, calling an OT protocol with the same interface."""
    _check_k(k)
    known = list(sot.channels) if sot is not None else []
    pb = ProtocolBuilder("BC", known_channels=known)
    sio = sot_io(pb, k)
    io = bc_io(pb)
    ch_open = pb._declare(bc_open_channel(k))

    alice = pb.role("BC-Alice", "Alice")
    (x,) = alice.recv(io["alice_x"], "x")
    alice.send(sio["alice_c"], x)

    bob = pb.role("BC-Bob", "Bob")
    s0 = bob.pick("s0", k)
    bob.send(sio["bob_s0"], s0)
    s1 = bob.pick("s1", k)
    bob.send(sio["bob_s1"], s1)

    (shat,) = alice.recv(sio["alice_s"], "shat")

    (ok,) = bob.recv(sio["bob_ok"], "OK")
    bob.send_output(("OK", ok, 1))

    alice.recv(io["alice_open"], "FOO")
    alice.send(ch_open, x, shat)

    bx, bs = bob.recv(ch_open, "x", "shat")
    sel = bob.assign("sel", k, select_fn, [bx, s0, s1], label="select")
    eq = bob.assign("eq", 1, eq_fn, [sel, bs], label="eq")
    xhat = bob.reg("xhat", 2)
    with bob.branch(eq, 1):
        bob.xor_into(xhat, [bx])
    with bob.branch(eq, 0):
        bob.xor_into(xhat, [], const_fn(BOTTOM), "bottom")
    bob.send_output(("xhat", xhat, 2))
    return pb.build()


def build_bc(k: int, sot: Protocol | None = None) -> Protocol:
    """Bit commitment on top of ``sot`` (the ideal OT by default)."""
    sot = sot if sot is not None else build_ideal_sot(k)
    return compose_protocols(f"BC[{sot.name}]", build_bc_module(k, sot), sot)


def build_ideal_bc(k: int, analyzed: Protocol | None = None) -> IdealProtocol:
    """Dummy commitment roles forwarding to a trusted party that leaks the opening event.

    The committer's opening instruction is 0/1 for "open" and ``BOTTOM`` for abort.
    """
    p = analyzed if analyzed is not None else build_bc(k)
    pb = ProtocolBuilder("I(BC)", known_channels=p.channels)
    ch_x = pb.channel("I(BC-Alice)", "BC-Charlie", "in0", [("x", 1)])
    ch_open = pb.channel("I(BC-Alice)", "BC-Charlie", "in1", [("FOO", 2)])
    ch_ok = pb.channel("BC-Charlie", "I(BC-Bob)", "out0", [("OK", 1)])
    ch_xhat = pb.channel("BC-Charlie", "I(BC-Bob)", "out1", [("xhat", 2)])
    ch_leak = pb.channel("BC-Charlie", "I(Auxiliary)", "open", [("opened", 1)], security=AUTHENTICATED)

    t = pb.role("BC-Charlie", "Charlie", corruptible=False)
    (x,) = t.recv(ch_x, "x")
    ok = t.assign("OK", 1, const_fn(1), label="const1")
    t.send(ch_ok, ok)
    (instr,) = t.recv(ch_open, "instr")
    abort = t.assign("abort", 1, is_bottom_fn, [instr], label="is_bottom")
    xhat = t.reg("xhat", 2)
    with t.branch(abort, 0):
        t.xor_into(xhat, [x])
    with t.branch(abort, 1):
        t.xor_into(xhat, [], const_fn(BOTTOM), "bottom")
    t.send(ch_xhat, xhat)
    t.send(ch_leak, 1)
    trusted = t.build()
    with_aux = Protocol(p.name, p.roles, p.channels, auxiliary="Auxiliary")
    return make_dummy_ideal(with_aux, trusted, [ch_x, ch_open, ch_ok, ch_xhat, ch_leak], name="I(BC)")


# ---------------------------------------------------------------------------
# Coin tossing


def ct_roles(pb: ProtocolBuilder, corruptible: bool = True) -> tuple:
    """Emit the two coin-tossing roles into ``pb``; they call bit commitment."""
    bio = bc_io(pb)
    ct_io(pb)  # fixes the order of the output channels
    ch_y = pb.channel("CT-Bob", "CT-Alice", "y", [("y", 1)], security=AUTHENTICATED)

    alice = pb.role("CT-Alice", "Alice", corruptible=corruptible)
    x = alice.pick("x", 1)
    alice.send(bio["alice_x"], x)

    bob = pb.role("CT-Bob", "Bob", corruptible=corruptible)
    bob.recv(bio["bob_ok"], "OK")
    y = bob.pick("y", 1)
    bob.send(ch_y, y)

    (ay,) = alice.recv(ch_y, "y")
    w = alice.assign("wA", 1, xor_fn, [x, ay], label="xor")
    alice.send_output(("value", w, 1))
    alice.send(bio["alice_open"], 1)

    (xhat,) = bob.recv(bio["bob_xhat"], "xhat")
    wb = bob.assign("wB", 2, xor_bottom_fn, [xhat, y], label="xor_bottom")
    bob.send_output(("value", wb, 2))
    return alice, bob


def build_ct_module() -> Protocol:
    pb = ProtocolBuilder("CT")
    ct_roles(pb)
    return pb.build()


def build_ct(bc: Protocol) -> Protocol:
    """Coin tossing on top of the commitment protocol ``bc``."""
    return compose_protocols(f"CT[{bc.name}]", build_ct_module(), bc)


def build_ideal_ct(analyzed: Protocol | None = None) -> IdealProtocol:
    """A trusted party hands the same uniform bit to both dummy roles."""
    p = analyzed if analyzed is not None else build_ct_module()
    pb = ProtocolBuilder("I(CT)", known_channels=p.channels)
    ch_a = pb.channel("CT-Charlie", "I(CT-Alice)", "out0", [("value", 1)])
    ch_b = pb.channel("CT-Charlie", "I(CT-Bob)", "out0", [("value", 2)])
    t = pb.role("CT-Charlie", "Charlie", corruptible=False)
    b = t.pick("b", 1)
    t.send(ch_a, b)
    t.send(ch_b, b)
    return make_dummy_ideal(p, t.build(), [ch_a, ch_b], name="I(CT)")
