import itertools

import numpy as np
import pytest

from ucsim.circuit import Circuit, Gate, Register, Xor, const_fn
from ucsim.engine import run_exact
from ucsim.protocol import (
    EMPTY_SIMULATOR,
    Environment,
    InvalidSimulator,
    ProtocolBuilder,
    bind_overall_setting,
    make_adversarial,
)
from ucsim.security import SecurityExperiment, distinguishing_advantage
from ucsim.stdlib import (
    BOTTOM,
    build_bc,
    build_bc_simulator,
    build_bias_attack_environment,
    build_ct,
    build_ct_environment,
    build_ideal_bc,
    build_ideal_ct,
    build_ideal_sot,
    build_real_sot,
    build_real_sot_simulator,
    stdlib_settings,
    xor_bottom_fn,
)
from ucsim.stdlib.protocols import bc_open_channel

from helpers import sot_driver


# oblivious transfer


@pytest.mark.parametrize("build", [build_ideal_sot, build_real_sot])
def test_sot_honest_run(build):
    p = build(3)
    d = run_exact(bind_overall_setting(sot_driver(p, 0b000, 0b111, 1), p), ["App.shat", "App.ok"])
    assert d.as_dict() == {(0b111, 1): 1.0}
    d = run_exact(bind_overall_setting(sot_driver(p, 0b000, 0b111, 0), p), ["App.shat"])
    assert d.as_dict() == {0b000: 1.0}


def test_real_sot_is_correct_on_all_inputs():
    k = 2
    p = build_real_sot(k)
    for s0, s1, c in itertools.product(range(4), range(4), range(2)):
        d = run_exact(bind_overall_setting(sot_driver(p, s0, s1, c), p), ["App.shat"])
        assert d.as_dict() == {(s1 if c else s0): 1.0}


def alice_view(p):
    return sorted(
        r
        for r in p.circuit.registers
        if r.startswith("SOT-Alice.") or (r in p.channel_registers and "SOT-Alice" in p.endpoints(p.channel_registers[r].id))
    )


@pytest.mark.parametrize("build", [build_ideal_sot, build_real_sot])
def test_alice_view_independent_of_other_string(build):
    k = 2
    p = build(k)
    view = [r for r in alice_view(p) if "#" not in r]
    for c, known in itertools.product(range(2), range(4)):
        dists = []
        for other in range(4):
            s = (known, other) if c == 0 else (other, known)
            dists.append(run_exact(bind_overall_setting(sot_driver(p, *s, c), p), view))
        assert all(d.close_to(dists[0], 1e-12) for d in dists[1:])


# bit commitment


def bc_driver(p, x, adversary=None):
    pb = ProtocolBuilder("E", known_channels=p.channels)
    app = pb.role("App", corruptible=False)
    app.registers["Z"] = Register("Z")
    app.send(p.channel("BC-Alice<in0"), x)
    app.recv(p.channel("BC-Bob>out0"), "ok")
    adversaries = {}
    if adversary is not None:
        app.registers["C[BC-Alice]"] = Register("C[BC-Alice]")
        app.emit(Xor("C[BC-Alice]", (), const_fn(1), "const1"))
        adversaries["BC-Alice"] = adversary
    app.send(p.channel("BC-Alice<in1"), 0)
    app.recv(p.channel("BC-Bob>out1"), "xhat")
    return Environment("bc-driver", {"App": app.build().circuit}, adversaries, "Z")


def opening_adversary(k, flip_bit, wrong_string):
    pb = ProtocolBuilder("adv")
    adv = pb.role("Adv(BC-Alice)", corruptible=False)
    adv.registers["BC-Alice.x"] = Register("BC-Alice.x")
    adv.registers["BC-Alice.shat"] = Register("BC-Alice.shat", width=k)
    if wrong_string:
        t = adv.assign("t", k, lambda s: s ^ np.uint64(1), ["BC-Alice.shat"], label="flip")
    else:
        t = adv.pick("t", k)
    xp = adv.assign("xp", 1, lambda x: x ^ np.uint64(flip_bit), ["BC-Alice.x"], label=f"flip{flip_bit}")
    adv.send(bc_open_channel(k), xp, t)
    return make_adversarial(adv.build().circuit, "C[BC-Alice]")


@pytest.mark.parametrize("x", [0, 1])
def test_bc_honest_open(x):
    p = build_bc(2)
    d = run_exact(bind_overall_setting(bc_driver(p, x), p), ["App.ok", "App.xhat"])
    assert d.as_dict() == {(1, x): 1.0}


def test_bc_wrong_string_aborts():
    k = 2
    p = build_bc(k)
    e = bc_driver(p, 1, opening_adversary(k, flip_bit=0, wrong_string=True))
    assert run_exact(bind_overall_setting(e, p), ["App.xhat"]).as_dict() == {BOTTOM: 1.0}


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_bc_forgery_succeeds_with_two_to_minus_k(k):
    p = build_bc(k)
    e = bc_driver(p, 0, opening_adversary(k, flip_bit=1, wrong_string=False))
    d = run_exact(bind_overall_setting(e, p), ["App.xhat"])
    assert d[1] == pytest.approx(2.0**-k, abs=1e-12)
    assert d[BOTTOM] == pytest.approx(1 - 2.0**-k, abs=1e-12)


def bob_view(p, roles):
    out = []
    for r in p.circuit.registers:
        if "#" in r:
            continue
        if any(r.startswith(f"{role}.") for role in roles):
            out.append(r)
        elif r in p.channel_registers and set(roles) & p.endpoints(p.channel_registers[r].id):
            out.append(r)
    return sorted(out)


def commit_only_driver(p, x):
    pb = ProtocolBuilder("E", known_channels=p.channels)
    app = pb.role("App", corruptible=False)
    app.registers["Z"] = Register("Z")
    app.send(p.channel("BC-Alice<in0"), x)
    app.recv(p.channel("BC-Bob>out0"), "ok")
    return Environment("commit", {"App": app.build().circuit}, {}, "Z")


def test_concealment_analyzed_side():
    p = build_bc(2)
    view = bob_view(p, ["BC-Bob"]) + ["App.ok"]
    d0, d1 = (run_exact(bind_overall_setting(commit_only_driver(p, x), p), view) for x in (0, 1))
    assert d0.close_to(d1, 1e-12)


def test_concealment_ideal_side():
    ideal = build_ideal_bc(2)
    view = bob_view(ideal, ["I(BC-Bob)", "I(Auxiliary)"]) + ["App.ok"]
    d0, d1 = (
        run_exact(bind_overall_setting(commit_only_driver(ideal, x), ideal=ideal, simulator=EMPTY_SIMULATOR), view)
        for x in (0, 1)
    )
    assert d0.close_to(d1, 1e-12)


def test_ideal_bc_committer_abort():
    ideal = build_ideal_bc(2)
    pb = ProtocolBuilder("adv", known_channels=ideal.channels)
    adv = pb.role("Adv(BC-Alice)", corruptible=False)
    adv.send(ideal.channel("I(BC-Alice)>BC-Charlie:in0"), 1)
    adv.send(ideal.channel("I(BC-Alice)>BC-Charlie:in1"), BOTTOM)
    adversary = make_adversarial(adv.build().circuit, "C[BC-Alice]")
    app = ProtocolBuilder("E", known_channels=ideal.channels).role("App", corruptible=False)
    app.registers["Z"] = Register("Z")
    app.registers["C[BC-Alice]"] = Register("C[BC-Alice]")
    app.emit(Xor("C[BC-Alice]", (), const_fn(1), "const1"))
    app.recv(ideal.channel("BC-Bob>out1"), "xhat")
    e = Environment("abort", {"App": app.build().circuit}, {"BC-Alice": adversary}, "Z")
    c = bind_overall_setting(e, ideal=ideal, simulator=EMPTY_SIMULATOR)
    assert run_exact(c, ["App.xhat"]).as_dict() == {BOTTOM: 1.0}


# coin tossing


def test_ct_honest_run_agrees_and_is_uniform():
    k = 2
    e = build_bias_attack_environment(k, corrupt=False)
    d = run_exact(bind_overall_setting(e, build_bc(k)), ["App.wA", "App.wB"])
    assert d.as_dict() == pytest.approx({(0, 0): 0.5, (1, 1): 0.5}, abs=1e-12)


def test_bottom_propagates_to_bob_coin():
    e = build_bias_attack_environment(1)
    d = run_exact(bind_overall_setting(e, build_bc(1)), ["CT-Bob.xhat", "CT-Bob.wB"])
    assert d[(BOTTOM, BOTTOM)] > 0
    assert all(wb == BOTTOM for (xh, wb) in d.support() if xh == BOTTOM)


def test_xor_bottom():
    a = np.array([0, 1, BOTTOM, 1], dtype=np.uint64)
    b = np.array([1, 1, 0, BOTTOM], dtype=np.uint64)
    assert list(xor_bottom_fn(a, b)) == [1, 0, BOTTOM, BOTTOM]


def test_ideal_ct_is_fair():
    e = build_ct_environment()
    d = run_exact(bind_overall_setting(e, ideal=build_ideal_ct(), simulator=EMPTY_SIMULATOR), ["Z"])
    assert d.as_dict() == pytest.approx({0: 0.5, 1: 0.5}, abs=1e-12)


def test_real_ct_honest_is_fair():
    d = run_exact(bind_overall_setting(build_ct_environment(), build_ct(build_bc(3))), ["Z"])
    assert d.as_dict() == pytest.approx({0: 0.5, 1: 0.5}, abs=1e-12)


# attack environment and simulators


@pytest.mark.parametrize("k", range(1, 9))
def test_bias_formula(k):
    d = run_exact(bind_overall_setting(build_bias_attack_environment(k), build_bc(k)), ["Z"])
    assert d[0] == pytest.approx((1 + 2.0**-k) / 2, abs=1e-12)


def test_bias_against_ideal_is_fair():
    k = 3
    e = build_bias_attack_environment(k)
    c = bind_overall_setting(e, ideal=build_ideal_bc(k), simulator=build_bc_simulator(e, k))
    assert run_exact(c, ["Z"])[0] == pytest.approx(0.5, abs=1e-12)


def test_bias_without_corruption_is_fair():
    d = run_exact(bind_overall_setting(build_bias_attack_environment(3, corrupt=False), build_bc(3)), ["Z"])
    assert d[0] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("k", [1, 3])
def test_every_stdlib_setting_hits_its_advantage(k):
    for s in stdlib_settings(k):
        r = distinguishing_advantage(SecurityExperiment(s.protocol, s.ideal, s.simulator, s.environment, k))
        assert r.advantage == pytest.approx(s.expected_advantage, abs=1e-12), s.name


def sot_corrupting_environment():
    regs = {"Z": Register("Z"), "C[SOT-Alice]": Register("C[SOT-Alice]")}
    app = Circuit((Gate("App/000", Xor("C[SOT-Alice]", (), const_fn(1), "const1")),), frozenset(), regs)
    return Environment("sot-corrupt", {"App": app}, {}, "Z")


def test_simulators_reject_ot_corruption():
    e = sot_corrupting_environment()
    with pytest.raises(InvalidSimulator):
        build_bc_simulator(e, 2)
    with pytest.raises(InvalidSimulator):
        build_real_sot_simulator(e, 2)


def test_security_parameter_range():
    with pytest.raises(ValueError):
        build_bc(0)
    with pytest.raises(ValueError):
        build_ideal_sot(25)
