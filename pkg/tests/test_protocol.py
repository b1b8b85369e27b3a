import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucsim.circuit import (
    CLASSICAL,
    QUANTUM,
    Circuit,
    CircuitBuilder,
    CircuitError,
    Gate,
    Measurement,
    Register,
    UnorderedConflict,
    Xor,
    const_fn,
    copy_fn,
    hadamard,
    xor_fn,
)
from ucsim.engine import run_exact
from ucsim.protocol import (
    AUTHENTICATED,
    EMPTY_SIMULATOR,
    HIDDEN,
    AccessRule,
    ChannelType,
    ControlClash,
    Environment,
    MissingIO,
    ProtocolBuilder,
    Simulator,
    bind_overall_setting,
    check_channel_access,
    make_adversarial,
    make_corruptible,
    make_dummy_ideal,
    validate_environment,
)
from ucsim.stdlib import (
    build_bc,
    build_bc_simulator,
    build_bias_attack_environment,
    build_ct,
    build_ct_environment,
    build_ideal_bc,
)

from helpers import CELLS, EXPECTED_RIGHTS, eavesdrop_setting


def sample_circuit():
    regs = {"q": Register("q", QUANTUM), "m": Register("m"), "x": Register("x", width=2)}
    b = CircuitBuilder(regs)
    b.add("a", hadamard("q"))
    b.add("b", Measurement("q", "m"), after=["a"])
    b.add("c", Xor("x", ("m",), copy_fn, "copy"), after=["b"])
    b.add("d", Xor("x", (), const_fn(2), "const2"), after=["c"])
    return b.build()


def with_corruption(c, value):
    regs = dict(c.registers)
    regs["C[r]"] = Register("C[r]", initial=value)
    return Circuit(c.gates, c.order, regs)


# corruption wrapping


def test_corruptible_honest_branch_unchanged():
    c = sample_circuit()
    wrapped = with_corruption(make_corruptible(c, "C[r]"), 0)
    assert run_exact(wrapped, ["m", "x"]).close_to(run_exact(c, ["m", "x"]), 0)


def test_corruptible_corrupted_branch_is_identity():
    wrapped = with_corruption(make_corruptible(sample_circuit(), "C[r]"), 1)
    d = run_exact(wrapped, ["m", "x"])
    assert d.as_dict() == {(0, 0): 1.0}


def test_adversarial_circuit_only_runs_when_corrupted():
    c = sample_circuit()
    off = with_corruption(make_adversarial(c, "C[r]"), 0)
    on = with_corruption(make_adversarial(c, "C[r]"), 1)
    assert run_exact(off, ["m", "x"]).as_dict() == {(0, 0): 1.0}
    assert run_exact(on, ["m", "x"]).close_to(run_exact(c, ["m", "x"]), 0)


def test_exactly_one_of_role_and_adversary_is_active():
    honest = make_corruptible(sample_circuit(), "C[r]")
    adv = make_adversarial(sample_circuit(), "C[r]")
    for value in (0, 1):
        h = sum(all(value == p for _, p in g.literals) for g in honest.gates)
        a = sum(all(value == p for _, p in g.literals) for g in adv.gates)
        assert {h, a} == {0, len(honest.gates)}


def test_double_wrapping_with_opposite_polarity_clashes():
    with pytest.raises(ControlClash):
        make_adversarial(make_corruptible(sample_circuit(), "C[r]"), "C[r]")


def test_corruption_register_cannot_be_written_by_the_role():
    c = Circuit((Gate("a", Xor("C[r]", (), const_fn(1), "const1")),), frozenset(), {"C[r]": Register("C[r]")})
    with pytest.raises(CircuitError):
        make_corruptible(c, "C[r]")


# ideal protocols


def table_protocol(table):
    """One role P: y = table[2x + coin] for input x."""
    pb = ProtocolBuilder("F")
    p = pb.role("P", "Pat")
    (x,) = p.receive_input(("x", 1))
    coin = p.pick("coin")
    y = p.assign("y", 1, table_fn(table), [x, coin], label=f"table{table}")
    p.send_output(("y", y, 1))
    return pb.build()


def table_fn(table):
    arr = np.array(table, dtype=np.uint64)

    def f(x, c):
        return arr[(np.asarray(x) * 2 + np.asarray(c)).astype(np.int64)]

    return f


def table_ideal(p, table):
    pb = ProtocolBuilder("T", known_channels=p.channels)
    ch_in = pb.channel("I(P)", "T", "in0", [("x", 1)])
    ch_out = pb.channel("T", "I(P)", "out0", [("y", 1)])
    t = pb.role("T", corruptible=False)
    (x,) = t.recv(ch_in, "x")
    coin = t.pick("coin")
    y = t.assign("y", 1, table_fn(table), [x, coin], label=f"table{table}")
    t.send(ch_out, y)
    return make_dummy_ideal(p, t.build(), [ch_in, ch_out]), ch_in, ch_out


def table_environment(p):
    pb = ProtocolBuilder("E", known_channels=p.channels)
    app = pb.role("App", corruptible=False)
    app.registers["Z"] = Register("Z")
    x = app.pick("x")
    app.send(p.channel("P<in0"), x)
    (y,) = app.recv(p.channel("P>out0"), "y")
    app.xor_into("Z", [x, y], xor_fn, "xor")
    return Environment("table", {"App": app.build().circuit}, {}, "Z")


def test_ideal_bc_scaffold_roles():
    ideal = build_ideal_bc(2)
    names = {r.name for r in ideal.roles}
    assert {"I(BC-Alice)", "I(BC-Bob)", "BC-Charlie"} <= names
    assert ideal.trusted == ("BC-Charlie",)
    assert ideal.dummies["BC-Alice"] == "I(BC-Alice)"


def test_empty_io_gives_trusted_alone():
    pb = ProtocolBuilder("Q")
    pb.role("Q-Solo").reg("x")
    p = pb.build()
    t = ProtocolBuilder("T").role("T", corruptible=False)
    t.assign("v", 1, const_fn(1), label="const1")
    ideal = make_dummy_ideal(p, t.build(), [])
    assert [r.name for r in ideal.roles] == ["T"]


def test_trusted_role_must_serve_every_io_channel():
    p = table_protocol([0, 0, 1, 1])
    t = ProtocolBuilder("T").role("T", corruptible=False)
    with pytest.raises(MissingIO):
        make_dummy_ideal(p, t.build(), [])


@given(st.tuples(*[st.integers(0, 1)] * 4))
@settings(max_examples=16, deadline=None)
def test_dummy_parties_are_transparent(table):
    p = table_protocol(list(table))
    ideal, _, _ = table_ideal(p, list(table))
    e = table_environment(p)
    real = run_exact(bind_overall_setting(e, p), ["Z"])
    ide = run_exact(bind_overall_setting(e, ideal=ideal, simulator=EMPTY_SIMULATOR), ["Z"])
    assert real.close_to(ide, 1e-12)


def test_corrupted_dummy_lets_adversary_talk_to_trusted_party():
    p = table_protocol([0, 0, 1, 1])
    ideal, ch_in, ch_out = table_ideal(p, [0, 0, 1, 1])
    pb = ProtocolBuilder("probe", known_channels=ideal.channels)
    app = pb.role("App", corruptible=False)
    app.registers["Z"] = Register("Z")
    app.registers["C[P]"] = Register("C[P]")
    app.emit(Xor("C[P]", (), const_fn(1), "const1"))
    adv = pb.role("Adv(P)", corruptible=False)
    adv.send(ch_in, 1)
    adv.recv(ch_out, "got")
    adversary = make_adversarial(adv.build().circuit, "C[P]")
    e = Environment("probe", {"App": app.build().circuit}, {"P": adversary}, "Z")
    c = bind_overall_setting(e, ideal=ideal, simulator=EMPTY_SIMULATOR)
    assert run_exact(c, ["Adv(P).got"]).as_dict() == {1: 1.0}


# channel rights


def test_rights_matrix_is_total():
    for medium, security in CELLS:
        assert ChannelType(medium, security).adversary_rights() == EXPECTED_RIGHTS[(medium, security)]
    assert check_channel_access(ChannelType(CLASSICAL, AUTHENTICATED), "r")
    assert not check_channel_access(ChannelType(CLASSICAL, AUTHENTICATED), "w")
    assert check_channel_access(ChannelType(CLASSICAL, HIDDEN), "w", in_name_of_endpoint=True)


@pytest.mark.parametrize("medium,security", CELLS)
@pytest.mark.parametrize("mode", ["r", "w"])
def test_rights_enforced_by_validation(medium, security, mode):
    e, p = eavesdrop_setting(medium, security, mode)
    report = validate_environment(e, p)
    rights = EXPECTED_RIGHTS[(medium, security)]
    allowed = rights in ("readwrite", "full") or (rights == "read" and mode == "r")
    if medium == QUANTUM:
        allowed = rights == "full"
    assert report.ok == allowed, report.violations
    if not allowed:
        assert report.kinds() <= {"channel access", "channel write"}


def test_authenticated_write_is_a_channel_write_violation():
    e, p = eavesdrop_setting(CLASSICAL, AUTHENTICATED, "w")
    assert validate_environment(e, p).kinds() == {"channel write"}


def test_hidden_read_is_a_channel_access_violation():
    e, p = eavesdrop_setting(CLASSICAL, HIDDEN, "r")
    assert validate_environment(e, p).kinds() == {"channel access"}


def test_endpoint_adversary_may_write_authenticated_channel():
    e, p = eavesdrop_setting(CLASSICAL, AUTHENTICATED, "w", acting_for="S")
    assert validate_environment(e, p).ok


def test_honest_ct_environment_is_valid():
    assert validate_environment(build_ct_environment(), build_ct(build_bc(2))).ok


def test_bias_environment_is_valid():
    assert validate_environment(build_bias_attack_environment(2), build_bc(2)).ok


def test_access_rule():
    rule = AccessRule.at_most(["A", "B", "C"], 1)
    assert rule.permits([]) and rule.permits(["B"])
    assert not rule.permits(["A", "B"])
    e = build_bias_attack_environment(2)
    report = validate_environment(e, build_bc(2), AccessRule.of([["BC-Bob"]]))
    assert report.kinds() == {"access rule"}


# overall settings


def test_real_and_ideal_settings_bind():
    k = 3
    e = build_bias_attack_environment(k)
    real = bind_overall_setting(e, build_bc(k))
    ideal = bind_overall_setting(e, ideal=build_ideal_bc(k), simulator=build_bc_simulator(e, k))
    assert len(real.gates) > 0 and len(ideal.gates) > 0


def test_simulator_conflicting_with_application_raises():
    k = 2
    e = build_bias_attack_environment(k)
    bad = Circuit((Gate("Sym/bad", Xor("Z", (), const_fn(1), "const1")),), frozenset(), {"Z": Register("Z")})
    with pytest.raises(UnorderedConflict):
        bind_overall_setting(e, ideal=build_ideal_bc(k), simulator=Simulator({"bad": bad}))
