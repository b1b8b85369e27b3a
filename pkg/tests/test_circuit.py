import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucsim.circuit import (
    QUANTUM,
    Circuit,
    CircuitBuilder,
    CircuitError,
    ClassicalPermutation,
    Controlled,
    CycleError,
    Gate,
    Measurement,
    MissingControl,
    Register,
    Unitary,
    UnorderedConflict,
    Xor,
    active_complexity,
    canonical_schedule,
    compose_circuits,
    const_fn,
    copy_fn,
    hadamard,
    is_linear_extension,
    random_linear_extension,
    swap,
    union,
    validate_circuit,
    xor_const_fn,
)
from ucsim.protocol import make_corruptible


def flip(gid, reg, after=()):
    return Gate(gid, Xor(reg, (), const_fn(1), "const1"))


def chain(ids, reg="R"):
    b = CircuitBuilder({reg: Register(reg)})
    prev = []
    for gid in ids:
        b.add(gid, Xor(reg, (), const_fn(1), "const1"), after=prev)
        prev = [gid]
    return b.build()


def inc_perm(reg):
    return ClassicalPermutation((reg,), (), lambda x: ((x + np.uint64(1)) & np.uint64(3),), "inc")


def lex_least_extension(c):
    ids = sorted(g.id for g in c.gates)
    for perm in itertools.permutations(ids):
        if is_linear_extension(c, perm):
            return list(perm)


# validate_circuit


def test_empty_circuit_is_valid():
    assert validate_circuit(Circuit()).ok


def test_unordered_permutations_on_one_register_conflict():
    regs = {"R": Register("R", width=2)}
    c = Circuit((Gate("a", inc_perm("R")), Gate("b", inc_perm("R"))), frozenset(), regs)
    r = validate_circuit(c)
    assert r.kinds() == {"unordered conflict"}
    assert r.violations[0].register == "R"


def test_measurement_into_written_register_is_not_fresh():
    regs = {"q": Register("q", QUANTUM), "m": Register("m")}
    c = Circuit(
        (Gate("a", Xor("m", (), const_fn(1), "const1")), Gate("b", Measurement("q", "m"))),
        frozenset({("a", "b")}),
        regs,
    )
    assert "non-fresh outcome" in validate_circuit(c).kinds()


def test_read_read_on_a_control_needs_no_order():
    regs = {"c": Register("c"), "x": Register("x"), "y": Register("y")}
    g1 = Gate("a", Controlled("c", 1, Xor("x", (), const_fn(1), "const1")))
    g2 = Gate("b", Controlled("c", 1, Xor("y", (), const_fn(1), "const1")))
    assert validate_circuit(Circuit((g1, g2), frozenset(), regs)).ok


def test_opposite_polarity_gates_never_conflict():
    regs = {"c": Register("c"), "x": Register("x")}
    g1 = Gate("a", Controlled("c", 0, Xor("x", (), const_fn(1), "const1")))
    g2 = Gate("b", Controlled("c", 1, Xor("x", (), const_fn(1), "const1")))
    assert validate_circuit(Circuit((g1, g2), frozenset(), regs)).ok


def test_cycle_is_reported():
    c = chain(["a", "b"])
    c = Circuit(c.gates, c.order | {("b", "a")}, c.registers)
    assert "cycle" in validate_circuit(c).kinds()
    with pytest.raises(CycleError):
        canonical_schedule(c)


def test_non_unitary_matrix_is_rejected():
    regs = {"q": Register("q", QUANTUM)}
    c = Circuit((Gate("u", Unitary(("q",), np.array([[1, 1], [0, 1]], dtype=complex))),), frozenset(), regs)
    assert "bad unitary" in validate_circuit(c).kinds()


def test_non_bijective_permutation_is_rejected():
    regs = {"x": Register("x", width=2)}
    op = ClassicalPermutation(("x",), (), lambda x: (x & np.uint64(1),), "squash")
    assert "bad permutation" in validate_circuit(Circuit((Gate("p", op),), frozenset(), regs)).kinds()


def test_undeclared_register_is_reported():
    c = Circuit((flip("a", "nowhere"),), frozenset(), {})
    assert "unknown register" in validate_circuit(c).kinds()


# active_complexity


def test_five_unconditioned_gates_count_five():
    assert active_complexity(chain(["a", "b", "c", "d", "e"]), {}) == 5


def test_identity_body_is_not_counted():
    regs = {"c": Register("c"), "x": Register("x")}
    c = Circuit((Gate("a", Controlled("c", 1, Xor("x", (), const_fn(0), "const0"))),), frozenset(), regs)
    assert active_complexity(c, {"c": 1}) == 0


def test_corrupted_circuit_has_no_active_gates():
    c = make_corruptible(chain(["a", "b", "c"]), "C[r]")
    assert active_complexity(c, {"C[r]": 1}) == 0
    assert active_complexity(c, {"C[r]": 0}) == 3


def test_missing_control_value_raises():
    c = make_corruptible(chain(["a"]), "C[r]")
    with pytest.raises(MissingControl):
        active_complexity(c, {})


# canonical_schedule


def test_chain_schedule():
    assert canonical_schedule(chain(["g1", "g2", "g3"])) == ["g1", "g2", "g3"]


def test_independent_gates_sorted_by_id():
    regs = {"x": Register("x"), "y": Register("y")}
    c = Circuit((flip("g2", "x"), flip("g1", "y")), frozenset(), regs)
    assert canonical_schedule(c) == ["g1", "g2"]


def test_diamond_schedule_is_lexicographically_least_extension():
    regs = {"x": Register("x"), "y": Register("y"), "z": Register("z")}
    gates = (flip("g4", "x"), flip("g3", "y"), flip("g2", "z"), flip("g1", "x"))
    order = frozenset({("g1", "g2"), ("g1", "g3"), ("g2", "g4"), ("g3", "g4")})
    c = Circuit(gates, order, regs)
    assert canonical_schedule(c) == lex_least_extension(c) == ["g1", "g2", "g3", "g4"]


# compose_circuits


def test_disjoint_compose():
    a = chain(["a1", "a2"], "A")
    b = chain(["b1"], "B")
    c = compose_circuits(a, b)
    assert len(c) == 3 and set(c.registers) == {"A", "B"}


def test_shared_write_without_order_raises():
    with pytest.raises(UnorderedConflict) as info:
        compose_circuits(chain(["a"]), chain(["b"]))
    assert info.value.pairs[0][2] == "R"


def test_shared_write_with_order_is_fine():
    c = compose_circuits(chain(["a"]), chain(["b"]), extra_order={("a", "b")})
    assert validate_circuit(c).ok


def test_duplicate_gate_ids_rejected():
    with pytest.raises(CircuitError):
        union(chain(["a"]), chain(["a"], "S"))


def test_mismatched_register_shapes_rejected():
    a = Circuit((), frozenset(), {"R": Register("R")})
    b = Circuit((), frozenset(), {"R": Register("R", width=2)})
    with pytest.raises(CircuitError):
        union(a, b)


def test_swap_classical_and_quantum():
    assert swap(Register("a", width=2), Register("b", width=2)).signature()[0] == "perm"
    assert swap(Register("p", QUANTUM), Register("q", QUANTUM)).signature()[0] == "unitary"
    with pytest.raises(CircuitError):
        swap(Register("a"), Register("q", QUANTUM))


def test_register_shape_checks():
    with pytest.raises(ValueError):
        Register("q", QUANTUM, width=2)
    with pytest.raises(ValueError):
        Register("x", width=1, initial=2)


# properties


@st.composite
def random_dags(draw, max_gates=8):
    n = draw(st.integers(1, max_gates))
    ids = [f"g{i}" for i in range(n)]
    edges = set()
    for j in range(n):
        for i in range(j):
            if draw(st.booleans()):
                edges.add((ids[i], ids[j]))
    regs = {f"r{i}": Register(f"r{i}") for i in range(n)}
    gates = tuple(flip(g, f"r{i}") for i, g in enumerate(ids))
    perm = draw(st.permutations(range(n)))
    gates = tuple(gates[p] for p in perm)
    return Circuit(gates, frozenset(edges), regs)


@given(random_dags(), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_schedules_are_linear_extensions(c, seed):
    assert is_linear_extension(c, canonical_schedule(c))
    rng = np.random.Generator(np.random.PCG64(seed))
    assert is_linear_extension(c, random_linear_extension(c, rng))


@given(random_dags(6))
@settings(max_examples=40, deadline=None)
def test_canonical_schedule_matches_brute_force(c):
    assert canonical_schedule(c) == lex_least_extension(c)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_compose_is_associative(na, nb, nc):
    a = chain([f"a{i}" for i in range(na)], "A")
    b = chain([f"b{i}" for i in range(nb)], "B")
    c = chain([f"c{i}" for i in range(nc)], "C")
    extra = {("a0", "b0"), ("b0", "c0")}
    left = compose_circuits(compose_circuits(a, b, extra_order={("a0", "b0")}), c, extra_order={("b0", "c0")})
    right = compose_circuits(a, compose_circuits(b, c, extra_order={("b0", "c0")}), extra_order={("a0", "b0")})
    flat = compose_circuits(a, b, c, extra_order=extra)
    assert left.signature() == right.signature() == flat.signature()


@given(st.lists(st.integers(0, 3), min_size=1, max_size=8))
@settings(max_examples=40, deadline=None)
def test_corruption_silences_every_gate(values):
    b = CircuitBuilder({"x": Register("x", width=2), "q": Register("q", QUANTUM), "m": Register("m")})
    prev = []
    for i, v in enumerate(values):
        prev = [b.add(f"g{i}", Xor("x", (), const_fn(v), f"const{v}"), after=prev)]
    prev = [b.add("h", hadamard("q"), after=prev)]
    b.add("meas", Measurement("q", "m"), after=prev)
    c = make_corruptible(b.build(), "C[r]")
    assert active_complexity(c, {"C[r]": 1}) == 0


def test_copy_and_xor_const_helpers():
    x = np.array([0, 1, 2, 3], dtype=np.uint64)
    assert list(copy_fn(x)) == [0, 1, 2, 3]
    assert list(xor_const_fn(1)(x)) == [1, 0, 3, 2]
