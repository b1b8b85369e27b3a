import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucsim.circuit import validate_circuit
from ucsim.composition import (
    EpsilonLedger,
    LedgerEntry,
    ProtocolDag,
    ProtocolTree,
    SecurityCertificate,
    TreeError,
    bottom_up_order,
    build_tilde,
    compose_bottom_up,
    corrupted_roles,
    dag_to_tree,
    preorder,
)
from ucsim.protocol import ChannelMismatch, EMPTY_SIMULATOR
from ucsim.stdlib import (
    bc_certificate,
    bc_certificates,
    bc_tree,
    build_bc,
    build_bias_attack_environment,
    build_corrupt_bob_environment,
    build_ct_environment,
    build_honest_environment,
    build_ideal_sot,
    ct_certificates,
    ct_tree,
)


# trees


def test_tree_validation():
    with pytest.raises(TreeError):
        ProtocolTree("A", {"A": ["B", "C"], "B": ["D"], "C": ["D"]})
    with pytest.raises(TreeError):
        ProtocolTree("A", {"A": ["B"], "X": ["Y"]})


def test_bottom_up_is_reverse_preorder():
    t = ProtocolTree("R", {"R": ["b", "a"], "a": ["c"]})
    assert preorder(t) == ["R", "a", "c", "b"]
    assert bottom_up_order(t) == ["b", "c", "a", "R"]


def test_leaf_tilde_is_its_module():
    k = 2
    t = bc_tree(k)
    assert build_tilde(t, "RealSOT", bc_certificates(k)).circuit.signature() == t.modules["RealSOT"].circuit.signature()


def test_bc_tilde_is_the_analyzed_bc():
    k = 2
    tilde = build_tilde(bc_tree(k), "BC", bc_certificates(k))
    assert tilde.circuit.signature() == build_bc(k).circuit.signature()


def test_ct_tilde_is_ct_over_ideal_bc():
    k = 2
    tilde = build_tilde(ct_tree(k), "CT", ct_certificates(k))
    names = {r.name for r in tilde.roles}
    assert {"CT-Alice", "CT-Bob", "BC-Charlie", "I(BC-Alice)"} <= names
    assert validate_circuit(tilde.circuit).ok


def test_mismatched_ideal_is_rejected():
    k = 2
    certs = bc_certificates(k)
    certs["RealSOT"] = SecurityCertificate("RealSOT", build_ideal_sot(k + 1), lambda e: EMPTY_SIMULATOR, lambda n, s=0: 0.0)
    with pytest.raises(ChannelMismatch):
        build_tilde(bc_tree(k), "BC", certs)


# bottom-up composition


def test_single_node_ledger():
    k = 2
    t = ProtocolTree("BC", {}, {"BC": build_bc(k)})
    res = compose_bottom_up(t, {"BC": bc_certificate(k)}, build_bias_attack_environment(k), n=k)
    assert res.ledger.total == 2.0 ** -(k + 1)
    assert res.end_to_end.advantage == pytest.approx(2.0 ** -(k + 1), abs=1e-12)


def test_ct_chain_bias_k3():
    k = 3
    res = compose_bottom_up(ct_tree(k), ct_certificates(k), build_bias_attack_environment(k, with_ct=False), n=k)
    assert [e.node for e in res.ledger.entries] == ["RealSOT", "BC", "CT"]
    assert res.ledger.total == pytest.approx(0.0625, abs=1e-15)
    assert [r.advantage for r in res.steps] == pytest.approx([0, 0.0625, 0], abs=1e-12)
    assert res.end_to_end.advantage <= 0.0625 + 1e-12
    assert res.ledger.by_definition() == {"RealSOT": 0.0, "BC": 0.0625, "CT~": 0.0}


def test_ct_chain_honest_every_step_zero():
    k = 2
    res = compose_bottom_up(ct_tree(k), ct_certificates(k), build_bias_attack_environment(k, corrupt=False, with_ct=False), n=k)
    assert all(r.advantage == pytest.approx(0, abs=1e-12) for r in res.steps)
    assert res.end_to_end.advantage == pytest.approx(0, abs=1e-12)


def test_step_environments_hold_outside_roles():
    k = 2
    res = compose_bottom_up(bc_tree(k), bc_certificates(k), build_bias_attack_environment(k), n=k)
    leaf_env = res.environments["RealSOT"]
    assert "adv:BC-Alice" in leaf_env.application
    assert any(name.startswith("BC:") for name in leaf_env.application)
    assert "BC-Alice" in res.environments["BC"].adversaries


def test_missing_certificate():
    with pytest.raises(KeyError):
        compose_bottom_up(bc_tree(2), {"BC": bc_certificate(2)}, build_honest_environment(2), n=2)


CHAIN_ENVS = {
    "bc": (bc_tree, bc_certificates, [build_bias_attack_environment, build_honest_environment, build_corrupt_bob_environment]),
    "ct": (
        ct_tree,
        ct_certificates,
        [
            lambda k: build_bias_attack_environment(k, with_ct=False),
            lambda k: build_bias_attack_environment(k, corrupt=False, with_ct=False),
            lambda k: build_ct_environment(),
        ],
    ),
}


@pytest.mark.parametrize("chain", sorted(CHAIN_ENVS))
@pytest.mark.parametrize("k", [1, 2])
def test_end_to_end_within_ledger(chain, k):
    tree_fn, certs_fn, envs = CHAIN_ENVS[chain]
    for make_env in envs:
        res = compose_bottom_up(tree_fn(k), certs_fn(k), make_env(k), n=k)
        assert res.end_to_end.advantage <= res.ledger.total + 1e-12
        for entry in res.ledger.entries:
            assert entry.measured <= entry.epsilon + 1e-12


ledger_entries = st.lists(
    st.tuples(st.sampled_from(["A", "B", "C"]), st.floats(0, 1, allow_nan=False)), max_size=6
).map(lambda xs: EpsilonLedger([LedgerEntry(f"n{i}", d, e, 0) for i, (d, e) in enumerate(xs)]))


@given(ledger_entries, ledger_entries)
def test_ledger_additivity(a, b):
    u = a + b
    assert u.total == pytest.approx(a.total + b.total)
    for d in set(a.by_definition()) | set(b.by_definition()):
        assert u.by_definition()[d] == pytest.approx(a.by_definition().get(d, 0) + b.by_definition().get(d, 0))


def test_chain_ledgers_extend():
    k = 2
    e = build_bias_attack_environment(k, with_ct=False)
    bc_part = compose_bottom_up(bc_tree(k), bc_certificates(k), build_bias_attack_environment(k), n=k, measure=False)
    ct_part = compose_bottom_up(ct_tree(k), ct_certificates(k), e, n=k, measure=False)
    assert [x.epsilon for x in ct_part.ledger.entries[:2]] == [x.epsilon for x in bc_part.ledger.entries]


def test_corrupted_roles():
    assert corrupted_roles(build_bias_attack_environment(2)) == {"BC-Alice"}
    assert corrupted_roles(build_honest_environment(2)) == set()


# DAG rewriting


def test_tree_input_is_unchanged():
    d = ProtocolDag.of("R", {"R": ["A", "B"], "A": ["C"]})
    out = dag_to_tree(d)
    assert out.tree.edges() == set(d.edges)
    assert out.rewritten == {} and out.ambiguities == []


def test_diamond():
    d = ProtocolDag.of("root", {"root": ["R1", "R2"], "R1": ["Q"], "R2": ["Q"]})
    out = dag_to_tree(d, {"Q": "I(Q)", "R1": "I(R1)", "R2": "I(R2)"})
    assert out.tree.edges() == {("root", "R2"), ("R2", "R1"), ("R1", "Q")}
    assert out.parts["R1"] == ("Q", "R1")
    assert out.parts["R2"] == ("Q", "R1", "R2")
    assert out.ideals["R2"] == ("I(Q)", "I(R1)", "I(R2)")
    assert out.ambiguities == [("Q", ("R1", "R2"))]


def test_three_way_fan_in_nests():
    d = ProtocolDag.of("root", {"root": ["A", "B", "C"], "A": ["Q"], "B": ["Q"], "C": ["Q"]})
    out = dag_to_tree(d)
    chain = [x for x in preorder(out.tree) if x != "root"]
    assert chain == ["C", "B", "A", "Q"]
    parts = [set(out.parts[x]) for x in ("A", "B", "C")]
    assert parts[0] < parts[1] < parts[2]


def test_cycle_is_rejected():
    with pytest.raises(TreeError):
        dag_to_tree(ProtocolDag.of("A", {"A": ["B"], "B": ["C"], "C": ["B"]}))


@st.composite
def rooted_dags(draw):
    n = draw(st.integers(2, 8))
    names = [f"n{i}" for i in range(n)]
    edges = set()
    for j in range(1, n):
        parents = draw(st.sets(st.integers(0, j - 1), min_size=1, max_size=j))
        edges |= {(names[i], names[j]) for i in parents}
    return ProtocolDag(names[0], frozenset(edges))


@given(rooted_dags())
@settings(max_examples=150, deadline=None)
def test_dag_rewrite_gives_a_tree_over_the_same_nodes(d):
    out = dag_to_tree(d)
    nodes = preorder(out.tree)
    assert sorted(nodes) == sorted(d.nodes)
    assert len(nodes) == len(set(nodes))
    for q, p in out.parts.items():
        assert p[-1] == q or q in p
