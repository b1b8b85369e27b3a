import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucsim.privacy import (
    InvalidRecord,
    KeyExperimentRecord,
    combined_privacy,
    conditioned_mutual_information,
    correctness,
    read_joint_table,
    uniformity_distance,
)


def bits(m):
    return ["".join(b) for b in itertools.product("01", repeat=m)]


def uniform_key(m, eve=lambda k: "-"):
    return KeyExperimentRecord.of((k, k, eve(k), m, 2.0**-m) for k in bits(m))


def forced_zero(m):
    return KeyExperimentRecord.of([("0" * m, "0" * m, "-", m, 1.0)])


METRICS = [conditioned_mutual_information, combined_privacy, correctness, uniformity_distance]


# conditioned mutual information


def test_mi_independent_view_is_zero():
    r = KeyExperimentRecord.of((k, k, v, 2, 0.25 * 0.5) for k in bits(2) for v in ("a", "b"))
    assert conditioned_mutual_information(r) == pytest.approx(0, abs=1e-12)


def test_mi_forced_zero_key_vanishes():
    assert conditioned_mutual_information(forced_zero(3)) == pytest.approx(0, abs=1e-12)


def test_mi_full_view_of_two_bit_key():
    assert conditioned_mutual_information(uniform_key(2, eve=lambda k: k)) == pytest.approx(2.0, abs=1e-12)


# uniformity


def test_uniform_key_has_zero_distance():
    assert uniformity_distance(uniform_key(3)) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_point_mass_distance(m):
    assert uniformity_distance(forced_zero(m)) == pytest.approx(2 - 2.0 ** (1 - m), abs=1e-12)
    assert uniformity_distance(forced_zero(m), "B") == pytest.approx(2 - 2.0 ** (1 - m), abs=1e-12)


def test_point_mass_one_bit_is_one():
    assert uniformity_distance(forced_zero(1)) == pytest.approx(1.0, abs=1e-12)


def test_mixture_gives_half_the_distance():
    m = 3
    pts = [(k, k, "u", m, 0.5 * 2.0**-m) for k in bits(m)] + [("0" * m, "0" * m, "d", m, 0.5)]
    r = KeyExperimentRecord.of(pts)
    # brute force over the conditional key distribution
    pk = {k: 0.5 * 2.0**-m + (0.5 if k == "0" * m else 0) for k in bits(m)}
    brute = sum(abs(p - 2.0**-m) for p in pk.values())
    assert uniformity_distance(r) == pytest.approx(brute, abs=1e-12)
    assert uniformity_distance(r) == pytest.approx(0.5 * (2 - 2.0 ** (1 - m)), abs=1e-12)


def test_bad_party():
    with pytest.raises(ValueError):
        uniformity_distance(uniform_key(1), "E")


# combined privacy


def test_combined_uniform_independent_is_zero():
    assert combined_privacy(uniform_key(3)) == pytest.approx(0, abs=1e-12)


def test_combined_forced_zero_is_m():
    assert combined_privacy(forced_zero(3)) == pytest.approx(3.0, abs=1e-12)


def test_combined_first_bit_revealed():
    assert combined_privacy(uniform_key(2, eve=lambda k: k[0])) == pytest.approx(1.0, abs=1e-12)


# correctness


def test_equal_keys_are_correct():
    assert correctness(uniform_key(2)) == 0


def test_independent_one_bit_keys():
    r = KeyExperimentRecord.of((a, b, "-", 1, 0.25) for a in "01" for b in "01")
    assert correctness(r) == pytest.approx(0.5, abs=1e-12)


def test_bernoulli_bit_flip():
    m = 3
    pts = []
    for k in bits(m):
        pts.append((k, k, "-", m, 0.9 * 2.0**-m))
        flipped = ("1" if k[0] == "0" else "0") + k[1:]
        pts.append((k, flipped, "-", m, 0.1 * 2.0**-m))
    assert correctness(KeyExperimentRecord.of(pts)) == pytest.approx(0.1, abs=1e-12)


# records


def test_empty_key_contributes_nothing():
    r = KeyExperimentRecord.of([("", "", "abort", 0, 0.5)] + [(k, k, "-", 2, 0.125) for k in bits(2)])
    for f in METRICS:
        assert f(r) == pytest.approx(0, abs=1e-12)
    half = KeyExperimentRecord.of([("", "", "abort", 0, 0.5), ("000", "000", "-", 3, 0.5)])
    assert combined_privacy(half) == pytest.approx(1.5, abs=1e-12)


def test_invalid_records():
    with pytest.raises(InvalidRecord):
        KeyExperimentRecord.of([("0", "0", "-", 1, 0.5)])
    with pytest.raises(InvalidRecord):
        KeyExperimentRecord.of([("01", "0", "-", 2, 1.0)])
    with pytest.raises(InvalidRecord):
        KeyExperimentRecord.of([("0", "0", "-", 1, 1.5), ("1", "1", "-", 1, -0.5)])
    with pytest.raises(InvalidRecord):
        KeyExperimentRecord.of([("a", "a", "-", 1, 1.0)])


def test_read_joint_table():
    text = "K_A,K_B,V_E,M,p\n00,00,x,2,0.5\n11,11,y,2,0.5\n"
    r = read_joint_table(text)
    assert conditioned_mutual_information(r) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidRecord):
        read_joint_table("K_A,K_B,p\n0,0,1\n")


# properties


@st.composite
def joints(draw):
    lengths = draw(st.sets(st.integers(0, 2), min_size=1, max_size=2))
    pts = []
    for m in sorted(lengths):
        for ka, kb in itertools.product(bits(m), repeat=2):
            for ve in range(draw(st.integers(1, 3))):
                pts.append((ka, kb, ve, m, draw(st.floats(0, 1))))
    total = sum(p for *_, p in pts)
    if total == 0:
        pts[0] = pts[0][:4] + (1.0,)
        total = 1.0
    return KeyExperimentRecord.of((a, b, v, m, p / total) for a, b, v, m, p in pts)


@st.composite
def conditionally_independent(draw):
    pts = []
    lengths = sorted(draw(st.sets(st.integers(1, 2), min_size=1, max_size=2)))
    pm = draw(st.lists(st.floats(0.05, 1), min_size=len(lengths), max_size=len(lengths)))
    for m, w in zip(lengths, pm):
        keys = draw(st.lists(st.floats(0.01, 1), min_size=4**m, max_size=4**m))
        views = draw(st.lists(st.floats(0.01, 1), min_size=3, max_size=3))
        pairs = list(itertools.product(bits(m), repeat=2))
        for (ka, kb), pk in zip(pairs, keys):
            for v, pv in enumerate(views):
                pts.append((ka, kb, v, m, w / sum(pm) * pk / sum(keys) * pv / sum(views)))
    return KeyExperimentRecord.of(pts)


@given(joints(), st.permutations(["p", "q", "r"]))
@settings(max_examples=100, deadline=None)
def test_metrics_ignore_view_labels(r, names):
    relabeled = r.relabel(lambda v: names[v])
    for f in METRICS:
        assert f(relabeled) == pytest.approx(f(r), abs=1e-9)


@given(conditionally_independent())
@settings(max_examples=100, deadline=None)
def test_independent_view_gives_zero_information(r):
    assert conditioned_mutual_information(r) == pytest.approx(0, abs=1e-9)


@given(joints())
@settings(max_examples=100, deadline=None)
def test_combined_privacy_is_nonnegative(r):
    assert combined_privacy(r) >= -1e-12
