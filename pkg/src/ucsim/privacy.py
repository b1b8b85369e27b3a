"""Key-privacy metrics over explicit joint distributions of (K_A, K_B, V_E, M).

All quantities are in bits.  The key length M = 0 (the run aborted and
produced the empty key) contributes 0 to every metric.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

__all__ = [
    "InvalidRecord",
    "KeyExperimentRecord",
    "conditioned_mutual_information",
    "uniformity_distance",
    "combined_privacy",
    "correctness",
    "read_joint_table",
]

TOL = 1e-9


class InvalidRecord(ValueError):
    pass


Point = tuple[str, str, Hashable, int]


@dataclass(frozen=True)
class KeyExperimentRecord:
    """Joint distribution over (K_A, K_B, V_E, M); keys are '0'/'1' strings of length M."""

    joint: Mapping[Point, float]

    def __post_init__(self):
        total = 0.0
        for (ka, kb, _, m), p in self.joint.items():
            if p < 0:
                raise InvalidRecord(f"negative probability {p}")
            if len(ka) != m or len(kb) != m:
                raise InvalidRecord(f"key lengths {len(ka)}, {len(kb)} differ from M={m}")
            if set(ka + kb) - {"0", "1"}:
                raise InvalidRecord(f"keys must be bit strings, got {ka!r}, {kb!r}")
            total += p
        if abs(total - 1.0) > TOL:
            raise InvalidRecord(f"probabilities sum to {total}, not 1")

    @staticmethod
    def of(points: Iterable[tuple[str, str, Hashable, int, float]]) -> "KeyExperimentRecord":
        joint: dict[Point, float] = defaultdict(float)
        for ka, kb, ve, m, p in points:
            joint[(ka, kb, ve, int(m))] += float(p)
        return KeyExperimentRecord(dict(joint))

    def lengths(self) -> dict[int, float]:
        out: dict[int, float] = defaultdict(float)
        for (_, _, _, m), p in self.joint.items():
            out[m] += p
        return dict(out)

    def given(self, m: int) -> dict[tuple[str, str, Hashable], float]:
        """Conditional distribution of (K_A, K_B, V_E) given M = m."""
        pm = self.lengths().get(m, 0.0)
        out: dict = defaultdict(float)
        for (ka, kb, ve, mm), p in self.joint.items():
            if mm == m and pm > 0:
                out[(ka, kb, ve)] += p / pm
        return dict(out)

    def relabel(self, f) -> "KeyExperimentRecord":
        return KeyExperimentRecord.of((ka, kb, f(ve), m, p) for (ka, kb, ve, m), p in self.joint.items())


def _entropy(ps: Iterable[float]) -> float:
    return -sum(p * math.log2(p) for p in ps if p > 0)


def _marginal(d: Mapping[tuple, float], idx) -> dict:
    out: dict = defaultdict(float)
    for key, p in d.items():
        out[tuple(key[i] for i in idx)] += p
    return out


def conditioned_mutual_information(r: KeyExperimentRecord) -> float:
    """I(K_A, K_B; V_E | M) = sum_m Pr(M=m) I(K_A, K_B; V_E | M=m)."""
    total = 0.0
    for m, pm in r.lengths().items():
        if m == 0 or pm == 0:
            continue
        d = r.given(m)
        keys = _marginal(d, (0, 1))
        eve = _marginal(d, (2,))
        mi = _entropy(keys.values()) + _entropy(eve.values()) - _entropy(d.values())
        total += pm * mi
    return max(total, 0.0)


def uniformity_distance(r: KeyExperimentRecord, party: str = "A") -> float:
    """sum_m Pr(M=m) * || P_{K|M=m} - uniform over {0,1}^m ||_1."""
    if party not in ("A", "B"):
        raise ValueError("party must be 'A' or 'B'")
    idx = 0 if party == "A" else 1
    total = 0.0
    for m, pm in r.lengths().items():
        if m == 0 or pm == 0:
            continue
        pk = _marginal(r.given(m), (idx,))
        u = 2.0**-m
        seen = sum(abs(p - u) for p in pk.values())
        unseen = (2**m - len(pk)) * u
        total += pm * (seen + unseen)
    return total


def combined_privacy(r: KeyExperimentRecord) -> float:
    """sum_m Pr(M=m) (m - H(K_A | V_E, M=m))."""
    total = 0.0
    for m, pm in r.lengths().items():
        if m == 0 or pm == 0:
            continue
        d = r.given(m)
        joint = _marginal(d, (0, 2))
        eve = _marginal(d, (2,))
        h = _entropy(joint.values()) - _entropy(eve.values())
        total += pm * (m - h)
    return total


def correctness(r: KeyExperimentRecord) -> float:
    """Pr(K_A != K_B), checked against its decomposition over key lengths."""
    direct = sum(p for (ka, kb, _, _), p in r.joint.items() if ka != kb)
    split = 0.0
    for m, pm in r.lengths().items():
        if pm > 0:
            split += pm * sum(p for (ka, kb, _), p in r.given(m).items() if ka != kb)
    assert abs(direct - split) <= 1e-12, (direct, split)
    return direct


def read_joint_table(text: str) -> KeyExperimentRecord:
    """Parse CSV with columns K_A, K_B, V_E, M and a probability column ``p``."""
    rows = csv.DictReader(io.StringIO(text))
    need = {"K_A", "K_B", "V_E", "M", "p"}
    if rows.fieldnames is None or not need <= set(rows.fieldnames):
        raise InvalidRecord(f"table needs columns {sorted(need)}")
    pts = []
    for row in rows:
        pts.append((row["K_A"].strip(), row["K_B"].strip(), row["V_E"].strip(), int(row["M"]), float(row["p"])))
    return KeyExperimentRecord.of(pts)
