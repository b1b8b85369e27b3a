from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable


class QuantumWidthExceeded(RuntimeError):
    """A branch holds more live qubits than the configured cap."""


@dataclass
class Distribution:
    """Probabilities of the observed registers' joint final values.

    Keys are ints when a single register is observed and tuples otherwise.
    ``stderr`` is filled in by sampling runs.
    """

    probs: dict[Hashable, float]
    observe: tuple[str, ...]
    mode: str = "exact"
    stderr: dict[Hashable, float] | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, value) -> float:
        return self.probs.get(value, 0.0)

    def __iter__(self):
        return iter(sorted(self.probs))

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def support(self, tol: float = 0.0) -> list:
        return sorted(v for v, p in self.probs.items() if p > tol)

    def distance(self, other: "Distribution") -> float:
        """Largest pointwise difference."""
        keys = set(self.probs) | set(other.probs)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def close_to(self, other: "Distribution", tol: float = 1e-12) -> bool:
        return self.distance(other) <= tol

    def as_dict(self) -> dict:
        return {k: self.probs[k] for k in sorted(self.probs)}
