"""Running circuits: exact distributions, sampling, schedule checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..circuit import Circuit, random_linear_extension, validate_circuit
from .dfs import run_dfs
from .factor import FactorEngine
from .results import Distribution, QuantumWidthExceeded

__all__ = [
    "Distribution",
    "QuantumWidthExceeded",
    "InvarianceReport",
    "run_exact",
    "run_monte_carlo",
    "run_dfs",
    "schedule_invariance_check",
]


def run_exact(c: Circuit, observe: Sequence[str], schedule: Sequence[str] | None = None, qubit_cap: int = 16) -> Distribution:
    """Exact joint distribution of the final values of ``observe``."""
    eng = FactorEngine(c, observe, schedule=schedule, qubit_cap=qubit_cap)
    dist = eng.run()
    dist.meta.update(max_components=eng.max_components, max_rows=eng.max_rows, gates=len(c.gates))
    return dist


def run_monte_carlo(
    c: Circuit,
    observe: Sequence[str],
    samples: int = 100_000,
    seed: int = 0,
    schedule: Sequence[str] | None = None,
    qubit_cap: int = 16,
) -> Distribution:
    """Empirical distribution from ``samples`` independent runs (PCG64 seeded by ``seed``)."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    eng = FactorEngine(c, observe, schedule=schedule, samples=samples, rng=rng, qubit_cap=qubit_cap)
    dist = eng.run()
    dist.mode = "sample"
    dist.stderr = {k: float(np.sqrt(p * (1 - p) / samples)) for k, p in dist.probs.items()}
    dist.meta.update(seed=seed, prng="PCG64", samples=samples, gates=len(c.gates))
    return dist


@dataclass
class InvarianceReport:
    ok: bool
    max_deviation: float = 0.0
    schedules: list = field(default_factory=list)
    reason: str = ""

    def __bool__(self):
        return self.ok


def schedule_invariance_check(
    c: Circuit, observe: Sequence[str], trials: int = 5, seed: int = 0, tol: float = 1e-9
) -> InvarianceReport:
    """Compare exact distributions under the canonical and ``trials`` random linear extensions."""
    report = validate_circuit(c)
    if not report.ok:
        return InvarianceReport(False, reason="; ".join(v.message for v in report.violations[:3]))
    rng = np.random.Generator(np.random.PCG64(seed))
    ref = run_exact(c, observe)
    worst = 0.0
    scheds = []
    for _ in range(trials):
        s = random_linear_extension(c, rng)
        scheds.append(s)
        worst = max(worst, ref.distance(run_exact(c, observe, schedule=s)))
    return InvarianceReport(worst <= tol, worst, scheds)
