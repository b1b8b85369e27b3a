"""Reference executor: depth-first enumeration of measurement branches.

Keeps one classical valuation and one dense state vector per branch.  It is
exponential in the number of measurements and serves as an independent check
of :mod:`ucsim.engine.factor` on small circuits.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..circuit import Circuit, ClassicalPermutation, Measurement, Unitary, Xor, canonical_schedule
from .results import Distribution


def run_dfs(c: Circuit, observe: Sequence[str], schedule: Sequence[str] | None = None, trace: bool = False):
    """Exact distribution of ``observe`` by branch enumeration.

    With ``trace=True`` also returns the list of (probability, gate ids
    executed) for every leaf branch.
    """
    schedule = list(schedule or canonical_schedule(c))
    gates = [c.gate(g) for g in schedule]
    observe = tuple(observe)
    acc: dict = {}
    leaves = []
    init = {rid: r.initial for rid, r in c.registers.items() if not r.quantum}
    stack = [(0, 1.0, init, [], np.ones(1, dtype=complex), [])]
    while stack:
        pos, prob, vals, qubits, psi, executed = stack.pop()
        while pos < len(gates):
            g = gates[pos]
            pos += 1
            if not all(vals[r] == p for r, p in g.literals):
                continue
            executed = executed + [g.id] if trace else executed
            op = g.base
            if isinstance(op, Xor):
                args = [np.array([vals[s]], dtype=np.uint64) for s in op.sources]
                v = op.fn(*args) if args else op.fn()
                vals = dict(vals)
                vals[op.target] ^= int(np.asarray(v).ravel()[0]) & c.registers[op.target].mask
            elif isinstance(op, ClassicalPermutation):
                args = [np.array([vals[s]], dtype=np.uint64) for s in op.reads + op.targets]
                out = op.fn(*args)
                vals = dict(vals)
                for t, v in zip(op.targets, out):
                    vals[t] = int(np.asarray(v).ravel()[0]) & c.registers[t].mask
            elif isinstance(op, Unitary):
                for t in op.targets:
                    if t not in qubits:
                        qubits, psi = _add_qubit(qubits, psi, t, c.registers[t].initial)
                psi = _apply_unitary(psi, [qubits.index(t) for t in op.targets], len(qubits), np.asarray(op.matrix))
            elif isinstance(op, Measurement):
                if op.qubit not in qubits:
                    qubits, psi = _add_qubit(qubits, psi, op.qubit, c.registers[op.qubit].initial)
                j = qubits.index(op.qubit)
                t = psi.reshape(1 << j, 2, -1)
                branches = []
                for m in (0, 1):
                    pm = float(np.sum(np.abs(t[:, m, :]) ** 2))
                    if pm * prob <= 1e-24:
                        continue
                    proj = np.zeros_like(t)
                    proj[:, m, :] = t[:, m, :] / np.sqrt(pm)
                    v2 = dict(vals)
                    v2[op.outcome] = m
                    branches.append((pos, prob * pm, v2, list(qubits), proj.ravel(), executed))
                if not branches:
                    prob = 0.0
                    break
                stack.extend(reversed(branches[1:]))
                pos, prob, vals, qubits, psi, executed = branches[0]
            else:
                raise TypeError(op)
        if prob == 0.0:
            continue
        key = tuple(vals[r] for r in observe)
        key = key[0] if len(key) == 1 else key
        acc[key] = acc.get(key, 0.0) + prob
        if trace:
            leaves.append((prob, executed))
    dist = Distribution(acc, observe, mode="dfs")
    return (dist, leaves) if trace else dist


def _add_qubit(qubits, psi, q, initial):
    new = np.zeros(len(psi) * 2, dtype=complex)
    new[initial::2] = psi
    return qubits + [q], new


def _apply_unitary(psi, targets, n, u):
    t = psi.reshape((2,) * n)
    k = len(targets)
    t = np.moveaxis(t, targets, list(range(n - k, n)))
    shape = t.shape
    t = (t.reshape(-1, 1 << k) @ u.T).reshape(shape)
    t = np.moveaxis(t, list(range(n - k, n)), targets)
    return t.ravel()
