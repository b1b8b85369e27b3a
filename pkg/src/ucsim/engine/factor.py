"""Exact and sampled execution over a factorised state.

The state is a mixture of components.  Each component is a product of
independent factors; a factor is a table of joint classical values with row
probabilities and, when it holds qubits, one amplitude vector per row.
Registers that hold the same value in every branch of a component are kept
as constants outside the factors.

A controlled gate whose control bit lives in a factor the gate does not
otherwise touch splits the component on that bit instead of merging the two
factors.  Registers that will not be read again are marginalised away.
Sampling mode keeps one factor with one row per sample and never splits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..circuit import (
    Circuit,
    ClassicalPermutation,
    Measurement,
    Unitary,
    Xor,
    canonical_schedule,
    is_linear_extension,
)
from .results import Distribution, QuantumWidthExceeded

PRUNE = 1e-24


@dataclass
class Factor:
    regs: list[str]
    widths: list[int]
    cols: np.ndarray  # (N, len(regs)) uint64
    probs: np.ndarray  # (N,)
    qubits: list[str]
    amps: np.ndarray | None  # (N, 2**len(qubits)) complex

    @property
    def n(self) -> int:
        return len(self.probs)

    def col(self, reg: str) -> np.ndarray:
        return self.cols[:, self.regs.index(reg)]

    @staticmethod
    def unit(n: int = 1) -> "Factor":
        return Factor([], [], np.zeros((n, 0), dtype=np.uint64), np.full(n, 1.0 / n), [], None)

    def take(self, rows) -> "Factor":
        return Factor(
            list(self.regs),
            list(self.widths),
            self.cols[rows],
            self.probs[rows],
            list(self.qubits),
            None if self.amps is None else self.amps[rows],
        )

    def with_column(self, reg: str, width: int, values) -> "Factor":
        values = np.broadcast_to(np.asarray(values, dtype=np.uint64), (self.n,))
        return Factor(
            self.regs + [reg],
            self.widths + [width],
            np.concatenate([self.cols, values[:, None]], axis=1),
            self.probs,
            list(self.qubits),
            self.amps,
        )

    def with_qubit(self, q: str, initial: int) -> "Factor":
        amps = self.amps if self.amps is not None else np.ones((self.n, 1), dtype=complex)
        new = np.zeros((self.n, amps.shape[1] * 2), dtype=complex)
        new[:, initial::2] = amps
        return Factor(list(self.regs), list(self.widths), self.cols, self.probs, self.qubits + [q], new)


def product(a: Factor, b: Factor) -> Factor:
    na, nb = a.n, b.n
    cols = np.concatenate([np.repeat(a.cols, nb, axis=0), np.tile(b.cols, (na, 1))], axis=1)
    probs = np.outer(a.probs, b.probs).ravel()
    if a.amps is None and b.amps is None:
        amps = None
    else:
        aa = a.amps if a.amps is not None else np.ones((na, 1), dtype=complex)
        bb = b.amps if b.amps is not None else np.ones((nb, 1), dtype=complex)
        amps = np.einsum("ia,jb->ijab", aa, bb).reshape(na * nb, aa.shape[1] * bb.shape[1])
    return Factor(a.regs + b.regs, a.widths + b.widths, cols, probs, a.qubits + b.qubits, amps)


def merge_duplicates(f: Factor) -> Factor:
    """Combine rows with equal classical values (only without qubits)."""
    if f.amps is not None or f.n <= 1:
        return f
    if not f.regs:
        return Factor([], [], np.zeros((1, 0), dtype=np.uint64), np.array([f.probs.sum()]), [], None)
    if sum(f.widths) <= 63:
        key = np.zeros(f.n, dtype=np.uint64)
        shift = 0
        for i, w in enumerate(f.widths):
            key |= f.cols[:, i] << np.uint64(shift)
            shift += w
        _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    else:
        _, first, inv = np.unique(f.cols, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    if len(first) == f.n:
        return f
    probs = np.bincount(inv, weights=f.probs, minlength=len(first))
    return Factor(list(f.regs), list(f.widths), f.cols[first], probs, [], None)


@dataclass
class Component:
    weight: float
    factors: list[Factor]
    consts: dict[str, int]

    def where(self) -> dict[str, int]:
        out = {}
        for i, f in enumerate(self.factors):
            for r in f.regs:
                out[r] = i
            for q in f.qubits:
                out[q] = i
        return out

    def n_qubits(self) -> int:
        return sum(len(f.qubits) for f in self.factors)


class FactorEngine:
    def __init__(
        self,
        circuit: Circuit,
        observe: Sequence[str],
        schedule: Sequence[str] | None = None,
        samples: int | None = None,
        rng: np.random.Generator | None = None,
        qubit_cap: int = 16,
    ):
        self.c = circuit
        self.observe = tuple(observe)
        for r in self.observe:
            if r not in circuit.registers:
                raise KeyError(f"observed register {r!r} is not declared")
        if schedule is None:
            schedule = canonical_schedule(circuit)
        elif not is_linear_extension(circuit, schedule):
            raise ValueError("schedule is not a linear extension of the circuit order")
        self.schedule = list(schedule)
        self.sampling = samples is not None
        self.samples = samples
        self.rng = rng
        self.qubit_cap = qubit_cap
        self.regs = circuit.registers
        last: dict[str, int] = {}
        for i, gid in enumerate(self.schedule):
            for r in circuit.gate(gid).registers:
                last[r] = i
        self.dying: dict[int, list[str]] = {}
        for r, i in last.items():
            if r not in self.observe:
                self.dying.setdefault(i, []).append(r)
        self.max_components = 0
        self.max_rows = 0

    # -- helpers -------------------------------------------------------------
    def _value(self, comp: Component, reg: str) -> int:
        if reg in comp.consts:
            return comp.consts[reg]
        return self.regs[reg].initial

    def _simplify(self, comp: Component, f: Factor) -> Factor:
        """Move constant columns into ``comp.consts``."""
        if f.n == 0 or not f.regs:
            return f
        const = np.all(f.cols == f.cols[:1], axis=0)
        if not const.any():
            return f
        keep = ~const
        for i in np.flatnonzero(const):
            comp.consts[f.regs[i]] = int(f.cols[0, i])
        return Factor(
            [r for r, k in zip(f.regs, keep) if k],
            [w for w, k in zip(f.widths, keep) if k],
            f.cols[:, keep],
            f.probs,
            list(f.qubits),
            f.amps,
        )

    def _replace(self, comp: Component, drop: Sequence[int], new: Factor | None) -> Component:
        factors = [f for i, f in enumerate(comp.factors) if i not in set(drop)]
        if new is not None and (new.regs or new.qubits or self.sampling):
            factors.append(new)
            weight = comp.weight
        elif new is not None:
            weight = comp.weight * float(new.probs.sum())
        else:
            weight = comp.weight
        return Component(weight, factors, comp.consts)

    def _condition(self, comp: Component, reg: str, value: int) -> Component | None:
        where = comp.where()
        i = where[reg]
        f = comp.factors[i]
        rows = f.col(reg) == np.uint64(value)
        mass = float(f.probs[rows].sum())
        if mass <= PRUNE:
            return None
        g = f.take(rows)
        g.probs = g.probs / mass
        new = Component(comp.weight * mass, list(comp.factors), dict(comp.consts))
        g = self._simplify(new, g)
        return self._replace(new, [i], g)

    # -- gate application ------------------------------------------------------
    def _apply(self, comp: Component, gate) -> list[Component]:
        where = comp.where()
        pending = []
        for reg, pol in gate.literals:
            if reg in where:
                pending.append((reg, pol))
            elif self._value(comp, reg) != pol:
                return [comp]
        base = gate.base
        if pending and not self.sampling:
            op_factors = {where[r] for r in base.accesses() if r in where}
            for reg, pol in pending:
                if where[reg] not in op_factors:
                    out = []
                    for v in (0, 1):
                        sub = self._condition(comp, reg, v)
                        if sub is not None:
                            out.extend(self._apply(sub, gate))
                    return out
        return [self._apply_base(comp, base, pending, where)]

    def _apply_base(self, comp: Component, base, pending, where) -> Component:
        comp = Component(comp.weight, list(comp.factors), dict(comp.consts))
        needed = list(base.accesses()) + [r for r, _ in pending]
        idx = sorted({where[r] for r in needed if r in where})
        if self.sampling and 0 not in idx:
            idx = [0] + idx
        f = None
        for i in idx:
            f = comp.factors[i] if f is None else product(f, comp.factors[i])
        if f is None:
            f = Factor.unit()
        for r in needed:
            if r in where:
                continue
            reg = self.regs[r]
            if reg.quantum:
                if r not in f.qubits:
                    f = f.with_qubit(r, reg.initial)
            elif r not in f.regs:
                f = f.with_column(r, reg.width, self._value(comp, r))
                comp.consts.pop(r, None)
        mask = None
        for reg, pol in pending:
            m = f.col(reg) == np.uint64(pol)
            mask = m if mask is None else mask & m
        f = self._run_op(f, base, mask)
        f = self._simplify(comp, f)
        comp = self._replace(comp, idx, f)
        if comp.n_qubits() > self.qubit_cap:
            raise QuantumWidthExceeded(f"{comp.n_qubits()} live qubits exceed the cap of {self.qubit_cap}")
        return comp

    def _run_op(self, f: Factor, op, mask) -> Factor:
        if isinstance(op, Xor):
            t = f.regs.index(op.target)
            vals = op.fn(*[f.col(s) for s in op.sources]) if op.sources else op.fn()
            vals = np.broadcast_to(np.asarray(vals, dtype=np.uint64), (f.n,)) & np.uint64(self.regs[op.target].mask)
            if mask is not None:
                vals = np.where(mask, vals, np.uint64(0))
            cols = f.cols.copy()
            cols[:, t] ^= vals
            return Factor(f.regs, f.widths, cols, f.probs, f.qubits, f.amps)
        if isinstance(op, ClassicalPermutation):
            args = [f.col(s) for s in op.reads] + [f.col(t) for t in op.targets]
            out = op.fn(*args)
            cols = f.cols.copy()
            for t, v in zip(op.targets, out):
                i = f.regs.index(t)
                v = np.broadcast_to(np.asarray(v, dtype=np.uint64), (f.n,)) & np.uint64(self.regs[t].mask)
                cols[:, i] = v if mask is None else np.where(mask, v, cols[:, i])
            return Factor(f.regs, f.widths, cols, f.probs, f.qubits, f.amps)
        if isinstance(op, Unitary):
            return self._unitary(f, op, mask)
        if isinstance(op, Measurement):
            return self._measure(f, op, mask)
        raise TypeError(f"unsupported operation {op!r}")

    def _unitary(self, f: Factor, op: Unitary, mask) -> Factor:
        nq = len(f.qubits)
        axes = [1 + f.qubits.index(t) for t in op.targets]
        rows = np.arange(f.n) if mask is None else np.flatnonzero(mask)
        if len(rows) == 0:
            return f
        sub = f.amps[rows].reshape((len(rows),) + (2,) * nq)
        sub = np.moveaxis(sub, axes, list(range(nq + 1 - len(axes), nq + 1)))
        shape = sub.shape
        sub = sub.reshape(len(rows), -1, 1 << len(axes)) @ np.asarray(op.matrix, dtype=complex).T
        sub = np.moveaxis(sub.reshape(shape), list(range(nq + 1 - len(axes), nq + 1)), axes)
        amps = f.amps.copy()
        amps[rows] = sub.reshape(len(rows), -1)
        return Factor(f.regs, f.widths, f.cols, f.probs, f.qubits, amps)

    def _measure(self, f: Factor, op: Measurement, mask) -> Factor:
        nq = len(f.qubits)
        j = f.qubits.index(op.qubit)
        o = f.regs.index(op.outcome)
        view = f.amps.reshape(f.n, 1 << j, 2, 1 << (nq - j - 1))
        p1 = np.sum(np.abs(view[:, :, 1, :]) ** 2, axis=(1, 2))
        p1 = np.clip(p1, 0.0, 1.0)
        active = np.ones(f.n, dtype=bool) if mask is None else mask
        if self.sampling:
            outcome = (self.rng.random(f.n) < p1) & active
            amps = view.copy()
            keep0 = active & ~outcome
            keep1 = active & outcome
            amps[keep0, :, 1, :] = 0
            amps[keep1, :, 0, :] = 0
            norm = np.where(keep0, np.sqrt(1 - p1), np.where(keep1, np.sqrt(p1), 1.0))
            norm = np.where(norm == 0, 1.0, norm)
            amps = amps / norm[:, None, None, None]
            cols = f.cols.copy()
            cols[:, o] ^= outcome.astype(np.uint64)
            return Factor(f.regs, f.widths, cols, f.probs, f.qubits, amps.reshape(f.n, -1))
        idle = np.flatnonzero(~active)
        act = np.flatnonzero(active)
        parts_cols = [f.cols[idle]]
        parts_probs = [f.probs[idle]]
        parts_amps = [f.amps[idle]]
        for m in (0, 1):
            pm = p1[act] if m else 1.0 - p1[act]
            keep = f.probs[act] * pm > PRUNE
            rows = act[keep]
            if len(rows) == 0:
                continue
            pm = pm[keep]
            amps = view[rows].copy()
            amps[:, :, 1 - m, :] = 0
            amps = amps / np.sqrt(pm)[:, None, None, None]
            cols = f.cols[rows].copy()
            cols[:, o] ^= np.uint64(m)
            parts_cols.append(cols)
            parts_probs.append(f.probs[rows] * pm)
            parts_amps.append(amps.reshape(len(rows), -1))
        return Factor(
            f.regs,
            f.widths,
            np.concatenate(parts_cols),
            np.concatenate(parts_probs),
            f.qubits,
            np.concatenate(parts_amps),
        )

    # -- dead registers ----------------------------------------------------------
    def _forget(self, comp: Component, regs: Sequence[str]) -> Component:
        where = comp.where()
        comp = Component(comp.weight, list(comp.factors), dict(comp.consts))
        touched: dict[int, Factor] = {}
        for r in regs:
            if r in where:
                i = where[r]
                f = touched.get(i, comp.factors[i])
                if r in f.regs:
                    k = f.regs.index(r)
                    keep = [x for x in range(len(f.regs)) if x != k]
                    f = Factor([f.regs[x] for x in keep], [f.widths[x] for x in keep], f.cols[:, keep], f.probs, f.qubits, f.amps)
                else:
                    f = self._drop_qubit(f, r)
                touched[i] = f
            else:
                comp.consts.pop(r, None)
        if not touched:
            return comp
        factors = []
        weight = comp.weight
        for i, f in enumerate(comp.factors):
            f = touched.get(i, f)
            if i in touched and not self.sampling:
                f = merge_duplicates(f)
            if not f.regs and not f.qubits and not self.sampling:
                weight *= float(f.probs.sum())
                continue
            factors.append(f)
        return Component(weight, factors, comp.consts)

    def _drop_qubit(self, f: Factor, q: str) -> Factor:
        """Remove a qubit that is in a basis state in every row; otherwise keep it."""
        nq = len(f.qubits)
        j = f.qubits.index(q)
        view = f.amps.reshape(f.n, 1 << j, 2, 1 << (nq - j - 1))
        w1 = np.sum(np.abs(view[:, :, 1, :]) ** 2, axis=(1, 2))
        w0 = np.sum(np.abs(view[:, :, 0, :]) ** 2, axis=(1, 2))
        if not np.all((w0 < 1e-20) | (w1 < 1e-20)):
            return f
        which = (w1 > w0).astype(int)
        amps = np.where(which[:, None, None] == 1, view[:, :, 1, :], view[:, :, 0, :]).reshape(f.n, -1)
        qubits = [x for x in f.qubits if x != q]
        return Factor(f.regs, f.widths, f.cols, f.probs, qubits, amps if qubits else None)

    # -- driver ------------------------------------------------------------------
    def run(self) -> Distribution:
        if self.sampling:
            comps = [Component(1.0, [Factor.unit(self.samples)], {})]
        else:
            comps = [Component(1.0, [], {})]
        for i, gid in enumerate(self.schedule):
            gate = self.c.gate(gid)
            nxt = []
            for comp in comps:
                nxt.extend(self._apply(comp, gate))
            dying = self.dying.get(i)
            if dying:
                nxt = [self._forget(comp, dying) for comp in nxt]
            comps = nxt
            self.max_components = max(self.max_components, len(comps))
            for comp in comps:
                for f in comp.factors:
                    self.max_rows = max(self.max_rows, f.n)
        return self._observe(comps)

    def _observe(self, comps: list[Component]) -> Distribution:
        acc: dict = {}
        for comp in comps:
            where = comp.where()
            groups: dict[int, list[str]] = {}
            for r in self.observe:
                if r in where:
                    groups.setdefault(where[r], []).append(r)
            partial = [({}, comp.weight)]
            for i, regs in groups.items():
                f = comp.factors[i]
                idx = [f.regs.index(r) for r in regs]
                vals, inv = np.unique(f.cols[:, idx], axis=0, return_inverse=True)
                if self.sampling:
                    probs = np.bincount(inv.ravel(), minlength=len(vals)) / f.n
                else:
                    probs = np.bincount(inv.ravel(), weights=f.probs, minlength=len(vals))
                nxt = []
                for assign, w in partial:
                    for row, p in zip(vals, probs):
                        if p == 0:
                            continue
                        a = dict(assign)
                        a.update({r: int(v) for r, v in zip(regs, row)})
                        nxt.append((a, w * float(p)))
                partial = nxt
            for assign, w in partial:
                key = tuple(assign[r] if r in assign else self._value(comp, r) for r in self.observe)
                if len(key) == 1:
                    key = key[0]
                acc[key] = acc.get(key, 0.0) + w
        return Distribution(acc, self.observe)
