"""Stabilizer tableau simulator with symbolic measurement outcomes.

Row signs are affine functions over GF(2): bit 0 of a sign mask is a
constant and bit ``k >= 1`` is the ``k``-th uniformly random measurement
outcome drawn so far.  A measurement or parity is deterministic exactly when
its mask has no variable bits, so one pass classifies every detector without
sampling, and sampling only has to assign the variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..circuit import MEASURES, Circuit


class UnsupportedPreparationError(ValueError):
    pass


def _g(x1, z1, x2, z2):
    # exponent of i picked up when multiplying Pauli (x1,z1) into (x2,z2), summed per qubit
    return np.where(
        x1 & z1, z2.astype(np.int64) - x2,
        np.where(x1, z2 * (2 * x2.astype(np.int64) - 1), np.where(z1, x2 * (1 - 2 * z2.astype(np.int64)), 0)),
    )


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1
        self.r = [0] * (2 * n)
        self.num_vars = 0

    def h(self, q):
        x, z = self.x[:, q].copy(), self.z[:, q].copy()
        for i in np.flatnonzero(x & z):
            self.r[i] ^= 1
        self.x[:, q], self.z[:, q] = z, x

    def s(self, q):
        x, z = self.x[:, q], self.z[:, q]
        for i in np.flatnonzero(x & z):
            self.r[i] ^= 1
        self.z[:, q] = z ^ x

    def s_dag(self, q):
        for _ in range(3):
            self.s(q)

    def cx(self, a, b):
        xa, za, xb, zb = self.x[:, a], self.z[:, a], self.x[:, b], self.z[:, b]
        for i in np.flatnonzero(xa & zb & (xb ^ za ^ 1)):
            self.r[i] ^= 1
        self.x[:, b] = xb ^ xa
        self.z[:, a] = za ^ zb

    def pauli_x(self, q, mask=1):
        for i in np.flatnonzero(self.z[:, q]):
            self.r[i] ^= mask

    def pauli_z(self, q, mask=1):
        for i in np.flatnonzero(self.x[:, q]):
            self.r[i] ^= mask

    def _rowsum(self, h, i):
        g = int(_g(self.x[i], self.z[i], self.x[h], self.z[h]).sum())
        const = (g % 4) // 2
        self.r[h] ^= self.r[i] ^ const
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure_z(self, q) -> int:
        """Return the outcome as a sign mask (bit 0 constant, higher bits variables)."""
        n = self.n
        stab_x = self.x[n:, q]
        hits = np.flatnonzero(stab_x)
        if len(hits):
            p = n + int(hits[0])
            for i in np.flatnonzero(self.x[:, q]):
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p].copy(), self.z[p].copy(), self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            self.num_vars += 1
            self.r[p] = 1 << self.num_vars
            return self.r[p]
        # deterministic: accumulate the stabilizers paired with the destabilizers that anticommute
        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        sr = 0
        for i in np.flatnonzero(self.x[:n, q]):
            row = n + int(i)
            g = int(_g(self.x[row], self.z[row], sx, sz).sum())
            sr ^= self.r[row] ^ ((g % 4) // 2)
            sx ^= self.x[row]
            sz ^= self.z[row]
        return sr

    def measure(self, q, basis: str) -> int:
        if basis == "Z":
            return self.measure_z(q)
        if basis == "X":
            self.h(q)
            m = self.measure_z(q)
            self.h(q)
            return m
        self.s_dag(q)
        self.h(q)
        m = self.measure_z(q)
        self.h(q)
        self.s(q)
        return m

    def reset(self, q, basis: str = "Z"):
        if basis == "X":
            self.h(q)
        m = self.measure_z(q)
        self.pauli_x(q, m)
        if basis == "X":
            self.h(q)


def stabilizer_prep_gates(theta: float, phi: float) -> list[str]:
    """Gates taking ``|0>`` to ``U3(theta, phi, 0)|0>`` up to phase, for multiples of pi/2."""
    j = theta / (math.pi / 2)
    k = phi / (math.pi / 2)
    if abs(j - round(j)) > 1e-9 or abs(k - round(k)) > 1e-9:
        raise UnsupportedPreparationError(
            f"PREP_ARB({theta}, {phi}) is not a stabilizer state; use the injected-frame or dense simulator"
        )
    j, k = int(round(j)) % 4, int(round(k)) % 4
    if j == 0:
        return []
    if j == 2:
        return ["X"]
    if j == 3:
        k = (k + 2) % 4
    return ["H"] + ["S"] * k


@dataclass
class TableauResult:
    record_masks: list[int]
    outcomes: np.ndarray
    record_deterministic: np.ndarray
    detector_deterministic: np.ndarray
    detector_values: np.ndarray
    observable_deterministic: np.ndarray
    observable_values: np.ndarray


def _xor_masks(masks, recs):
    out = 0
    for r in recs:
        out ^= masks[r]
    return out


def tableau_run(circuit: Circuit, seed: int | None = 0, bell_reference: bool = False) -> TableauResult:
    """Run the noiseless part of ``circuit``.

    With ``bell_reference`` the ``PREP_ARB`` qubit is instead maximally
    entangled with an extra reference qubit, so a parity is reported
    deterministic only if it is deterministic for every injected input.
    """
    n = circuit.num_qubits
    tab = Tableau(n + (1 if bell_reference else 0))
    masks: list[int] = []
    for ins in circuit.instructions:
        k = ins.kind
        if ins.is_noise or k == "TICK":
            continue
        if k == "RESET_Z" or k == "RESET_X":
            for q in ins.targets:
                tab.reset(q, k[-1])
        elif k == "H":
            for q in ins.targets:
                tab.h(q)
        elif k == "CX":
            for a, b in ins.pairs():
                tab.cx(a, b)
        elif k in MEASURES:
            for q in ins.targets:
                masks.append(tab.measure(q, k[-1]))
        elif k == "PREP_ARB":
            q = ins.targets[0]
            tab.reset(q)
            if bell_reference:
                tab.h(n)
                tab.cx(n, q)
                continue
            for g in stabilizer_prep_gates(*ins.args):
                if g == "H":
                    tab.h(q)
                elif g == "S":
                    tab.s(q)
                else:
                    tab.pauli_x(q)
        else:
            raise ValueError(f"unsupported instruction {k}")

    rng = np.random.default_rng(seed)
    values = rng.integers(0, 2, size=tab.num_vars + 1, dtype=np.int64)
    values[0] = 1

    def evaluate(mask):
        bits = 0
        v = 0
        while mask >> bits:
            if (mask >> bits) & 1:
                v ^= int(values[bits])
            bits += 1
        return v

    det_rec = np.array([m < 2 for m in masks], dtype=bool)
    outcomes = np.array([evaluate(m) for m in masks], dtype=np.uint8)
    dmasks = [_xor_masks(masks, d.records) for d in circuit.detectors]
    omasks = [_xor_masks(masks, o.records) for o in circuit.observables]
    return TableauResult(
        masks,
        outcomes,
        det_rec,
        np.array([m < 2 for m in dmasks], dtype=bool),
        np.array([evaluate(m) ^ d.parity for m, d in zip(dmasks, circuit.detectors)], dtype=np.uint8),
        np.array([m < 2 for m in omasks], dtype=bool),
        np.array([evaluate(m) for m in omasks], dtype=np.uint8),
    )


def parity_is_deterministic(result: TableauResult, records) -> bool:
    return _xor_masks(result.record_masks, records) < 2
