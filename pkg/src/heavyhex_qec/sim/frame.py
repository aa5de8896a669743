"""Bit-packed Pauli-frame propagation.

Frames are stored as two ``(num_qubits, words)`` uint64 arrays (X part and Z
part); bit ``j`` of a word column is one independent frame.  The same engine
runs mechanism-parallel (one frame per error mechanism, used to build
propagation tables) and shot-parallel (one frame per shot, the direct
sampler).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import MEASURES, Circuit
from ..noise import ErrorMechanism, enumerate_mechanisms


def num_words(n: int) -> int:
    return max(1, (n + 63) // 64)


def unpack_columns(packed: np.ndarray, n: int) -> np.ndarray:
    """``(rows, words)`` uint64 -> ``(n, rows)`` bool, column ``j`` -> row ``j``."""
    if packed.shape[0] == 0:
        return np.zeros((n, 0), dtype=bool)
    as_bytes = np.ascontiguousarray(packed).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :n]
    return bits.T.astype(bool)


def pack_columns(bits: np.ndarray) -> np.ndarray:
    """``(n, rows)`` bool -> ``(rows, words)`` uint64; inverse of :func:`unpack_columns`."""
    n, rows = bits.shape
    w = num_words(n)
    padded = np.zeros((rows, w * 64), dtype=np.uint8)
    padded[:, :n] = bits.T
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


class FrameBatch:
    def __init__(self, num_qubits: int, width: int):
        self.width = width
        w = num_words(width)
        self.x = np.zeros((num_qubits, w), dtype=np.uint64)
        self.z = np.zeros((num_qubits, w), dtype=np.uint64)
        self.records: list[np.ndarray] = []

    def apply(self, ins) -> None:
        k = ins.kind
        x, z = self.x, self.z
        if k == "CX":
            for a, b in ins.pairs():
                x[b] ^= x[a]
                z[a] ^= z[b]
        elif k == "H":
            for q in ins.targets:
                x[q], z[q] = z[q].copy(), x[q].copy()
        elif k in ("RESET_Z", "RESET_X", "PREP_ARB"):
            for q in ins.targets:
                x[q] = 0
                z[q] = 0
        elif k in MEASURES:
            for q in ins.targets:
                if k == "MEASURE_Z":
                    self.records.append(x[q].copy())
                elif k == "MEASURE_X":
                    self.records.append(z[q].copy())
                else:
                    self.records.append(x[q] ^ z[q])

    def inject(self, qubits: np.ndarray, columns: np.ndarray, xbits: np.ndarray, zbits: np.ndarray) -> None:
        words = columns >> 6
        bits = np.left_shift(np.uint64(1), (columns & 63).astype(np.uint64))
        sel = xbits.astype(bool)
        np.bitwise_xor.at(self.x, (qubits[sel], words[sel]), bits[sel])
        sel = zbits.astype(bool)
        np.bitwise_xor.at(self.z, (qubits[sel], words[sel]), bits[sel])

    def record_matrix(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.x.shape[1]), dtype=np.uint64)
        return np.stack(self.records)


def _parity_rows(records: np.ndarray, groups) -> np.ndarray:
    out = np.zeros((len(groups), records.shape[1]), dtype=np.uint64)
    for i, recs in enumerate(groups):
        for r in recs:
            out[i] ^= records[r]
    return out


_XB = {"I": 0, "X": 1, "Y": 1, "Z": 0}
_ZB = {"I": 0, "X": 0, "Y": 1, "Z": 1}


@dataclass
class PropagationTable:
    """Detector and observable effect of every error mechanism of a noisy circuit."""

    num_detectors: int
    num_observables: int
    mechanisms: list[ErrorMechanism]
    probabilities: np.ndarray
    channel: np.ndarray  # channel id per mechanism, alternatives are contiguous
    det_indptr: np.ndarray
    det_indices: np.ndarray
    obs_mask: np.ndarray  # bitmask of flipped observables per mechanism
    logical_action: np.ndarray  # 'IXYZ' index on the injected logical qubit, 0 when not applicable

    def detectors_of(self, i: int) -> tuple[int, ...]:
        return tuple(int(d) for d in self.det_indices[self.det_indptr[i]:self.det_indptr[i + 1]])

    def scaled(self, factor: float) -> "PropagationTable":
        """Same mechanisms with every probability multiplied by ``factor``."""
        p = np.minimum(self.probabilities * factor, 1.0)
        return PropagationTable(self.num_detectors, self.num_observables, self.mechanisms, p, self.channel,
                                self.det_indptr, self.det_indices, self.obs_mask, self.logical_action)


def _mechanism_columns(mechanisms):
    qs, cols, xs, zs = [], [], [], []
    by_ins: dict[int, list[int]] = {}
    for j, m in enumerate(mechanisms):
        by_ins.setdefault(m.instruction_index, []).append(j)
    out = {}
    for idx, js in by_ins.items():
        qs, cols, xs, zs = [], [], [], []
        for j in js:
            m = mechanisms[j]
            for q, p in zip(m.qubits, m.paulis):
                qs.append(q)
                cols.append(j)
                xs.append(_XB[p])
                zs.append(_ZB[p])
        out[idx] = (np.array(qs, dtype=np.int64), np.array(cols, dtype=np.int64),
                    np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8))
    return out


def _logical_action(frames: FrameBatch, circuit: Circuit, width: int) -> np.ndarray:
    lx = circuit.meta.get("logical_x")
    lz = circuit.meta.get("logical_z")
    if lx is None or lz is None:
        return np.zeros(width, dtype=np.uint8)
    anti_z = np.zeros(frames.x.shape[1], dtype=np.uint64)
    for q in lz:
        anti_z ^= frames.x[q]
    anti_x = np.zeros(frames.x.shape[1], dtype=np.uint64)
    for q in lx:
        anti_x ^= frames.z[q]
    has_x = unpack_columns(anti_z[None, :], width)[:, 0]
    has_z = unpack_columns(anti_x[None, :], width)[:, 0]
    # I=0, X=1, Y=2, Z=3
    return np.where(has_x & has_z, 2, np.where(has_x, 1, np.where(has_z, 3, 0))).astype(np.uint8)


def propagate_all(circuit: Circuit, mechanisms: list[ErrorMechanism] | None = None):
    """Mechanism-parallel pass; returns ``(det_bits, obs_bits, logical_action)`` per mechanism."""
    if mechanisms is None:
        mechanisms = enumerate_mechanisms(circuit)
    width = len(mechanisms)
    frames = FrameBatch(circuit.num_qubits, width)
    injections = _mechanism_columns(mechanisms)
    for idx, ins in enumerate(circuit.instructions):
        if ins.is_noise:
            if idx in injections:
                frames.inject(*injections[idx])
        elif ins.kind != "TICK":
            frames.apply(ins)
    records = frames.record_matrix()
    dets = unpack_columns(_parity_rows(records, [d.records for d in circuit.detectors]), width)
    obs = unpack_columns(_parity_rows(records, [o.records for o in circuit.observables]), width)
    return dets, obs, _logical_action(frames, circuit, width)


def propagation_table(circuit: Circuit) -> PropagationTable:
    mechanisms = enumerate_mechanisms(circuit)
    dets, obs, action = propagate_all(circuit, mechanisms)
    nnz = dets.sum(axis=1)
    indptr = np.zeros(len(mechanisms) + 1, dtype=np.int64)
    np.cumsum(nnz, out=indptr[1:])
    indices = np.nonzero(dets)[1].astype(np.int32)
    weights = (1 << np.arange(obs.shape[1], dtype=np.int64)) if obs.shape[1] else np.zeros(0, dtype=np.int64)
    obs_mask = (obs.astype(np.int64) * weights).sum(axis=1) if obs.shape[1] else np.zeros(len(mechanisms), np.int64)
    return PropagationTable(
        circuit.num_detectors,
        circuit.num_observables,
        mechanisms,
        np.array([m.probability for m in mechanisms], dtype=np.float64),
        np.array([m.channel for m in mechanisms], dtype=np.int64),
        indptr,
        indices,
        obs_mask.astype(np.int64),
        action,
    )


def propagate_mechanism(circuit: Circuit, mechanism: ErrorMechanism):
    """Signature of one mechanism: (detector set, observable flip mask, logical action letter)."""
    if not 0 <= mechanism.instruction_index < len(circuit.instructions):
        raise IndexError(f"no instruction at {mechanism.instruction_index}")
    if not circuit.instructions[mechanism.instruction_index].is_noise:
        raise ValueError(f"instruction {mechanism.instruction_index} is not a noise location")
    dets, obs, action = propagate_all(circuit, [mechanism])
    det_set = frozenset(int(i) for i in np.flatnonzero(dets[0]))
    mask = sum(1 << int(i) for i in np.flatnonzero(obs[0]))
    return det_set, mask, "IXYZ"[int(action[0])]


def direct_sample(circuit: Circuit, table: PropagationTable, shots: int, event_shots, event_mechs):
    """Shot-parallel frame simulation of the given error events.

    Returns ``(det_bits, obs_bits)`` as ``(shots, n)`` uint8 arrays.
    """
    frames = FrameBatch(circuit.num_qubits, shots)
    mechs = table.mechanisms
    by_ins: dict[int, list[int]] = {}
    for e, m in enumerate(event_mechs):
        by_ins.setdefault(mechs[int(m)].instruction_index, []).append(e)
    for idx, ins in enumerate(circuit.instructions):
        if ins.is_noise:
            events = by_ins.get(idx)
            if events:
                qs, cols, xs, zs = [], [], [], []
                for e in events:
                    m = mechs[int(event_mechs[e])]
                    for q, p in zip(m.qubits, m.paulis):
                        qs.append(q)
                        cols.append(int(event_shots[e]))
                        xs.append(_XB[p])
                        zs.append(_ZB[p])
                frames.inject(np.array(qs, dtype=np.int64), np.array(cols, dtype=np.int64),
                              np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8))
        elif ins.kind != "TICK":
            frames.apply(ins)
    records = frames.record_matrix()
    dets = unpack_columns(_parity_rows(records, [d.records for d in circuit.detectors]), shots)
    obs = unpack_columns(_parity_rows(records, [o.records for o in circuit.observables]), shots)
    return dets.astype(np.uint8), obs.astype(np.uint8)
