"""Monte-Carlo sampling of detector and observable bits.

Randomness is drawn per fixed-size chunk of shots from a counter-based
generator keyed by ``(seed, chunk index)``, so the bits of a given shot do
not depend on how chunks are spread over workers.
"""

from __future__ import annotations

import io
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..circuit import Circuit
from .frame import PropagationTable, direct_sample, propagation_table

CHUNK = 16384


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(chunk),))))


def chunk_bounds(shots: int, chunk_size: int = CHUNK):
    return [(c, c * chunk_size, min(shots, (c + 1) * chunk_size)) for c in range((shots + chunk_size - 1) // chunk_size)]


@dataclass
class ChannelLayout:
    """Mechanisms grouped into channels, channels grouped by total probability."""

    start: np.ndarray  # first mechanism of each channel
    count: np.ndarray  # alternatives per channel
    total: np.ndarray  # total firing probability per channel
    groups: list  # (probability, channel ids) sorted by probability

    @classmethod
    def from_table(cls, table: PropagationTable) -> "ChannelLayout":
        ch = table.channel
        if len(ch) == 0:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), [])
        starts = np.flatnonzero(np.r_[True, ch[1:] != ch[:-1]])
        counts = np.diff(np.r_[starts, len(ch)])
        totals = np.add.reduceat(table.probabilities, starts)
        groups = []
        keyed = np.round(totals, 15)
        for p in np.unique(keyed):
            if p <= 0:
                continue
            ids = np.flatnonzero(keyed == p)
            groups.append((float(totals[ids[0]]), ids))
        return cls(starts, counts, totals, groups)


def sample_events(layout: ChannelLayout, shots: int, rng: np.random.Generator):
    """Return ``(shot, mechanism)`` arrays of fired error events, sorted by shot."""
    all_shots, all_mechs = [], []
    for p, ids in layout.groups:
        k = len(ids)
        trials = k * shots
        if p >= 1.0:
            pos = np.arange(trials, dtype=np.int64)
        else:
            expected = trials * p
            n_draw = int(expected + 6 * math.sqrt(expected) + 16)
            gaps = rng.geometric(p, size=n_draw)
            pos = np.cumsum(gaps, dtype=np.int64) - 1
            while pos[-1] < trials:
                more = np.cumsum(rng.geometric(p, size=n_draw), dtype=np.int64) + pos[-1]
                pos = np.concatenate([pos, more])
            pos = pos[pos < trials]
        shot = pos // k
        chan = ids[pos % k]
        alt = np.floor(rng.random(len(pos)) * layout.count[chan]).astype(np.int64)
        all_shots.append(shot)
        all_mechs.append(layout.start[chan] + alt)
    if not all_shots:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    s = np.concatenate(all_shots)
    m = np.concatenate(all_mechs)
    order = np.lexsort((m, s))
    return s[order], m[order]


def table_sample(table: PropagationTable, shots: int, event_shots, event_mechs):
    """XOR the precomputed signatures of the fired mechanisms into per-shot bits."""
    nd = table.num_detectors
    lens = table.det_indptr[event_mechs + 1] - table.det_indptr[event_mechs]
    rows = np.repeat(event_shots, lens)
    starts = np.repeat(table.det_indptr[event_mechs] - np.cumsum(np.r_[0, lens[:-1]]), lens)
    cols = table.det_indices[starts + np.arange(lens.sum())] if lens.sum() else np.zeros(0, np.int64)
    counts = np.bincount(rows * nd + cols, minlength=shots * nd) if nd else np.zeros(0, np.int64)
    dets = (counts.reshape(shots, nd) & 1).astype(np.uint8)
    no = table.num_observables
    obs = np.zeros((shots, no), dtype=np.uint8)
    for o in range(no):
        flips = (table.obs_mask[event_mechs] >> o) & 1
        obs[:, o] = np.bincount(event_shots, weights=flips, minlength=shots).astype(np.int64) & 1
    return dets, obs


def bloch_vector(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


@dataclass
class ShotBatch:
    detectors: np.ndarray  # (shots, num_detectors) uint8
    observables: np.ndarray  # (shots, num_observables) uint8
    seed: int
    chunk_size: int = CHUNK
    accepted: np.ndarray | None = None
    outcomes: np.ndarray | None = None  # measured logical bit (0 means +1), injection runs only
    meta: dict = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return self.detectors.shape[0]

    def chunk_of(self, shot: int) -> int:
        return shot // self.chunk_size

    def to_csv(self) -> str:
        buf = io.StringIO()
        nd, no = self.detectors.shape[1], self.observables.shape[1]
        head = ["shot"] + [f"D{i}" for i in range(nd)] + [f"L{i}" for i in range(no)]
        if self.accepted is not None:
            head += ["accepted", "outcome"]
        buf.write(",".join(head) + "\n")
        for s in range(self.shots):
            row = [str(s)] + [str(int(v)) for v in self.detectors[s]] + [str(int(v)) for v in self.observables[s]]
            if self.accepted is not None:
                row += [str(int(self.accepted[s])), str(1 - 2 * int(self.outcomes[s]))]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_bytes(self) -> bytes:
        """Header ``<4sIQIIIQI`` then packed little-endian bit rows."""
        inj = self.accepted is not None
        header = struct.pack("<4sIQIIIQI", b"HHQS", 1, self.shots, self.detectors.shape[1],
                             self.observables.shape[1], int(inj), int(self.seed), self.chunk_size)
        parts = [header, _pack_rows(self.detectors), _pack_rows(self.observables)]
        if inj:
            parts += [_pack_rows(self.accepted[:, None].astype(np.uint8)), _pack_rows(self.outcomes[:, None])]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ShotBatch":
        size = struct.calcsize("<4sIQIIIQI")
        magic, version, shots, nd, no, inj, seed, chunk = struct.unpack("<4sIQIIIQI", data[:size])
        if magic != b"HHQS" or version != 1:
            raise ValueError("not a shot batch file")
        off = size
        dets, off = _unpack_rows(data, off, shots, nd)
        obs, off = _unpack_rows(data, off, shots, no)
        acc = out = None
        if inj:
            acc, off = _unpack_rows(data, off, shots, 1)
            out, off = _unpack_rows(data, off, shots, 1)
            acc, out = acc[:, 0].astype(bool), out[:, 0]
        return cls(dets, obs, seed, chunk, acc, out)


def _pack_rows(bits: np.ndarray) -> bytes:
    n = bits.shape[1]
    w = (n + 63) // 64
    padded = np.zeros((bits.shape[0], w * 64), dtype=np.uint8)
    padded[:, :n] = bits
    return np.packbits(padded, axis=1, bitorder="little").astype("<u1").tobytes()


def _unpack_rows(data: bytes, off: int, rows: int, n: int):
    w = (n + 63) // 64
    nbytes = rows * w * 8
    raw = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=off).reshape(rows, w * 8)
    bits = np.unpackbits(raw, axis=1, bitorder="little")[:, :n]
    return bits.astype(np.uint8), off + nbytes


def _sample_chunk(args):
    table, layout, seed, chunk, n, injected, method, circuit = args
    rng = chunk_rng(seed, chunk)
    es, em = sample_events(layout, n, rng)
    if method == "direct":
        dets, obs = direct_sample(circuit, table, n, es, em)
    else:
        dets, obs = table_sample(table, n, es, em)
    ref = None
    if injected is not None:
        # reference logical outcome: bit 0 (+1) with probability (1 + <B>) / 2
        ref = (rng.random(n) >= (1.0 + injected) / 2.0).astype(np.uint8)
    return dets, obs, ref


def _run_chunks(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_sample_chunk(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sample_chunk, jobs))


def frame_sample(circuit: Circuit, shots: int, seed: int, table: PropagationTable | None = None,
                 method: str = "table", workers: int = 1, chunk_size: int = CHUNK) -> ShotBatch:
    if shots < 1:
        raise ValueError("shots must be positive")
    if circuit.prep_arb() is not None:
        raise ValueError("circuit has a non-stabilizer preparation; use injected_frame_sample")
    if table is None:
        table = propagation_table(circuit)
    layout = ChannelLayout.from_table(table)
    jobs = [(table, layout, seed, c, hi - lo, None, method, circuit) for c, lo, hi in chunk_bounds(shots, chunk_size)]
    res = _run_chunks(jobs, workers)
    return ShotBatch(np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res]), seed, chunk_size)


def expected_outcome(circuit: Circuit) -> float:
    """``<B>`` of the injected single-qubit state for the circuit's measured basis."""
    theta, phi = circuit.meta["theta"], circuit.meta["phi"]
    return float(bloch_vector(theta, phi)["XYZ".index(circuit.meta["basis"])])


def injected_frame_sample(circuit: Circuit, shots: int, seed: int, table: PropagationTable | None = None,
                          method: str = "table", workers: int = 1, chunk_size: int = CHUNK) -> ShotBatch:
    """Sample an injection circuit: acceptance flags and logical outcome bits.

    The noiseless logical outcome is drawn from the injected state's
    expectation value and flipped by the observable bit of the Pauli frame.
    """
    if circuit.meta.get("kind") != "injection":
        raise ValueError("not an injection circuit")
    if shots < 1:
        raise ValueError("shots must be positive")
    if table is None:
        table = propagation_table(circuit)
    layout = ChannelLayout.from_table(table)
    ev = expected_outcome(circuit)
    jobs = [(table, layout, seed, c, hi - lo, ev, method, circuit) for c, lo, hi in chunk_bounds(shots, chunk_size)]
    res = _run_chunks(jobs, workers)
    dets = np.concatenate([r[0] for r in res])
    obs = np.concatenate([r[1] for r in res])
    ref = np.concatenate([r[2] for r in res])
    accepted = ~dets.any(axis=1)
    outcomes = (ref ^ obs[:, 0]).astype(np.uint8)
    return ShotBatch(dets, obs, seed, chunk_size, accepted, outcomes, {"expected": ev})
