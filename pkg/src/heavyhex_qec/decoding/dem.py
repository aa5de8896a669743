"""Detector error models and their decomposition into graph-like pieces."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..circuit import Circuit
from ..sim.frame import PropagationTable, propagation_table


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class DemMechanism:
    probability: float
    detectors: tuple[int, ...]
    observables: int  # flip mask
    # graph-like pieces whose XOR is the full signature; each carries the full probability
    components: tuple[tuple[tuple[int, ...], int], ...] = ()


@dataclass
class DetectorErrorModel:
    num_detectors: int
    num_observables: int
    mechanisms: list[DemMechanism]
    detector_basis: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "detectors": self.num_detectors,
            "observables": self.num_observables,
            "detector_basis": self.detector_basis,
            "mechanisms": [
                {
                    "p": m.probability,
                    "dets": list(m.detectors),
                    "obs": [i for i in range(self.num_observables) if (m.observables >> i) & 1],
                    "components": [{"dets": list(d), "obs": [i for i in range(self.num_observables) if (o >> i) & 1]}
                                   for d, o in m.components],
                }
                for m in self.mechanisms
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "DetectorErrorModel":
        doc = json.loads(text)
        nd, no = int(doc["detectors"]), int(doc["observables"])
        mechs = []
        for m in doc["mechanisms"]:
            dets = tuple(sorted(int(d) for d in m["dets"]))
            if any(not 0 <= d < nd for d in dets):
                raise ValueError(f"mechanism references a missing detector: {dets}")
            obs = sum(1 << int(o) for o in m.get("obs", []))
            comps = tuple((tuple(sorted(c["dets"])), sum(1 << int(o) for o in c.get("obs", [])))
                          for c in m.get("components", []))
            mechs.append(DemMechanism(float(m["p"]), dets, obs, comps or ((dets, obs),)))
        return cls(nd, no, mechs, list(doc.get("detector_basis", [])))

    def merged_components(self) -> dict[tuple[tuple[int, ...], int], float]:
        """Graph-like pieces with probabilities merged by independent XOR combination."""
        out: dict = {}
        for m in self.mechanisms:
            for comp in m.components:
                q = out.get(comp, 0.0)
                out[comp] = q * (1 - m.probability) + m.probability * (1 - q)
        return out


def xor_merge(p1: float, p2: float) -> float:
    return p1 * (1 - p2) + p2 * (1 - p1)


def _split_xz(paulis: str) -> tuple[str, str]:
    xs = "".join("X" if p in "XY" else "I" for p in paulis)
    zs = "".join("Z" if p in "ZY" else "I" for p in paulis)
    return xs, zs


def build_dem(circuit_or_table, detector_basis: list[str] | None = None) -> DetectorErrorModel:
    if isinstance(circuit_or_table, Circuit):
        table = propagation_table(circuit_or_table)
        detector_basis = [d.basis for d in circuit_or_table.detectors]
    else:
        table = circuit_or_table
    if detector_basis is None:
        raise ValueError("detector bases are needed to decompose a propagation table")
    pieces = decompose_table(table, detector_basis)
    merged: dict = {}
    order = []
    for i, comps in enumerate(pieces):
        if comps is None:
            continue
        key = (table.detectors_of(i), int(table.obs_mask[i]))
        p = float(table.probabilities[i])
        if key in merged:
            merged[key] = (xor_merge(merged[key][0], p), merged[key][1])
        else:
            merged[key] = (p, comps)
            order.append(key)
    mechs = [DemMechanism(merged[k][0], k[0], k[1], merged[k][1]) for k in order]
    return DetectorErrorModel(table.num_detectors, table.num_observables, mechs, list(detector_basis))


def decompose_table(table: PropagationTable, detector_basis: list[str]):
    """Graph-like decomposition per mechanism (``None`` for mechanisms with no effect)."""
    n = len(table.mechanisms)
    sigs = [(table.detectors_of(i), int(table.obs_mask[i])) for i in range(n)]

    def graphlike(dets):
        return len(dets) <= 2 and len({detector_basis[d] for d in dets}) <= 1

    known: dict[tuple[int, ...], set[int]] = {}
    for dets, obs in sigs:
        if dets and graphlike(dets):
            known.setdefault(dets, set()).add(obs)

    def lookup(i, paulis):
        # the X or Z part of a channel alternative is another alternative of the same channel
        m = table.mechanisms[i]
        qs = tuple(q for q, p in zip(m.qubits, paulis) if p != "I")
        ps = "".join(p for p in paulis if p != "I")
        if not qs:
            return None
        for j in range(i - 15, i + 15):
            if 0 <= j < n:
                mj = table.mechanisms[j]
                if mj.channel == m.channel and mj.qubits == qs and mj.paulis == ps:
                    return j
        return None

    def split_known(dets, obs, depth=0):
        if not dets:
            return [] if obs == 0 else None
        if graphlike(dets) and obs in known.get(dets, ()):
            return [(dets, obs)]
        if depth >= 3:
            return None
        first = dets[0]
        rest = dets[1:]
        for partner in (None,) + rest:
            head = (first,) if partner is None else (first, partner)
            if head not in known:
                continue
            tail = tuple(d for d in rest if d != partner)
            for o in sorted(known[head]):
                sub = split_known(tail, obs ^ o, depth + 1)
                if sub is not None:
                    return [(head, o)] + sub
        return None

    out = []
    for i in range(n):
        dets, obs = sigs[i]
        if not dets:
            out.append(None if obs == 0 else ((dets, obs),))
            continue
        if graphlike(dets):
            out.append(((dets, obs),))
            continue
        comps = None
        m = table.mechanisms[i]
        xs, zs = _split_xz(m.paulis)
        if "X" in xs and "Z" in zs:
            jx, jz = lookup(i, xs), lookup(i, zs)
            if jx is not None and jz is not None:
                parts = []
                for j in (jx, jz):
                    dj, oj = sigs[j]
                    sub = [(dj, oj)] if (dj and graphlike(dj)) else split_known(dj, oj)
                    if sub is None:
                        parts = None
                        break
                    parts += sub
                if parts is not None:
                    comps = parts
        if comps is None:
            comps = split_known(dets, obs)
        if comps is None:
            raise DecompositionError(
                f"mechanism {i} ({m.paulis} on qubits {m.qubits} at instruction {m.instruction_index}) "
                f"with detectors {dets} has no graph-like decomposition"
            )
        comps = [c for c in comps if c[0]]
        out.append(tuple(comps))
    return out


def check_decomposition(dem: DetectorErrorModel) -> bool:
    for m in dem.mechanisms:
        acc: set[int] = set()
        obs = 0
        for dets, o in m.components:
            acc ^= set(dets)
            obs ^= o
        if tuple(sorted(acc)) != m.detectors:
            return False
        if m.detectors and obs != m.observables:
            return False
    return True


def dem_from_arrays(probabilities, detector_sets, observable_masks, num_detectors, num_observables=1):
    """Small hand-written DEMs (tests, oracles); every mechanism taken as its own component."""
    mechs = [DemMechanism(float(p), tuple(sorted(d)), int(o), ((tuple(sorted(d)), int(o)),))
             for p, d, o in zip(probabilities, detector_sets, observable_masks)]
    return DetectorErrorModel(num_detectors, num_observables, mechs, ["Z"] * num_detectors)


def detector_fire_rates(table: PropagationTable) -> np.ndarray:
    """Exact single-detector firing probabilities for independent channels."""
    nd = table.num_detectors
    # within a channel alternatives are exclusive: combine per channel first
    flip_prob = np.zeros(nd)
    chan_contrib: dict[tuple[int, int], float] = {}
    for i in range(len(table.mechanisms)):
        for d in table.detectors_of(i):
            key = (int(table.channel[i]), d)
            chan_contrib[key] = chan_contrib.get(key, 0.0) + float(table.probabilities[i])
    # P(odd) over independent channels: (1 - prod(1 - 2 q)) / 2
    prod = np.ones(nd)
    for (_, d), q in chan_contrib.items():
        prod[d] *= 1 - 2 * q
    flip_prob[:] = (1 - prod) / 2
    return flip_prob
