"""Syndrome-extraction, memory and injection circuit builders.

Builders emit a flat list of operations in program order.  A list scheduler
then packs them into TICK layers: every operation goes to the earliest layer
after the previous operation on each of its qubits (so the unfold of one
sub-round overlaps the fold of the next one where qubits allow), and
preparation operations are afterwards pushed as late as possible so freshly
reset qubits do not sit idle.  Measurement record indices are assigned after
scheduling, so detectors refer to measurements by key.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import MEASURES, Circuit, Detector, Instruction, Observable, validate
from .lattice import LatticeLayout, InjectionLayout, UnsupportedDistanceError, injection_layout

SCHEDULES = ("compact", "asap", "sequential", "overlap")
_LAYER_ORDER = ("RESET_Z", "RESET_X", "PREP_ARB", "H", "CX", "MEASURE_Z", "MEASURE_X", "MEASURE_Y")


@dataclass
class _Op:
    kind: str
    targets: tuple
    args: tuple = ()
    key: object = None
    prep: bool = False


def _schedule(num_qubits: int, ops: list[_Op], alap_prep: bool = True):
    """Pack ``ops`` into layers; return (instructions, {key: record index}).

    A ``BARRIER`` op occupies no layer; later ops start no earlier than its
    optional argument's number of layers before the end of everything so far.
    """
    free = [0] * num_qubits
    layer_of = []
    for op in ops:
        if op.kind == "BARRIER":
            # args: how many trailing layers the next block may share
            top = max(free) - (op.args[0] if op.args else 0)
            free = [max(f, top) for f in free]
            layer_of.append(-1)
            continue
        lay = max(free[q] for q in op.targets)
        layer_of.append(lay)
        for q in op.targets:
            free[q] = lay + 1

    # push preparation chains right up against the next use of their qubit
    per_qubit: dict[int, list[int]] = {}
    for i, op in enumerate(ops):
        if op.kind == "BARRIER":
            continue
        for q in op.targets:
            per_qubit.setdefault(q, []).append(i)
    for q, idx in per_qubit.items():
        nxt = None
        for i in reversed(idx):
            op = ops[i]
            if op.prep and alap_prep and len(op.targets) == 1:
                if nxt is not None:
                    layer_of[i] = nxt - 1
                nxt = layer_of[i]
            else:
                nxt = layer_of[i]

    depth = max(layer_of) + 1 if layer_of else 0
    buckets: list[list[int]] = [[] for _ in range(depth)]
    for i, lay in enumerate(layer_of):
        if lay >= 0:
            buckets[lay].append(i)

    instructions: list[Instruction] = []
    records: dict = {}
    n_meas = 0
    for li, bucket in enumerate(buckets):
        if not bucket:
            continue
        for kind in _LAYER_ORDER:
            chosen = [ops[i] for i in bucket if ops[i].kind == kind]
            if not chosen:
                continue
            if kind == "PREP_ARB":
                for op in chosen:
                    instructions.append(Instruction(kind, op.targets, op.args))
                continue
            targets = tuple(q for op in chosen for q in op.targets)
            instructions.append(Instruction(kind, targets))
            if kind in MEASURES:
                for op in chosen:
                    records[op.key] = n_meas
                    n_meas += 1
        instructions.append(Instruction("TICK"))
    return instructions, records


def subround_ops(layout: LatticeLayout, subgroup: str, tag=None) -> list[_Op]:
    """Operations of one sub-round: reset, fold, measure, unfold.

    Measurement keys are ``(tag, stabilizer_index)``.
    """
    if subgroup not in ("A", "B"):
        raise ValueError(f"subgroup must be 'A' or 'B', got {subgroup!r}")
    stabs = [(i, s) for i, s in enumerate(layout.stabilizers) if s.subgroup == subgroup]
    # weight-one and bottom stabilizers are read without folding
    rows = sorted({s.plaquette_row for _, s in stabs if s.boundary_kind in ("bulk", "side")
                   or s.weight_class == "four"})
    folds = [f for r in rows for f in layout.folds[r]]

    ops: list[_Op] = []
    for _, s in stabs:
        if s.syndrome is not None:
            ops.append(_Op("RESET_Z", (s.syndrome,), prep=True))
            if s.pauli == "X":
                ops.append(_Op("H", (s.syndrome,), prep=True))
    for f in folds:
        ops.append(_Op("RESET_Z", (f.bridge,), prep=True))

    def fold_layers():
        for f in folds:
            ops.append(_Op("CX", (f.upper, f.bridge)))
        for f in folds:
            ops.append(_Op("CX", (f.bridge, f.lower)))
        for f in folds:
            ops.append(_Op("CX", (f.upper, f.bridge)))

    fold_layers()
    width = max((len(s.readout) for _, s in stabs if s.syndrome is not None), default=0)
    for k in range(width):
        for _, s in stabs:
            if s.syndrome is None or k >= len(s.readout):
                continue
            q = s.readout[k]
            pair = (q, s.syndrome) if s.pauli == "Z" else (s.syndrome, q)
            ops.append(_Op("CX", pair))
    for i, s in stabs:
        if s.syndrome is None:
            ops.append(_Op("MEASURE_Z", (s.readout[0],), key=(tag, i)))
        else:
            if s.pauli == "X":
                ops.append(_Op("H", (s.syndrome,)))
            ops.append(_Op("MEASURE_Z", (s.syndrome,), key=(tag, i)))
    fold_layers()
    return ops


def build_subround(layout: LatticeLayout, subgroup: str) -> Circuit:
    ops = subround_ops(layout, subgroup, tag=0)
    instructions, _ = _schedule(layout.num_qubits, ops)
    return Circuit(layout.num_qubits, tuple(instructions))


def _init_ops(basis_of: dict[int, str]) -> list[_Op]:
    return [_Op("RESET_Z" if b == "Z" else "RESET_X", (q,), prep=True) for q, b in sorted(basis_of.items())]


def build_memory_circuit(layout: LatticeLayout, basis: str = "Z", rounds: int = 1,
                         schedule: str = "sequential") -> Circuit:
    if basis not in ("Z", "X"):
        raise ValueError(f"memory basis must be 'Z' or 'X', got {basis!r}")
    if isinstance(rounds, bool) or int(rounds) != rounds or rounds < 1:
        raise ValueError(f"rounds must be a positive integer, got {rounds!r}")
    rounds = int(rounds)
    init = {q: basis for q in layout.grid_data_qubits}
    init.update({q: "Z" for q in layout.extra_qubits})
    final = dict(init)

    ops = _init_ops(init)
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")
    for k in range(rounds):
        for sub in "AB":
            if schedule in ("sequential", "overlap"):
                ops.append(_Op("BARRIER", (), (2 if schedule == "overlap" and ops else 0,)))
            ops += subround_ops(layout, sub, tag=k)
    if schedule in ("sequential", "overlap"):
        ops.append(_Op("BARRIER", ()))
    for q, b in sorted(final.items()):
        ops.append(_Op("MEASURE_" + b, (q,), key=("final", q)))
    instructions, rec = _schedule(layout.num_qubits, ops, alap_prep=schedule == "compact")

    detectors = []
    for i, s in enumerate(layout.stabilizers):
        if all(init[q] == s.pauli for q in s.support):
            detectors.append(Detector(f"{s.pauli}.s{i}.r0", (rec[(0, i)],)))
        for k in range(1, rounds):
            detectors.append(Detector(f"{s.pauli}.s{i}.r{k}", (rec[(k - 1, i)], rec[(k, i)])))
        if all(final[q] == s.pauli for q in s.support):
            recs = (rec[(rounds - 1, i)],) + tuple(rec[("final", q)] for q in s.support)
            detectors.append(Detector(f"{s.pauli}.s{i}.f", recs))
    logical = layout.logical_z if basis == "Z" else layout.logical_x
    observables = [Observable(0, tuple(rec[("final", q)] for q in logical.support))]
    circuit = Circuit(layout.num_qubits, tuple(instructions), tuple(detectors), tuple(observables),
                      {"kind": "memory", "d": layout.d, "basis": basis, "rounds": rounds})
    validate(circuit, layout.edges)
    return circuit


def build_injection_circuit(layout: LatticeLayout, inj: InjectionLayout | None = None,
                            theta: float = 0.0, phi: float = 0.0, meas_basis: str = "Z") -> Circuit:
    """Inject ``U3(theta, phi, 0)|0>`` at the center and read one logical Pauli.

    Detectors cover the boundary stabilizers whose support starts in their own
    eigenbasis: each one's sub-round outcome, and (except weight-one ones) the
    parity of its final data measurements.  The extra top qubits are read only
    by their weight-one stabilizer measurement, which doubles as the final
    data readout.
    """
    if layout.d != 3:
        raise UnsupportedDistanceError("state injection is only defined at distance 3")
    if meas_basis not in ("X", "Y", "Z"):
        raise ValueError(f"measurement basis must be X, Y or Z, got {meas_basis!r}")
    if inj is None:
        inj = injection_layout(layout)
    c = inj.center
    extras = set(layout.extra_qubits)

    ops = _init_ops(inj.init_basis)
    ops.append(_Op("PREP_ARB", (c,), (float(theta), float(phi)), prep=True))
    ops += subround_ops(layout, "A", tag=0)
    ops += subround_ops(layout, "B", tag=0)
    for q in layout.grid_data_qubits:
        b = meas_basis if q == c else inj.init_basis[q]
        ops.append(_Op("MEASURE_" + b, (q,), key=("final", q)))
    instructions, rec = _schedule(layout.num_qubits, ops)

    one_of = {s.support[0]: i for i, s in enumerate(layout.stabilizers) if s.weight_class == "one"}

    def final_rec(q):
        return rec[(0, one_of[q])] if q in extras else rec[("final", q)]

    detectors = []
    for i, s in enumerate(layout.stabilizers):
        if not all(inj.init_basis.get(q) == s.pauli for q in s.support):
            continue
        detectors.append(Detector(f"{s.pauli}.s{i}.r0", (rec[(0, i)],)))
        if s.weight_class != "one":
            detectors.append(Detector(f"{s.pauli}.s{i}.f", tuple(final_rec(q) for q in s.support)))

    if meas_basis == "Z":
        support = layout.logical_z.support
    elif meas_basis == "X":
        support = layout.logical_x.support
    else:
        support = tuple(sorted(set(layout.logical_x.support) | set(layout.logical_z.support)))
    observables = [Observable(0, tuple(final_rec(q) for q in support))]
    meta = {"kind": "injection", "d": 3, "center": c, "theta": float(theta), "phi": float(phi),
            "basis": meas_basis, "logical_x": layout.logical_x.support, "logical_z": layout.logical_z.support}
    circuit = Circuit(layout.num_qubits, tuple(instructions), tuple(detectors), tuple(observables), meta)
    validate(circuit, layout.edges)
    return circuit


# qubit indices of the 7-qubit validation patch
PATCH_QUBITS = {"c": 0, "a": 1, "b": 2, "e": 3, "sZ": 4, "sX": 5, "sB": 6}


def build_validation_patch(theta: float = 0.0, phi: float = 0.0, meas_basis: str = "Z") -> Circuit:
    """Small injection-like circuit for checking the samplers against dense simulation.

    Data ``c`` (injected), ``a`` in ``|+>``, ``b`` and ``e`` in ``|0>``.  Measured
    stabilizers: ``Z_c Z_a Z_e``, ``X_c X_b X_e`` and ``Z_b Z_e``; the last one
    starts deterministic.  Logicals ``Z_c Z_b`` and ``X_c X_a``.
    """
    if meas_basis not in ("X", "Y", "Z"):
        raise ValueError(f"measurement basis must be X, Y or Z, got {meas_basis!r}")
    c, a, b, e, sz, sx, sb = range(7)
    ops = [
        _Op("RESET_X", (a,), prep=True), _Op("RESET_Z", (b,), prep=True), _Op("RESET_Z", (e,), prep=True),
        _Op("PREP_ARB", (c,), (float(theta), float(phi)), prep=True),
        _Op("RESET_Z", (sz,), prep=True), _Op("RESET_Z", (sx,), prep=True), _Op("H", (sx,), prep=True),
        _Op("RESET_Z", (sb,), prep=True),
    ]
    ops += [_Op("CX", (q, sz)) for q in (c, a, e)]
    ops += [_Op("CX", (sx, q)) for q in (c, b, e)]
    ops += [_Op("CX", (q, sb)) for q in (b, e)]
    ops += [_Op("MEASURE_Z", (sz,), key="sZ"), _Op("H", (sx,)), _Op("MEASURE_Z", (sx,), key="sX"),
            _Op("MEASURE_Z", (sb,), key="sB")]
    ops += [_Op("MEASURE_" + meas_basis, (c,), key="c"), _Op("MEASURE_X", (a,), key="a"),
            _Op("MEASURE_Z", (b,), key="b"), _Op("MEASURE_Z", (e,), key="e")]
    instructions, rec = _schedule(7, ops)
    detectors = [
        Detector("Z.sB.r0", (rec["sB"],)),
        Detector("Z.sB.f", (rec["sB"], rec["b"], rec["e"])),
    ]
    obs_keys = {"Z": ("c", "b"), "X": ("c", "a"), "Y": ("c", "a", "b")}[meas_basis]
    observables = [Observable(0, tuple(rec[k] for k in obs_keys))]
    meta = {"kind": "injection", "center": c, "theta": float(theta), "phi": float(phi), "basis": meas_basis,
            "logical_x": (c, a), "logical_z": (c, b)}
    circuit = Circuit(7, tuple(instructions), tuple(detectors), tuple(observables), meta)
    validate(circuit)
    return circuit
