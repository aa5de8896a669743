import json
import math

import pytest
from hypothesis import given, strategies as st

from heavyhex_qec.builders import build_memory_circuit
from heavyhex_qec.circuit import Circuit, CircuitError, Instruction
from heavyhex_qec.noise import NoiseModel, apply_noise, calibrated_preset, enumerate_mechanisms


def test_zero_noise_adds_nothing(memory_z3):
    noisy = apply_noise(memory_z3, NoiseModel.uniform(0.0))
    assert not noisy.is_noisy
    assert noisy.without_noise() == memory_z3
    assert enumerate_mechanisms(noisy) == []


def test_single_cx_two_qubit_channel():
    c = Circuit(2, (Instruction("CX", (0, 1)), Instruction("TICK")))
    noisy = apply_noise(c, NoiseModel(p2=0.015))
    chans = [ins for ins in noisy.instructions if ins.is_noise]
    assert [ins.kind for ins in chans] == ["NOISE_2Q"]
    mechs = enumerate_mechanisms(noisy)
    assert len(mechs) == 15
    assert all(math.isclose(m.probability, 0.001) for m in mechs)
    assert len({(m.qubits, m.paulis) for m in mechs}) == 15


@pytest.mark.parametrize("kind,args,count,each", [
    ("NOISE_1Q", (0.03,), 3, 0.01),
    ("NOISE_2Q", (0.03,), 15, 0.002),
    ("FLIP_ERROR", (0.03, "X"), 1, 0.03),
])
def test_mechanism_expansion(kind, args, count, each):
    targets = (0, 1) if kind == "NOISE_2Q" else (0,)
    c = Circuit(2, (Instruction(kind, targets, args),))
    mechs = enumerate_mechanisms(c)
    assert len(mechs) == count
    assert all(math.isclose(m.probability, each) for m in mechs)
    assert len({m.channel for m in mechs}) == 1


def _hand_count(circuit):
    """Mechanisms expected from counting gate, SPAM and idle locations layer by layer."""
    layers = circuit.layers()
    span = {}
    for li, layer in enumerate(layers):
        for ins in layer:
            for q in ins.targets:
                lo, _ = span.get(q, (li, li))
                span[q] = (lo, li)
    total = 0
    for li, layer in enumerate(layers):
        busy = set()
        for ins in layer:
            busy.update(ins.targets)
            if ins.kind == "CX":
                total += 15 * len(ins.targets) // 2
            elif ins.kind in ("H", "PREP_ARB"):
                total += 3 * len(ins.targets)
            else:  # resets and measurements
                total += len(ins.targets)
        total += 3 * sum(1 for q, (lo, hi) in span.items() if lo < li < hi and q not in busy)
    return total


@pytest.mark.parametrize("basis", ["Z", "X"])
def test_mechanism_count_matches_location_count(layout3, basis):
    c = build_memory_circuit(layout3, basis, 1)
    assert len(enumerate_mechanisms(apply_noise(c, NoiseModel.uniform(1e-3)))) == _hand_count(c)


def test_calibrated_preset_values():
    preset = calibrated_preset()
    assert preset.p_spam == 0.016
    assert preset.p2 == 0.0029


def test_preset_override_removes_single_qubit_gate_noise(memory_z3):
    noisy = apply_noise(memory_z3, calibrated_preset(p1=0.0, p_idle=0.0))
    kinds = {ins.kind for ins in noisy.instructions if ins.is_noise}
    assert kinds == {"NOISE_2Q", "FLIP_ERROR"}


def test_flip_letters_follow_basis(layout3):
    noisy = apply_noise(build_memory_circuit(layout3, "X", 1), NoiseModel(p_spam=0.01))
    for pos, ins in enumerate(noisy.instructions):
        if ins.kind == "FLIP_ERROR":
            nxt = [i for i in noisy.instructions[pos:] if not i.is_noise and set(i.targets) & set(ins.targets)]
            prev = [i for i in noisy.instructions[:pos] if not i.is_noise and set(i.targets) & set(ins.targets)]
            anchor = (prev[-1] if prev and prev[-1].kind.startswith("RESET") else nxt[0])
            assert ins.args[1] == ("Z" if anchor.kind.endswith("_X") else "X")


def test_noise_model_validation_and_json():
    with pytest.raises(ValueError):
        NoiseModel(p1=-0.1)
    with pytest.raises(ValueError):
        NoiseModel.from_json(json.dumps({"p1": 0.1, "bogus": 1}))
    m = NoiseModel(1e-3, 2e-3, 3e-3, 4e-3)
    assert NoiseModel.from_json(m.to_json()) == m
    assert m.scaled(2.0) == NoiseModel(2e-3, 4e-3, 6e-3, 8e-3)
    assert NoiseModel.uniform(0).is_zero and not m.is_zero


@given(st.floats(0, 1), st.floats(0, 10))
def test_scaling_stays_a_probability(p, f):
    s = NoiseModel.uniform(p).scaled(f)
    assert 0 <= s.p1 <= 1 and s.p1 == min(1.0, p * f)


def test_already_noisy_circuit_rejected(memory_z3):
    noisy = apply_noise(memory_z3, NoiseModel.uniform(1e-3))
    with pytest.raises(CircuitError):
        apply_noise(noisy, NoiseModel.uniform(1e-3))
