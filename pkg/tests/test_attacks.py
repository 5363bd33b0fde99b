from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from scadasim.attacks import (AttackError, AttackSpec, Kind, behavioral_plan, inject, inject_half_frequency,
                              inject_zero_values, packet_diff, parse_spec, value_byte_offsets)
from scadasim.capture import opcua_payload
from scadasim.codec import NodeId, Service
from scadasim.netstack import checksums_valid
from scadasim.plc import Firmware
from scadasim.scenario import ScenarioConfig, run


@pytest.fixture(scope="module")
def capture():
    return run(ScenarioConfig(name="small", duration_s=700.0)).clean


def responses(records):
    for r in records:
        f = opcua_payload(r.data)
        if f is not None and f.msg_type == "MSG" and f.service == Service.READ_RESPONSE:
            yield r, f


def test_zero_values_example(capture):
    out = inject_zero_values(capture, 100, 200)
    for r, f in responses(out):
        if 100 <= r.opcua_index <= 200:
            assert all(v in (0.0, False) for _, v in f.nodes)
            assert r.attack_name == "zero_values"
        else:
            assert r.attack_id == 0 or r.opcua_index is None


def check_minimal(before, after, lo, hi):
    diff = packet_diff(before, after)
    for pos, offsets in diff.items():
        assert before[pos].opcua_index is not None and lo <= before[pos].opcua_index <= hi
        assert set(offsets) <= value_byte_offsets(before[pos].data)
        assert len(after[pos].data) == len(before[pos].data)
        assert checksums_valid(after[pos].data)
        assert after[pos].data[14:34] == before[pos].data[14:34]
    labeled = {i for i, r in enumerate(after) if r.attack_id}
    assert set(diff) <= labeled
    return diff


def test_zero_values_is_byte_minimal(capture):
    assert check_minimal(capture, inject_zero_values(capture, 100, 200), 100, 200)


@pytest.mark.parametrize("mode", ["dilate", "halfrate"])
def test_half_frequency_is_byte_minimal(capture, mode):
    check_minimal(capture, inject_half_frequency(capture, 400, 600, mode=mode), 400, 600)


def level_series(records, lo, hi):
    return [(r.ts_us, f.values[NodeId.B101]) for r, f in responses(records) if lo <= r.opcua_index <= hi]


def test_half_frequency_dilates_time(capture):
    clean = level_series(capture, 400, 600)
    fake = level_series(inject_half_frequency(capture, 400, 600), 400, 600)
    assert fake[0] == clean[0]  # tau = 0 maps to itself
    t0 = clean[0][0]
    times = np.array([t for t, _ in clean])
    for t, v in fake:
        k = int(np.argmin(np.abs(times - (t0 + (t - t0) / 2))))
        assert v == clean[k][1]


def test_half_frequency_halves_dominant_frequency():
    recs = run(ScenarioConfig(name="long", duration_s=2460.0)).clean
    lo, hi = 2600, 4599
    clean = np.array([v for _, v in level_series(recs, lo, hi)])
    fake = np.array([v for _, v in level_series(inject_half_frequency(recs, lo, hi), lo, hi)])

    def peak_bin(x):
        spec = np.abs(np.fft.rfft(x - x.mean()))
        return int(np.argmax(spec[1:])) + 1

    assert peak_bin(fake) == pytest.approx(peak_bin(clean) / 2, abs=1)


def test_half_frequency_needs_clean_history(capture):
    with pytest.raises(AttackError):
        inject_half_frequency(capture, 10, 200)


def test_window_outside_capture(capture):
    with pytest.raises(AttackError):
        inject_zero_values(capture, 10**6, 10**6 + 5)


def test_inject_rejects_behavioral(capture):
    with pytest.raises(AttackError):
        inject(capture, AttackSpec(Kind.DRY_RUN_PUMP, (1, 2)), 1)


def test_parse_spec_examples():
    assert parse_spec("zero:1500:1700") == AttackSpec(Kind.ZERO_VALUES, (1500, 1700))
    assert parse_spec("recon:600").window == (600.0, 600.0)
    assert parse_spec("DryRun:65:215").kind is Kind.DRY_RUN_PUMP
    for bad in ["bogus:1:2", "zero:1", "zero:a:b", "zero:5:1", "recon:1:2"]:
        with pytest.raises(AttackError):
            parse_spec(bad)


@settings(max_examples=100)
@given(st.sampled_from(list(Kind)), st.integers(0, 10**6), st.integers(0, 10**6))
def test_spec_text_round_trip(kind, a, b):
    lo, hi = sorted((a, b))
    if kind is Kind.RECON_SWEEP:
        hi = lo
    spec = AttackSpec(kind, (lo, hi))
    assert parse_spec(spec.to_text()) == spec


def test_plan_orders_and_restores():
    hooks = behavioral_plan([(1, AttackSpec(Kind.DRY_RUN_PUMP, (10.0, 20.0))),
                             (2, AttackSpec(Kind.VALVE_STUCK_OPEN, (20.0, 30.0))),
                             (3, AttackSpec(Kind.RECON_SWEEP, (5.0, 5.0)))], 40.0)
    assert [(h.t, h.firmware) for h in hooks] == [
        (5.0, None), (10.0, Firmware.DRY_RUN_PUMP), (20.0, Firmware.HONEST),
        (20.0, Firmware.VALVE_STUCK_OPEN), (30.0, Firmware.HONEST)]


def test_plan_rejects_overlap_and_overrun():
    with pytest.raises(AttackError):
        behavioral_plan([(1, AttackSpec(Kind.DRY_RUN_PUMP, (10.0, 20.0))),
                         (2, AttackSpec(Kind.FORGED_VALUES, (15.0, 30.0)))])
    with pytest.raises(AttackError):
        behavioral_plan([(1, AttackSpec(Kind.DRY_RUN_PUMP, (10.0, 50.0)))], 40.0)
    with pytest.raises(AttackError):
        behavioral_plan([(1, AttackSpec(Kind.ZERO_VALUES, (1, 2)))])
