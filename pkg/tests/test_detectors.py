import os

import numpy as np
import pytest

from scadasim.detectors import (_merge, detect_flow_mismatch, detect_recon, detect_spectral, discover, iou,
                                run_all, score, write_report)
from scadasim.sidechannel import SAMPLE_RATE, write_wav


def test_iou_and_merge():
    assert iou((0, 10), (5, 15)) == pytest.approx(5 / 15)
    assert iou((0, 1), (2, 3)) == 0.0
    assert _merge([(5, 6), (0, 2), (1, 3)]) == [(0, 3), (5, 6)]
    assert _merge([(0, 1), (3, 4)], gap=2) == [(0, 4)]


def test_score_matching():
    assert score([(0, 10)], [(1, 10)]) == (1.0, 1.0)
    assert score([(0, 10), (50, 60)], [(1, 10)]) == (0.5, 1.0)
    assert score([(0, 3)], [(0, 10)]) == (0.0, 0.0)
    assert score([], []) == (1.0, 1.0)


def test_silence_has_no_spectral_flags(tmp_path):
    p = tmp_path / "s.wav"
    write_wav(p, np.zeros(SAMPLE_RATE * 5))
    assert detect_spectral(str(p)) == []


def test_dry_tone_is_flagged(tmp_path):
    t = np.arange(SAMPLE_RATE * 10) / SAMPLE_RATE
    x = np.where((t >= 3) & (t < 7), 0.3162 * np.sin(2 * np.pi * 300 * t), 0.1 * np.sin(2 * np.pi * 550 * t))
    p = tmp_path / "d.wav"
    write_wav(p, x)
    (span,) = detect_spectral(str(p))
    assert iou(span, (3, 7)) >= 0.8


@pytest.fixture(scope="module")
def ds3(dataset_dir):
    return dataset_dir("ds3")[0]


def test_infinite_tolerance_never_flags(ds3):
    files = discover(ds3)
    assert detect_flow_mismatch(files["pcap"], files["sidechannel"], tolerance=np.inf) == []


def test_disjoint_time_ranges_raise(ds3, tmp_path):
    files = discover(ds3)
    shifted = tmp_path / "far.csv"
    shifted.write_text("t_s,true_flow_lpm,true_temp_c\n" + "".join(
        f"{10000 + 0.1 * i:.1f},0.0,20.000000\n" for i in range(50)))
    with pytest.raises(ValueError):
        detect_flow_mismatch(files["pcap"], str(shifted))


def test_discover_classifies_ds3(ds3):
    files = discover(ds3)
    assert [os.path.basename(p) for p in files["pcap"]] == ["ds3_network.pcap"]
    assert files["wav"].endswith(".wav") and files["sidechannel"].endswith("sidechannel.csv")
    assert files["labels"].endswith("labels.csv")


def test_report_shape(ds3, tmp_path):
    report = run_all(ds3)
    assert set(report["detectors"]) == {"recon", "period_doubling", "flow_mismatch", "spectral"}
    names = {a["name"] for a in report["attacks"]}
    assert names == {"dry_run_pump", "valve_stuck_open"}
    out = tmp_path / "r.json"
    write_report(report, out)
    assert out.read_text().endswith("}\n")


def test_clean_ds2_has_no_recon(dataset_dir):
    directory, _ = dataset_dir("ds2_clean")
    assert detect_recon(discover(directory)["pcap"]) == []
