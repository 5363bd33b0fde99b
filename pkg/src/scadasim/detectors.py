"""Baseline detectors over published artifacts, plus window-level scoring.

Every detector takes file paths only, never simulator objects.
"""
import glob
import json
import os

import numpy as np

from .capture import opcua_payload, read_labels, read_pcap
from .codec import NodeId, Service
from .netstack import ACK, SYN, ETH_ARP, OPCUA_PORT, PacketError, parse_packet
from .sidechannel import band_power, read_sidechannel_csv, read_wav

US = 1_000_000
SPECTRAL = {"frame_s": 1.0, "hop_s": 0.5, "dry_band_hz": [250.0, 350.0],
            "pump_band_hz": [500.0, 600.0], "ratio_db": 6.0}
FLOW = {"tolerance_lpm": 0.5, "hold_s": 5.0}
PERIOD = {"window_s": 120.0, "baseline_s": 600.0, "chunk_s": 20.0, "min_slope_lpm": 0.2,
          "ratio": 1.8}
RECON = {"arp_per_s": 5, "syn_targets": 2, "syn_window_s": 10.0, "cluster_gap_s": 10.0}
IOU_MIN = 0.8


# ---------------------------------------------------------------- helpers

def _merge(spans, gap=0.0):
    out = []
    for a, b in sorted(spans):
        if out and a <= out[-1][1] + gap:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(s) for s in out]


def iou(a, b):
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = max(a[1], b[1]) - min(a[0], b[0])
    return inter / union if union > 0 else float(a == b)


def _read_captures(paths):
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    records = []
    for p in paths:
        records.extend(read_pcap(p))
    records.sort(key=lambda r: r.ts_us)
    return records


def reported_series(pcap_paths, node):
    """(times s, values) of ``node`` from server ReadResponses, time-ordered."""
    ts, vals = [], []
    for rec in _read_captures(pcap_paths):
        frame = opcua_payload(rec.data)
        if frame is None or frame.msg_type != "MSG" or frame.service != Service.READ_RESPONSE:
            continue
        if parse_packet(rec.data).sport != OPCUA_PORT:
            continue
        values = frame.values
        if node in values:
            ts.append(rec.ts_us / US)
            vals.append(float(values[node]))
    return np.array(ts), np.array(vals)


# ---------------------------------------------------------------- detectors

def detect_spectral(wav_path, frame_s=SPECTRAL["frame_s"], hop_s=SPECTRAL["hop_s"],
                    dry_band=SPECTRAL["dry_band_hz"], pump_band=SPECTRAL["pump_band_hz"],
                    ratio_db=SPECTRAL["ratio_db"]):
    """Time ranges whose dry-run band power exceeds the pump band by ``ratio_db``."""
    x, fs = read_wav(wav_path)
    n = int(round(frame_s * fs))
    hop = int(round(hop_s * fs))
    flagged = []
    for start in range(0, len(x) - n + 1, hop):
        seg = x[start:start + n]
        dry = band_power(seg, fs, *dry_band)
        pump = band_power(seg, fs, *pump_band)
        if dry > 0 and 10.0 * np.log10(dry / max(pump, 1e-30)) > ratio_db:
            flagged.append((start / fs, (start + n) / fs))
    return _merge(flagged)


def detect_flow_mismatch(pcap_paths, csv_path, tolerance=FLOW["tolerance_lpm"], hold_s=FLOW["hold_s"]):
    """Ranges where reported B102 and the physical flow disagree for at least ``hold_s``."""
    t_rep, v_rep = reported_series(pcap_paths, NodeId.B102)
    t_csv, flow, _ = read_sidechannel_csv(csv_path)
    if len(t_rep) == 0 or len(t_csv) == 0:
        raise ValueError("no reported or physical flow samples")
    dt = float(np.median(np.diff(t_csv))) if len(t_csv) > 1 else 0.1
    lo, hi = t_csv[0], t_csv[-1] + dt
    if t_rep[-1] < lo or t_rep[0] >= hi:
        raise ValueError("capture and side-channel time ranges do not overlap")
    inside = (t_rep >= lo) & (t_rep < hi)
    t_rep, v_rep = t_rep[inside], v_rep[inside]
    rows = np.floor((t_rep - t_csv[0]) / dt + 1e-9).astype(int)
    bad = np.abs(v_rep - flow[rows]) > tolerance
    runs = []
    start = None
    for i, b in enumerate(bad):
        if b and start is None:
            start = i
        if start is not None and (not b or i == len(bad) - 1):
            end = i if b else i - 1
            runs.append((float(t_rep[start]), float(t_rep[end])))
            start = None
    runs = _merge(runs, gap=hold_s)
    return [r for r in runs if r[1] - r[0] >= hold_s]


def _slope(t, v):
    tc = t - t.mean()
    den = np.dot(tc, tc)
    return float(np.dot(tc, v - v.mean()) / den) * 60.0 if den > 0 else 0.0


def detect_period_doubling(pcap_paths, window_s=PERIOD["window_s"], baseline_s=PERIOD["baseline_s"],
                           chunk_s=PERIOD["chunk_s"], min_slope=PERIOD["min_slope_lpm"],
                           ratio=PERIOD["ratio"]):
    """Ranges where the level changes at least ``ratio`` times slower than the baseline.

    The level ramps are linear, so a slowed-down (period-doubled) replay shows
    up as halved ramp slopes. Slopes come from 20 s least-squares fits; a
    chunk counts as dilated when the same-sign baseline median slope divided
    by its slope reaches ``ratio``, and a majority vote over ``window_s``
    smooths the decision.
    """
    t, level = reported_series(pcap_paths, NodeId.B101)
    if len(t) < 3 or t[-1] - t[0] < baseline_s + window_s:
        raise ValueError("level series too short for a baseline and one analysis window")
    t0 = t[0]
    n_chunks = int((t[-1] - t0) // chunk_s) + 1
    idx = ((t - t0) // chunk_s).astype(int)
    spans, slopes = [], []
    for c in range(n_chunks):
        sel = idx == c
        spans.append((t0 + c * chunk_s, t0 + (c + 1) * chunk_s))
        slopes.append(_slope(t[sel], level[sel]) if sel.sum() >= 3 else 0.0)
    slopes = np.array(slopes)
    informative = np.abs(slopes) >= min_slope
    base = np.array([s[1] <= t0 + baseline_s for s in spans]) & informative
    up = slopes[base & (slopes > 0)]
    down = slopes[base & (slopes < 0)]
    if len(up) == 0 or len(down) == 0:
        raise ValueError("level series too short for one period in the baseline")
    ref_up, ref_down = np.median(up), np.median(down)
    dilated = np.zeros(n_chunks, dtype=bool)
    for c in np.nonzero(informative)[0]:
        ref = ref_up if slopes[c] > 0 else ref_down
        dilated[c] = ref / slopes[c] >= ratio
    centers = np.array([(a + b) / 2 for a, b in spans])
    half = window_s / 2
    flagged = []
    for c in np.nonzero(informative)[0]:
        near = informative & (np.abs(centers - centers[c]) <= half)
        if dilated[near].sum() * 2 > near.sum():
            flagged.append(c)
    out = []
    for c in flagged:
        if out and not informative[out[-1][1] + 1:c].any():
            out[-1][1] = c
        else:
            out.append([c, c])
    return [(spans[a][0], spans[b][1]) for a, b in out]


def detect_recon(pcap_paths, arp_per_s=RECON["arp_per_s"], syn_targets=RECON["syn_targets"],
                 syn_window_s=RECON["syn_window_s"], cluster_gap_s=RECON["cluster_gap_s"]):
    """Ranges of scanning activity: ARP bursts or SYNs fanning out to several hosts.

    Returns (t0, t1, source ip) where the range spans the cluster of packets
    sent by the triggering source.
    """
    arp = {}
    syn = {}
    sent = {}
    for rec in _read_captures(pcap_paths):
        try:
            pkt = parse_packet(rec.data)
        except PacketError:
            continue
        t = rec.ts_us / US
        src = pkt.arp_sender_ip if pkt.ethertype == ETH_ARP else pkt.src_ip
        if src is None:
            continue
        sent.setdefault(src, []).append(t)
        if pkt.ethertype == ETH_ARP and pkt.arp_op == 1:
            arp.setdefault(src, []).append(t)
        elif pkt.flags is not None and pkt.flags & SYN and not pkt.flags & ACK:
            syn.setdefault(src, []).append((t, pkt.dst_ip))
    triggers = []
    for src, times in arp.items():
        times = np.array(times)
        for i, t in enumerate(times):
            if np.searchsorted(times, t + 1.0, side="left") - i > arp_per_s:
                triggers.append((t, src))
                break
    for src, items in syn.items():
        for i, (t, _) in enumerate(items):
            targets = {d for u, d in items[i:] if u < t + syn_window_s}
            if len(targets) > syn_targets:
                triggers.append((t, src))
                break
    out = []
    for t_trig, src in triggers:
        times = np.array(sent[src])
        k = int(np.searchsorted(times, t_trig))
        a = b = k
        while a > 0 and times[a] - times[a - 1] <= cluster_gap_s:
            a -= 1
        while b < len(times) - 1 and times[b + 1] - times[b] <= cluster_gap_s:
            b += 1
        out.append((float(times[a]), float(times[b]), src))
    merged = {}
    for a, b, src in out:
        merged.setdefault(src, []).append((a, b))
    return sorted((a, b, src) for src, spans in merged.items() for a, b in _merge(spans))


# ---------------------------------------------------------------- scoring

def labeled_time_spans(labels_path):
    """attack_name -> (first ts, last ts) in seconds over labeled rows."""
    spans = {}
    for row in read_labels(labels_path):
        if row["attack_id"] == 0:
            continue
        t = row["ts_us"] / US
        a, b = spans.get(row["attack_name"], (t, t))
        spans[row["attack_name"]] = (min(a, t), max(b, t))
    return spans


def dry_plateau(span, csv_path):
    """Part of ``span`` where the physical flow is zero (pump running dry)."""
    t, flow, _ = read_sidechannel_csv(csv_path)
    dt = float(np.median(np.diff(t)))
    sel = (t >= span[0]) & (t <= span[1]) & (flow == 0.0)
    if not sel.any():
        return None
    return (float(t[sel][0]), float(t[sel][-1] + dt))


def score(detected, targets, iou_min=IOU_MIN):
    """Window-level precision/recall with one-to-one IoU matching."""
    detected = [tuple(d[:2]) for d in detected]
    used = set()
    matched_targets = 0
    for tgt in targets:
        best, best_iou = None, 0.0
        for j, d in enumerate(detected):
            if j not in used and iou(d, tgt) > best_iou:
                best, best_iou = j, iou(d, tgt)
        if best is not None and best_iou >= iou_min:
            used.add(best)
            matched_targets += 1
    precision = len(used) / len(detected) if detected else 1.0
    recall = matched_targets / len(targets) if targets else 1.0
    return precision, recall


TARGETS = {
    "spectral": ("dry_run_pump",),
    "flow_mismatch": ("dry_run_pump", "valve_stuck_open", "forged_values"),
    # a forged replay slowed below real time shows the same signature
    "period_doubling": ("half_frequency", "forged_values"),
    "recon": ("recon_sweep",),
}
THRESHOLDS = {"spectral": SPECTRAL, "flow_mismatch": FLOW, "period_doubling": PERIOD, "recon": RECON,
              "iou_min": IOU_MIN}


def _csv_kind(path):
    with open(path) as fh:
        head = fh.readline().strip()
    if head == "t_s,true_flow_lpm,true_temp_c":
        return "sidechannel"
    if head.startswith("packet_index,"):
        return "labels"
    return None


def discover(directory):
    """Classify dataset files in a directory by content/extension.

    Captures named ``*clean*`` are clean references. Among the rest a
    ``*combined*`` capture is used alone when present; otherwise all are merged.
    """
    files = {"pcap": [], "clean_pcap": [], "labels": None, "sidechannel": None, "wav": None}
    for path in sorted(glob.glob(os.path.join(directory, "*"))):
        name = os.path.basename(path)
        if name.endswith(".pcap"):
            files["clean_pcap" if "clean" in name else "pcap"].append(path)
        elif name.endswith(".wav"):
            files["wav"] = path
        elif name.endswith(".csv"):
            kind = _csv_kind(path)
            if kind:
                files[kind] = path
    combined = [p for p in files["pcap"] if "combined" in os.path.basename(p)]
    if combined:
        files["pcap"] = combined
    if not files["pcap"]:
        files["pcap"], files["clean_pcap"] = files["clean_pcap"], []
    return files


def _entry(detector, spans, targets_by_name, skipped=None):
    targets = [s for s in targets_by_name.values()]
    precision, recall = score(spans, targets)
    out = {"detector": detector, "detected_spans": [list(s) for s in spans],
           "flags": len(spans), "precision": precision, "recall": recall,
           "targets": {k: list(v) for k, v in targets_by_name.items()}}
    if skipped:
        out["skipped"] = skipped
    return out


def run_all(directory):
    """Run every applicable detector on a dataset directory; returns the report dict."""
    files = discover(directory)
    labeled = labeled_time_spans(files["labels"]) if files["labels"] else {}
    detectors = {}
    attacks = []

    def targets_for(name):
        out = {}
        for attack in TARGETS[name]:
            if attack in labeled:
                span = labeled[attack]
                if name == "spectral" and files["sidechannel"]:
                    span = dry_plateau(span, files["sidechannel"])
                if span is not None:
                    out[attack] = span
        return out

    if files["pcap"]:
        detectors["recon"] = _entry("recon", [s[:2] for s in detect_recon(files["pcap"])],
                                    targets_for("recon"))
        try:
            spans = detect_period_doubling(files["pcap"])
            detectors["period_doubling"] = _entry("period_doubling", spans, targets_for("period_doubling"))
        except ValueError as exc:
            detectors["period_doubling"] = _entry("period_doubling", [], {}, skipped=str(exc))
        if files["sidechannel"]:
            detectors["flow_mismatch"] = _entry(
                "flow_mismatch", detect_flow_mismatch(files["pcap"], files["sidechannel"]),
                targets_for("flow_mismatch"))
    if files["wav"]:
        detectors["spectral"] = _entry("spectral", detect_spectral(files["wav"]), targets_for("spectral"))

    for name, entry in detectors.items():
        for attack, span in entry["targets"].items():
            hits = [s for s in entry["detected_spans"] if iou(s, span) >= IOU_MIN]
            attacks.append({
                "name": attack, "detector": name, "labeled_span": span,
                "detected_spans": [s for s in entry["detected_spans"] if iou(s, span) > 0],
                "precision": entry["precision"], "recall": 1.0 if hits else 0.0,
            })
    clean = {}
    if files["clean_pcap"]:
        clean["recon"] = [list(s[:2]) for s in detect_recon(files["clean_pcap"])]
        try:
            clean["period_doubling"] = [list(s) for s in detect_period_doubling(files["clean_pcap"])]
        except ValueError as exc:
            clean["period_doubling_skipped"] = str(exc)
    unmatched = {n for n in labeled if not any(n in TARGETS[d] for d in detectors)}
    return {
        "directory": os.path.abspath(directory),
        "attacks": attacks,
        "detectors": detectors,
        "clean_reference": clean,
        "undetected_by_design": sorted(unmatched),
        "thresholds": THRESHOLDS,
    }


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
