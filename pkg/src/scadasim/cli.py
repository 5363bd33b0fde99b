"""Command-line interface: generate, inject, detect, verify."""
import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__, kernels
from .attacks import AttackError, parse_spec, inject
from .capture import read_labels, read_pcap, write_labels, write_pcap
from .detectors import discover, run_all, write_report
from .netstack import PacketError, checksums_valid, parse_packet
from .process import PUMP_RATE
from .scenario import ConfigError, load_config, preset, run, sha256_file
from .sidechannel import SAMPLE_RATE, read_sidechannel_csv, read_wav


def cmd_generate(args):
    if args.config:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed).validate()
    else:
        config = preset(args.preset, args.seed or 0)
    out = args.out or config.name
    start = time.perf_counter()
    result = run(config, out)
    summary = dict(result.summary)
    summary["runtime_s"] = round(time.perf_counter() - start, 3)
    summary["output_dir"] = os.path.abspath(out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_inject(args):
    records = read_pcap(args.input)
    try:
        specs = [parse_spec(s) for s in args.attack]
        for i, spec in enumerate(specs, start=1):
            records = inject(records, spec, i)
    except AttackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_pcap(args.output, records)
    if args.labels:
        write_labels(args.labels, records)
    counts = {}
    for r in records:
        counts[r.attack_name] = counts.get(r.attack_name, 0) + 1
    print(json.dumps({"packets": len(records), "labels": counts}, sort_keys=True))
    return 0


def cmd_detect(args):
    report = run_all(args.dir)
    write_report(report, args.report)
    for entry in report["attacks"]:
        print(f"{entry['detector']:16s} {entry['name']:20s} precision={entry['precision']:.2f} "
              f"recall={entry['recall']:.2f}")
    for name, entry in report["detectors"].items():
        if not entry["targets"]:
            print(f"{name:16s} {'(no target)':20s} flags={entry['flags']}")
    return 0


def verify_directory(directory):
    """Re-validate a dataset directory; returns a list of problem strings."""
    problems = []
    files = discover(directory)
    for path in files["pcap"] + files["clean_pcap"]:
        name = os.path.basename(path)
        try:
            records = read_pcap(path)
        except ValueError as exc:
            problems.append(str(exc))
            continue
        last = -1
        for i, rec in enumerate(records):
            if rec.ts_us <= last:
                problems.append(f"{name}: packet {i} timestamp not increasing")
            last = rec.ts_us
            try:
                parse_packet(rec.data)
                if not checksums_valid(rec.data):
                    problems.append(f"{name}: packet {i} has a bad checksum")
            except PacketError as exc:
                problems.append(f"{name}: packet {i}: {exc}")
    if files["labels"]:
        rows = read_labels(files["labels"])
        records = sorted((r for p in files["pcap"] for r in read_pcap(p)), key=lambda r: r.ts_us)
        if len(rows) != len(records):
            problems.append(f"labels: {len(rows)} rows for {len(records)} packets")
        else:
            for row, rec in zip(rows, records):
                if row["ts_us"] != rec.ts_us:
                    problems.append(f"labels: row {row['packet_index']} timestamp mismatch")
                    break
        expected = 0
        for row in rows:
            if row["opcua_index"] is not None:
                if row["opcua_index"] != expected:
                    problems.append(f"labels: opcua_index not dense at row {row['packet_index']}")
                    break
                expected += 1
            if (row["attack_id"] == 0) != (row["attack_name"] == "benign"):
                problems.append(f"labels: inconsistent attack fields at row {row['packet_index']}")
                break
    if files["sidechannel"]:
        t, flow, temp = read_sidechannel_csv(files["sidechannel"])
        if len(t) > 1 and not np.allclose(np.diff(t), 0.1, atol=1e-6):
            problems.append("sidechannel: rows are not at 10 Hz")
        if not np.all((flow == 0.0) | (flow == PUMP_RATE)):
            problems.append("sidechannel: flow outside {0, pump rate}")
        if len(temp) and np.ptp(temp) >= 1.0:
            problems.append("sidechannel: temperature range reaches 1 degC")
    if files["wav"]:
        try:
            samples, rate = read_wav(files["wav"])
            if rate != SAMPLE_RATE:
                problems.append(f"wav: sample rate {rate}")
        except ValueError as exc:
            problems.append(str(exc))
    summaries = [p for p in os.listdir(directory) if p.endswith("_summary.json")]
    for s in summaries:
        with open(os.path.join(directory, s)) as fh:
            summary = json.load(fh)
        for name, meta in summary.get("files", {}).items():
            path = os.path.join(directory, name)
            if "sha256" in meta and os.path.exists(path) and sha256_file(path) != meta["sha256"]:
                problems.append(f"{name}: sha256 differs from {s}")
    return problems


def cmd_verify(args):
    problems = verify_directory(args.dir)
    for p in problems:
        print(f"FAIL {p}")
    if not problems:
        print(f"OK {os.path.abspath(args.dir)}")
    return 1 if problems else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="scadasim", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"scadasim {__version__} (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run a preset or config file and write the dataset")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["ds1", "ds2", "ds3"])
    src.add_argument("--config", help="JSON scenario config")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", help="output directory (default: scenario name)")
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("inject", help="apply synthetic attacks to an existing capture")
    i.add_argument("--in", dest="input", required=True)
    i.add_argument("--out", dest="output", required=True)
    i.add_argument("--attack", nargs="+", required=True, help="e.g. zero:1500:1700 halffreq:3000:3500")
    i.add_argument("--labels", help="also write a labels CSV")
    i.set_defaults(func=cmd_inject)

    d = sub.add_parser("detect", help="run the baseline detectors and write a JSON report")
    d.add_argument("--dir", required=True)
    d.add_argument("--report", required=True)
    d.set_defaults(func=cmd_detect)

    v = sub.add_parser("verify", help="re-validate checksums, labels and side channels")
    v.add_argument("--dir", required=True)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
