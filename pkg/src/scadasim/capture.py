"""Packet records, ground-truth labels, and pcap / labels-CSV I/O."""
from dataclasses import dataclass, replace
import csv
import struct

from .codec import try_decode
from .netstack import PacketError, parse_packet

PCAP_MAGIC = 0xA1B2C3D4
PCAP_GLOBAL = struct.Struct("<IHHiIII")
PCAP_RECORD = struct.Struct("<IIII")
SNAPLEN = 65535
LINKTYPE_ETHERNET = 1
BASE_EPOCH = 1535760000  # 2018-09-01T00:00:00Z, capture start
LABEL_FIELDS = ("packet_index", "opcua_index", "ts_us", "src_ip", "dst_ip", "proto",
                "attack_id", "attack_name")
BENIGN = "benign"


@dataclass(frozen=True)
class AttackLabel:
    attack_id: int
    name: str
    scenario: int
    # (start, end) inclusive; unit given by span_unit
    span: tuple
    span_unit: str  # "opcua_index", "packet_index" or "time_s"

    def as_dict(self):
        return {"attack_id": self.attack_id, "name": self.name, "scenario": self.scenario,
                "span": list(self.span), "span_unit": self.span_unit}


@dataclass(frozen=True)
class PacketRecord:
    ts_us: int
    data: bytes
    opcua_index: int = None
    attack_id: int = 0
    attack_name: str = BENIGN

    def labeled(self, attack_id, name):
        return replace(self, attack_id=attack_id, attack_name=name)


def opcua_payload(data):
    """The decoded application Frame carried by a packet, or None."""
    try:
        pkt = parse_packet(data)
    except PacketError:
        return None
    if pkt.tcp_offset is None or not pkt.payload:
        return None
    return try_decode(pkt.payload)


def finalize(raw, start_us=0):
    """Turn (ts_us, bytes[, attack_id, attack_name]) items into ordered records.

    Items are sorted stably by time; ties and out-of-order stamps are pushed
    forward by 1 us so timestamps are unique. OPC UA packets get a dense index.
    """
    out = []
    last = start_us - 1
    index = 0
    for item in sorted(raw, key=lambda r: r[0]):
        ts, data = item[0], item[1]
        ts = max(int(ts), last + 1)
        last = ts
        opcua = None
        if opcua_payload(data) is not None:
            opcua, index = index, index + 1
        rec = PacketRecord(ts, bytes(data), opcua)
        if len(item) > 2 and item[2]:
            rec = rec.labeled(item[2], item[3])
        out.append(rec)
    return out


def reindex(records):
    """Recompute dense opcua_index over a record list (after splitting a capture)."""
    out = []
    index = 0
    for rec in records:
        opcua = None
        if opcua_payload(rec.data) is not None:
            opcua, index = index, index + 1
        out.append(replace(rec, opcua_index=opcua))
    return out


def write_pcap(path, records, base_epoch=BASE_EPOCH):
    last = None
    try:
        with open(path, "wb") as fh:
            fh.write(PCAP_GLOBAL.pack(PCAP_MAGIC, 2, 4, 0, 0, SNAPLEN, LINKTYPE_ETHERNET))
            for rec in records:
                if last is not None and rec.ts_us < last:
                    raise ValueError(f"records not time-ordered at ts_us={rec.ts_us}")
                last = rec.ts_us
                sec, usec = divmod(rec.ts_us, 1_000_000)
                n = len(rec.data)
                fh.write(PCAP_RECORD.pack(base_epoch + sec, usec, min(n, SNAPLEN), n))
                fh.write(rec.data[:SNAPLEN])
    except OSError as exc:
        raise OSError(f"cannot write pcap {path}: {exc}") from exc


def read_pcap(path, base_epoch=BASE_EPOCH):
    """Read a classic little-endian pcap written by write_pcap into records."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read pcap {path}: {exc}") from exc
    if len(blob) < PCAP_GLOBAL.size:
        raise ValueError(f"{path}: truncated pcap global header")
    magic, major, minor, _, _, _, linktype = PCAP_GLOBAL.unpack_from(blob, 0)
    if magic != PCAP_MAGIC or (major, minor) != (2, 4) or linktype != LINKTYPE_ETHERNET:
        raise ValueError(f"{path}: not a little-endian Ethernet pcap v2.4")
    raw = []
    pos = PCAP_GLOBAL.size
    while pos < len(blob):
        if pos + PCAP_RECORD.size > len(blob):
            raise ValueError(f"{path}: truncated record header at offset {pos}")
        sec, usec, incl, _ = PCAP_RECORD.unpack_from(blob, pos)
        pos += PCAP_RECORD.size
        if pos + incl > len(blob):
            raise ValueError(f"{path}: truncated packet at offset {pos}")
        raw.append(((sec - base_epoch) * 1_000_000 + usec, blob[pos:pos + incl]))
        pos += incl
    out = []
    index = 0
    for ts, data in raw:
        opcua = None
        if opcua_payload(data) is not None:
            opcua, index = index, index + 1
        out.append(PacketRecord(ts, data, opcua))
    return out


def _row(i, rec):
    try:
        pkt = parse_packet(rec.data)
        src = pkt.src_ip if pkt.src_ip else pkt.arp_sender_ip
        dst = pkt.dst_ip if pkt.dst_ip else pkt.arp_target_ip
        proto = "OPCUA" if rec.opcua_index is not None else pkt.proto
    except PacketError:
        src = dst = ""
        proto = "OTHER"
    return [i, "" if rec.opcua_index is None else rec.opcua_index, rec.ts_us, src or "",
            dst or "", proto, rec.attack_id, rec.attack_name]


def write_labels(path, records):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LABEL_FIELDS)
            for i, rec in enumerate(records):
                writer.writerow(_row(i, rec))
    except OSError as exc:
        raise OSError(f"cannot write labels {path}: {exc}") from exc


def read_labels(path):
    """Label rows as dicts with integer fields converted (opcua_index may be None)."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != LABEL_FIELDS:
                raise ValueError(f"{path}: unexpected label header {reader.fieldnames}")
            rows = []
            for row in reader:
                row["packet_index"] = int(row["packet_index"])
                row["opcua_index"] = int(row["opcua_index"]) if row["opcua_index"] else None
                row["ts_us"] = int(row["ts_us"])
                row["attack_id"] = int(row["attack_id"])
                rows.append(row)
            return rows
    except OSError as exc:
        raise OSError(f"cannot read labels {path}: {exc}") from exc


def apply_labels(records, rows):
    """Attach label rows (aligned by packet index) to records."""
    if len(rows) != len(records):
        raise ValueError(f"{len(rows)} label rows for {len(records)} packets")
    return [rec.labeled(row["attack_id"], row["attack_name"]) for rec, row in zip(records, rows)]


def label_spans(rows, unit="packet_index"):
    """Map attack_name -> (first, last) of ``unit`` over labeled rows."""
    spans = {}
    for row in rows:
        if row["attack_id"] == 0:
            continue
        value = row[unit] if unit != "time_s" else row["ts_us"] / 1e6
        if value is None:
            continue
        lo, hi = spans.get(row["attack_name"], (value, value))
        spans[row["attack_name"]] = (min(lo, value), max(hi, value))
    return spans
