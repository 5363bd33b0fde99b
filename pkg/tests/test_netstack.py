import dpkt
from hypothesis import given, settings, strategies as st
import pytest

from scadasim.capture import (PacketRecord, finalize, label_spans, read_labels, read_pcap, write_labels,
                              write_pcap)
from scadasim.codec import NodeId, build_read_request, encode_frame
from scadasim.netstack import (ACK, FIN, PSH, RST, SYN, ConnectionClosed, Host, MAC_PREFIX, PacketError,
                               arp_sweep, checksums_valid, parse_packet, replace_tcp_payload, syn_probe,
                               TcpSession)


def hosts():
    plc = Host("plc", MAC_PREFIX + b"\x01", "192.168.5.51", ttl=30)
    hmi = Host("hmi", MAC_PREFIX + b"\x02", "192.168.5.21")
    return plc, hmi


def test_handshake_flags_and_numbers():
    plc, hmi = hosts()
    s = TcpSession(hmi, plc, 50000, 4840, 1000, 9000)
    pkts = [parse_packet(d) for _, d in s.handshake(0)]
    assert [p.flags for p in pkts] == [SYN, SYN | ACK, ACK]
    assert pkts[0].seq == 1000 and pkts[0].ack == 0
    assert pkts[1].seq == 9000 and pkts[1].ack == 1001
    assert pkts[2].seq == 1001 and pkts[2].ack == 9001


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1),
       st.lists(st.tuples(st.booleans(), st.binary(min_size=1, max_size=200)), max_size=20))
def test_sequence_numbers_advance_by_payload(cisn, sisn, sends):
    plc, hmi = hosts()
    s = TcpSession(hmi, plc, 50000, 4840, cisn, sisn)
    s.handshake(0)
    sent = {True: 0, False: 0}
    for i, (from_client, payload) in enumerate(sends):
        _, data = s.send(from_client, payload, 1000 + i)
        p = parse_packet(data)
        isn = cisn if from_client else sisn
        assert p.seq == (isn + 1 + sent[from_client]) & 0xFFFFFFFF
        assert p.flags == PSH | ACK and p.payload == payload
        assert checksums_valid(data)
        sent[from_client] += len(payload)
    fin = [parse_packet(d) for _, d in s.close(10**6)]
    assert fin[0].flags == FIN | ACK and fin[-1].flags == ACK
    assert fin[-1].src_ip == hmi.ip
    assert fin[-1].ack == (sisn + 2 + sent[False]) & 0xFFFFFFFF


def test_closed_session_raises():
    plc, hmi = hosts()
    s = TcpSession(hmi, plc, 50000, 4840, 1, 2)
    with pytest.raises(ConnectionClosed):
        s.send(True, b"x", 0)
    s.handshake(0)
    s.close(1)
    with pytest.raises(ConnectionClosed):
        s.send(True, b"x", 2)
    with pytest.raises(ValueError):
        TcpSession(hmi, hmi, 1, 2, 3, 4)


def test_ttl_and_ip_id_increment():
    plc, hmi = hosts()
    s = TcpSession(hmi, plc, 50000, 4840, 1, 2)
    recs = s.handshake(0)
    assert recs[1][1][14 + 8] == 30
    ids = [int.from_bytes(d[18:20], "big") for _, d in recs]
    assert ids[0] + 1 == ids[2]


def test_syn_probe_replies():
    plc, hmi = hosts()
    scanner = Host("x", MAC_PREFIX + b"\x03", "192.168.5.66")
    open_ = [parse_packet(d) for _, d in syn_probe(scanner, plc, 40000, 4840, 77, 0, True, 500)]
    closed = [parse_packet(d) for _, d in syn_probe(scanner, hmi, 40000, 4840, 77, 0, False)]
    assert open_[1].flags == SYN | ACK and open_[1].ack == 78
    assert closed[1].flags == RST | ACK


def test_arp_sweep_counts():
    scanner = Host("x", MAC_PREFIX + b"\x03", "192.168.5.66")
    live = {h.ip: h for h in [Host(n, MAC_PREFIX + bytes([i]), f"192.168.5.{o}")
                              for i, (n, o) in enumerate([("a", 12), ("b", 21), ("c", 51)], 10)]}
    live[scanner.ip] = scanner
    records, responders = arp_sweep(scanner, live, 0, 50_000)
    pkts = [parse_packet(d) for _, d in records]
    requests = [p for p in pkts if p.arp_op == 1]
    assert len(requests) == 254 and len(records) == 257
    assert [h.ip for h in responders] == ["192.168.5.12", "192.168.5.21", "192.168.5.51"]
    assert not any(p.arp_sender_ip == "192.168.5.200" for p in pkts if p.arp_op == 2)
    with pytest.raises(ValueError):
        arp_sweep(scanner, live, 0, 0)


def test_replace_payload_keeps_length_and_checksum():
    plc, hmi = hosts()
    s = TcpSession(hmi, plc, 50000, 4840, 1, 2)
    s.handshake(0)
    _, data = s.send(True, b"abcd", 10)
    new = replace_tcp_payload(data, b"wxyz")
    assert len(new) == len(data) and checksums_valid(new)
    assert new[14:34] == data[14:34]
    with pytest.raises(PacketError):
        replace_tcp_payload(data, b"toolong")


def test_parse_errors():
    with pytest.raises(PacketError):
        parse_packet(b"\x00" * 10)


def sample_records():
    plc, hmi = hosts()
    s = TcpSession(hmi, plc, 50000, 4840, 1, 2)
    raw = s.handshake(0)
    raw.append(s.send(True, encode_frame(build_read_request([NodeId.B101], 1)), 1000))
    raw.append((1000, s.ack(False, 1000)[1], 3, "zero_values"))
    return finalize(raw)


def test_finalize_unique_times_and_index():
    recs = sample_records()
    assert [r.ts_us for r in recs] == [0, 150, 300, 1000, 1001]
    assert [r.opcua_index for r in recs] == [None, None, None, 0, None]
    assert recs[-1].attack_name == "zero_values"


def test_empty_pcap_is_global_header_only(tmp_path):
    path = tmp_path / "empty.pcap"
    write_pcap(path, [])
    assert path.stat().st_size == 24
    assert read_pcap(path) == []


def test_pcap_round_trip_and_dpkt(tmp_path):
    recs = sample_records()
    path = tmp_path / "x.pcap"
    write_pcap(path, recs)
    back = read_pcap(path)
    assert [(r.ts_us, r.data, r.opcua_index) for r in back] == [(r.ts_us, r.data, r.opcua_index) for r in recs]
    with open(path, "rb") as fh:
        seen = [(ts, buf) for ts, buf in dpkt.pcap.Reader(fh)]
    assert len(seen) == len(recs)
    for (ts, buf), rec in zip(seen, recs):
        eth = dpkt.ethernet.Ethernet(buf)
        assert isinstance(eth.data.data, dpkt.tcp.TCP)
        assert buf == rec.data


def test_write_pcap_rejects_disorder(tmp_path):
    with pytest.raises(ValueError):
        write_pcap(tmp_path / "x.pcap", [PacketRecord(5, b""), PacketRecord(4, b"")])


def test_labels_round_trip(tmp_path):
    recs = sample_records()
    path = tmp_path / "l.csv"
    write_labels(path, recs)
    rows = read_labels(path)
    assert [r["ts_us"] for r in rows] == [r.ts_us for r in recs]
    assert rows[3]["proto"] == "OPCUA" and rows[0]["proto"] == "TCP"
    assert label_spans(rows) == {"zero_values": (4, 4)}
