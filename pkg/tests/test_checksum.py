import random
import struct

import dpkt
from hypothesis import given, settings, strategies as st

from scadasim.netstack import internet_checksum, ipv4_checksum, ipv4_packet, tcp_checksum, tcp_segment


def modular_checksum(data):
    """Checksum via the mod-65535 identity of one's-complement addition."""
    if len(data) % 2:
        data += b"\x00"
    s = sum(struct.unpack(f"!{len(data) // 2}H", data))
    folded = 0 if s == 0 else (s - 1) % 0xFFFF + 1
    return 0xFFFF - folded


def check_random_headers(count, seed=0):
    """Compare header and segment checksums against two oracles; returns mismatches."""
    rnd = random.Random(seed)
    bad = 0
    for _ in range(count):
        header = bytearray(rnd.randbytes(20))
        header[0] = 0x45
        want = modular_checksum(bytes(header[:10]) + b"\0\0" + bytes(header[12:]))
        got = ipv4_checksum(header)
        if got != want or got != dpkt.in_cksum(bytes(header[:10]) + b"\0\0" + bytes(header[12:])):
            bad += 1
        src = ".".join(str(rnd.randrange(256)) for _ in range(4))
        dst = ".".join(str(rnd.randrange(256)) for _ in range(4))
        seg = rnd.randbytes(20 + rnd.randrange(1460))
        pseudo = bytes(map(int, src.split("."))) + bytes(map(int, dst.split("."))) + struct.pack(
            "!BBH", 0, 6, len(seg))
        if tcp_checksum(src, dst, seg) != modular_checksum(pseudo + seg[:16] + b"\0\0" + seg[18:]):
            bad += 1
    return bad


def test_all_zero_header():
    assert ipv4_checksum(bytes(20)) == 0xFFFF


def test_against_oracles():
    assert check_random_headers(1000, seed=3) == 0


@settings(max_examples=300)
@given(st.binary(max_size=3000))
def test_odd_and_even_lengths(data):
    assert internet_checksum(data) == modular_checksum(data)


@settings(max_examples=200)
@given(st.binary(min_size=0, max_size=1460), st.integers(0, 2**32 - 1), st.integers(0, 0xFFFF))
def test_filled_in_checksums_verify(payload, seq, ident):
    seg = tcp_segment("10.0.0.1", "10.0.0.2", 4840, 50000, seq, 0, 0x18, payload)
    pkt = ipv4_packet("10.0.0.1", "10.0.0.2", seg, ident, ttl=30)
    assert internet_checksum(pkt[:20]) == 0
    pseudo = bytes([10, 0, 0, 1, 10, 0, 0, 2]) + struct.pack("!BBH", 0, 6, len(seg))
    assert internet_checksum(pseudo + seg) == 0
    parsed = dpkt.ip.IP(pkt)
    assert parsed.sum == struct.unpack_from("!H", pkt, 10)[0]
