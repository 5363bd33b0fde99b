"""Ethernet II / ARP / IPv4 / TCP synthesis and parsing."""
from dataclasses import dataclass, field
import ipaddress
import struct

from . import kernels

ETH_IPV4 = 0x0800
ETH_ARP = 0x0806
PROTO_TCP = 6
BROADCAST_MAC = b"\xff" * 6
ZERO_MAC = b"\x00" * 6
MAC_PREFIX = bytes.fromhex("0244464B49")

OPCUA_PORT = 4840
PLC_IP = "192.168.5.51"
HMI_A_IP = "192.168.5.21"
HMI_B_IP = "192.168.5.12"
ATTACKER_IP = "192.168.5.66"
SUBNET = "192.168.5.0/24"

FIN, SYN, RST, PSH, ACK = 0x01, 0x02, 0x04, 0x08, 0x10


def ip_bytes(ip):
    return ipaddress.IPv4Address(ip).packed


def ip_str(raw):
    return str(ipaddress.IPv4Address(bytes(raw)))


def mac_str(raw):
    return ":".join(f"{b:02x}" for b in raw)


def internet_checksum(data):
    """RFC 1071 checksum of ``data`` as-is (a filled-in header sums to 0)."""
    return ~kernels.ones_complement_sum(data) & 0xFFFF


def ipv4_checksum(header):
    """Header checksum with the checksum field (bytes 10-11) treated as zero."""
    header = bytes(header)
    return internet_checksum(header[:10] + b"\x00\x00" + header[12:])


def tcp_checksum(src_ip, dst_ip, segment):
    """TCP checksum over pseudo-header + segment, checksum field treated as zero."""
    segment = bytes(segment)
    pseudo = ip_bytes(src_ip) + ip_bytes(dst_ip) + struct.pack("!BBH", 0, PROTO_TCP, len(segment))
    return internet_checksum(pseudo + segment[:16] + b"\x00\x00" + segment[18:])


@dataclass(frozen=True)
class Endpoint:
    mac: bytes
    ip: str
    port: int = 0

    def __post_init__(self):
        if len(self.mac) != 6:
            raise ValueError("MAC must be 6 bytes")
        ipaddress.IPv4Address(self.ip)
        if not 0 <= self.port <= 0xFFFF:
            raise ValueError(f"port out of range: {self.port}")


def ethernet(dst_mac, src_mac, ethertype, payload):
    return dst_mac + src_mac + struct.pack("!H", ethertype) + payload


def ipv4_packet(src_ip, dst_ip, payload, ident, ttl=64, proto=PROTO_TCP):
    header = struct.pack(
        "!BBHHHBBH4s4s", 0x45, 0, 20 + len(payload), ident & 0xFFFF, 0x4000, ttl, proto, 0,
        ip_bytes(src_ip), ip_bytes(dst_ip),
    )
    checksum = ipv4_checksum(header)
    return header[:10] + struct.pack("!H", checksum) + header[12:] + payload


def tcp_segment(src_ip, dst_ip, sport, dport, seq, ack, flags, payload=b"", window=64240):
    header = struct.pack("!HHIIBBHHH", sport, dport, seq & 0xFFFFFFFF, ack & 0xFFFFFFFF,
                         5 << 4, flags, window, 0, 0)
    segment = header + payload
    checksum = tcp_checksum(src_ip, dst_ip, segment)
    return segment[:16] + struct.pack("!H", checksum) + segment[18:]


def arp_packet(op, sender_mac, sender_ip, target_mac, target_ip):
    body = struct.pack("!HHBBH6s4s6s4s", 1, ETH_IPV4, 6, 4, op, sender_mac, ip_bytes(sender_ip),
                       target_mac, ip_bytes(target_ip))
    dst = BROADCAST_MAC if op == 1 else target_mac
    return ethernet(dst, sender_mac, ETH_ARP, body)


@dataclass
class ParsedPacket:
    eth_dst: bytes
    eth_src: bytes
    ethertype: int
    # ARP
    arp_op: int = None
    arp_sender_ip: str = None
    arp_target_ip: str = None
    # IPv4 / TCP
    src_ip: str = None
    dst_ip: str = None
    ip_header_offset: int = None
    tcp_offset: int = None
    sport: int = None
    dport: int = None
    seq: int = None
    ack: int = None
    flags: int = None
    payload_offset: int = None
    payload: bytes = b""

    @property
    def proto(self):
        if self.ethertype == ETH_ARP:
            return "ARP"
        if self.tcp_offset is not None:
            return "TCP"
        return "OTHER"


class PacketError(ValueError):
    pass


def parse_packet(data):
    data = bytes(data)
    if len(data) < 14:
        raise PacketError("short ethernet frame")
    (ethertype,) = struct.unpack_from("!H", data, 12)
    pkt = ParsedPacket(data[0:6], data[6:12], ethertype)
    if ethertype == ETH_ARP:
        if len(data) < 42:
            raise PacketError("short ARP packet")
        _, _, _, _, op, _, spa, _, tpa = struct.unpack_from("!HHBBH6s4s6s4s", data, 14)
        pkt.arp_op, pkt.arp_sender_ip, pkt.arp_target_ip = op, ip_str(spa), ip_str(tpa)
        return pkt
    if ethertype != ETH_IPV4:
        return pkt
    if len(data) < 34:
        raise PacketError("short IPv4 packet")
    vihl, _, total_len = struct.unpack_from("!BBH", data, 14)
    ihl = (vihl & 0x0F) * 4
    if vihl >> 4 != 4 or ihl < 20:
        raise PacketError("not an IPv4 header")
    if 14 + total_len != len(data):
        raise PacketError(f"IPv4 total length {total_len} disagrees with frame size {len(data)}")
    pkt.ip_header_offset = 14
    pkt.src_ip = ip_str(data[26:30])
    pkt.dst_ip = ip_str(data[30:34])
    if data[23] != PROTO_TCP:
        return pkt
    off = 14 + ihl
    if len(data) < off + 20:
        raise PacketError("short TCP header")
    sport, dport, seq, ack, doff, flags = struct.unpack_from("!HHIIBB", data, off)
    pkt.tcp_offset = off
    pkt.sport, pkt.dport, pkt.seq, pkt.ack, pkt.flags = sport, dport, seq, ack, flags
    pkt.payload_offset = off + (doff >> 4) * 4
    pkt.payload = data[pkt.payload_offset:]
    return pkt


def checksums_valid(data):
    """True when every checksum in an IPv4/TCP packet verifies (ARP: always)."""
    pkt = parse_packet(data)
    if pkt.ip_header_offset is None:
        return True
    ihl = (data[14] & 0x0F) * 4
    if internet_checksum(data[14:14 + ihl]) != 0:
        return False
    if pkt.tcp_offset is not None:
        pseudo = ip_bytes(pkt.src_ip) + ip_bytes(pkt.dst_ip) + struct.pack(
            "!BBH", 0, PROTO_TCP, len(data) - pkt.tcp_offset)
        if internet_checksum(pseudo + data[pkt.tcp_offset:]) != 0:
            return False
    return True


def replace_tcp_payload(data, new_payload):
    """Swap a same-length TCP payload and refresh the TCP checksum only."""
    pkt = parse_packet(data)
    if pkt.tcp_offset is None:
        raise PacketError("not a TCP packet")
    if len(new_payload) != len(pkt.payload):
        raise PacketError("payload length must not change")
    data = bytearray(data)
    data[pkt.payload_offset:] = new_payload
    segment = bytes(data[pkt.tcp_offset:])
    data[pkt.tcp_offset + 16:pkt.tcp_offset + 18] = struct.pack(
        "!H", tcp_checksum(pkt.src_ip, pkt.dst_ip, segment))
    return bytes(data)


@dataclass
class Host:
    name: str
    mac: bytes
    ip: str
    ttl: int = 64
    ip_id: int = 0

    def endpoint(self, port=0):
        return Endpoint(self.mac, self.ip, port)

    def next_ip_id(self):
        self.ip_id = (self.ip_id + 1) & 0xFFFF
        return self.ip_id


class ConnectionClosed(RuntimeError):
    pass


@dataclass
class TcpSession:
    """One client/server TCP connection emitting (ts_us, bytes) records.

    Every application frame rides in its own PSH+ACK segment.
    """

    client: Host
    server: Host
    client_port: int
    server_port: int
    client_isn: int
    server_isn: int
    client_seq: int = field(init=False)
    server_seq: int = field(init=False)
    open: bool = field(init=False, default=False)
    closed: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.client.ip == self.server.ip:
            raise ValueError("client and server must be distinct hosts")
        self.client_seq = self.client_isn & 0xFFFFFFFF
        self.server_seq = self.server_isn & 0xFFFFFFFF

    def _packet(self, from_client, flags, payload=b""):
        src, dst = (self.client, self.server) if from_client else (self.server, self.client)
        sport, dport = (self.client_port, self.server_port) if from_client else (
            self.server_port, self.client_port)
        seq, ack = (self.client_seq, self.server_seq) if from_client else (
            self.server_seq, self.client_seq)
        if not flags & ACK:
            ack = 0
        seg = tcp_segment(src.ip, dst.ip, sport, dport, seq, ack, flags, payload)
        ip = ipv4_packet(src.ip, dst.ip, seg, src.next_ip_id(), ttl=src.ttl)
        return ethernet(dst.mac, src.mac, ETH_IPV4, ip)

    def _advance(self, from_client, n):
        if from_client:
            self.client_seq = (self.client_seq + n) & 0xFFFFFFFF
        else:
            self.server_seq = (self.server_seq + n) & 0xFFFFFFFF

    def handshake(self, ts_us, gap_us=150):
        if self.open or self.closed:
            raise ConnectionClosed("handshake on a used connection")
        syn = self._packet(True, SYN)
        self._advance(True, 1)
        syn_ack = self._packet(False, SYN | ACK)
        self._advance(False, 1)
        ack = self._packet(True, ACK)
        self.open = True
        return [(ts_us, syn), (ts_us + gap_us, syn_ack), (ts_us + 2 * gap_us, ack)]

    def send(self, from_client, payload, ts_us):
        if not self.open or self.closed:
            raise ConnectionClosed("send on a closed connection")
        pkt = self._packet(from_client, PSH | ACK, payload)
        self._advance(from_client, len(payload))
        return (ts_us, pkt)

    def ack(self, from_client, ts_us):
        if not self.open or self.closed:
            raise ConnectionClosed("ack on a closed connection")
        return (ts_us, self._packet(from_client, ACK))

    def close(self, ts_us, gap_us=150):
        """Client-initiated FIN exchange; the client sends the final ACK."""
        if not self.open or self.closed:
            raise ConnectionClosed("close on a closed connection")
        fin1 = self._packet(True, FIN | ACK)
        self._advance(True, 1)
        fin2 = self._packet(False, FIN | ACK)
        self._advance(False, 1)
        last = self._packet(True, ACK)
        self.closed = True
        return [(ts_us, fin1), (ts_us + gap_us, fin2), (ts_us + 2 * gap_us, last)]


def syn_probe(scanner, target, sport, dport, isn, ts_us, listening, server_isn=0, gap_us=150):
    """A port probe: SYN and either SYN-ACK (listening) or RST-ACK."""
    seg = tcp_segment(scanner.ip, target.ip, sport, dport, isn, 0, SYN)
    out = [(ts_us, ethernet(target.mac, scanner.mac, ETH_IPV4,
                            ipv4_packet(scanner.ip, target.ip, seg, scanner.next_ip_id(), scanner.ttl)))]
    flags = SYN | ACK if listening else RST | ACK
    seq = server_isn if listening else 0
    seg = tcp_segment(target.ip, scanner.ip, dport, sport, seq, isn + 1, flags)
    out.append((ts_us + gap_us, ethernet(scanner.mac, target.mac, ETH_IPV4,
                                         ipv4_packet(target.ip, scanner.ip, seg, target.next_ip_id(),
                                                     target.ttl))))
    return out


def arp_sweep(scanner, hosts, t0_us, interval_us, subnet=SUBNET, reply_delay_us=180):
    """Who-has for every host address of ``subnet`` in ascending order.

    ``hosts`` maps ip -> Host for machines that answer. Returns
    (records, responders) with responders in sweep order.
    """
    if interval_us <= 0:
        raise ValueError("interval must be positive")
    records, responders = [], []
    for i, addr in enumerate(ipaddress.IPv4Network(subnet).hosts()):
        ts = t0_us + i * interval_us
        target = str(addr)
        records.append((ts, arp_packet(1, scanner.mac, scanner.ip, ZERO_MAC, target)))
        host = hosts.get(target)
        if host is not None and host.ip != scanner.ip:
            records.append((ts + reply_delay_us, arp_packet(2, host.mac, host.ip, scanner.mac, scanner.ip)))
            responders.append(host)
    return records, responders
