"""Encoder/decoder for the simplified OPC UA-style polling protocol.

Wire layout, all integers little-endian::

    0-2   ASCII message type: HEL, ACK, MSG or CLO
    3     chunk type, always 'F'
    4-7   u32 total frame size (header included)

    HEL   8      security mode (0x00 = None); a bare 8-byte HEL is also valid
    MSG   8      service (0x01 ReadReq, 0x02 ReadResp, 0x03 WriteReq, 0x04 WriteResp)
          9-12   u32 request handle
          13-14  u16 node count
          then per node: u16 node id, and for everything but ReadReq a u8 type
          tag (0x00 bool, 1 byte; 0x01 float32, 4 bytes) followed by the value.
    ACK, CLO carry no body.
"""
from dataclasses import dataclass
import enum
import struct

HEADER_SIZE = 8
MAX_PAYLOAD = 2**32 - 9
MSG_TYPES = ("HEL", "ACK", "MSG", "CLO")
SECURITY_NONE = 0x00

TAG_BOOL = 0x00
TAG_FLOAT = 0x01


class Service(enum.IntEnum):
    READ_REQUEST = 0x01
    READ_RESPONSE = 0x02
    WRITE_REQUEST = 0x03
    WRITE_RESPONSE = 0x04


class NodeId(enum.IntEnum):
    B101 = 101  # level of container 102, L
    B102 = 102  # flow 101 -> 102, L/min
    B103 = 103  # pressure, mbar
    B104 = 104  # temperature, degC
    S111 = 111
    S112 = 112
    B113 = 113
    B114 = 114
    M101 = 201  # pump
    M102 = 202  # ball valve
    LOW_THRESHOLD = 301
    HIGH_THRESHOLD = 302


BOOL_NODES = frozenset({NodeId.S111, NodeId.S112, NodeId.B113, NodeId.B114, NodeId.M101, NodeId.M102})
FLOAT_NODES = frozenset(NodeId) - BOOL_NODES
ALL_NODES = tuple(sorted(NodeId))
KNOWN_IDS = frozenset(int(n) for n in NodeId)


class FrameError(ValueError):
    """Raised for any malformed frame; ``cause`` names the failure."""

    def __init__(self, cause, detail=""):
        self.cause = cause
        super().__init__(f"{cause}: {detail}" if detail else cause)


@dataclass(frozen=True)
class Frame:
    msg_type: str
    service: int = 0
    handle: int = 0
    # ReadReq: tuple of node ids; ReadResp/WriteReq/WriteResp: tuple of (id, value)
    nodes: tuple = ()
    # HEL only; None means the optional mode byte is absent
    security_mode: int = SECURITY_NONE
    chunk: str = "F"

    @property
    def values(self):
        """Node values as a dict, for services that carry values."""
        return dict(self.nodes)

    @property
    def unknown_nodes(self):
        ids = self.nodes if self.service == Service.READ_REQUEST else [n for n, _ in self.nodes]
        return tuple(n for n in ids if n not in KNOWN_IDS)


def value_type(node_id):
    """Declared Python type of a known node, or None for unknown ids."""
    if node_id in BOOL_NODES:
        return bool
    if node_id in KNOWN_IDS:
        return float
    return None


def _payload(frame):
    if frame.msg_type == "HEL":
        return b"" if frame.security_mode is None else bytes([frame.security_mode])
    if frame.msg_type in ("ACK", "CLO"):
        return b""
    if frame.msg_type != "MSG":
        raise FrameError("bad magic", f"message type {frame.msg_type!r}")
    try:
        service = Service(frame.service)
    except ValueError:
        raise FrameError("unknown service", f"0x{frame.service:02x}") from None
    parts = [struct.pack("<BIH", service, frame.handle, len(frame.nodes))]
    if service == Service.READ_REQUEST:
        for node in frame.nodes:
            parts.append(struct.pack("<H", node))
    else:
        for node, value in frame.nodes:
            if isinstance(value, bool):
                parts.append(struct.pack("<HBB", node, TAG_BOOL, value))
            else:
                parts.append(struct.pack("<HBf", node, TAG_FLOAT, value))
    return b"".join(parts)


def encode_frame(frame):
    if frame.chunk != "F":
        raise FrameError("bad magic", f"chunk {frame.chunk!r}")
    payload = _payload(frame)
    if len(payload) > MAX_PAYLOAD:
        raise FrameError("payload too large", f"{len(payload)} bytes")
    return frame.msg_type.encode("ascii") + b"F" + struct.pack("<I", HEADER_SIZE + len(payload)) + payload


def decode_frame(data):
    """Parse one frame occupying all of ``data``; raises FrameError."""
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise FrameError("short buffer", f"{len(data)} bytes")
    try:
        msg_type = data[:3].decode("ascii")
    except UnicodeDecodeError:
        raise FrameError("bad magic") from None
    if msg_type not in MSG_TYPES or data[3:4] != b"F":
        raise FrameError("bad magic", repr(data[:4]))
    (size,) = struct.unpack_from("<I", data, 4)
    if size != len(data):
        raise FrameError("size mismatch", f"header says {size}, buffer has {len(data)}")
    body = data[HEADER_SIZE:]
    if msg_type == "HEL":
        if len(body) > 1:
            raise FrameError("size mismatch", "HEL body is at most 1 byte")
        return Frame("HEL", security_mode=body[0] if body else None)
    if msg_type in ("ACK", "CLO"):
        if body:
            raise FrameError("size mismatch", f"{msg_type} carries no body")
        return Frame(msg_type)
    if len(body) < 7:
        raise FrameError("short buffer", "MSG body under 7 bytes")
    service, handle, count = struct.unpack_from("<BIH", body, 0)
    if service not in Service._value2member_map_:
        raise FrameError("unknown service", f"0x{service:02x}")
    pos = 7
    nodes = []
    for _ in range(count):
        if pos + 2 > len(body):
            raise FrameError("truncated body")
        (node,) = struct.unpack_from("<H", body, pos)
        pos += 2
        if service == Service.READ_REQUEST:
            nodes.append(node)
            continue
        if pos + 1 > len(body):
            raise FrameError("truncated body")
        tag = body[pos]
        pos += 1
        if tag == TAG_BOOL:
            if pos + 1 > len(body):
                raise FrameError("truncated body")
            if body[pos] > 1:
                raise FrameError("bad value", f"boolean byte 0x{body[pos]:02x}")
            value = bool(body[pos])
            pos += 1
        elif tag == TAG_FLOAT:
            if pos + 4 > len(body):
                raise FrameError("truncated body")
            (value,) = struct.unpack_from("<f", body, pos)
            pos += 4
        else:
            raise FrameError("bad type tag", f"0x{tag:02x}")
        expected = value_type(node)
        if expected is not None and type(value) is not expected:
            raise FrameError("type mismatch", f"node {node} expects {expected.__name__}")
        nodes.append((node, value))
    if pos != len(body):
        raise FrameError("size mismatch", f"{len(body) - pos} trailing bytes")
    return Frame("MSG", service=service, handle=handle, nodes=tuple(nodes))


def try_decode(data):
    try:
        return decode_frame(data)
    except FrameError:
        return None


def _check_values(values):
    if not values:
        raise ValueError("node list must not be empty")
    items = sorted((int(n), v) for n, v in dict(values).items())
    if len(items) != len(values):
        raise ValueError("duplicate node ids")
    out = []
    for node, value in items:
        expected = value_type(node)
        if expected is bool:
            if not isinstance(value, (bool,)):
                raise TypeError(f"node {node} takes a boolean, got {value!r}")
        elif expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"node {node} takes a float, got {value!r}")
            # values travel as float32
            value = struct.unpack("<f", struct.pack("<f", value))[0]
        out.append((node, value))
    return tuple(out)


def build_read_request(nodes, handle):
    ids = sorted(int(n) for n in nodes)
    if not ids:
        raise ValueError("node list must not be empty")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate node ids")
    return Frame("MSG", Service.READ_REQUEST, handle, tuple(ids))


def build_read_response(handle, values):
    return Frame("MSG", Service.READ_RESPONSE, handle, _check_values(values))


def build_write_request(handle, writes):
    return Frame("MSG", Service.WRITE_REQUEST, handle, _check_values(writes))


def build_write_response(handle, values):
    return Frame("MSG", Service.WRITE_RESPONSE, handle, _check_values(values))


def hello(security_mode=SECURITY_NONE):
    return Frame("HEL", security_mode=security_mode)
