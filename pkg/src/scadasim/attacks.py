"""Attack specifications, synthetic capture rewriting, and behavioral plans."""
from dataclasses import dataclass
import bisect
import enum

from .capture import PacketRecord, opcua_payload
from .codec import Frame, Service, encode_frame
from .netstack import parse_packet, replace_tcp_payload
from .plc import Firmware


class Approach(enum.Enum):
    SYNTHETIC = "synthetic"
    BEHAVIORAL = "behavioral"


class Kind(enum.Enum):
    ZERO_VALUES = "zero"
    HALF_FREQUENCY = "halffreq"
    RECON_SWEEP = "recon"
    INVERT_PUMP_REPORT = "invertpump"
    FORGED_VALUES = "forged"
    DRY_RUN_PUMP = "dryrun"
    VALVE_STUCK_OPEN = "valveopen"


NAMES = {
    Kind.ZERO_VALUES: "zero_values",
    Kind.HALF_FREQUENCY: "half_frequency",
    Kind.RECON_SWEEP: "recon_sweep",
    Kind.INVERT_PUMP_REPORT: "invert_pump_report",
    Kind.FORGED_VALUES: "forged_values",
    Kind.DRY_RUN_PUMP: "dry_run_pump",
    Kind.VALVE_STUCK_OPEN: "valve_stuck_open",
}
SYNTHETIC_KINDS = frozenset({Kind.ZERO_VALUES, Kind.HALF_FREQUENCY})
FIRMWARE = {
    Kind.INVERT_PUMP_REPORT: Firmware.INVERTED_PUMP_REPORT,
    Kind.FORGED_VALUES: Firmware.FORGED_VALUES,
    Kind.DRY_RUN_PUMP: Firmware.DRY_RUN_PUMP,
    Kind.VALVE_STUCK_OPEN: Firmware.VALVE_STUCK_OPEN,
}


class AttackError(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    kind: Kind
    # synthetic: inclusive OPC UA index range; behavioral: seconds [t0, t1), recon: (t, t)
    window: tuple
    # forged-report replay rate; 1.0 replays the recorded cycle in real time
    replay_speed: float = 1.0
    # half-frequency reading: "dilate" (time dilation) or "halfrate" (every other value held)
    mode: str = "dilate"

    def __post_init__(self):
        lo, hi = self.window
        if hi < lo or lo < 0:
            raise AttackError(f"bad window {self.window} for {self.kind.value}")
        if self.kind is Kind.HALF_FREQUENCY and self.mode not in ("dilate", "halfrate"):
            raise AttackError(f"unknown half-frequency mode {self.mode!r}")
        if not self.replay_speed > 0:
            raise AttackError("replay_speed must be positive")

    @property
    def approach(self):
        return Approach.SYNTHETIC if self.kind in SYNTHETIC_KINDS else Approach.BEHAVIORAL

    @property
    def name(self):
        return NAMES[self.kind]

    def to_text(self):
        lo, hi = self.window
        if self.kind is Kind.RECON_SWEEP:
            return f"recon:{lo:g}"
        if self.approach is Approach.SYNTHETIC:
            return f"{self.kind.value}:{lo}:{hi}"
        return f"{self.kind.value}:{lo:g}:{hi:g}"


def parse_spec(text):
    """Parse the CLI syntax, e.g. ``zero:1500:1700``, ``recon:60``, ``dryrun:120:300``."""
    parts = text.strip().split(":")
    try:
        kind = Kind(parts[0].lower())
    except ValueError:
        raise AttackError(f"unknown attack kind in {text!r}") from None
    try:
        if kind is Kind.RECON_SWEEP:
            if len(parts) != 2:
                raise AttackError(f"expected recon:<t>, got {text!r}")
            t = float(parts[1])
            return AttackSpec(kind, (t, t))
        if len(parts) != 3:
            raise AttackError(f"expected {kind.value}:<start>:<end>, got {text!r}")
        if kind in SYNTHETIC_KINDS:
            return AttackSpec(kind, (int(parts[1]), int(parts[2])))
        return AttackSpec(kind, (float(parts[1]), float(parts[2])))
    except ValueError as exc:
        if isinstance(exc, AttackError):
            raise
        raise AttackError(f"bad number in {text!r}") from None


def _window_positions(records, lo, hi):
    """Packet positions of the first and last OPC UA packet with index in [lo, hi]."""
    inside = [i for i, r in enumerate(records) if r.opcua_index is not None and lo <= r.opcua_index <= hi]
    if not inside:
        raise AttackError(f"OPC UA index range [{lo}, {hi}] is outside the capture")
    last_index = max(r.opcua_index for r in records if r.opcua_index is not None)
    if hi > last_index:
        raise AttackError(f"OPC UA index range [{lo}, {hi}] exceeds capture (last index {last_index})")
    return inside[0], inside[-1]


def _responses(records, first, last):
    for pos in range(first, last + 1):
        frame = opcua_payload(records[pos].data)
        if frame is not None and frame.msg_type == "MSG" and frame.service == Service.READ_RESPONSE:
            yield pos, frame


def _rewrite(record, frame, values):
    nodes = tuple((node, values.get(node, value)) for node, value in frame.nodes)
    new = Frame("MSG", frame.service, frame.handle, nodes)
    return PacketRecord(record.ts_us, replace_tcp_payload(record.data, encode_frame(new)),
                        record.opcua_index, record.attack_id, record.attack_name)


def _label(records, first, last, attack_id, name):
    for pos in range(first, last + 1):
        records[pos] = records[pos].labeled(attack_id, name)


def inject_zero_values(records, lo=1500, hi=1700, attack_id=1, name=NAMES[Kind.ZERO_VALUES]):
    """Zero every value of each ReadResponse with opcua_index in [lo, hi]."""
    out = list(records)
    first, last = _window_positions(out, lo, hi)
    for pos, frame in _responses(out, first, last):
        zeros = {node: (False if isinstance(v, bool) else 0.0) for node, v in frame.nodes}
        out[pos] = _rewrite(out[pos], frame, zeros)
    _label(out, first, last, attack_id, name)
    return out


def inject_half_frequency(records, lo=3000, hi=3500, attack_id=2, name=NAMES[Kind.HALF_FREQUENCY],
                          mode="dilate"):
    """Replace response values in [lo, hi] with the clean signal slowed down by two.

    ``dilate``: the response at tau after window start carries the clean
    response nearest to tau/2. ``halfrate``: every second response repeats the
    previous one, as if values were refreshed at half the rate.
    """
    if lo < hi - lo + 1:
        raise AttackError(f"need at least {hi - lo + 1} clean OPC UA packets before index {lo}")
    out = list(records)
    first, last = _window_positions(out, lo, hi)
    window = list(_responses(records, first, last))
    if not window:
        raise AttackError("no read responses inside the window")
    if mode == "dilate":
        t0 = records[window[0][0]].ts_us
        times = [records[pos].ts_us for pos, _ in window]
        for pos, frame in window:
            target = t0 + (records[pos].ts_us - t0) / 2.0
            k = bisect.bisect_left(times, target)
            if k > 0 and (k == len(times) or target - times[k - 1] <= times[k] - target):
                k -= 1
            out[pos] = _rewrite(records[pos], frame, window[k][1].values)
    elif mode == "halfrate":
        for k, (pos, frame) in enumerate(window):
            out[pos] = _rewrite(records[pos], frame, window[k - k % 2][1].values)
    else:
        raise AttackError(f"unknown half-frequency mode {mode!r}")
    _label(out, first, last, attack_id, name)
    return out


def inject(records, spec, attack_id):
    lo, hi = spec.window
    if spec.kind is Kind.ZERO_VALUES:
        return inject_zero_values(records, lo, hi, attack_id, spec.name)
    if spec.kind is Kind.HALF_FREQUENCY:
        return inject_half_frequency(records, lo, hi, attack_id, spec.name, spec.mode)
    raise AttackError(f"{spec.kind.value} is behavioral and cannot be injected into a capture")


@dataclass(frozen=True)
class Hook:
    """A time-triggered action consumed by the scenario loop."""

    t: float
    action: str  # "firmware" or "recon"
    attack_id: int
    name: str
    firmware: Firmware = None
    replay_speed: float = 1.0


def behavioral_plan(specs, duration=None):
    """Turn behavioral specs (with attack ids) into time-ordered hooks.

    ``specs`` is a list of (attack_id, AttackSpec). Firmware windows must not
    overlap; each ends with a switch back to honest firmware.
    """
    hooks = []
    windows = []
    for attack_id, spec in specs:
        if spec.approach is not Approach.BEHAVIORAL:
            raise AttackError(f"{spec.kind.value} is synthetic-only")
        t0, t1 = spec.window
        if duration is not None and t1 > duration:
            raise AttackError(f"{spec.to_text()} ends after the scenario ({duration} s)")
        if spec.kind is Kind.RECON_SWEEP:
            hooks.append(Hook(t0, "recon", attack_id, spec.name))
            continue
        if t1 <= t0:
            raise AttackError(f"empty firmware window {spec.to_text()}")
        windows.append((t0, t1, spec))
        hooks.append(Hook(t0, "firmware", attack_id, spec.name, FIRMWARE[spec.kind], spec.replay_speed))
        hooks.append(Hook(t1, "firmware", 0, "benign", Firmware.HONEST))
    windows.sort(key=lambda w: w[0])
    for (a0, a1, sa), (b0, _, sb) in zip(windows, windows[1:]):
        if b0 < a1:
            raise AttackError(f"firmware windows overlap: {sa.to_text()} and {sb.to_text()}")
    # at equal times, switching back to honest precedes the next activation
    hooks.sort(key=lambda h: (h.t, h.action != "firmware" or h.firmware is not Firmware.HONEST))
    return hooks


def packet_diff(before, after):
    """Packet positions whose bytes differ, plus byte offsets changed per packet."""
    if len(before) != len(after):
        raise ValueError("captures differ in packet count")
    changed = {}
    for i, (a, b) in enumerate(zip(before, after)):
        if a.data != b.data:
            changed[i] = [k for k, (x, y) in enumerate(zip(a.data, b.data)) if x != y]
    return changed


def value_byte_offsets(data):
    """Byte offsets in a packet that belong to response values or the TCP checksum."""
    pkt = parse_packet(data)
    frame = opcua_payload(data)
    offsets = {pkt.tcp_offset + 16, pkt.tcp_offset + 17}
    if frame is None or frame.msg_type != "MSG":
        return offsets
    pos = pkt.payload_offset + 15
    for node, value in frame.nodes:
        size = 1 if isinstance(value, bool) else 4
        offsets.update(range(pos + 3, pos + 3 + size))
        pos += 3 + size
    return offsets
