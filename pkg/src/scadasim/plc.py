"""PLC scan-cycle logic, the reported node image, and compromised firmware."""
from dataclasses import dataclass, field, replace
import enum
import math

from .codec import ALL_NODES, NodeId
from .process import TOTAL_VOLUME


class Firmware(enum.Enum):
    HONEST = "honest"
    INVERTED_PUMP_REPORT = "inverted_pump_report"
    FORGED_VALUES = "forged_values"
    DRY_RUN_PUMP = "dry_run_pump"
    VALVE_STUCK_OPEN = "valve_stuck_open"

    @property
    def forges_report(self):
        return self in (Firmware.FORGED_VALUES, Firmware.DRY_RUN_PUMP, Firmware.VALVE_STUCK_OPEN)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class ControlParams:
    low_threshold: float = 4.0
    high_threshold: float = 8.0
    setpoint: float = 7.5
    total_volume: float = TOTAL_VOLUME

    def __post_init__(self):
        values = (self.low_threshold, self.setpoint, self.high_threshold, self.total_volume)
        if not all(math.isfinite(v) for v in values):
            raise ConfigurationError(f"non-finite control parameter in {values}")
        if not 0 < self.low_threshold < self.setpoint <= self.high_threshold < self.total_volume:
            raise ConfigurationError(
                "need 0 < low_threshold < setpoint <= high_threshold < total_volume, got "
                f"{self.low_threshold}, {self.setpoint}, {self.high_threshold}, {self.total_volume}"
            )


THRESHOLD_NODES = (NodeId.LOW_THRESHOLD, NodeId.HIGH_THRESHOLD)


@dataclass(frozen=True)
class ForgeryTemplate:
    """One recorded honest pump cycle, one node map per scan."""

    frames: tuple
    scan_period: float

    @property
    def period(self):
        return len(self.frames) * self.scan_period

    def at(self, clock):
        index = int(math.floor(clock / self.scan_period + 1e-9)) % len(self.frames)
        return self.frames[index]


@dataclass(frozen=True)
class PlcImage:
    nodes: dict
    firmware: Firmware = Firmware.HONEST
    # template time at activation; replay position is forged_clock + speed * (t - activated_at)
    forged_clock: float = 0.0
    activated_at: float = 0.0
    replay_speed: float = 1.0
    template: ForgeryTemplate = None

    def __post_init__(self):
        if set(self.nodes) != set(ALL_NODES):
            raise ValueError("image must hold exactly the defined node ids")

    def replay_position(self, t):
        return self.forged_clock + self.replay_speed * (t - self.activated_at)


def node_map(sensors, pump_cmd, valve_cmd, params):
    return {
        NodeId.B101: sensors.b101_level,
        NodeId.B102: sensors.b102_flow,
        NodeId.B103: sensors.b103_pressure,
        NodeId.B104: sensors.b104_temp,
        NodeId.S111: sensors.s111,
        NodeId.S112: sensors.s112,
        NodeId.B113: sensors.b113,
        NodeId.B114: sensors.b114,
        NodeId.M101: bool(pump_cmd),
        NodeId.M102: bool(valve_cmd),
        NodeId.LOW_THRESHOLD: params.low_threshold,
        NodeId.HIGH_THRESHOLD: params.high_threshold,
    }


def initial_image(sensors, state, params):
    return PlcImage(node_map(sensors, state.pump_on, state.valve_open, params))


def honest_control(level, pump_was_on, params):
    """Hysteresis: pump latches on below the low threshold and off at the setpoint."""
    if level < params.low_threshold:
        pump = True
    elif level >= params.setpoint:
        pump = False
    else:
        pump = pump_was_on
    return pump, level > params.high_threshold


def apply_firmware(image, honest_nodes, honest_cmds, t):
    """Return (reported node map, actual actuator commands) for the firmware."""
    fw = image.firmware
    pump, valve = honest_cmds
    if fw is Firmware.HONEST:
        return dict(honest_nodes), (pump, valve)
    if fw is Firmware.INVERTED_PUMP_REPORT:
        reported = dict(honest_nodes)
        reported[NodeId.M101] = not pump
        return reported, (pump, valve)
    if image.template is None:
        raise ConfigurationError(f"{fw.value} firmware needs a recorded honest cycle")
    reported = dict(image.template.at(image.replay_position(t)))
    # threshold nodes stay honest; only process values are forged
    for node in THRESHOLD_NODES:
        reported[node] = honest_nodes[node]
    if fw is Firmware.DRY_RUN_PUMP:
        # overflow valve logic is disabled too, otherwise 102 overflows back into 101
        return reported, (True, False)
    if fw is Firmware.VALVE_STUCK_OPEN:
        return reported, (pump, True)
    return reported, (pump, valve)


def scan_cycle(image, params, sensors, state):
    """One PLC scan: control logic, firmware, image update.

    The pump latch is the actuator state read back from the plant, so a
    command written over the network persists until the next threshold event.
    """
    pump, valve = honest_control(sensors.b101_level, state.pump_on, params)
    honest = node_map(sensors, pump, valve, params)
    reported, (pump_cmd, valve_cmd) = apply_firmware(image, honest, (pump, valve), state.t)
    return replace(image, nodes=reported), pump_cmd, valve_cmd


@dataclass
class CycleRecorder:
    """Keeps the most recent complete honest pump cycle (pump-on to pump-on)."""

    scan_period: float
    _current: list = field(default_factory=list)
    _last_on: float = None
    _pump_was_on: bool = None
    last_cycle: ForgeryTemplate = None

    def observe(self, t, nodes):
        pump = nodes[NodeId.M101]
        if self._pump_was_on is False and pump:
            if self._last_on is not None and self._current:
                self.last_cycle = ForgeryTemplate(tuple(self._current), self.scan_period)
            self._current = []
            self._last_on = t
        if self._last_on is not None:
            self._current.append(dict(nodes))
        self._pump_was_on = pump

    def interrupt(self):
        """Drop the partial cycle; the next one starts at a fresh pump-on edge."""
        self._current = []
        self._last_on = None
        self._pump_was_on = None

    def phase(self, t):
        """Seconds since the last pump-on edge, the seamless replay position."""
        if self._last_on is None:
            return 0.0
        return t - self._last_on

    @property
    def last_on(self):
        return self._last_on


def activate(image, firmware, t, recorder=None, replay_speed=1.0, template=None):
    """Switch firmware at time ``t``; forged variants pick up the recorded cycle."""
    if not firmware.forges_report:
        return replace(image, firmware=firmware, template=None)
    template = template or (recorder.last_cycle if recorder else None)
    if template is None:
        raise ConfigurationError(f"{firmware.value} firmware needs a recorded honest cycle")
    clock = recorder.phase(t) if recorder and recorder.last_on is not None else 0.0
    return replace(image, firmware=firmware, template=template, forged_clock=clock,
                   activated_at=t, replay_speed=replay_speed)
