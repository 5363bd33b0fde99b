"""Fixed-timestep physics of the two-tank water process.

Container 101 is the reservoir, container 102 the controlled tank. Pump M101
moves water 101 -> 102, ball valve M102 drains 102 -> 101, and a constant
passive return flows 102 -> 101. All rates are constant, so explicit Euler is
exact between clamp events (an empty tank).
"""
from dataclasses import dataclass, replace
import math

TOTAL_VOLUME = 10.0  # L
INITIAL_VOL_101 = 7.0
INITIAL_VOL_102 = 3.0
PUMP_RATE = 3.0  # L/min
VALVE_RATE = 6.0
RETURN_RATE = 1.0
DT = 0.1  # s
S111_LEVEL = 0.5  # L in container 101
S112_LEVEL = 9.5
B113_LEVEL = 4.0  # L in container 102
B114_LEVEL = 8.0
PRESSURE_GAIN = 10.0  # mbar per L


@dataclass(frozen=True)
class PlantParams:
    total_volume: float = TOTAL_VOLUME
    pump_rate: float = PUMP_RATE
    valve_rate: float = VALVE_RATE
    return_rate: float = RETURN_RATE
    s111_level: float = S111_LEVEL
    s112_level: float = S112_LEVEL
    b113_level: float = B113_LEVEL
    b114_level: float = B114_LEVEL
    pressure_gain: float = PRESSURE_GAIN

    def __post_init__(self):
        for name in ("total_volume", "pump_rate", "valve_rate", "return_rate", "pressure_gain"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")


DEFAULT_PLANT = PlantParams()


@dataclass(frozen=True)
class ProcessState:
    t: float = 0.0
    vol_101: float = INITIAL_VOL_101
    vol_102: float = INITIAL_VOL_102
    pump_on: bool = False
    valve_open: bool = False
    pump_dry: bool = False

    def total(self):
        return self.vol_101 + self.vol_102


@dataclass(frozen=True)
class SensorReadings:
    b101_level: float
    b102_flow: float
    b103_pressure: float
    b104_temp: float
    s111: bool
    s112: bool
    b113: bool
    b114: bool


def step(state, dt=DT, params=DEFAULT_PLANT):
    """Advance the plant by ``dt`` seconds under its current actuation.

    Transfers are applied return -> valve -> pump, each clamped to the water
    available in the source tank, so volumes never go negative. ``pump_dry``
    is set when the pump is on and container 101 is empty after its transfer.
    """
    if not dt > 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    a, b = state.vol_101, state.vol_102
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"non-finite volumes: vol_101={a}, vol_102={b}")
    # same arithmetic as kernels.integrate; the two must stay bit-identical
    return_step = params.return_rate * dt / 60.0
    x = return_step if return_step < b else b
    b -= x
    a += x
    if state.valve_open:
        valve_step = params.valve_rate * dt / 60.0
        x = valve_step if valve_step < b else b
        b -= x
        a += x
    dry = False
    if state.pump_on:
        pump_step = params.pump_rate * dt / 60.0
        x = pump_step if pump_step < a else a
        a -= x
        b += x
        dry = a == 0.0
    return replace(state, t=state.t + dt, vol_101=a, vol_102=b, pump_dry=dry)


def actuate(state, pump_on, valve_open):
    """Apply actuator commands; ``pump_dry`` is re-evaluated by the next step."""
    return replace(state, pump_on=bool(pump_on), valve_open=bool(valve_open),
                   pump_dry=state.pump_dry and bool(pump_on))


def true_flow(state, params=DEFAULT_PLANT):
    """Physical 101 -> 102 flow in L/min as seen by the vane sensor."""
    if state.pump_on and state.vol_101 > 0.0:
        return params.pump_rate
    return 0.0


def read_sensors(state, params=DEFAULT_PLANT, temp_c=20.0):
    """Derive every sensor reading from the physical state.

    The temperature comes from the side-channel model and is passed in.
    """
    level = state.vol_102
    return SensorReadings(
        b101_level=level,
        b102_flow=true_flow(state, params),
        b103_pressure=params.pressure_gain * level,
        b104_temp=temp_c,
        s111=state.vol_101 <= params.s111_level,
        s112=state.vol_101 >= params.s112_level,
        b113=level >= params.b113_level,
        b114=level >= params.b114_level,
    )


def check_invariants(state, params=DEFAULT_PLANT, tol=1e-9):
    if state.vol_101 < 0 or state.vol_102 < 0:
        raise AssertionError(f"negative volume in {state}")
    if abs(state.total() - params.total_volume) > tol:
        raise AssertionError(f"volume not conserved: {state.total()} vs {params.total_volume}")
    if state.pump_dry and not state.pump_on:
        raise AssertionError("pump_dry without pump_on")
