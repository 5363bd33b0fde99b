"""Pure-Python reference versions of the hot kernels.

These are the fallback when the compiled ``_kernels`` extension is missing,
and the ground truth the compiled versions are tested against.
"""
import numpy as np


def ones_complement_sum(data, initial=0):
    """Folded 16-bit one's-complement sum of ``data`` (odd length zero-padded)."""
    data = bytes(data)
    if len(data) % 2:
        data += b"\x00"
    total = initial
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def integrate(vol_101, vol_102, pump, valve, dt, pump_rate, valve_rate, return_rate):
    """Open-loop Euler integration of the two-tank plant.

    ``pump`` and ``valve`` hold one actuation flag per step. Returns the
    volumes after every step and the per-step dry-run flag.
    """
    n = len(pump)
    out_101 = np.empty(n)
    out_102 = np.empty(n)
    dry = np.zeros(n, dtype=np.uint8)
    pump_step = pump_rate * dt / 60.0
    valve_step = valve_rate * dt / 60.0
    return_step = return_rate * dt / 60.0
    a = float(vol_101)
    b = float(vol_102)
    for i in range(n):
        x = return_step if return_step < b else b
        b -= x
        a += x
        if valve[i]:
            x = valve_step if valve_step < b else b
            b -= x
            a += x
        if pump[i]:
            x = pump_step if pump_step < a else a
            a -= x
            b += x
            if a == 0.0:
                dry[i] = 1
        out_101[i] = a
        out_102[i] = b
    return out_101, out_102, dry
