# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in _kernels_py (same signatures)."""
import numpy as np

cimport cython


def ones_complement_sum(data, unsigned long long initial=0):
    cdef const unsigned char[:] buf = bytes(data)
    cdef Py_ssize_t n = buf.shape[0]
    cdef Py_ssize_t i
    cdef unsigned long long total = initial
    for i in range(0, n - 1, 2):
        total += (<unsigned long long>buf[i] << 8) | buf[i + 1]
    if n % 2:
        total += <unsigned long long>buf[n - 1] << 8
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def integrate(double vol_101, double vol_102, pump, valve, double dt,
              double pump_rate, double valve_rate, double return_rate):
    cdef const unsigned char[:] p = np.ascontiguousarray(pump, dtype=np.uint8)
    cdef const unsigned char[:] v = np.ascontiguousarray(valve, dtype=np.uint8)
    cdef Py_ssize_t n = p.shape[0]
    if v.shape[0] != n:
        raise ValueError("pump and valve sequences differ in length")
    out_101_arr = np.empty(n)
    out_102_arr = np.empty(n)
    dry_arr = np.zeros(n, dtype=np.uint8)
    cdef double[:] out_101 = out_101_arr
    cdef double[:] out_102 = out_102_arr
    cdef unsigned char[:] dry = dry_arr
    cdef double pump_step = pump_rate * dt / 60.0
    cdef double valve_step = valve_rate * dt / 60.0
    cdef double return_step = return_rate * dt / 60.0
    cdef double a = vol_101
    cdef double b = vol_102
    cdef double x
    cdef Py_ssize_t i
    for i in range(n):
        x = return_step if return_step < b else b
        b -= x
        a += x
        if v[i]:
            x = valve_step if valve_step < b else b
            b -= x
            a += x
        if p[i]:
            x = pump_step if pump_step < a else a
            a -= x
            b += x
            if a == 0.0:
                dry[i] = 1
        out_101[i] = a
        out_102[i] = b
    return out_101_arr, out_102_arr, dry_arr
