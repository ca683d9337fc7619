"""Compiled TTI-loop kernel for the buffer/DRX co-simulation.

The kernel is a straight per-TTI transcription of the simulator semantics
(see :mod:`drxlab.sim`); a pure-Python reference implementation driving the
:mod:`drxlab.drx` machine lives in sim.py and is pinned to identical outputs
by the test suite.  If numba is unavailable the kernel runs uncompiled.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# Phase codes shared with drx.Phase; policy codes shared with sim.ItPolicy.
_ACTIVE, _SHORT_ON, _SHORT_SLEEP, _LONG_ON, _LONG_SLEEP = 0, 1, 2, 3, 4
_STANDARD, _INTELLIGENT, _GENIE = 0, 1, 2


@njit(cache=True)
def run_kernel(counts, arr, t_on, t_i, t_ss, t_ls, t_sc, policy, service_rate, warmup):
    """Advance the full horizon; returns occupancy and per-packet samples.

    Per TTI: arrivals join the buffer, service tokens accrue, a listening
    device drains up to floor(tokens) packets (FIFO), and the DRX machine
    advances on the resulting grant/reset input.  The genie policy listens
    exactly while the buffer is non-empty and bypasses the machine.

    Returns (occ[5], delivered, nrec, delays, sleep_waits): occupancy TTI
    counts per phase over t >= warmup, total delivered packets over the whole
    horizon, and delay / sleep-wait samples (in TTIs) for delivered packets
    that arrived at t >= warmup.
    """
    horizon = counts.shape[0]
    total = arr.shape[0]
    delays = np.empty(total, np.float64)
    sleep_waits = np.empty(total, np.float64)
    occ = np.zeros(5, np.int64)

    head = 0
    tail = 0
    woken = 0
    nrec = 0
    delivered_total = 0
    tokens = 0.0

    mode = _ACTIVE
    cyc = 0
    ph = 0
    it = t_i

    for t in range(horizon):
        tail += counts[t]

        tokens += service_rate

        if policy == _GENIE:
            listening = head < tail
        else:
            listening = mode == _ACTIVE or mode == _SHORT_ON or mode == _LONG_ON

        if listening:
            while woken < tail:
                sleep_waits[woken] = t - arr[woken]
                woken += 1

        delivered = 0
        if listening and head < tail:
            n = int(tokens)
            if n > tail - head:
                n = tail - head
            for _ in range(n):
                if arr[head] >= warmup:
                    delays[nrec] = t - arr[head] + 1
                    # nrec <= head, so compacting samples to the front only
                    # overwrites slots of already-delivered packets.
                    sleep_waits[nrec] = sleep_waits[head]
                    nrec += 1
                head += 1
            tokens -= n
            delivered = n
            delivered_total += n

        if t >= warmup:
            if policy == _GENIE:
                occ[_ACTIVE if listening else _LONG_SLEEP] += 1
            else:
                occ[mode] += 1

        if policy != _GENIE:
            grant = delivered > 0
            if mode == _ACTIVE:
                reset = False
                if grant:
                    if policy == _STANDARD:
                        reset = True
                    else:
                        reset = math.ceil((tail - head) / service_rate) >= it
                if reset:
                    it = t_i
                else:
                    it -= 1
                    if it == 0:
                        mode = _SHORT_ON
                        cyc = 1
                        ph = t_on
            elif mode == _SHORT_ON or mode == _LONG_ON:
                if grant:
                    mode = _ACTIVE
                    it = t_i
                else:
                    ph -= 1
                    if ph == 0:
                        if mode == _SHORT_ON:
                            mode = _SHORT_SLEEP
                            ph = t_ss
                        else:
                            mode = _LONG_SLEEP
                            ph = t_ls
            elif mode == _SHORT_SLEEP:
                ph -= 1
                if ph == 0:
                    if cyc < t_sc:
                        mode = _SHORT_ON
                        cyc += 1
                        ph = t_on
                    else:
                        mode = _LONG_ON
                        ph = t_on
            else:
                ph -= 1
                if ph == 0:
                    mode = _LONG_ON
                    ph = t_on

    return occ, delivered_total, nrec, delays[:nrec], sleep_waits[:nrec]
