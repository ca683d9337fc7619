"""Per-device DRX finite-state machine, advanced one TTI at a time.

The device is in continuous reception while the inactivity timer (IT) runs,
then duty-cycles through a configured number of short on/sleep cycles and
finally long on/sleep cycles.  Scheduling grants are only observable while
listening; the buffer side decides whether a grant carries an IT-reset
indication (see :mod:`drxlab.sim`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

__all__ = ["Phase", "DrxParams", "DeviceMode", "TickInput", "init", "is_listening", "tick"]


class Phase(IntEnum):
    ACTIVE = 0  # continuous reception, IT running
    SHORT_ON = 1
    SHORT_SLEEP = 2
    LONG_ON = 3
    LONG_SLEEP = 4


LISTENING_PHASES = (Phase.ACTIVE, Phase.SHORT_ON, Phase.LONG_ON)


@dataclass(frozen=True)
class DrxParams:
    """DRX timer tuple, all durations in TTIs.

    ``t_ss``/``t_ls`` are the short/long sleep durations, i.e. cycle length
    minus the on-duration; ``t_sc`` is the number of short cycles run before
    entering long cycles.  The short cycle must be strictly shorter than the
    long one unless ``allow_equal_cycles`` is set (grid-edge configurations).
    """

    t_on: int
    t_i: int
    t_ss: int
    t_ls: int
    t_sc: int
    allow_equal_cycles: bool = False

    def __post_init__(self):
        for name in ("t_on", "t_i", "t_ss", "t_ls", "t_sc"):
            v = getattr(self, name)
            if not isinstance(v, (int,)) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        if self.allow_equal_cycles:
            if self.t_ss > self.t_ls:
                raise ValueError(f"t_ss={self.t_ss} > t_ls={self.t_ls}")
        elif self.t_ss >= self.t_ls:
            raise ValueError(f"short cycle must be shorter: t_ss={self.t_ss}, t_ls={self.t_ls}")

    @property
    def t_s(self) -> int:
        """Short cycle duration."""
        return self.t_on + self.t_ss

    @property
    def t_l(self) -> int:
        """Long cycle duration."""
        return self.t_on + self.t_ls


@dataclass(frozen=True)
class DeviceMode:
    """Current phase plus timer residuals.

    ``cycle`` indexes the short cycle (1..t_sc) and is 0 outside short cycles;
    ``phase_left`` counts remaining TTIs of the current on/sleep phase and is
    0 in ACTIVE, where ``it_left`` holds the remaining inactivity time.
    """

    phase: Phase
    cycle: int = 0
    phase_left: int = 0
    it_left: int = 0


@dataclass(frozen=True)
class TickInput:
    """Per-TTI input: a scheduling grant, optionally carrying an IT-reset flag."""

    grant: bool = False
    it_reset: bool = False

    def __post_init__(self):
        if self.it_reset and not self.grant:
            raise ValueError("it_reset indication requires a grant")


def init(params: DrxParams) -> DeviceMode:
    """Fresh device: continuous reception with a full inactivity timer."""
    return DeviceMode(Phase.ACTIVE, cycle=0, phase_left=0, it_left=params.t_i)


def is_listening(mode: DeviceMode) -> bool:
    return mode.phase in LISTENING_PHASES


def _check(mode: DeviceMode, params: DrxParams) -> None:
    p = mode.phase
    if p == Phase.ACTIVE:
        ok = 1 <= mode.it_left <= params.t_i
    elif p in (Phase.SHORT_ON, Phase.LONG_ON):
        ok = 1 <= mode.phase_left <= params.t_on
    elif p == Phase.SHORT_SLEEP:
        ok = 1 <= mode.phase_left <= params.t_ss
    else:
        ok = 1 <= mode.phase_left <= params.t_ls
    if p in (Phase.SHORT_ON, Phase.SHORT_SLEEP):
        ok = ok and 1 <= mode.cycle <= params.t_sc
    if not ok:
        raise ValueError(f"mode {mode} inconsistent with params {params}")


def tick(mode: DeviceMode, inp: TickInput, params: DrxParams) -> tuple[DeviceMode, bool]:
    """Advance exactly one TTI; returns (next mode, listening during this TTI).

    ACTIVE: a grant with the reset flag reloads the IT to t_i; without it the
    IT keeps counting down (reset wins over expiry in the same TTI); expiry
    enters the first short cycle's on-phase.  ON phases: any grant re-enters
    ACTIVE with a full IT; otherwise expiry falls into the matching sleep.
    Sleeps never observe grants; their expiry advances the cycle sequence.
    """
    _check(mode, params)
    listening = is_listening(mode)
    if inp.grant and not listening:
        raise ValueError("grant delivered while device is sleeping")

    if mode.phase == Phase.ACTIVE:
        if inp.grant and inp.it_reset:
            return DeviceMode(Phase.ACTIVE, it_left=params.t_i), True
        if mode.it_left > 1:
            return DeviceMode(Phase.ACTIVE, it_left=mode.it_left - 1), True
        return DeviceMode(Phase.SHORT_ON, cycle=1, phase_left=params.t_on), True

    if mode.phase in (Phase.SHORT_ON, Phase.LONG_ON):
        if inp.grant:
            return DeviceMode(Phase.ACTIVE, it_left=params.t_i), True
        if mode.phase_left > 1:
            return DeviceMode(mode.phase, cycle=mode.cycle, phase_left=mode.phase_left - 1), True
        if mode.phase == Phase.SHORT_ON:
            return DeviceMode(Phase.SHORT_SLEEP, cycle=mode.cycle, phase_left=params.t_ss), True
        return DeviceMode(Phase.LONG_SLEEP, phase_left=params.t_ls), True

    if mode.phase_left > 1:
        return DeviceMode(mode.phase, cycle=mode.cycle, phase_left=mode.phase_left - 1), False
    if mode.phase == Phase.SHORT_SLEEP:
        if mode.cycle < params.t_sc:
            return DeviceMode(Phase.SHORT_ON, cycle=mode.cycle + 1, phase_left=params.t_on), False
        return DeviceMode(Phase.LONG_ON, phase_left=params.t_on), False
    return DeviceMode(Phase.LONG_ON, phase_left=params.t_on), False
