"""Boundary-artifact trimming and walk-segment extraction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NoTurnDetected, TooShortAfterTrim
from .recording import CORE15, JointId, TrialRecording

__all__ = [
    "DEFAULT_JUMP_THRESHOLD_M",
    "DEFAULT_GUARD_FRAMES",
    "TrimReport",
    "Direction",
    "frame_jumps",
    "trim_boundary_artifacts",
    "find_turn",
    "extract_walk_segment",
]

DEFAULT_JUMP_THRESHOLD_M = 0.5
DEFAULT_GUARD_FRAMES = 3

# return toward the start, as a fraction of peak displacement, that counts as a turn
_TURN_RETURN_FRACTION = 0.25


@dataclass(frozen=True)
class TrimReport:
    frames_dropped_head: int
    frames_dropped_tail: int
    jump_threshold_m: float
    retained_range: tuple[int, int]  # half-open [start, stop) in original indices

    @property
    def frames_retained(self) -> int:
        start, stop = self.retained_range
        return stop - start


def frame_jumps(trial: TrialRecording) -> np.ndarray:
    """Largest Core15 joint displacement between frame t-1 and t; index 0 is 0."""
    idx = [j.index for j in CORE15]
    p = trial.positions[:, idx, :]
    step = np.linalg.norm(np.diff(p, axis=0), axis=2).max(axis=1)
    return np.concatenate([[0.0], step])


def _clean_start(bad: np.ndarray, guard: int) -> int | None:
    """First retained frame given per-transition flags ``bad[t]`` (t-1 -> t).

    No artifact if the first ``guard + 1`` transitions are clean. Otherwise
    the run starts ``guard`` frames after the first frame s that is followed
    by ``2 * guard + 1`` clean transitions. The clean window is long enough
    that trimming the result again finds nothing to drop.
    """
    n = bad.shape[0]
    stable = guard + 1
    if not bad[1:stable + 1].any():
        return 0
    window = guard + stable
    # clean[s]: transitions s+1 .. s+window are all clean
    flags = bad[1:].astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(flags)])
    for s in range(1, n - window):
        if csum[s + window] - csum[s] == 0:
            return s + guard
    return None


def trim_boundary_artifacts(
    trial: TrialRecording,
    jump_threshold_m: float = DEFAULT_JUMP_THRESHOLD_M,
    guard_frames: int = DEFAULT_GUARD_FRAMES,
) -> tuple[TrialRecording, TrimReport]:
    """Drop jumpy frames at the start and end of a trial.

    A transition is a jump when any Core15 joint moves more than
    ``jump_threshold_m`` between consecutive frames. Leading and trailing
    jump runs are removed together with ``guard_frames`` extra frames on the
    inside of each cut. Interior frames are never touched. A trial whose
    boundaries are already clean is returned as is, whatever its length.
    """
    n = len(trial)
    if guard_frames < 0:
        raise ValueError("guard_frames must be >= 0")
    bad = frame_jumps(trial) > jump_threshold_m
    start = _clean_start(bad, guard_frames)
    # the tail is the head of the reversed trial; transition t maps to n - t
    rev = np.concatenate([[False], bad[1:][::-1]])
    back = _clean_start(rev, guard_frames)
    if start == 0 and back == 0:
        return trial, TrimReport(0, 0, float(jump_threshold_m), (0, n))
    if n < 2 * guard_frames + 2:
        raise TooShortAfterTrim(f"trial has {n} frames, need at least {2 * guard_frames + 2}")
    if start is None or back is None:
        raise TooShortAfterTrim(f"{trial.metadata.label}: no stable walking run found")
    stop = n - back
    if stop - start < 2:
        raise TooShortAfterTrim(f"{trial.metadata.label}: {max(stop - start, 0)} frames left after trimming")
    report = TrimReport(start, n - stop, float(jump_threshold_m), (start, stop))
    return trial.select(start, stop), report


class Direction(str, Enum):
    Forward = "Forward"
    Back = "Back"
    Both = "Both"


def find_turn(trial: TrialRecording, joint: JointId = JointId.SpineBase, axis: int = 0) -> int | None:
    """Index of the walking-axis extremum, or None for a one-way walk."""
    x = trial.positions[:, joint.index, axis]
    d = np.abs(x - x[0])
    peak = int(np.argmax(d))
    if d[peak] == 0:
        return None
    returned = d[peak] - d[-1]
    if peak == len(x) - 1 or returned < _TURN_RETURN_FRACTION * d[peak]:
        return None
    return peak


def extract_walk_segment(trial: TrialRecording, direction="Both") -> TrialRecording:
    """Outbound (Forward) or return (Back) half of an out-and-back walk.

    The turn is the frame of largest SpineBase X displacement from the first
    frame. Forward keeps frames up to and including the turn, Back keeps the
    turn frame and everything after it.
    """
    direction = Direction(direction)
    if direction is Direction.Both:
        return trial
    turn = find_turn(trial)
    if turn is None:
        raise NoTurnDetected(f"{trial.metadata.label}: SpineBase X never turns back")
    if direction is Direction.Forward:
        return trial.select(0, turn + 1)
    return trial.select(turn, len(trial))
