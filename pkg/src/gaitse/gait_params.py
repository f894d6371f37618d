"""Frontal-plane tilt angles from pairs of joints.

The slope between two joints in the X/Y image plane is converted to an
angle in degrees. Hip and shoulder tilt use the left/right joint pair as
given. Spine tilt uses a vertically stacked pair, so its slope is taken
with the axes exchanged (dx/dy): an upright trunk reads 0 degrees and a
lean reads its angle from vertical, on the same scale as the other two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .recording import JointId, TrialMetadata, TrialRecording

__all__ = ["VERTICAL", "GaitParameterId", "TiltSeries", "slope", "tilt_degrees", "tilt_series"]


class _Vertical:
    """Slope of a pair with equal x: the angle is exactly 90 degrees."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "VERTICAL"

    def __reduce__(self):
        return (_Vertical, ())


VERTICAL = _Vertical()


class GaitParameterId(Enum):
    SpineTilt = ("V1", JointId.SpineBase, JointId.SpineShoulder, True)
    HipTilt = ("V2", JointId.HipLeft, JointId.HipRight, False)
    ShoulderTilt = ("V3", JointId.ShoulderLeft, JointId.ShoulderRight, False)

    def __init__(self, code, first, second, from_vertical):
        self.code = code
        self.first = first
        self.second = second
        self.from_vertical = from_vertical

    @classmethod
    def parse(cls, value) -> "GaitParameterId":
        if isinstance(value, cls):
            return value
        for p in cls:
            if value in (p.name, p.code):
                return p
        raise ValueError(f"unknown gait parameter {value!r}")

    def __str__(self):
        return self.code


@dataclass(frozen=True)
class TiltSeries:
    values: np.ndarray  # degrees, one per frame
    parameter: GaitParameterId
    provenance: TrialMetadata

    def __len__(self):
        return self.values.shape[0]


def slope(p1, p2):
    """(y2 - y1) / (x2 - x1), or VERTICAL when x2 == x1."""
    (x1, y1), (x2, y2) = p1, p2
    dx = x2 - x1
    if dx == 0:
        return VERTICAL
    return (y2 - y1) / dx


def tilt_degrees(m) -> float:
    if m is VERTICAL:
        return 90.0
    return math.degrees(math.atan(m))


def tilt_series(trial: TrialRecording, param) -> TiltSeries:
    """One tilt angle per frame from X/Y of the parameter's joint pair."""
    param = GaitParameterId.parse(param)
    a = trial.positions[:, param.first.index, :2]
    b = trial.positions[:, param.second.index, :2]
    if param.from_vertical:
        num, den = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    else:
        num, den = b[:, 1] - a[:, 1], b[:, 0] - a[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        deg = np.degrees(np.arctan(num / den))
    vertical = den == 0
    deg[vertical] = 90.0
    deg[deg == -90.0] = 90.0  # keep the range (-90, 90]
    deg.flags.writeable = False
    return TiltSeries(deg, param, trial.metadata)
