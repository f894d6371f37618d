"""Skeleton data model and the canonical recording / manifest file formats.

A recording file is UTF-8 text::

    # subject_id=S01
    # sex=F
    # condition=NW
    # camera=Sagittal
    # day=1
    # trial_no=1
    # fps=30.0
    timestamp_ms,joint,x,y,z,tracking_state
    0,SpineBase,0.0012,0.9512,0.0031,Tracked
    ...

Rows are grouped into frames by timestamp. Coordinates are meters with
x anteroposterior, y vertical and z mediolateral.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    BadHeader,
    DuplicateTrialKey,
    FileMissing,
    GaitError,
    ManifestError,
    MissingField,
    NonMonotonicTimestamp,
    ParseError,
    UnknownJoint,
)

__all__ = [
    "JointId",
    "JointGroup",
    "Axis",
    "TrackingState",
    "Sex",
    "Condition",
    "Camera",
    "SkeletonFrame",
    "TrialMetadata",
    "TrialRecording",
    "JointSeries",
    "GROUPS",
    "CORE15",
    "MIDDLE_FIVE",
    "LEFT_FIVE",
    "RIGHT_FIVE",
    "TILT_JOINTS",
    "parse_recording",
    "write_recording",
    "read_recording",
    "save_recording",
    "load_manifest",
    "write_manifest",
    "joint_series",
]


class _ParseEnum(str, Enum):
    @classmethod
    def parse(cls, text):
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"{text!r} is not a valid {cls.__name__}") from None

    def __str__(self):
        return self.value


class JointId(_ParseEnum):
    SpineBase = "SpineBase"
    SpineMid = "SpineMid"
    Neck = "Neck"
    Head = "Head"
    ShoulderLeft = "ShoulderLeft"
    ElbowLeft = "ElbowLeft"
    WristLeft = "WristLeft"
    HandLeft = "HandLeft"
    ShoulderRight = "ShoulderRight"
    ElbowRight = "ElbowRight"
    WristRight = "WristRight"
    HandRight = "HandRight"
    HipLeft = "HipLeft"
    KneeLeft = "KneeLeft"
    AnkleLeft = "AnkleLeft"
    FootLeft = "FootLeft"
    HipRight = "HipRight"
    KneeRight = "KneeRight"
    AnkleRight = "AnkleRight"
    FootRight = "FootRight"
    SpineShoulder = "SpineShoulder"
    HandTipLeft = "HandTipLeft"
    ThumbLeft = "ThumbLeft"
    HandTipRight = "HandTipRight"
    ThumbRight = "ThumbRight"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text)
        except ValueError:
            raise UnknownJoint(text) from None

    @property
    def index(self) -> int:
        return _JOINT_INDEX[self]


JOINTS: tuple[JointId, ...] = tuple(JointId)
_JOINT_INDEX = {j: i for i, j in enumerate(JOINTS)}
N_JOINTS = len(JOINTS)


class Axis(_ParseEnum):
    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def index(self) -> int:
        return "XYZ".index(self.value)


class TrackingState(_ParseEnum):
    NotTracked = "NotTracked"
    Inferred = "Inferred"
    Tracked = "Tracked"


_STATES = tuple(TrackingState)
_STATE_CODE = {s: i for i, s in enumerate(_STATES)}


class Sex(_ParseEnum):
    F = "F"
    M = "M"
    Unspecified = "Unspecified"


class Condition(_ParseEnum):
    NW = "NW"
    AB = "AB"
    KB = "KB"
    CANE = "CANE"
    WALKER = "WALKER"


class Camera(_ParseEnum):
    Frontal = "Frontal"
    Sagittal = "Sagittal"


@dataclass(frozen=True)
class JointGroup:
    group_id: str
    members: tuple[JointId, ...]

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


J = JointId
CORE15 = JointGroup("Core15", (
    J.Head, J.Neck, J.ShoulderLeft, J.ShoulderRight, J.SpineShoulder,
    J.SpineMid, J.SpineBase, J.HipLeft, J.HipRight, J.FootLeft,
    J.FootRight, J.KneeLeft, J.KneeRight, J.AnkleLeft, J.AnkleRight,
))
MIDDLE_FIVE = JointGroup("MiddleFive", (J.Head, J.Neck, J.SpineBase, J.SpineMid, J.SpineShoulder))
LEFT_FIVE = JointGroup("LeftFive", (J.ShoulderLeft, J.HipLeft, J.KneeLeft, J.AnkleLeft, J.FootLeft))
RIGHT_FIVE = JointGroup("RightFive", (J.ShoulderRight, J.HipRight, J.KneeRight, J.AnkleRight, J.FootRight))
TILT_JOINTS = JointGroup("TiltJoints", (
    J.SpineShoulder, J.SpineBase, J.HipLeft, J.HipRight, J.ShoulderLeft, J.ShoulderRight,
))
ALL25 = JointGroup("All25", JOINTS)
del J

GROUPS: dict[str, JointGroup] = {
    g.group_id: g for g in (CORE15, MIDDLE_FIVE, LEFT_FIVE, RIGHT_FIVE, TILT_JOINTS, ALL25)
}


@dataclass(frozen=True)
class SkeletonFrame:
    timestamp: int
    positions: np.ndarray  # (25, 3), read-only
    tracking_state: tuple[TrackingState, ...]

    def position(self, joint: JointId) -> tuple[float, float, float]:
        return tuple(float(v) for v in self.positions[JointId.parse(joint).index])


@dataclass(frozen=True)
class TrialMetadata:
    subject_id: str
    condition: Condition
    camera: Camera
    day: int = 1
    trial_no: int = 1
    sex: Sex = Sex.Unspecified
    fps_nominal: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        object.__setattr__(self, "camera", Camera.parse(self.camera))
        object.__setattr__(self, "sex", Sex.parse(self.sex))
        if not self.subject_id or "\n" in self.subject_id:
            raise ValueError("subject_id must be a non-empty single-line string")
        if int(self.day) < 1 or int(self.trial_no) < 1:
            raise ValueError("day and trial_no must be positive integers")
        if not self.fps_nominal > 0:
            raise ValueError("fps must be positive")
        object.__setattr__(self, "day", int(self.day))
        object.__setattr__(self, "trial_no", int(self.trial_no))
        object.__setattr__(self, "fps_nominal", float(self.fps_nominal))

    @property
    def key(self) -> tuple:
        """Identity of a trial within a dataset."""
        return (self.subject_id, self.condition.value, self.camera.value, self.day, self.trial_no)

    @property
    def label(self) -> str:
        return f"{self.subject_id}/{self.condition}/{self.camera}/d{self.day}/t{self.trial_no}"


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


class TrialRecording:
    """Metadata plus frame arrays.

    ``timestamps`` is (n,) int64 milliseconds, ``positions`` is (n, 25, 3)
    float64 in JointId order, ``states`` is (n, 25) int8 codes of
    TrackingState. Arrays are read-only.
    """

    __slots__ = ("metadata", "timestamps", "positions", "states")

    def __init__(self, metadata: TrialMetadata, timestamps, positions, states=None):
        ts = _frozen(timestamps, np.int64)
        pos = _frozen(positions, np.float64)
        n = ts.shape[0]
        if ts.ndim != 1 or pos.shape != (n, N_JOINTS, 3):
            raise ValueError(f"positions must have shape ({n}, {N_JOINTS}, 3), got {pos.shape}")
        if states is None:
            states = np.full((n, N_JOINTS), _STATE_CODE[TrackingState.Tracked], dtype=np.int8)
        st = _frozen(states, np.int8)
        if st.shape != (n, N_JOINTS):
            raise ValueError("states must have shape (n, 25)")
        if n < 2:
            raise ValueError("a trial needs at least 2 frames")
        if np.any(ts < 0) or np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be non-negative and strictly increasing")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "metadata", metadata)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "states", st)

    def __setattr__(self, name, value):
        raise AttributeError("TrialRecording is immutable")

    def __reduce__(self):
        return (TrialRecording, (self.metadata, self.timestamps, self.positions, self.states))

    def __len__(self):
        return self.timestamps.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TrialRecording):
            return NotImplemented
        return (
            self.metadata == other.metadata
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.states, other.states)
        )

    __hash__ = None

    def __repr__(self):
        return f"TrialRecording({self.metadata.label}, frames={len(self)})"

    def frame(self, i: int) -> SkeletonFrame:
        return SkeletonFrame(
            int(self.timestamps[i]),
            self.positions[i],
            tuple(_STATES[c] for c in self.states[i]),
        )

    @property
    def frames(self) -> list[SkeletonFrame]:
        return [self.frame(i) for i in range(len(self))]

    def select(self, start: int, stop: int) -> "TrialRecording":
        """Frames ``start:stop`` as a new recording."""
        return TrialRecording(
            self.metadata,
            self.timestamps[start:stop],
            self.positions[start:stop],
            self.states[start:stop],
        )

    def with_metadata(self, **changes) -> "TrialRecording":
        return TrialRecording(replace(self.metadata, **changes), self.timestamps, self.positions, self.states)


@dataclass(frozen=True)
class JointSeries:
    values: np.ndarray
    joint: JointId
    axis: Axis
    metadata: TrialMetadata

    def __len__(self):
        return self.values.shape[0]


def joint_series(trial: TrialRecording, joint, axis) -> JointSeries:
    joint = JointId.parse(joint) if not isinstance(joint, JointId) else joint
    axis = Axis.parse(axis)
    values = trial.positions[:, joint.index, axis.index]
    return JointSeries(values, joint, axis, trial.metadata)


# -- recording files ----------------------------------------------------------

_COLUMNS = ["timestamp_ms", "joint", "x", "y", "z", "tracking_state"]
_HEADER_KEYS = ("subject_id", "sex", "condition", "camera", "day", "trial_no", "fps")
_REQUIRED_KEYS = ("subject_id", "condition", "camera", "day", "trial_no")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_recording(trial: TrialRecording) -> bytes:
    md = trial.metadata
    header = {
        "subject_id": md.subject_id,
        "sex": md.sex.value,
        "condition": md.condition.value,
        "camera": md.camera.value,
        "day": str(md.day),
        "trial_no": str(md.trial_no),
        "fps": _fmt(md.fps_nominal),
    }
    out = [f"# {k}={header[k]}" for k in _HEADER_KEYS]
    out.append(",".join(_COLUMNS))
    for i in range(len(trial)):
        ts = int(trial.timestamps[i])
        pos = trial.positions[i]
        st = trial.states[i]
        for j, joint in enumerate(JOINTS):
            x, y, z = pos[j]
            out.append(f"{ts},{joint.value},{_fmt(x)},{_fmt(y)},{_fmt(z)},{_STATES[st[j]].value}")
    return ("\n".join(out) + "\n").encode("utf-8")


def _parse_header(lines: list[tuple[int, str]]) -> TrialMetadata:
    values: dict[str, str] = {}
    for lineno, text in lines:
        body = text[1:].strip()
        if "=" not in body:
            raise BadHeader(f"expected '# key=value', got {text!r}", lineno)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _HEADER_KEYS:
            raise BadHeader(f"unknown header key {key!r}", lineno)
        if key in values:
            raise BadHeader(f"duplicate header key {key!r}", lineno)
        values[key] = value
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise BadHeader(f"missing header keys {missing}", lines[-1][0] if lines else 1)
    try:
        return TrialMetadata(
            subject_id=values["subject_id"],
            condition=values["condition"],
            camera=values["camera"],
            day=int(values["day"]),
            trial_no=int(values["trial_no"]),
            sex=values.get("sex", "Unspecified"),
            fps_nominal=float(values.get("fps", "30")),
        )
    except ValueError as exc:
        raise BadHeader(str(exc), lines[0][0] if lines else 1) from None


def parse_recording(data: bytes | str) -> TrialRecording:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    lines = text.splitlines()
    header_lines = []
    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        if raw.startswith("#"):
            header_lines.append((lineno, raw))
        else:
            break
    else:
        raise BadHeader("no column header row", lineno or 1)
    metadata = _parse_header(header_lines)

    column_line = lineno
    columns = [c.strip() for c in lines[column_line - 1].split(",")]
    if columns != _COLUMNS:
        raise BadHeader(f"expected columns {','.join(_COLUMNS)}", column_line)

    timestamps: list[int] = []
    positions: list[np.ndarray] = []
    states: list[np.ndarray] = []
    seen: np.ndarray | None = None

    def close_frame():
        # missing joints: NotTracked, position carried over from the previous frame
        missing = ~seen
        if missing.any():
            prev = positions[-2] if len(positions) > 1 else np.zeros((N_JOINTS, 3))
            positions[-1][missing] = prev[missing]
            states[-1][missing] = _STATE_CODE[TrackingState.NotTracked]

    for lineno in range(column_line + 1, len(lines) + 1):
        raw = lines[lineno - 1]
        if not raw.strip():
            continue
        fields = raw.split(",")
        if len(fields) != 6 or any(f.strip() == "" for f in fields):
            raise MissingField(f"expected 6 non-empty fields, got {raw!r}", lineno)
        ts_text, joint_text, xs, ys, zs, state_text = (f.strip() for f in fields)
        try:
            ts = int(ts_text)
        except ValueError:
            raise MissingField(f"bad timestamp {ts_text!r}", lineno) from None
        try:
            joint = JointId.parse(joint_text)
        except UnknownJoint:
            raise UnknownJoint(joint_text, lineno) from None
        try:
            xyz = (float(xs), float(ys), float(zs))
        except ValueError:
            raise MissingField(f"bad coordinate in {raw!r}", lineno) from None
        if not all(math.isfinite(v) for v in xyz):
            raise MissingField(f"non-finite coordinate in {raw!r}", lineno)
        try:
            state = TrackingState.parse(state_text)
        except ValueError as exc:
            raise MissingField(str(exc), lineno) from None

        if not timestamps or ts != timestamps[-1]:
            if timestamps and ts < timestamps[-1]:
                raise NonMonotonicTimestamp(f"timestamp {ts} after {timestamps[-1]}", lineno)
            if ts < 0:
                raise NonMonotonicTimestamp(f"negative timestamp {ts}", lineno)
            if timestamps:
                close_frame()
            timestamps.append(ts)
            positions.append(np.zeros((N_JOINTS, 3)))
            states.append(np.zeros(N_JOINTS, dtype=np.int8))
            seen = np.zeros(N_JOINTS, dtype=bool)
        j = joint.index
        if seen[j]:
            raise ParseError(f"joint {joint.value} repeated within frame {ts}", lineno)
        seen[j] = True
        positions[-1][j] = xyz
        states[-1][j] = _STATE_CODE[state]

    if len(timestamps) < 2:
        raise MissingField("a recording needs at least 2 frames", len(lines) or 1)
    close_frame()
    return TrialRecording(metadata, timestamps, np.stack(positions), np.stack(states))


def read_recording(path) -> TrialRecording:
    return parse_recording(Path(path).read_bytes())


def save_recording(trial: TrialRecording, path) -> Path:
    path = Path(path)
    path.write_bytes(write_recording(trial))
    return path


# -- manifests ----------------------------------------------------------------

_MANIFEST_COLUMNS = ["file", "subject_id", "condition", "camera", "day", "trial_no"]


def load_manifest(path) -> list[TrialRecording]:
    """Load every trial listed in a manifest CSV.

    Non-empty metadata cells override the values in the recording header.
    File paths are resolved relative to the manifest's directory. Missing
    files and parse failures are collected and raised together.
    """
    path = Path(path)
    if not path.exists():
        raise FileMissing(f"manifest {path} not found")
    base = path.parent
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != _MANIFEST_COLUMNS:
            raise ManifestError(f"manifest columns must be {','.join(_MANIFEST_COLUMNS)}")
        rows = list(reader)

    missing, failed = [], []
    trials: list[tuple[str, TrialRecording]] = []
    for row in rows:
        name = row["file"].strip()
        fpath = base / name
        if not fpath.is_file():
            missing.append((name, FileNotFoundError(str(fpath))))
            continue
        try:
            trial = read_recording(fpath)
            overrides = {k: row[k].strip() for k in _MANIFEST_COLUMNS[1:] if row[k] and row[k].strip()}
            for k in ("day", "trial_no"):
                if k in overrides:
                    overrides[k] = int(overrides[k])
            if overrides:
                trial = trial.with_metadata(**overrides)
        except (GaitError, ValueError) as exc:
            failed.append((name, exc))
            continue
        trials.append((name, trial))

    if missing:
        raise FileMissing("referenced files not found", missing + failed)
    if failed:
        raise ManifestError("recordings failed to parse", failed)

    seen: dict[tuple, str] = {}
    dups = []
    for name, trial in trials:
        key = trial.metadata.key
        if key in seen:
            dups.append((name, ValueError(f"key {key} already used by {seen[key]}")))
        else:
            seen[key] = name
    if dups:
        raise DuplicateTrialKey("duplicate trial keys", dups)
    return [t for _, t in trials]



def write_manifest(path, entries: Iterable[tuple[str, TrialMetadata]]) -> Path:
    """Write a manifest listing ``(relative_file, metadata)`` pairs."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_MANIFEST_COLUMNS)
    for name, md in entries:
        w.writerow([name, md.subject_id, md.condition.value, md.camera.value, md.day, md.trial_no])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def group(name: str | JointGroup) -> JointGroup:
    """Look up a joint group by id or CLI alias."""
    if isinstance(name, JointGroup):
        return name
    aliases: Mapping[str, str] = {
        "core15": "Core15", "middle5": "MiddleFive", "left5": "LeftFive",
        "right5": "RightFive", "tilt": "TiltJoints", "all": "All25",
    }
    key = aliases.get(name.lower(), name)
    try:
        return GROUPS[key]
    except KeyError:
        raise ValueError(f"unknown joint group {name!r}") from None
