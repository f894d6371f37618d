"""Synthetic skeleton recordings with known condition effects.

Trajectories are phenomenological: every joint sits at a fixed offset in
a body frame (forward, vertical, lateral) that travels along an
out-and-back path. Trunk joints bob vertically once per step, leg joints
once per stride with the two sides half a cycle apart, and every
coordinate gets Gaussian measurement noise. A condition effect scales the
vertical amplitude of selected joints and multiplies their noise.

Camera frames:

* Sagittal: X = walking direction, Y = vertical, Z = lateral (+ depth).
* Frontal: X = lateral, Y = vertical, Z = distance from the camera.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .recording import (
    JOINTS,
    N_JOINTS,
    Camera,
    Condition,
    JointId,
    TrialMetadata,
    TrialRecording,
    save_recording,
    write_manifest,
)

__all__ = [
    "WalkerProfile",
    "ConditionEffect",
    "GroundTruth",
    "CONDITION_EFFECTS",
    "random_profile",
    "generate_trial",
    "generate_corpus",
    "inject_artifacts",
]

J = JointId

# standing height fractions and lateral offsets (m) of each joint
_HEIGHT_FRACTION = {
    J.Head: 0.94, J.Neck: 0.87, J.SpineShoulder: 0.82, J.SpineMid: 0.68, J.SpineBase: 0.53,
    J.ShoulderLeft: 0.82, J.ShoulderRight: 0.82, J.ElbowLeft: 0.63, J.ElbowRight: 0.63,
    J.WristLeft: 0.49, J.WristRight: 0.49, J.HandLeft: 0.46, J.HandRight: 0.46,
    J.HandTipLeft: 0.42, J.HandTipRight: 0.42, J.ThumbLeft: 0.44, J.ThumbRight: 0.44,
    J.HipLeft: 0.52, J.HipRight: 0.52, J.KneeLeft: 0.29, J.KneeRight: 0.29,
    J.AnkleLeft: 0.05, J.AnkleRight: 0.05, J.FootLeft: 0.03, J.FootRight: 0.03,
}
_TRUNK = (J.Head, J.Neck, J.SpineShoulder, J.SpineMid, J.SpineBase,
          J.ShoulderLeft, J.ShoulderRight, J.HipLeft, J.HipRight)
_PELVIS = (J.SpineBase, J.HipLeft, J.HipRight)
_LEGS = {
    "Left": (J.KneeLeft, J.AnkleLeft, J.FootLeft),
    "Right": (J.KneeRight, J.AnkleRight, J.FootRight),
}
_ARMS = {
    "Left": (J.ElbowLeft, J.WristLeft, J.HandLeft, J.HandTipLeft, J.ThumbLeft),
    "Right": (J.ElbowRight, J.WristRight, J.HandRight, J.HandTipRight, J.ThumbRight),
}


def _side(joint: JointId) -> int:
    """+1 left, -1 right, 0 midline."""
    name = joint.value
    return 1 if name.endswith("Left") else -1 if name.endswith("Right") else 0


@dataclass(frozen=True)
class WalkerProfile:
    """Subject-level gait parameters.

    ``amplitudes`` / ``phases`` override the vertical oscillation amplitude
    (m) and phase (rad) of individual joints; unlisted joints use the
    trunk/leg defaults.
    """

    step_frequency_hz: float = 1.9
    walking_speed: float = 1.0
    pelvic_obliquity_deg: float = 0.0
    noise_sd: float = 0.0006
    trunk_amplitude: float = 0.022
    leg_amplitude: float = 0.06
    height_m: float = 1.72
    hip_width_m: float = 0.30
    shoulder_width_m: float = 0.38
    amplitudes: Mapping[JointId, float] = field(default_factory=dict)
    phases: Mapping[JointId, float] = field(default_factory=dict)
    sex: str = "Unspecified"
    seed: int = 0

    def __post_init__(self):
        if self.trunk_amplitude < 0 or self.leg_amplitude < 0 or any(a < 0 for a in self.amplitudes.values()):
            raise ValueError("amplitudes must be >= 0")
        if not 0 <= self.pelvic_obliquity_deg < 10:
            raise ValueError("pelvic obliquity must be in [0, 10) degrees")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")

    def amplitude(self, joint: JointId) -> float:
        if joint in self.amplitudes:
            return self.amplitudes[joint]
        if joint in _TRUNK:
            return self.trunk_amplitude
        return self.leg_amplitude * (1.0 if joint in _LEGS["Left"] + _LEGS["Right"] else 0.4)


@dataclass(frozen=True)
class ConditionEffect:
    condition: Condition
    amplitude_multipliers: Mapping[JointId, float] = field(default_factory=dict)
    jitter_multipliers: Mapping[JointId, float] = field(default_factory=dict)
    side_bias: str = "None"
    turn_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        if self.side_bias not in ("Left", "Right", "None"):
            raise ValueError("side_bias must be Left, Right or None")

    @property
    def perturbed_joints(self) -> tuple[JointId, ...]:
        touched = {j for j, v in self.amplitude_multipliers.items() if v != 1.0}
        touched |= {j for j, v in self.jitter_multipliers.items() if v != 1.0}
        return tuple(j for j in JOINTS if j in touched)

    def with_turn(self, turn_index: int | None) -> "ConditionEffect":
        return ConditionEffect(self.condition, self.amplitude_multipliers,
                               self.jitter_multipliers, self.side_bias, turn_index)


CONDITION_EFFECTS: dict[Condition, ConditionEffect] = {
    Condition.NW: ConditionEffect(Condition.NW),
    Condition.AB: ConditionEffect(
        Condition.AB,
        amplitude_multipliers={J.AnkleRight: 0.6, J.FootRight: 0.6},
        jitter_multipliers={J.AnkleRight: 3.0, J.FootRight: 3.0, J.KneeRight: 2.0, J.SpineMid: 2.0},
        side_bias="Right",
    ),
    Condition.KB: ConditionEffect(
        Condition.KB,
        amplitude_multipliers={J.KneeRight: 0.5, J.AnkleRight: 0.7, J.FootRight: 0.7},
        jitter_multipliers={J.KneeRight: 4.0, J.HipRight: 3.0, J.SpineBase: 2.5, J.AnkleRight: 2.0},
        side_bias="Right",
    ),
    Condition.CANE: ConditionEffect(
        Condition.CANE,
        amplitude_multipliers={J.ShoulderLeft: 1.3, J.ShoulderRight: 1.3},
        jitter_multipliers={J.ShoulderLeft: 3.0, J.ShoulderRight: 3.0, J.SpineShoulder: 3.0,
                            J.Neck: 2.5, J.Head: 2.5, J.HipLeft: 2.0},
        side_bias="Left",
    ),
    Condition.WALKER: ConditionEffect(
        Condition.WALKER,
        amplitude_multipliers={J.SpineMid: 0.5, J.SpineShoulder: 0.5, J.SpineBase: 0.6},
        jitter_multipliers={J.SpineMid: 3.0, J.SpineShoulder: 3.0, J.KneeLeft: 2.5,
                            J.KneeRight: 2.5, J.FootLeft: 2.5, J.FootRight: 2.5},
        side_bias="None",
    ),
}

del J


@dataclass(frozen=True)
class GroundTruth:
    condition: Condition
    turn_index: int | None
    perturbed_joints: tuple[JointId, ...]
    amplitude_multipliers: Mapping[JointId, float]
    jitter_multipliers: Mapping[JointId, float]
    side_bias: str
    pelvic_obliquity_deg: float
    artifact_frames: tuple[int, ...] = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "value"])
        w.writerow(["condition", self.condition.value])
        w.writerow(["turn_index", "" if self.turn_index is None else self.turn_index])
        w.writerow(["side_bias", self.side_bias])
        w.writerow(["pelvic_obliquity_deg", repr(float(self.pelvic_obliquity_deg))])
        w.writerow(["perturbed_joints", " ".join(j.value for j in self.perturbed_joints)])
        for j in self.perturbed_joints:
            w.writerow([f"amplitude:{j.value}", repr(float(self.amplitude_multipliers.get(j, 1.0)))])
            w.writerow([f"jitter:{j.value}", repr(float(self.jitter_multipliers.get(j, 1.0)))])
        w.writerow(["artifact_frames", " ".join(str(i) for i in self.artifact_frames)])
        return buf.getvalue()


def random_profile(rng: np.random.Generator, sex: str = "Unspecified") -> WalkerProfile:
    """Draw a healthy-walker profile; obliquity stays below 2 degrees."""
    return WalkerProfile(
        step_frequency_hz=float(rng.uniform(1.7, 2.1)),
        walking_speed=float(rng.uniform(0.9, 1.2)),
        pelvic_obliquity_deg=float(rng.uniform(0.0, 2.0)),
        noise_sd=float(rng.uniform(0.0005, 0.0007)),
        trunk_amplitude=float(rng.uniform(0.016, 0.028)),
        leg_amplitude=float(rng.uniform(0.045, 0.075)),
        height_m=float(rng.uniform(1.55, 1.88)),
        hip_width_m=float(rng.uniform(0.27, 0.34)),
        shoulder_width_m=float(rng.uniform(0.34, 0.42)),
        sex=sex,
        seed=int(rng.integers(2**31)),
    )


def _forward_path(t: np.ndarray, speed: float, turn_time: float | None) -> np.ndarray:
    if turn_time is None:
        return speed * t
    return np.where(t <= turn_time, speed * t, speed * (2 * turn_time - t))


def generate_trial(
    profile: WalkerProfile,
    effect: ConditionEffect | str = "NW",
    duration_s: float = 7.0,
    fps: float = 30.0,
    camera="Sagittal",
    *,
    subject_id: str = "S01",
    day: int = 1,
    trial_no: int = 1,
    out_and_back: bool = True,
    rng: np.random.Generator | int | None = None,
) -> tuple[TrialRecording, GroundTruth]:
    """One recording and its ground truth.

    ``rng`` drives the per-trial noise and phase; by default it is seeded
    from ``profile.seed`` and the trial identity.
    """
    if not isinstance(effect, ConditionEffect):
        effect = CONDITION_EFFECTS[Condition.parse(effect)]
    camera = Camera.parse(camera)
    n = int(round(duration_s * fps))
    if n < 60:
        raise ValueError(f"duration_s * fps must give at least 60 frames, got {n}")
    if rng is None or isinstance(rng, (int, np.integer)):
        base = profile.seed if rng is None else int(rng)
        rng = np.random.default_rng([base, day, trial_no, list(Condition).index(effect.condition)])

    t = np.arange(n) / fps
    turn_index = effect.turn_index
    if out_and_back and turn_index is None:
        turn_index = n // 2
    turn_time = None if not out_and_back else turn_index / fps
    forward = _forward_path(t, profile.walking_speed, turn_time)
    heading = np.ones(n) if turn_time is None else np.where(t <= turn_time, 1.0, -1.0)

    step_w = 2 * np.pi * profile.step_frequency_hz
    stride_w = step_w / 2
    phase0 = rng.uniform(0, 2 * np.pi)
    amp_jitter = rng.normal(1.0, 0.03)

    pos = np.zeros((n, N_JOINTS, 3))  # body frame: forward, vertical, lateral
    obliq = np.tan(np.radians(profile.pelvic_obliquity_deg))
    half_width = {
        JointId.HipLeft: profile.hip_width_m / 2, JointId.HipRight: profile.hip_width_m / 2,
        JointId.ShoulderLeft: profile.shoulder_width_m / 2, JointId.ShoulderRight: profile.shoulder_width_m / 2,
    }
    for joint in JOINTS:
        j = joint.index
        side = _side(joint)
        amp = profile.amplitude(joint) * effect.amplitude_multipliers.get(joint, 1.0) * amp_jitter
        phase = phase0 + profile.phases.get(joint, 0.0)
        height = _HEIGHT_FRACTION[joint] * profile.height_m
        if joint in _TRUNK:
            vertical = amp * np.sin(step_w * t + phase)
        else:
            leg_phase = phase + (0.0 if side > 0 else np.pi)
            vertical = amp * np.sin(stride_w * t + leg_phase)
        if joint in half_width:
            lateral = side * half_width[joint]
        elif joint in _LEGS["Left"] + _LEGS["Right"]:
            lateral = side * 0.1
        elif joint in _ARMS["Left"] + _ARMS["Right"]:
            lateral = side * (profile.shoulder_width_m / 2 + 0.04)
        else:
            lateral = 0.0
        if joint in (JointId.HipLeft, JointId.HipRight):
            vertical = vertical + side * obliq * profile.hip_width_m / 2
        swing = 0.0
        if joint in _LEGS["Left"] + _LEGS["Right"] or joint in _ARMS["Left"] + _ARMS["Right"]:
            sign = 1.0 if joint in _LEGS["Left"] + _LEGS["Right"] else -1.0
            swing = sign * 0.15 * np.sin(stride_w * t + phase + (0.0 if side > 0 else np.pi))
        # lateral offsets flip with heading so the body turns around, not mirrors
        pos[:, j, 0] = forward + heading * swing
        pos[:, j, 1] = height + vertical
        pos[:, j, 2] = heading * lateral

    noise = rng.normal(0.0, 1.0, size=pos.shape)
    scale = np.full(N_JOINTS, profile.noise_sd)
    for joint, mult in effect.jitter_multipliers.items():
        scale[joint.index] *= mult
    pos = pos + noise * scale[None, :, None]

    if camera is Camera.Sagittal:
        xyz = np.stack([pos[..., 0], pos[..., 1], 2.4 + pos[..., 2]], axis=-1)
    else:
        xyz = np.stack([pos[..., 2], pos[..., 1], 4.0 - pos[..., 0]], axis=-1)

    timestamps = np.round(np.arange(n) * 1000.0 / fps).astype(np.int64)
    md = TrialMetadata(subject_id, effect.condition, camera, day, trial_no, profile.sex, fps)
    truth = GroundTruth(
        effect.condition, turn_index, effect.perturbed_joints,
        dict(effect.amplitude_multipliers), dict(effect.jitter_multipliers),
        effect.side_bias, profile.pelvic_obliquity_deg,
    )
    return TrialRecording(md, timestamps, xyz), truth


def inject_artifacts(trial: TrialRecording, head: int = 0, tail: int = 0, magnitude_m: float = 0.8,
                     rng: np.random.Generator | None = None) -> tuple[TrialRecording, tuple[int, ...]]:
    """Displace the first ``head`` and last ``tail`` frames by +/- ``magnitude_m`` along one direction.

    Consecutive artifact frames jump by ``2 * magnitude_m``; the step onto
    clean data is ``magnitude_m``.
    """
    rng = rng or np.random.default_rng(0)
    n = len(trial)
    idx = list(range(head)) + list(range(n - tail, n))
    pos = np.array(trial.positions)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    for k, i in enumerate(idx):
        sign = 1.0 if k % 2 == 0 else -1.0
        pos[i] += sign * magnitude_m * direction
    return TrialRecording(trial.metadata, trial.timestamps, pos, trial.states), tuple(idx)


def generate_corpus(
    out_dir,
    n_subjects: int = 10,
    conditions=tuple(Condition),
    trials_per: int = 3,
    seed: int = 0,
    days: int = 1,
    duration_s: float = 7.0,
    fps: float = 30.0,
    camera="Sagittal",
) -> tuple[Path, list[tuple[TrialRecording, GroundTruth]]]:
    """Write a labeled corpus plus ``manifest.csv``; returns the manifest path.

    Each trial's noise comes from a seed derived from (seed, subject,
    condition, day, trial), so output does not depend on generation order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    conditions = [Condition.parse(c) for c in conditions]
    camera = Camera.parse(camera)
    subject_rng = np.random.default_rng([seed, 0x5EED])
    profiles = [random_profile(subject_rng, sex=("F" if s % 2 == 0 else "M")) for s in range(n_subjects)]

    entries, results = [], []
    for s, profile in enumerate(profiles):
        subject_id = f"S{s + 1:02d}"
        for condition in conditions:
            ci = list(Condition).index(condition)
            for day, trial_no in itertools.product(range(1, days + 1), range(1, trials_per + 1)):
                rng = np.random.default_rng([seed, s, ci, day, trial_no])
                trial, truth = generate_trial(
                    profile, condition, duration_s, fps, camera,
                    subject_id=subject_id, day=day, trial_no=trial_no, rng=rng,
                )
                name = f"{subject_id}_{condition.value}_{camera.value}_d{day}_t{trial_no}.csv"
                save_recording(trial, out_dir / name)
                (out_dir / name.replace(".csv", ".truth.csv")).write_text(truth.to_csv(), encoding="utf-8")
                entries.append((name, trial.metadata))
                results.append((trial, truth))
    manifest = write_manifest(out_dir / "manifest.csv", entries)
    return manifest, results
