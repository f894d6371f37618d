"""Sample Entropy of scalar series and per-trial entropy profiles.

Templates of length m use stride ``tau``: ``X_m(i) = [x_i, x_{i+tau}, ...,
x_{i+tau(m-1)}]``. Both the m and m+1 match counts run over the same
``N - tau*m`` template start indices, so every (m+1)-match is also an
m-match and the estimate is always >= 0 when defined.

Counts are over ordered pairs (i, j), i != j, with Chebyshev distance <= r.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gait_params import GaitParameterId, tilt_series
from .errors import ChannelError, GaitError, NonPositiveTolerance, ParseError, SeriesTooShort, ZeroVariance
from .recording import Axis, JointGroup, JointId, TrialMetadata, TrialRecording

__all__ = [
    "SeParams",
    "SeOutcome",
    "SeProfile",
    "FixedParams",
    "DefaultR",
    "sample_entropy_naive",
    "sample_entropy",
    "default_tolerance",
    "se_profile",
    "channel_key",
    "profiles_to_csv",
    "profiles_from_csv",
]


@dataclass(frozen=True)
class SeParams:
    m: int = 2
    r: float = 0.2
    tau: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError("tau must be a positive integer")


@dataclass(frozen=True)
class SeOutcome:
    """Result of one entropy computation.

    ``value`` is None when either match count is zero (undefined entropy).
    """

    value: float | None
    match_count_m: int
    match_count_m1: int
    params: SeParams
    n: int

    @property
    def defined(self) -> bool:
        return self.value is not None


def _check(x, params: SeParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not params.r > 0:
        raise NonPositiveTolerance(f"tolerance r must be positive, got {params.r}")
    need = params.tau * params.m + 2
    if x.shape[0] < need:
        raise SeriesTooShort(f"need at least {need} samples for m={params.m}, tau={params.tau}, got {x.shape[0]}")
    return x


def _outcome(b: int, a: int, params: SeParams, n: int) -> SeOutcome:
    value = -math.log(a / b) if a > 0 and b > 0 else None
    if value == 0.0:
        value = 0.0  # no negative zero
    return SeOutcome(value, int(b), int(a), params, n)


def _templates(x: np.ndarray, m: int, tau: int, count: int) -> np.ndarray:
    """(count, m + 1) matrix; the first m columns are the m-templates."""
    cols = [x[k * tau: k * tau + count] for k in range(m + 1)]
    return np.stack(cols, axis=1)


def sample_entropy_naive(series, params: SeParams) -> SeOutcome:
    """Brute-force enumeration of every ordered template pair."""
    x = _check(series, params)
    m, tau, r = params.m, params.tau, params.r
    count = x.shape[0] - tau * m
    t = _templates(x, m, tau, count)
    b = a = 0
    for i in range(count):
        d = np.abs(t - t[i])
        dm = d[:, :m].max(axis=1)
        dm1 = np.maximum(dm, d[:, m])
        dm[i] = np.inf
        dm1[i] = np.inf
        b += int(np.count_nonzero(dm <= r))
        a += int(np.count_nonzero(dm1 <= r))
    return _outcome(b, a, params, x.shape[0])


def sample_entropy(series, params: SeParams) -> SeOutcome:
    """Sample entropy with a sorted candidate search.

    Templates are ordered by their first element; for each template only
    the ones whose first element lies within r above it are compared on the
    remaining coordinates. Each unordered pair is visited once and counted
    twice, matching the ordered-pair counts of the naive version exactly.
    """
    x = _check(series, params)
    m, tau, r = params.m, params.tau, params.r
    count = x.shape[0] - tau * m
    t = _templates(x, m, tau, count)
    order = np.argsort(t[:, 0], kind="stable")
    ts = t[order]
    first = ts[:, 0]
    # slack keeps the prefilter a superset; the exact |d| <= r test follows
    slack = r * 1e-9 + np.abs(first).max() * 4e-16
    hi = np.searchsorted(first, first + r + slack, side="right")
    b = a = 0
    for p in range(count - 1):
        stop = hi[p]
        if stop <= p + 1:
            continue
        cand = ts[p + 1: stop]
        d = np.abs(cand - ts[p])
        dm = d[:, :m].max(axis=1)
        ok = dm <= r
        if not ok.any():
            continue
        b += int(np.count_nonzero(ok))
        a += int(np.count_nonzero(ok & (d[:, m] <= r)))
    return _outcome(2 * b, 2 * a, params, x.shape[0])


def default_tolerance(series, fraction: float = 0.2) -> float:
    """``fraction`` times the sample standard deviation (ddof=1)."""
    x = np.asarray(series, dtype=np.float64)
    if x.shape[0] < 2:
        raise ZeroVariance("need at least 2 samples to estimate the spread")
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise ZeroVariance("series has zero variance; pass an explicit r")
    return fraction * sd


# -- profiles ----------------------------------------------------------------


@dataclass(frozen=True)
class FixedParams:
    """Use the same (m, r, tau) for every channel."""

    params: SeParams

    def resolve(self, values) -> SeParams:
        return self.params

    def describe(self) -> str:
        p = self.params
        return f"fixed(m={p.m},r={p.r!r},tau={p.tau})"


@dataclass(frozen=True)
class DefaultR:
    """Per-channel r = 0.2 * sd of that channel."""

    m: int = 2
    tau: int = 1
    fraction: float = 0.2

    def resolve(self, values) -> SeParams:
        return SeParams(self.m, default_tolerance(values, self.fraction), self.tau)

    def describe(self) -> str:
        return f"default_r(m={self.m},tau={self.tau},fraction={self.fraction!r})"


def channel_key(channel, axis=None) -> str:
    """``"HipLeft:Y"`` for joint channels, ``"V2"`` for gait parameters."""
    if isinstance(channel, JointId):
        return f"{channel.value}:{Axis.parse(axis).value}"
    return str(getattr(channel, "code", channel))


@dataclass(frozen=True)
class SeProfile:
    entries: dict[str, SeOutcome]
    provenance: TrialMetadata
    axis: Axis | None = None
    policy: str = ""

    def __getitem__(self, key) -> SeOutcome:
        return self.entries[key]

    def __contains__(self, key):
        return key in self.entries

    def value(self, key) -> float | None:
        return self.entries[key].value

    def values(self, keys: Iterable[str]) -> list[float | None]:
        return [self.entries[k].value for k in keys]

    def joint_key(self, joint: JointId) -> str:
        return channel_key(joint, self.axis)


def _is_gait_param(c) -> bool:
    try:
        GaitParameterId.parse(c)
    except ValueError:
        return False
    return True


def se_profile(
    trial: TrialRecording,
    channels: JointGroup | Sequence,
    axis="Y",
    params_policy: FixedParams | DefaultR | None = None,
) -> SeProfile:
    """Entropy of each channel of one trial.

    ``channels`` is a JointGroup (or list of JointId), using coordinate
    ``axis``; or a list of gait parameters, in which case tilt series are
    used and ``axis`` is ignored. Undefined outcomes are kept.
    """
    policy = params_policy or DefaultR()
    members = list(channels.members if isinstance(channels, JointGroup) else channels)
    if not members:
        raise ValueError("no channels requested")
    is_gait = all(_is_gait_param(c) for c in members)
    entries: dict[str, SeOutcome] = {}
    if is_gait:
        prof_axis = None
        for c in members:
            param = GaitParameterId.parse(c)
            key = param.code
            try:
                values = tilt_series(trial, param).values
                entries[key] = sample_entropy(values, policy.resolve(values))
            except GaitError as exc:
                raise ChannelError(key, exc) from exc
    else:
        prof_axis = Axis.parse(axis)
        for c in members:
            joint = c if isinstance(c, JointId) else JointId.parse(c)
            key = channel_key(joint, prof_axis)
            values = trial.positions[:, joint.index, prof_axis.index]
            try:
                entries[key] = sample_entropy(values, policy.resolve(values))
            except GaitError as exc:
                raise ChannelError(key, exc) from exc
    if len(entries) != len(members):
        raise ValueError("duplicate channels requested")
    return SeProfile(entries, trial.metadata, prof_axis, policy.describe())


# -- interchange CSV ---------------------------------------------------------

PROFILE_COLUMNS = [
    "subject_id", "sex", "condition", "camera", "day", "trial_no",
    "axis", "channel", "value", "count_m", "count_m1", "m", "r", "tau", "n", "policy",
]


def profiles_to_csv(profiles: Iterable[SeProfile]) -> str:
    """Long format, one row per (trial, channel); undefined values are empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_COLUMNS)
    for p in profiles:
        md = p.provenance
        for key, o in p.entries.items():
            w.writerow([
                md.subject_id, md.sex.value, md.condition.value, md.camera.value, md.day, md.trial_no,
                "" if p.axis is None else p.axis.value, key,
                "" if o.value is None else repr(o.value), o.match_count_m, o.match_count_m1,
                o.params.m, repr(o.params.r), o.params.tau, o.n, p.policy,
            ])
    return buf.getvalue()


def profiles_from_csv(text: str) -> list[SeProfile]:
    """Inverse of ``profiles_to_csv``; profile order follows first appearance."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != PROFILE_COLUMNS:
        raise ParseError(f"entropy table columns must be {','.join(PROFILE_COLUMNS)}", 1)
    grouped: dict[tuple, dict] = {}
    for line, row in enumerate(reader, start=2):
        try:
            md = TrialMetadata(row["subject_id"], row["condition"], row["camera"], int(row["day"]),
                               int(row["trial_no"]), row["sex"])
            params = SeParams(int(row["m"]), float(row["r"]), int(row["tau"]))
            value = float(row["value"]) if row["value"] else None
            outcome = SeOutcome(value, int(row["count_m"]), int(row["count_m1"]), params, int(row["n"]))
            axis = Axis.parse(row["axis"]) if row["axis"] else None
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad entropy row: {exc}", line) from None
        slot = grouped.setdefault((md.key, row["axis"]), {"md": md, "axis": axis, "policy": row["policy"], "entries": {}})
        if row["channel"] in slot["entries"]:
            raise ParseError(f"channel {row['channel']} repeated for {md.label}", line)
        slot["entries"][row["channel"]] = outcome
    return [SeProfile(s["entries"], s["md"], s["axis"], s["policy"]) for s in grouped.values()]
