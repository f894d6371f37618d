"""D-statistics, balanced two-way ANOVA and gauge R&R variance components."""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .entropy import SeProfile, channel_key
from .errors import (
    InsufficientReplication,
    MissingChannel,
    NegativeEstimateTruncated,
    ReplicateMismatch,
    UnbalancedDesign,
    UndefinedSe,
)
from .recording import Condition, JointGroup

__all__ = [
    "DStat",
    "d_statistic",
    "AnovaRow",
    "AnovaTable",
    "two_way_anova",
    "balanced_cube",
    "VarianceComponents",
    "gauge_rr",
    "SummaryRow",
    "subject_summary",
]


# -- D statistic -------------------------------------------------------------


@dataclass(frozen=True)
class DStat:
    subject_id: str
    device: Condition
    joint_set: JointGroup
    per_replicate_d: tuple[float, ...]
    mean_d: float
    ci95: tuple[float, float]
    trial_nos: tuple[int, ...] = ()

    @property
    def excludes_zero(self) -> bool:
        lo, hi = self.ci95
        return lo > 0 or hi < 0


def _t_interval(values: Sequence[float], level: float = 0.95) -> tuple[float, float, float]:
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    mean = math.fsum(x) / n
    sd = float(np.std(x, ddof=1))
    if sd == 0:
        return mean, mean, mean
    half = float(sps.t.ppf(0.5 + level / 2, n - 1)) * sd / math.sqrt(n)
    return mean, mean - half, mean + half


def _by_trial(profiles: Sequence[SeProfile], what: str) -> dict[int, SeProfile]:
    out: dict[int, SeProfile] = {}
    for p in profiles:
        t = p.provenance.trial_no
        if t in out:
            raise ReplicateMismatch(f"two {what} profiles share trial_no {t}")
        out[t] = p
    return out


def d_statistic(nw_profiles: Sequence[SeProfile], md_profiles: Sequence[SeProfile], joints: JointGroup) -> DStat:
    """Per-replicate ``sum(NW) - sum(MD)`` over ``joints`` and its 95% t-interval.

    Replicates are paired by trial number.
    """
    if len(nw_profiles) != len(md_profiles) or len(nw_profiles) < 2:
        raise ReplicateMismatch(f"need equal replicate counts >= 2, got {len(nw_profiles)} and {len(md_profiles)}")
    everything = list(nw_profiles) + list(md_profiles)
    subjects = {p.provenance.subject_id for p in everything}
    axes = {p.axis for p in everything}
    if len(subjects) != 1:
        raise ReplicateMismatch(f"profiles come from several subjects: {sorted(subjects)}")
    if len(axes) != 1:
        raise ReplicateMismatch("profiles use different axes")
    devices = {p.provenance.condition for p in md_profiles}
    if len(devices) != 1:
        raise ReplicateMismatch("device profiles mix conditions")
    nw = _by_trial(nw_profiles, "normal-walking")
    md = _by_trial(md_profiles, "device")
    if set(nw) != set(md):
        raise ReplicateMismatch(f"trial numbers differ: {sorted(nw)} vs {sorted(md)}")
    (axis,) = axes
    keys = [channel_key(j, axis) for j in joints]

    def total(p: SeProfile, sign: float) -> list[float]:
        out = []
        for k in keys:
            if k not in p:
                raise MissingChannel(k, p.provenance.label)
            v = p.value(k)
            if v is None:
                raise UndefinedSe(k, p.provenance.label)
            out.append(sign * v)
        return out

    trials = sorted(nw)
    d = tuple(math.fsum(total(nw[t], 1.0) + total(md[t], -1.0)) for t in trials)
    mean, lo, hi = _t_interval(d)
    return DStat(subjects.pop(), devices.pop(), joints, d, mean, (lo, hi), tuple(trials))


# -- ANOVA -------------------------------------------------------------------


@dataclass(frozen=True)
class AnovaRow:
    source: str
    df: int
    ss: float
    ms: float | None = None
    f: float | None = None
    p: float | None = None


@dataclass(frozen=True)
class AnovaTable:
    """Two-way table; sources Day, Subject, [Day*Subject], Repeatability, Total."""

    rows: tuple[AnovaRow, ...]
    interaction_included: bool
    interaction_p: float | None = None  # from the full model, when it was fitted
    flags: tuple[str, ...] = ()

    def __getitem__(self, source: str) -> AnovaRow:
        for r in self.rows:
            if r.source == source:
                return r
        raise KeyError(source)

    def __contains__(self, source):
        return any(r.source == source for r in self.rows)

    def to_csv(self) -> str:
        def fmt(v, spec):
            return "" if v is None else format(v, spec)

        lines = ["source,df,ss,ms,f,p"]
        for r in self.rows:
            lines.append(",".join([r.source, str(r.df), fmt(r.ss, ".9g"), fmt(r.ms, ".9g"),
                                   fmt(r.f, ".6g"), fmt(r.p, ".6g")]))
        return "\n".join(lines) + "\n"


def balanced_cube(records: Iterable[tuple], n_trials: int | None = None) -> tuple[np.ndarray, list, list]:
    """(day, subject, response) records -> (days, subjects, trials) array.

    Raises UnbalancedDesign unless every (day, subject) cell holds the same
    number of responses.
    """
    cells: dict[tuple, list[float]] = defaultdict(list)
    for day, subject, value in records:
        cells[(day, subject)].append(float(value))
    days = sorted({d for d, _ in cells})
    subjects = sorted({s for _, s in cells})
    sizes = {len(v) for v in cells.values()}
    if len(cells) != len(days) * len(subjects) or len(sizes) != 1:
        raise UnbalancedDesign("every (day, subject) cell needs the same number of trials")
    (t,) = sizes
    if n_trials is not None and t != n_trials:
        raise UnbalancedDesign(f"cells hold {t} trials, expected {n_trials}")
    cube = np.array([[cells[(d, s)] for s in subjects] for d in days])
    return cube, days, subjects


def _f_test(ms, ms_den, df, df_den):
    if ms is None or ms_den is None or df_den == 0 or ms_den <= 0:
        return None, None
    f = ms / ms_den
    return f, float(sps.f.sf(f, df, df_den))


def _pool(ss, df):
    return ss / df if df > 0 else None


def two_way_anova(data, include_interaction="auto", alpha: float = 0.05) -> AnovaTable:
    """Balanced crossed ANOVA for responses shaped (days, subjects, trials).

    ``include_interaction`` is True, False or ``"auto"``: fit the
    interaction and pool it into the error term when its p >= ``alpha``.
    With the interaction in the model, Day and Subject are tested against
    the interaction mean square (both factors random, as in a gauge
    study); otherwise every source is tested against repeatability.
    Zero error variance leaves F and p as None and adds a flag.
    """
    try:
        y = np.asarray(data, dtype=np.float64)
    except ValueError:
        raise UnbalancedDesign("responses do not form a (days, subjects, trials) array") from None
    if y.ndim == 2:
        y = y[:, :, None]
    if y.ndim != 3 or 0 in y.shape:
        raise UnbalancedDesign("responses must be shaped (days, subjects, trials)")
    if not np.all(np.isfinite(y)):
        raise UnbalancedDesign("missing or non-finite responses")
    a, b, n = y.shape
    if a < 2 or b < 2:
        raise InsufficientReplication("need at least 2 days and 2 subjects")
    if include_interaction is True and n < 2:
        raise InsufficientReplication("interaction needs at least 2 trials per cell")

    grand = y.mean()
    day_means = y.mean(axis=(1, 2))
    subj_means = y.mean(axis=(0, 2))
    cell_means = y.mean(axis=2)
    ss_day = b * n * float(((day_means - grand) ** 2).sum())
    ss_subj = a * n * float(((subj_means - grand) ** 2).sum())
    inter = cell_means - day_means[:, None] - subj_means[None, :] + grand
    ss_int = n * float((inter ** 2).sum())
    ss_within = float(((y - cell_means[:, :, None]) ** 2).sum())
    ss_total = float(((y - grand) ** 2).sum())
    df_day, df_subj, df_int, df_within = a - 1, b - 1, (a - 1) * (b - 1), a * b * (n - 1)
    df_total = a * b * n - 1

    flags = []
    ms_day, ms_subj = ss_day / df_day, ss_subj / df_subj

    interaction_p = None
    full = None
    if n >= 2 and include_interaction in (True, "auto"):
        ms_int = _pool(ss_int, df_int)
        ms_within = _pool(ss_within, df_within)
        f_int, p_int = _f_test(ms_int, ms_within, df_int, df_within)
        interaction_p = p_int
        fd, pd_ = _f_test(ms_day, ms_int, df_day, df_int)
        fs, ps = _f_test(ms_subj, ms_int, df_subj, df_int)
        full = (
            AnovaRow("Day", df_day, ss_day, ms_day, fd, pd_),
            AnovaRow("Subject", df_subj, ss_subj, ms_subj, fs, ps),
            AnovaRow("Day*Subject", df_int, ss_int, ms_int, f_int, p_int),
            AnovaRow("Repeatability", df_within, ss_within, ms_within),
            AnovaRow("Total", df_total, ss_total),
        )
        keep = include_interaction is True or (p_int is not None and p_int < alpha)
        if keep:
            if p_int is None:
                flags.append("F undefined: zero repeatability variance")
            return AnovaTable(full, True, interaction_p, tuple(flags))

    ss_err = ss_int + ss_within
    df_err = df_int + df_within
    ms_err = _pool(ss_err, df_err)
    fd, pd_ = _f_test(ms_day, ms_err, df_day, df_err)
    fs, ps = _f_test(ms_subj, ms_err, df_subj, df_err)
    if fd is None:
        flags.append("F undefined: zero repeatability variance")
    rows = (
        AnovaRow("Day", df_day, ss_day, ms_day, fd, pd_),
        AnovaRow("Subject", df_subj, ss_subj, ms_subj, fs, ps),
        AnovaRow("Repeatability", df_err, ss_err, ms_err),
        AnovaRow("Total", df_total, ss_total),
    )
    return AnovaTable(rows, False, interaction_p, tuple(flags))


# -- gauge R&R ---------------------------------------------------------------


@dataclass(frozen=True)
class VarianceComponents:
    repeatability: float
    reproducibility_subjects: float
    reproducibility_days: float
    truncated: tuple[str, ...] = ()

    @property
    def reproducibility(self) -> float:
        return self.reproducibility_subjects + self.reproducibility_days

    @property
    def total_gage_rr(self) -> float:
        return self.repeatability + self.reproducibility

    @property
    def total_variation(self) -> float:
        # no part-to-part factor in this design: every component is gauge variance
        return self.total_gage_rr

    @property
    def percent_contribution(self) -> dict[str, float]:
        total = self.total_variation
        parts = {
            "Total Gage R&R": self.total_gage_rr,
            "Repeatability": self.repeatability,
            "Reproducibility": self.reproducibility,
            "Subjects": self.reproducibility_subjects,
            "Days": self.reproducibility_days,
            "Total Variation": self.total_variation,
        }
        return {k: (100.0 * v / total if total > 0 else float("nan")) for k, v in parts.items()}

    def to_csv(self) -> str:
        pct = self.percent_contribution
        values = {
            "Total Gage R&R": self.total_gage_rr,
            "Repeatability": self.repeatability,
            "Reproducibility": self.reproducibility,
            "Subjects": self.reproducibility_subjects,
            "Days": self.reproducibility_days,
            "Total Variation": self.total_variation,
        }
        lines = ["source,varcomp,percent_contribution,truncated"]
        for k, v in values.items():
            trunc = int(k in self.truncated)
            lines.append(f"{k},{v:.7g},{pct[k]:.2f},{trunc}")
        return "\n".join(lines) + "\n"


def gauge_rr(anova: AnovaTable, n_days: int, n_subjects: int, n_trials: int) -> VarianceComponents:
    """Method-of-moments variance components from a no-interaction table.

    Negative estimates are set to 0, listed in ``truncated`` and reported
    with a NegativeEstimateTruncated warning.
    """
    if anova.interaction_included:
        raise ValueError("gauge R&R expects the table without the interaction term")
    ms_err = anova["Repeatability"].ms
    if ms_err is None:
        raise InsufficientReplication("no error degrees of freedom")
    raw = {
        "Subjects": (anova["Subject"].ms - ms_err) / (n_days * n_trials),
        "Days": (anova["Day"].ms - ms_err) / (n_subjects * n_trials),
    }
    truncated = tuple(k for k, v in raw.items() if v < 0)
    for k in truncated:
        warnings.warn(f"{k} variance estimate {raw[k]:.3g} < 0 set to 0", NegativeEstimateTruncated, stacklevel=2)
    return VarianceComponents(
        float(ms_err),
        max(0.0, float(raw["Subjects"])),
        max(0.0, float(raw["Days"])),
        truncated,
    )


# -- descriptive summaries ---------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    group: tuple
    channel: str
    mean: float | None
    sd: float | None
    n: int


_META_KEYS = ("subject_id", "condition", "camera", "day", "trial_no", "sex")


def subject_summary(profiles: Sequence[SeProfile], group_by: Sequence[str] = ("subject_id", "condition")) -> list[SummaryRow]:
    """Mean and sample sd of each channel per metadata group.

    Undefined entries are excluded from the statistics; ``n`` counts the
    defined values. A single value has sd 0. Rows are sorted by group then
    channel order of the first profile.
    """
    if not profiles:
        raise ValueError("no profiles")
    bad = [k for k in group_by if k not in _META_KEYS]
    if bad:
        raise ValueError(f"unknown metadata keys {bad}")
    channels = list(profiles[0].entries)
    groups: dict[tuple, list[SeProfile]] = defaultdict(list)
    for p in profiles:
        key = tuple(str(getattr(p.provenance, k)) for k in group_by)
        groups[key].append(p)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        for ch in channels:
            vals = [p.value(ch) for p in members if ch in p and p.value(ch) is not None]
            if not vals:
                rows.append(SummaryRow(key, ch, None, None, 0))
                continue
            # fsum keeps the result independent of profile order
            mean = math.fsum(vals) / len(vals)
            sd = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
            rows.append(SummaryRow(key, ch, mean, sd, len(vals)))
    return rows
