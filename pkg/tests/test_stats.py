import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitse.entropy import SeOutcome, SeParams, SeProfile, se_profile
from gaitse.errors import (
    InsufficientReplication,
    MissingChannel,
    NegativeEstimateTruncated,
    ReplicateMismatch,
    UnbalancedDesign,
    UndefinedSe,
)
from gaitse.recording import CORE15, Axis, LEFT_FIVE, MIDDLE_FIVE, RIGHT_FIVE, TrialMetadata
from gaitse.stats import AnovaRow, AnovaTable, balanced_cube, d_statistic, gauge_rr, subject_summary, two_way_anova
from gaitse.synth import WalkerProfile, generate_trial, random_profile

# y[day][subject][trial]
HAND = [[[1, 3], [2, 8]], [[4, 5], [6, 7]]]


def _profile(values: dict, subject="S1", condition="NW", trial_no=1):
    entries = {k: SeOutcome(v, 10, 5, SeParams(), 100) for k, v in values.items()}
    return SeProfile(entries, TrialMetadata(subject, condition, "Sagittal", trial_no=trial_no), Axis.Y)


def _inflate(p: SeProfile, delta: float, condition="KB") -> SeProfile:
    entries = {k: replace(o, value=o.value + delta) for k, o in p.entries.items()}
    return SeProfile(entries, replace(p.provenance, condition=condition), p.axis, p.policy)


def _relabel(p: SeProfile, condition) -> SeProfile:
    return SeProfile(p.entries, replace(p.provenance, condition=condition), p.axis, p.policy)


# -- ANOVA -------------------------------------------------------------------


def test_hand_worked_2x2x2_full_model():
    t = two_way_anova(HAND, include_interaction=True)
    assert [r.source for r in t.rows] == ["Day", "Subject", "Day*Subject", "Repeatability", "Total"]
    assert [r.df for r in t.rows] == [1, 1, 1, 4, 7]
    assert [r.ss for r in t.rows] == [8.0, 12.5, 0.5, 21.0, 42.0]
    assert t["Repeatability"].ms == 5.25
    assert t["Day"].f == 16.0 and t["Subject"].f == 25.0
    assert t["Day*Subject"].f == pytest.approx(0.5 / 5.25, rel=1e-15)
    # F(1, 1) has a closed-form tail: p = 1 - (2/pi) atan(sqrt(F))
    assert t["Day"].p == pytest.approx(1 - 2 / math.pi * math.atan(4.0), abs=1e-12)
    assert t["Subject"].p == pytest.approx(1 - 2 / math.pi * math.atan(5.0), abs=1e-12)


def test_hand_worked_2x2x2_pooled():
    t = two_way_anova(HAND, include_interaction=False)
    assert [r.source for r in t.rows] == ["Day", "Subject", "Repeatability", "Total"]
    assert [r.df for r in t.rows] == [1, 1, 5, 7]
    assert [r.ss for r in t.rows] == [8.0, 12.5, 21.5, 42.0]
    assert t["Repeatability"].ms == 4.3
    assert t["Day"].f == pytest.approx(8 / 4.3, rel=1e-15)
    # auto pools: the interaction p is far above 0.05
    auto = two_way_anova(HAND)
    assert not auto.interaction_included
    assert auto.interaction_p == pytest.approx(two_way_anova(HAND, True)["Day*Subject"].p)
    assert auto.rows == t.rows


def test_auto_keeps_significant_interaction():
    rng = np.random.default_rng(0)
    y = rng.normal(0, 0.01, size=(3, 4, 3))
    y += np.array([[1, -1, 1, -1], [-1, 1, -1, 1], [0, 0, 0, 0]])[:, :, None]
    t = two_way_anova(y, "auto")
    assert t.interaction_included and t["Day*Subject"].p < 0.05


def _lstsq_rss(X, y):
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def _design_oracle(y):
    """Sequential sums of squares from dummy-coded least squares fits."""
    a, b, n = y.shape
    d, s = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
    d = np.repeat(d[:, :, None], n, axis=2).ravel()
    s = np.repeat(s[:, :, None], n, axis=2).ravel()
    yy = y.ravel()
    one = np.ones((yy.size, 1))
    D = np.eye(a)[d][:, 1:]
    S = np.eye(b)[s][:, 1:]
    DS = np.eye(a * b)[d * b + s]
    rss0 = _lstsq_rss(one, yy)
    rss_d = _lstsq_rss(np.hstack([one, D]), yy)
    rss_ds = _lstsq_rss(np.hstack([one, D, S]), yy)
    rss_full = _lstsq_rss(DS, yy)
    return {"Total": rss0, "Day": rss0 - rss_d, "Subject": rss_d - rss_ds,
            "Day*Subject": rss_ds - rss_full, "Repeatability": rss_full}


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(2, 8), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_ss_identity_and_least_squares_oracle(a, b, n, seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(a, b, n)) * rng.uniform(0.1, 10) + rng.normal(size=(1, b, 1))
    t = two_way_anova(y, True)
    parts = math.fsum(r.ss for r in t.rows if r.source != "Total")
    assert parts == pytest.approx(t["Total"].ss, rel=1e-9)
    assert sum(r.df for r in t.rows if r.source != "Total") == t["Total"].df == a * b * n - 1
    oracle = _design_oracle(y)
    for r in t.rows:
        assert r.ss == pytest.approx(oracle[r.source], rel=1e-8, abs=1e-9)
        if r.ms is not None:
            assert r.ms == pytest.approx(r.ss / r.df, rel=1e-15)
    pooled = two_way_anova(y, False)
    assert math.fsum(r.ss for r in pooled.rows if r.source != "Total") == pytest.approx(pooled["Total"].ss, rel=1e-9)
    # shuffling leaves the total unchanged
    shuffled = rng.permutation(y.ravel()).reshape(y.shape)
    assert two_way_anova(shuffled, True)["Total"].ss == pytest.approx(t["Total"].ss, rel=1e-12)


def test_constant_responses_flagged():
    t = two_way_anova(np.full((2, 3, 2), 0.7))
    assert all(r.ss == pytest.approx(0, abs=1e-28) for r in t.rows)
    assert t["Day"].f is None and t["Subject"].p is None
    assert t.flags


def test_design_errors():
    with pytest.raises(UnbalancedDesign):
        two_way_anova([[[1, 2], [3]], [[4, 5], [6, 7]]])
    with pytest.raises(UnbalancedDesign):
        two_way_anova(np.array([[[1.0, np.nan]]] * 2))
    with pytest.raises(InsufficientReplication):
        two_way_anova(np.ones((1, 3, 2)))
    with pytest.raises(InsufficientReplication):
        two_way_anova(np.ones((2, 3, 1)), True)
    # one trial per cell: only the additive model exists
    t = two_way_anova(np.random.default_rng(1).normal(size=(3, 4, 1)), "auto")
    assert not t.interaction_included and t["Repeatability"].df == 6


def test_balanced_cube():
    records = [(d, s, 10 * d + i + 0.1 * k) for d in (1, 2) for i, s in enumerate("ABC") for k in range(2)]
    cube, days, subjects = balanced_cube(reversed(records))
    assert cube.shape == (2, 3, 2) and days == [1, 2] and subjects == ["A", "B", "C"]
    with pytest.raises(UnbalancedDesign):
        balanced_cube(records[:-1])


def test_paper_table_f_consistency():
    # mean squares as printed; F recomputed from them
    f = 0.163726 / 0.000226
    assert abs(f - 723.608) / 723.608 < 0.005
    a, b, n = 3, 12, 3
    t = two_way_anova(np.random.default_rng(2).normal(size=(a, b, n)), False)
    assert (t["Day"].df, t["Subject"].df, t["Repeatability"].df, t["Total"].df) == (2, 11, 94, 107)


# -- gauge R&R ---------------------------------------------------------------


def _paper_table():
    return AnovaTable((
        AnovaRow("Day", 2, 0.00005, 0.000027),
        AnovaRow("Subject", 11, 1.80098, 0.163726),
        AnovaRow("Repeatability", 94, 0.02127, 0.000226),
        AnovaRow("Total", 107, 1.82231),
    ), False)


def test_gauge_rr_paper_values():
    with pytest.warns(NegativeEstimateTruncated):
        vc = gauge_rr(_paper_table(), n_days=3, n_subjects=12, n_trials=3)
    assert vc.reproducibility_subjects == pytest.approx(0.0181667, abs=1e-7)
    assert round(vc.reproducibility_subjects, 4) == round(0.0181666, 4)
    assert vc.repeatability == 0.000226
    assert vc.percent_contribution["Repeatability"] == pytest.approx(1.23, abs=0.02)
    assert vc.reproducibility_days == 0.0 and vc.truncated == ("Days",)
    assert vc.total_variation == vc.repeatability + vc.reproducibility_subjects + vc.reproducibility_days
    assert vc.percent_contribution["Total Variation"] == 100.0


def test_gauge_rr_zero_component():
    t = AnovaTable((AnovaRow("Day", 2, 0.2, 0.1), AnovaRow("Subject", 3, 0.3, 0.1),
                    AnovaRow("Repeatability", 30, 3.0, 0.1), AnovaRow("Total", 35, 3.5)), False)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vc = gauge_rr(t, 3, 4, 3)
    assert vc.reproducibility_subjects == 0.0 and vc.reproducibility_days == 0.0
    assert vc.truncated == ()
    assert vc.percent_contribution["Repeatability"] == 100.0


def test_gauge_rr_needs_pooled_table():
    with pytest.raises(ValueError):
        gauge_rr(two_way_anova(HAND, True), 2, 2, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gauge_rr_components_nonnegative(seed):
    y = np.random.default_rng(seed).normal(size=(3, 5, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeEstimateTruncated)
        vc = gauge_rr(two_way_anova(y, False), 3, 5, 3)
    assert min(vc.repeatability, vc.reproducibility_subjects, vc.reproducibility_days) >= 0
    pct = vc.percent_contribution
    assert pct["Repeatability"] + pct["Subjects"] + pct["Days"] == pytest.approx(100.0)


# -- D statistic -------------------------------------------------------------


def _keys(group):
    return [f"{j.value}:Y" for j in group]


def _nw_set(rng, n=3, group=CORE15, dyadic=False):
    out = []
    for t in range(1, n + 1):
        vals = rng.integers(100, 900, size=len(group)) / 1024 if dyadic else rng.uniform(0.1, 1.5, size=len(group))
        out.append(_profile(dict(zip(_keys(group), vals)), trial_no=t))
    return out


def test_d_of_identical_sets_is_zero():
    nw = _nw_set(np.random.default_rng(0))
    d = d_statistic(nw, [_relabel(p, "AB") for p in nw], CORE15)
    assert d.per_replicate_d == (0.0, 0.0, 0.0)
    assert d.mean_d == 0.0 and d.ci95 == (0.0, 0.0)
    assert not d.excludes_zero


def test_uniform_inflation_dyadic_is_exact():
    nw = _nw_set(np.random.default_rng(1), group=LEFT_FIVE, dyadic=True)
    md = [_inflate(p, 0.125) for p in nw]
    d = d_statistic(nw, md, LEFT_FIVE)
    assert d.per_replicate_d == (-0.625,) * 3
    assert d.mean_d == -0.625 and d.ci95 == (-0.625, -0.625)


def test_uniform_inflation_point_one():
    nw = _nw_set(np.random.default_rng(2), group=MIDDLE_FIVE)
    md = [_inflate(p, 0.1) for p in nw]
    d = d_statistic(nw, md, MIDDLE_FIVE)
    for v in d.per_replicate_d:
        assert v == pytest.approx(-0.5, abs=1e-12)
    zero = [_profile(dict.fromkeys(_keys(MIDDLE_FIVE), 0.0), trial_no=t) for t in (1, 2, 3)]
    assert d_statistic(zero, [_inflate(p, 0.1) for p in zero], MIDDLE_FIVE).per_replicate_d == (-0.5,) * 3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_antisymmetry(seed, n):
    rng = np.random.default_rng(seed)
    nw = _nw_set(rng, n)
    md = [_relabel(p, "KB") for p in _nw_set(rng, n)]
    fwd = d_statistic(nw, md, CORE15)
    back = d_statistic(md, nw, CORE15)
    assert back.per_replicate_d == tuple(-v for v in fwd.per_replicate_d)
    assert back.mean_d == pytest.approx(-fwd.mean_d, abs=1e-15)
    assert back.ci95[0] == pytest.approx(-fwd.ci95[1], abs=1e-12)
    assert back.ci95[1] == pytest.approx(-fwd.ci95[0], abs=1e-12)
    assert fwd.ci95[0] <= fwd.mean_d <= fwd.ci95[1]


def test_t_interval_against_textbook_quantile():
    nw = _nw_set(np.random.default_rng(3))
    md = [_relabel(p, "CANE") for p in _nw_set(np.random.default_rng(4))]
    d = d_statistic(nw, md, CORE15)
    x = np.array(d.per_replicate_d)
    p = 0.975  # two degrees of freedom: t_p = (2p - 1) / sqrt(2p(1 - p))
    half = (2 * p - 1) / math.sqrt(2 * p * (1 - p)) * x.std(ddof=1) / math.sqrt(3)
    assert d.ci95[0] == pytest.approx(x.mean() - half, rel=1e-9)
    assert d.ci95[1] == pytest.approx(x.mean() + half, rel=1e-9)


def test_replicates_paired_by_trial_number():
    nw = _nw_set(np.random.default_rng(5))
    md = [_inflate(p, 0.25) for p in nw]
    a = d_statistic(nw, md, CORE15)
    b = d_statistic(list(reversed(nw)), md[1:] + md[:1], CORE15)
    assert a == b


def test_d_statistic_errors():
    rng = np.random.default_rng(6)
    nw = _nw_set(rng)
    md = [_relabel(p, "AB") for p in nw]
    with pytest.raises(ReplicateMismatch):
        d_statistic(nw, md[:2], CORE15)
    with pytest.raises(ReplicateMismatch):
        d_statistic(nw[:1], md[:1], CORE15)
    other = [SeProfile(p.entries, replace(p.provenance, subject_id="S2"), p.axis) for p in md]
    with pytest.raises(ReplicateMismatch):
        d_statistic(nw, other, CORE15)
    shifted = [SeProfile(p.entries, replace(p.provenance, trial_no=p.provenance.trial_no + 1), p.axis) for p in md]
    with pytest.raises(ReplicateMismatch):
        d_statistic(nw, shifted, CORE15)
    with pytest.raises(MissingChannel):
        d_statistic(_nw_set(rng, group=MIDDLE_FIVE), [_relabel(p, "AB") for p in _nw_set(rng, group=MIDDLE_FIVE)], CORE15)
    holes = [SeProfile({**p.entries, "Head:Y": replace(p.entries["Head:Y"], value=None)}, p.provenance, p.axis) for p in md]
    with pytest.raises(UndefinedSe) as exc:
        d_statistic(nw, holes, CORE15)
    assert exc.value.channel == "Head:Y"


@pytest.mark.slow
def test_brace_excludes_zero_and_control_covers_zero():
    """Seeded corpora: KB vs NW is detected, NW vs NW is not (>= 90/100)."""
    detected = covered = 0
    for seed in range(100):
        prof = random_profile(np.random.default_rng([seed, 1]))

        def trials(cond, base):
            return [se_profile(generate_trial(prof, cond, duration_s=4.0, trial_no=k,
                                              rng=np.random.default_rng([seed, base, k]))[0],
                               RIGHT_FIVE, "Y") for k in (1, 2, 3)]

        nw = trials("NW", 0)
        kb = trials("KB", 1)
        control = [_relabel(p, "AB") for p in trials("NW", 2)]
        detected += d_statistic(nw, kb, RIGHT_FIVE).excludes_zero
        covered += not d_statistic(nw, control, RIGHT_FIVE).excludes_zero
    assert detected >= 90 and covered >= 90, (detected, covered)


# -- summaries ---------------------------------------------------------------


def test_single_profile_summary():
    rows = subject_summary([_profile({"Head:Y": 0.4, "Neck:Y": 0.5})])
    assert [(r.channel, r.mean, r.sd, r.n) for r in rows] == [("Head:Y", 0.4, 0.0, 1), ("Neck:Y", 0.5, 0.0, 1)]


def test_summary_excludes_undefined_and_orders_groups():
    ps = [
        _profile({"Head:Y": 0.2}, subject="S2", trial_no=1),
        _profile({"Head:Y": None}, subject="S2", trial_no=2),
        _profile({"Head:Y": 0.4}, subject="S2", trial_no=3),
        _profile({"Head:Y": None}, subject="S1", trial_no=1),
    ]
    rows = subject_summary(ps, ("subject_id",))
    assert [r.group for r in rows] == [("S1",), ("S2",)]
    assert rows[0].n == 0 and rows[0].mean is None
    assert rows[1].n == 2 and rows[1].mean == pytest.approx(0.3)
    assert rows[1].sd == pytest.approx(np.std([0.2, 0.4], ddof=1))
    with pytest.raises(ValueError):
        subject_summary(ps, ("height",))


def test_summary_over_corpus(small_corpus):
    _, results = small_corpus
    profs = [se_profile(t, MIDDLE_FIVE, "Y") for t, _ in results]
    rows = subject_summary(profs, ("subject_id", "condition"))
    groups = {r.group for r in rows}
    assert len(groups) == 3 * 5
    assert all(r.n == 3 for r in rows)
    assert rows == subject_summary(list(reversed(profs)), ("subject_id", "condition"))


def test_summary_separates_designed_subjects():
    calm = WalkerProfile(noise_sd=0.0004, seed=1)
    shaky = WalkerProfile(noise_sd=0.0012, seed=2)
    profs = []
    for sid, prof in (("calm", calm), ("shaky", shaky)):
        for k in range(1, 11):
            t, _ = generate_trial(prof, "NW", duration_s=4.0, subject_id=sid, trial_no=k, rng=k)
            profs.append(se_profile(t, MIDDLE_FIVE, "Y"))
    rows = {(r.group[0], r.channel): r for r in subject_summary(profs, ("subject_id",))}
    for key in _keys(MIDDLE_FIVE):
        lo, hi = rows[("calm", key)], rows[("shaky", key)]
        assert hi.mean - lo.mean > 3 * math.hypot(lo.sd, hi.sd) / math.sqrt(10), key
