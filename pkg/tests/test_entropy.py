import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gaitse.entropy import (
    DefaultR,
    FixedParams,
    SeParams,
    default_tolerance,
    profiles_from_csv,
    profiles_to_csv,
    sample_entropy,
    sample_entropy_naive,
    se_profile,
)
from gaitse.errors import ChannelError, NonPositiveTolerance, SeriesTooShort, ZeroVariance
from gaitse.recording import CORE15, JointId
from gaitse.synth import WalkerProfile, generate_trial

from conftest import make_trial

BOTH = (sample_entropy_naive, sample_entropy)


def _pair_counts(x, m, r, tau):
    """Independent enumeration over index pairs with itertools (no numpy)."""
    count = len(x) - tau * m
    tm = [tuple(x[i + k * tau] for k in range(m)) for i in range(count)]
    tm1 = [tuple(x[i + k * tau] for k in range(m + 1)) for i in range(count)]

    def match(u, v):
        return max(abs(a - b) for a, b in zip(u, v)) <= r

    b = sum(match(tm[i], tm[j]) for i, j in itertools.permutations(range(count), 2))
    a = sum(match(tm1[i], tm1[j]) for i, j in itertools.permutations(range(count), 2))
    return b, a


@pytest.mark.parametrize("fn", BOTH)
def test_hand_enumerated_periodic(fn):
    # m-templates over i = 0..7: (1,2) x3, (2,3) x3, (3,1) x2 -> B = 6 + 6 + 2;
    # every m-match extends, so A = B and SE = 0
    out = fn([1, 2, 3, 1, 2, 3, 1, 2, 3, 1], SeParams(2, 0.5, 1))
    assert (out.match_count_m, out.match_count_m1) == (14, 14)
    assert out.value == 0.0


@pytest.mark.parametrize("fn", BOTH)
def test_hand_enumerated_ln3(fn):
    # templates x[0..6] = 0,0,1,0,0,1,1: four zeros and three ones -> B = 12 + 6 = 18;
    # pairs (0,0) x2, (0,1) x2, (1,0) x2, (1,1) x1 -> A = 2 + 2 + 2 = 6
    out = fn([0, 0, 1, 0, 0, 1, 1, 0], SeParams(1, 0.5, 1))
    assert (out.match_count_m, out.match_count_m1) == (18, 6)
    assert out.value == pytest.approx(math.log(3), abs=1e-15)


@pytest.mark.parametrize("fn", BOTH)
def test_hand_enumerated_lag2(fn):
    # (x_i, x_{i+2}) for i = 0..5: (1,3),(2,1),(3,2) twice each -> B = 6; A likewise
    out = fn([1, 2, 3, 1, 2, 3, 1, 2, 3, 1], SeParams(2, 0.5, 2))
    assert (out.match_count_m, out.match_count_m1) == (6, 6)


@pytest.mark.parametrize("fn", BOTH)
def test_undefined_is_explicit(fn):
    out = fn([1, 2, 3, 4, 5, 6, 7], SeParams(2, 0.5, 1))
    assert out.value is None and not out.defined
    assert out.match_count_m == 0
    assert out.n == 7


@pytest.mark.parametrize("fn", BOTH)
def test_constant_and_wide_tolerance(fn):
    assert fn([5, 5, 5, 5, 5, 5], SeParams(2, 0.1, 1)).value == 0.0
    x = np.random.default_rng(0).normal(size=50)
    r = float(x.max() - x.min())
    assert fn(x, SeParams(2, r, 1)).value == 0.0
    assert fn(x, SeParams(3, r * 2, 2)).value == 0.0


@pytest.mark.parametrize("fn", BOTH)
def test_errors(fn):
    with pytest.raises(SeriesTooShort):
        fn([1, 2, 3, 4, 5], SeParams(2, 0.2, 2))
    fn([1, 2, 3, 4, 5, 6], SeParams(2, 0.2, 2))
    with pytest.raises(NonPositiveTolerance):
        fn([1, 2, 3, 4, 5, 6], SeParams(2, 0.0, 1))
    with pytest.raises(ValueError):
        SeParams(0, 0.2, 1)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(-3, 3), min_size=6, max_size=24),
    st.integers(1, 3),
    st.integers(1, 2),
    st.sampled_from([0.5, 1.0, 1.5, 2.0]),
)
def test_counts_match_independent_enumeration(x, m, tau, r):
    assume(len(x) >= tau * m + 2)
    b, a = _pair_counts(x, m, r, tau)
    for fn in BOTH:
        out = fn(x, SeParams(m, r, tau))
        assert (out.match_count_m, out.match_count_m1) == (b, a)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(20, 300), st.integers(1, 3), st.integers(1, 3),
       st.floats(0.1, 0.5))
def test_fast_equals_naive(seed, n, m, tau, frac):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n).cumsum() if seed % 2 else rng.normal(size=n)
    if seed % 3 == 0:
        x = np.round(x, 1)  # many exact ties and boundary distances
    params = SeParams(m, frac * float(np.std(x, ddof=1)), tau)
    fast, slow = sample_entropy(x, params), sample_entropy_naive(x, params)
    assert (fast.match_count_m, fast.match_count_m1) == (slow.match_count_m, slow.match_count_m1)
    assert fast == slow


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-8, 8), st.integers(-20, 20))
def test_offset_and_scale_exact_for_dyadic_shifts(seed, k, c):
    rng = np.random.default_rng(seed)
    x = rng.integers(-50, 50, size=80) / 8.0
    p = SeParams(2, 1.0, 1)
    base = sample_entropy(x, p)
    shifted = sample_entropy(x + c * 0.25, p)
    scaled = sample_entropy(x * 2.0**k, SeParams(2, 2.0**k, 1))
    for other in (shifted, scaled):
        assert (other.match_count_m, other.match_count_m1, other.value) == (
            base.match_count_m, base.match_count_m1, base.value)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_affine_invariance_under_default_r(seed, c, scale):
    x = np.random.default_rng(seed).normal(size=120).cumsum()
    a = sample_entropy(x, SeParams(2, default_tolerance(x), 1))
    b_series = scale * x + c
    b = sample_entropy(b_series, SeParams(2, default_tolerance(b_series), 1))
    if a.value is None:
        assert b.value is None
    else:
        assert b.value == pytest.approx(a.value, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nonnegative(seed):
    x = np.random.default_rng(seed).normal(size=60)
    out = sample_entropy(x, SeParams(2, 0.3, 1))
    assert out.match_count_m1 <= out.match_count_m
    assert out.value is None or out.value >= 0


def test_white_noise_more_irregular_than_sine():
    wins = 0
    t = np.arange(300)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noise = rng.normal(0, 1, 300)
        sine = np.sqrt(2) * np.sin(2 * np.pi * t / rng.uniform(20, 40) + rng.uniform(0, 2 * np.pi))
        p = SeParams(2, 0.2, 1)
        wins += sample_entropy(noise, p).value > sample_entropy(sine, p).value
    assert wins >= 95


def test_default_tolerance():
    x = np.array([-1.0, 1.0, -1.0, 1.0])
    x = x / np.std(x, ddof=1)
    assert default_tolerance(x) == pytest.approx(0.2, abs=1e-15)
    y = np.random.default_rng(3).normal(size=40)
    assert default_tolerance(10 * y) == pytest.approx(10 * default_tolerance(y), rel=1e-14)
    with pytest.raises(ZeroVariance):
        default_tolerance([2.0] * 10)


def test_profile_constant_pose():
    pos = np.tile(np.linspace(0, 1, 75).reshape(25, 3), (40, 1, 1))
    t = make_trial(positions=pos)
    prof = se_profile(t, CORE15, "Y", FixedParams(SeParams(2, 0.1, 1)))
    assert len(prof.entries) == 15
    assert all(prof.value(k) == 0.0 for k in prof.entries)
    with pytest.raises(ChannelError) as exc:
        se_profile(t, CORE15, "Y", DefaultR())
    assert exc.value.channel == "Head:Y"


def test_profile_gait_parameters(healthy_profile):
    t, _ = generate_trial(healthy_profile, "NW", camera="Frontal", rng=0)
    prof = se_profile(t, ["V1", "V2", "V3"])
    assert list(prof.entries) == ["V1", "V2", "V3"]
    assert prof.axis is None
    assert all(prof[k].defined for k in prof.entries)


def test_profile_keys_and_policy(trial):
    prof = se_profile(trial, [JointId.HipLeft, "KneeLeft"], "X", DefaultR(m=3))
    assert list(prof.entries) == ["HipLeft:X", "KneeLeft:X"]
    assert prof.joint_key(JointId.HipLeft) == "HipLeft:X"
    assert prof["HipLeft:X"].params.m == 3
    assert prof["HipLeft:X"].params.r == pytest.approx(0.2 * np.std(trial.positions[:, 12, 0], ddof=1))
    assert prof.policy == "default_r(m=3,tau=1,fraction=0.2)"


def test_brace_shifts_a_channel_beyond_replicate_spread():
    profile = WalkerProfile(seed=5)
    by_cond = {}
    for cond in ("NW", "KB"):
        by_cond[cond] = np.array([
            se_profile(generate_trial(profile, cond, trial_no=k, rng=100 + k)[0], CORE15, "Y").values(
                [f"{j.value}:Y" for j in CORE15])
            for k in range(1, 6)
        ], dtype=float)
    nw, kb = by_cond["NW"], by_cond["KB"]
    spread = np.maximum(nw.std(axis=0, ddof=1), kb.std(axis=0, ddof=1))
    shift = np.abs(kb.mean(axis=0) - nw.mean(axis=0))
    assert np.any(shift > 3 * spread)
    assert shift[[j.value for j in CORE15].index("KneeRight")] > 3 * spread.max()


def test_csv_round_trip(small_corpus):
    _, results = small_corpus
    profs = [se_profile(t, CORE15, "Y") for t, _ in results[:4]]
    profs.append(se_profile(make_trial(n=8, subject_id="S99"), [JointId.Head], "Y", FixedParams(SeParams(2, 1e-9, 1))))
    assert profs[-1].value("Head:Y") is None
    back = profiles_from_csv(profiles_to_csv(profs))
    assert back == profs
