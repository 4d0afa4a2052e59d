import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdlsim.tdl_model import (
    DelayLineConfig, build_profile, edge_position, elements_passed, profile_to_csv, sample,
    sample_batch,
)


def one_block(**kw):
    return build_profile(DelayLineConfig(num_carry8=1, nominal_element_delay=5.0, **kw))


def test_zero_mismatch_cumulative_delays():
    prof = one_block()
    np.testing.assert_array_equal(prof.rising_cum, [5, 10, 15, 20, 25, 30, 35, 40])


def test_single_skew_step_widens_one_bin():
    widths = one_block(skew_steps=((4, 20.0),)).bin_widths()
    expected = np.full(8, 5.0)
    expected[4] = 25.0
    np.testing.assert_array_equal(widths, expected)


def test_falling_speed_ratio_scales_elementwise():
    prof = one_block(falling_speed_ratio=1.2)
    np.testing.assert_allclose(prof.falling_cum, 1.2 * prof.rising_cum, rtol=1e-15)


def test_falling_multipliers_override():
    mult = (1.0, 2.0) * 4
    prof = one_block(falling_multipliers=mult)
    np.testing.assert_allclose(np.diff(prof.falling_cum, prepend=0), 5.0 * np.array(mult))


@pytest.mark.parametrize("elapsed, expected", [(0.0, 0), (23.0, 4), (25.0, 5), (1e6, 8)])
def test_edge_position_counts_passed_taps(elapsed, expected):
    prof = one_block()
    # counting oracle: taps whose cumulative delay has elapsed
    assert edge_position(prof, "rising", elapsed) == expected
    assert expected == sum(1 for c in prof.rising_cum if c <= elapsed)


def test_edge_position_rejects_unknown_polarity():
    with pytest.raises(ValueError):
        edge_position(one_block(), "sideways", 1.0)


def test_dual_sampling_interleaves_s_taps():
    prof = one_block(dual_sampling=True)
    assert prof.tap_count == 16
    np.testing.assert_array_equal(prof.rising_cum[::2], [5, 10, 15, 20, 25, 30, 35, 40])
    np.testing.assert_array_equal(prof.rising_cum[1::2], np.arange(7.5, 45, 5))
    np.testing.assert_array_equal(prof.element_of_tap, np.repeat(np.arange(1, 9), 2))


def test_dual_sampling_s_tap_never_overtakes_next_c_tap():
    prof = build_profile(DelayLineConfig(num_carry8=4, dual_sampling=True, mismatch_sigma=3.0,
                                         s_tap_offset=4.0, seed=3))
    assert np.all(np.diff(prof.rising_cum) >= 0)
    assert np.all(np.diff(prof.falling_cum) >= 0)


def test_elements_passed_shares_element_between_tap_pair():
    prof = one_block(dual_sampling=True)
    assert elements_passed(prof, "rising", 4.0) == 0
    assert elements_passed(prof, "rising", 5.0) == 1
    assert elements_passed(prof, "rising", 7.5) == 1
    assert elements_passed(prof, "rising", 10.0) == 2


@pytest.mark.parametrize("kw", [
    {"num_carry8": 0}, {"nominal_element_delay": 0.0}, {"mismatch_sigma": -1.0},
    {"skew_steps": ((99, 1.0),)}, {"skew_steps": ((0, -1.0),)}, {"falling_speed_ratio": 0.0},
    {"falling_multipliers": (1.0,)}, {"bubble_window_clip": 0.0},
])
def test_invalid_configs_rejected(kw):
    base = {"num_carry8": 1}
    base.update(kw)
    with pytest.raises(ValueError):
        DelayLineConfig(**base)


def test_profile_arrays_are_read_only():
    prof = one_block()
    with pytest.raises(ValueError):
        prof.rising_cum[0] = 1.0


def test_build_profile_reproducible_for_equal_seeds():
    cfg = DelayLineConfig(num_carry8=10, mismatch_sigma=2.0, sample_offset_sigma=0.5, seed=42)
    a, b = build_profile(cfg), build_profile(cfg)
    assert a.rising_cum.tobytes() == b.rising_cum.tobytes()
    assert a.sample_offsets.tobytes() == b.sample_offsets.tobytes()
    c = build_profile(DelayLineConfig(num_carry8=10, mismatch_sigma=2.0, seed=43))
    assert not np.array_equal(a.rising_cum, c.rising_cum)


def test_noiseless_word_at_tap_boundary():
    prof = one_block()
    word = sample(prof, [("rising", 15.0)])
    assert str(word) == "11100000"


def test_wave_union_word_levels():
    # falling edge passed 10 taps, rising edge passed 3
    prof = build_profile(DelayLineConfig(num_carry8=2))
    bits = sample(prof, [("falling", 52.0), ("rising", 17.0)]).bits
    expected = np.ones(16, dtype=bool)
    expected[3:10] = False
    np.testing.assert_array_equal(bits, expected)


def test_sample_rejects_duplicate_polarity():
    with pytest.raises(ValueError):
        sample(one_block(), [("rising", 1.0), ("rising", 2.0)])


def test_bubble_displacement_extends_beyond_one_tap(rng):
    prof = build_profile(DelayLineConfig(num_carry8=8, bubble_window_sigma=8.0))
    words = sample_batch(prof, np.full(5000, 160.0), rng=rng)
    clean_edge = edge_position(prof, "rising", 160.0)
    # displacement census: distance of each stray bit from the clean transition
    stray_hi = [np.flatnonzero(w[clean_edge:]).max(initial=-1) + 1 for w in words]
    stray_lo = [clean_edge - np.flatnonzero(~w[:clean_edge]).min(initial=clean_edge) for w in words]
    assert max(stray_hi) > 1 and max(stray_lo) > 1


def test_clipped_sampling_noise_is_bounded(rng):
    prof = build_profile(DelayLineConfig(num_carry8=4, bubble_window_sigma=10.0,
                                         bubble_window_clip=7.0))
    words = sample_batch(prof, np.full(2000, 80.0), rng=rng)
    # with |shift| <= 7 ps only taps within 7 ps of the edge can flip
    cum = prof.rising_cum
    frozen = np.abs(cum - 80.0) > 7.0
    np.testing.assert_array_equal(words[:, frozen], np.broadcast_to(cum[frozen] <= 80.0, words[:, frozen].shape))


def test_profile_csv_round_trip(tmp_path):
    prof = build_profile(DelayLineConfig(num_carry8=2, mismatch_sigma=1.0, seed=1))
    path = tmp_path / "p.csv"
    profile_to_csv(prof, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 1], prof.rising_cum)


@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0, 4), ds=st.booleans())
def test_noiseless_words_are_thermometers(seed, sigma, ds):
    prof = build_profile(DelayLineConfig(num_carry8=2, mismatch_sigma=sigma, dual_sampling=ds,
                                         seed=seed))
    t = np.random.default_rng(seed).uniform(0, prof.range * 1.1, 50)
    words = sample_batch(prof, t)
    assert np.all(np.diff(words.astype(int), axis=1) <= 0)
    np.testing.assert_array_equal(words.sum(axis=1), edge_position(prof, "rising", t))


@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0, 4),
       skew=st.floats(0, 50), ds=st.booleans())
def test_width_sum_equals_range_exactly(seed, sigma, skew, ds):
    prof = build_profile(DelayLineConfig(num_carry8=3, mismatch_sigma=sigma, dual_sampling=ds,
                                         skew_steps=((5, skew),), seed=seed))
    assert prof.bin_widths().sum() == pytest.approx(prof.range, rel=1e-14)
    assert np.all(prof.bin_widths() >= 0)


@given(a=st.floats(0, 500), b=st.floats(0, 500), seed=st.integers(0, 1000))
def test_edge_position_monotone(a, b, seed):
    prof = build_profile(DelayLineConfig(num_carry8=4, mismatch_sigma=2.0, seed=seed))
    lo, hi = sorted((a, b))
    assert edge_position(prof, "rising", lo) <= edge_position(prof, "rising", hi)
    assert edge_position(prof, "falling", lo) <= edge_position(prof, "falling", hi)
