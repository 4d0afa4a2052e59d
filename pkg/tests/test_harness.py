import math

import numpy as np
import pytest

from tdlsim import calibrate as cal
from tdlsim.harness import (
    TdcSystem, calibrate_system, code_density_run, compare, make_system, rms_resolution,
    system_from_budget, time_interval_run,
)
from tdlsim.linearity import report
from tdlsim.synthetic import hist_from_widths, system_histogram
from tdlsim.tdl_model import DelayLineConfig
from tdlsim.uncertainty import JitterBudget, budget
from tdlsim.wave_union import LauncherConfig, wu_lsb


def uniform(n8=4, **kw):
    return DelayLineConfig(num_carry8=n8, nominal_element_delay=5.0, **kw)


def test_variant_flags_must_agree():
    with pytest.raises(ValueError):
        TdcSystem(uniform(), variant="WU")
    with pytest.raises(ValueError):
        TdcSystem(uniform(), variant="DS")
    with pytest.raises(ValueError):
        TdcSystem(uniform(), variant="nope")
    sys_ = make_system("DSWU", uniform())
    assert sys_.delay.dual_sampling and sys_.launcher.enabled


def test_ideal_line_density_is_flat():
    sys_ = make_system("plain", uniform())
    samples = 1_000_000
    hist = code_density_run(sys_, samples, seed=1)
    n = hist.n_bins
    assert n == 32 and hist.total == samples and hist.faults == 0
    d = report(hist).dnl
    bound = math.sqrt(n / samples)
    assert np.abs(d).max() <= 3 * bound
    assert d.std() == pytest.approx(bound, rel=0.3)


def test_wide_bin_collects_proportional_counts():
    sys_ = make_system("plain", uniform(skew_steps=((10, 15.0),)))
    samples = 500_000
    hist = code_density_run(sys_, samples, seed=2)
    widths = sys_.profile.bin_widths()
    expected = samples * widths / widths.sum()
    sd = np.sqrt(expected * (1 - widths / widths.sum()))
    assert np.all(np.abs(hist.counts - expected) <= 5 * sd)
    assert hist.counts[10] / np.delete(hist.counts, 10).mean() == pytest.approx(4.0, rel=0.03)


def test_true_widths_cover_the_window():
    sys_ = make_system("WU", uniform(8, mismatch_sigma=2.0, falling_speed_ratio=1.1, seed=4))
    w = sys_.true_bin_widths()
    assert w.sum() == pytest.approx(sys_.measurement_range, rel=1e-12)
    lo, hi = sys_.nominal_code_span()
    assert len(w) == hi - lo + 1


def test_wave_union_splits_ultra_wide_bin():
    delay = uniform(8, mismatch_sigma=1.0, skew_steps=((20, 25.0),), falling_speed_ratio=1.13,
                    seed=5)
    single = code_density_run(make_system("plain", delay), 400_000, seed=3)
    wu = code_density_run(make_system("WU", delay), 400_000, seed=3)
    assert report(wu).dnl_pkpk < report(single).dnl_pkpk


def test_wave_union_mean_bin_matches_lsb_formula():
    delay = uniform(8, falling_speed_ratio=1.25)
    sys_ = make_system("WU", delay, LauncherConfig(pulse_width=100.0))
    n = len(sys_.true_bin_widths())
    lsb_r, lsb_f = 5.0, 5.0 * 1.25
    assert sys_.measurement_range / n == pytest.approx(wu_lsb(lsb_r, lsb_f), rel=0.01)


def test_shard_and_thread_independence():
    sys_ = make_system("DSWU", uniform(6, mismatch_sigma=1.0, bubble_window_sigma=1.0, seed=2))
    a = code_density_run(sys_, 150_000, seed=9, threads=1)
    b = code_density_run(sys_, 150_000, seed=9, threads=3)
    assert a.counts.tobytes() == b.counts.tobytes()
    assert (a.code_offset, a.faults) == (b.code_offset, b.faults)
    c = code_density_run(sys_, 150_000, seed=10, threads=1)
    assert a.counts.tobytes() != c.counts.tobytes()


def test_code_level_and_word_level_agree_without_noise():
    sys_ = make_system("WU", uniform(6, mismatch_sigma=2.0, falling_speed_ratio=1.1, seed=8))
    a = code_density_run(sys_, 100_000, seed=4, word_level=True)
    b = code_density_run(sys_, 100_000, seed=4, word_level=False)
    assert a.counts.tolist() == b.counts.tolist()


def test_variant_mean_bin_ordering():
    delay = DelayLineConfig(num_carry8=20, mismatch_sigma=2.0, falling_speed_ratio=1.1, seed=3)
    lsb = {}
    for v in ("plain", "WU", "DS", "DSWU"):
        sys_ = make_system(v, delay)
        lsb[v] = sys_.measurement_range / len(sys_.true_bin_widths())
    assert lsb["DSWU"] < min(lsb["WU"], lsb["DS"]) <= max(lsb["WU"], lsb["DS"]) < lsb["plain"]
    assert lsb["WU"] == pytest.approx(lsb["DS"], rel=0.1)


def test_binned_dswu_doubles_mean_bin():
    delay = DelayLineConfig(num_carry8=20, mismatch_sigma=2.0, falling_speed_ratio=1.1, seed=3)
    h = hist_from_widths(make_system("DSWU", delay).true_bin_widths())
    merged = cal.bin_pairs(h)
    ratio = (merged.measurement_range / merged.n_bins) / (h.measurement_range / h.n_bins)
    assert ratio == pytest.approx(2.0, rel=0.01)


def calibrated_plain():
    sys_ = make_system("plain", uniform())
    return calibrate_system(sys_, hist_from_widths(sys_.true_bin_widths(), 32 * 1000))


def test_interval_at_bin_centres_is_exact():
    sys_ = calibrated_plain()
    res = time_interval_run(sys_, start=2.5, step=5.0, steps=30, reps=200, seed=1)
    np.testing.assert_array_equal(res.mean_error, 0.0)
    np.testing.assert_array_equal(res.std, 0.0)
    assert res.rms == (0.0, 0.0)


def test_interval_quantisation_only(rng):
    sys_ = calibrated_plain()
    for start in rng.uniform(0, 150, 20):
        res = time_interval_run(sys_, start=float(start), step=1.0, steps=1, reps=50, seed=0)
        assert abs(res.mean_error[0]) <= 2.5 + 1e-12
        assert res.std[0] <= 5.0 / math.sqrt(12) + 1e-9


def test_interval_needs_calibration():
    with pytest.raises(ValueError):
        time_interval_run(make_system("plain", uniform()), reps=10)


def test_interval_defaults_span_one_period():
    sys_ = calibrated_plain()
    res = time_interval_run(sys_, reps=5)
    assert len(res.true_interval) == int(sys_.measurement_range // 9.41)
    assert res.true_interval[1] - res.true_interval[0] == pytest.approx(9.41)


def test_interval_thread_independence():
    sys_ = calibrate_system(make_system("WU", uniform(6, mismatch_sigma=1.0, element_jitter_sigma=0.2,
                                                     seed=1)), samples=100_000, seed=1)
    a = time_interval_run(sys_, steps=4, reps=70_000, seed=5, threads=1)
    b = time_interval_run(sys_, steps=4, reps=70_000, seed=5, threads=4)
    assert a.std.tobytes() == b.std.tobytes() and a.mean_measured.tobytes() == b.mean_measured.tobytes()


def test_interval_error_definition():
    sys_ = calibrated_plain()
    res = time_interval_run(sys_, start=1.0, step=7.0, steps=5, reps=10)
    np.testing.assert_array_equal(res.mean_error, res.mean_measured - res.true_interval)
    d = res.to_dict()
    assert d["intervals"][2]["mean_error_ps"] == res.mean_error[2]


def test_rms_resolution_examples():
    assert rms_resolution([3.0, 3.0, 3.0]) == (3.0, 0.0)
    assert rms_resolution([4.0, 6.0]) == (5.0, 1.0)
    with pytest.raises(ValueError):
        rms_resolution([])


def test_budget_system_reproduces_quantisation_width():
    b = JitterBudget(4.42, 0.16, 1.45, 480, 0.86)
    sys_ = system_from_budget(b)
    w = sys_.true_bin_widths()
    interior = w[1:-1]
    assert np.allclose(interior, 0.86 * math.sqrt(12))
    with pytest.raises(ValueError):
        system_from_budget(JitterBudget(n_elements=12, sigma_eq=1.0))


def test_budget_system_closure_small():
    b = JitterBudget(sigma_clk=2.0, sigma_cy=0.16, sigma_lut=1.45, n_elements=160, sigma_eq=0.86,
                     has_launcher=False)
    sys_ = system_from_budget(b)
    sys_ = calibrate_system(sys_, hist_from_widths(sys_.true_bin_widths()))
    res = time_interval_run(sys_, start=20.0, step=9.41, reps=20_000, seed=3)
    assert res.rms[0] == pytest.approx(budget(b).sigma_system, rel=0.10)


def test_compare_reports_all_stages():
    delay = DelayLineConfig(num_carry8=10, mismatch_sigma=2.5, falling_speed_ratio=1.13, seed=2)
    out = compare(delay, samples=200_000, seed=1)
    assert set(out) == {"WU", "compensated-WU", "DS", "DSWU", "binned-DSWU"}
    assert out["DSWU"]["lsb"] < out["DS"]["lsb"]
    assert out["binned-DSWU"]["sigma_dnl"] < out["DSWU"]["sigma_dnl"]
    assert "missing_codes" in out["compensated-WU"]


@pytest.mark.parametrize("decimation, clip, faulty", [(8, 15.0, False), (2, 15.0, True),
                                                       (8, 40.0, True)])
def test_fault_free_only_while_bubbles_shorter_than_stride(decimation, clip, faulty):
    line = uniform(6, bubble_window_sigma=10.0, bubble_window_clip=clip)
    sys_ = make_system("plain", line, decimation=decimation, phase_offset=40.0, clock_period=160.0)
    hist = code_density_run(sys_, 200_000, seed=1)
    assert (hist.faults > 0) == faulty


def test_system_histogram_carries_raw_code_offset():
    sys_ = make_system("WU", uniform(8))
    h = system_histogram(sys_, 1000)
    assert h.code_offset == sys_.nominal_code_span()[0] > 0
    assert h.n_bins == len(sys_.true_bin_widths())
    with pytest.raises(ValueError):
        hist_from_widths([])
