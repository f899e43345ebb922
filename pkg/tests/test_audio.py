import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from deskworld.audio import (
    FREQ_MAX, FREQ_MIN, MAX_DURATION, SAMPLE_RATE, SPEED_THRESHOLD,
    ImpactClip, MaterialModeTable, decode_wav, default_materials_path,
    encode_wav, event_rng, is_occluded, sample_modes, spatialize,
    synthesize_impact, synthesize_modes,
)
from deskworld.errors import SubThresholdImpact, UnknownMaterial
from deskworld.mathutil import IDENTITY_QUAT
from deskworld.world import World

TABLE = MaterialModeTable()


def impact_event(speed=2.0, impulse=5.0, state="enter", point=(0.0, 0.5, 0.0)):
    return SimpleNamespace(state=state, relative_normal_speed=speed,
                           impulse=impulse, point=point, frame=10, ids=(1, 2))


def test_materials_file_well_formed():
    raw = json.loads(default_materials_path().read_text())
    assert set(raw["materials"]) >= {"wood", "metal", "glass", "ceramic",
                                     "cardboard", "plastic"}
    for m in raw["materials"].values():
        assert m["bands"], "material without bands"
        assert all(b["weight"] > 0 for b in m["bands"])
        assert 0.0 <= m["hardness"] <= 1.0


def test_unknown_material_rejected():
    with pytest.raises(UnknownMaterial):
        TABLE.get("unobtainium")


def test_mode_frequency_distribution_monte_carlo():
    """Mean log-frequency over many draws must match the table's band mixture."""
    for material in ("wood", "metal"):
        bands = TABLE.get(material)["bands"]
        w = np.array([b["weight"] for b in bands])
        w = w / w.sum()
        expected_mean = float(sum(wi * b["freq_log_mean"]
                                  for wi, b in zip(w, bands)))
        var = float(sum(wi * (b["freq_log_sd"] ** 2
                              + (b["freq_log_mean"] - expected_mean) ** 2)
                        for wi, b in zip(w, bands)))
        rng = np.random.default_rng(0)
        logs = []
        while len(logs) < 10_000:
            ms = sample_modes(TABLE, material, "wood", rng)
            logs += [math.log(f) for f, _, _ in ms.modes]
        logs = np.array(logs[:10_000])
        sem = math.sqrt(var / len(logs))
        assert abs(logs.mean() - expected_mean) < 3 * sem + 0.01, material


def test_mode_count_and_range():
    rng = np.random.default_rng(1)
    lo, hi = TABLE.get("glass")["mode_count_range"]
    for _ in range(200):
        ms = sample_modes(TABLE, "glass", "metal", rng)
        assert lo <= len(ms.modes) <= hi
        freqs = [f for f, _, _ in ms.modes]
        assert freqs == sorted(freqs)
        assert all(FREQ_MIN <= f <= FREQ_MAX for f in freqs)
        assert all(d > 0 and a > 0 for _, d, a in ms.modes)


def test_fft_peaks_within_one_bin():
    """Each synthesized mode must put a spectral peak within one FFT bin."""
    modes = [(440.0, 4.0, 1.0), (1200.0, 4.0, 0.8), (3000.0, 4.0, 0.6)]
    samples, _ = synthesize_modes(modes, gain=0.1)
    n = len(samples)
    spec = np.abs(np.fft.rfft(samples))
    freqs = np.fft.rfftfreq(n, 1.0 / SAMPLE_RATE)
    binw = freqs[1] - freqs[0]
    for f, _, _ in modes:
        lo = np.searchsorted(freqs, f - 50)
        hi = np.searchsorted(freqs, f + 50)
        local_peak = freqs[lo + np.argmax(spec[lo:hi])]
        assert abs(local_peak - f) <= binw
    # no spurious peak far above the highest mode
    above = freqs > 3000.0 + 200.0
    assert spec[above].max() < 0.05 * spec.max()


def test_decay_envelope_slope():
    """Log-RMS envelope slope must match the mode damping within 5%."""
    d = 8.0
    samples, _ = synthesize_modes([(500.0, d, 1.0)], gain=0.5)
    win = SAMPLE_RATE // 50  # 20 ms windows
    n_win = len(samples) // win
    rms = np.array([np.sqrt(np.mean(samples[i * win:(i + 1) * win] ** 2))
                    for i in range(n_win)])
    t = (np.arange(n_win) + 0.5) * win / SAMPLE_RATE
    keep = rms > 1e-6
    slope = np.polyfit(t[keep], np.log(rms[keep]), 1)[0]
    assert slope == pytest.approx(-d, rel=0.05)


def test_duration_follows_loudest_mode():
    _, dur = synthesize_modes([(500.0, 100.0, 1.0), (200.0, 2.0, 0.2)], gain=0.1)
    assert dur == pytest.approx(math.log(1000.0) / 100.0, rel=1e-9)
    _, dur = synthesize_modes([(500.0, 0.5, 1.0)], gain=0.1)
    assert dur == MAX_DURATION


def test_rms_doubles_with_doubled_impulse():
    rng_a = event_rng(0, 10, 0)
    rng_b = event_rng(0, 10, 0)
    clip_a = synthesize_impact(impact_event(impulse=1.0), ("wood", 0.5),
                               ("metal", 0.2), rng_a, TABLE)
    clip_b = synthesize_impact(impact_event(impulse=2.0), ("wood", 0.5),
                               ("metal", 0.2), rng_b, TABLE)
    rms = lambda x: float(np.sqrt(np.mean(x ** 2)))
    assert rms(clip_b.samples) / rms(clip_a.samples) == pytest.approx(2.0, rel=1e-9)


def test_energy_monotone_in_impulse():
    prev = 0.0
    for impulse in (0.5, 1.0, 2.0, 4.0):
        clip = synthesize_impact(impact_event(impulse=impulse), ("wood", 0.5),
                                 ("metal", 0.2), event_rng(0, 1, 0), TABLE)
        e = float(np.sum(clip.samples ** 2))
        assert e > prev
        prev = e


def test_sub_threshold_and_non_enter_rejected():
    with pytest.raises(SubThresholdImpact):
        synthesize_impact(impact_event(speed=SPEED_THRESHOLD / 2), ("wood", 1.0),
                          ("wood", 1.0), event_rng(0, 0, 0), TABLE)
    with pytest.raises(SubThresholdImpact):
        synthesize_impact(impact_event(state="stay"), ("wood", 1.0),
                          ("wood", 1.0), event_rng(0, 0, 0), TABLE)


def test_heavier_struck_sounds_lower():
    def peak_freq(mass):
        clip = synthesize_impact(impact_event(), ("metal", mass), ("metal", mass),
                                 event_rng(3, 7, 0), TABLE)
        spec = np.abs(np.fft.rfft(clip.samples))
        return np.fft.rfftfreq(len(clip.samples), 1 / SAMPLE_RATE)[np.argmax(spec)]

    assert peak_freq(10.0) < peak_freq(0.01)


def test_mass_shift_matches_power_law(tmp_path):
    # degenerate single-mode material: the clip's spectral peak is fully
    # determined by the base frequency times the mass power law
    base_f = 800.0
    p = tmp_path / "mat.json"
    p.write_text(json.dumps({
        "m_ref_kg": 0.1, "mass_frequency_exponent": 0.125, "gain_scale": 0.05,
        "materials": {"mono": {
            "hardness": 0.5, "amplitude_decay_exponent": 1.0,
            "mode_count_range": [1, 1],
            "bands": [{"freq_log_mean": math.log(base_f), "freq_log_sd": 0.0,
                       "damping_mean": 5.0, "damping_sd": 0.0, "weight": 1.0}],
        }},
    }))
    table = MaterialModeTable(p)
    for m1 in (0.05, 0.4, 5.0):
        m_eff = m1 / 2.0
        shift = (table.m_ref / m_eff) ** table.mass_exponent
        clip = synthesize_impact(impact_event(), ("mono", m1), ("mono", m1),
                                 event_rng(5, 5, 0), table)
        spec = np.abs(np.fft.rfft(clip.samples))
        freqs = np.fft.rfftfreq(len(clip.samples), 1 / SAMPLE_RATE)
        binw = freqs[1]
        assert abs(freqs[np.argmax(spec)] - base_f * shift) <= binw


def test_sample_exact_rerun():
    a = synthesize_impact(impact_event(), ("ceramic", 1.0), ("wood", 0.3),
                          event_rng(9, 42, 1), TABLE)
    b = synthesize_impact(impact_event(), ("ceramic", 1.0), ("wood", 0.3),
                          event_rng(9, 42, 1), TABLE)
    assert np.array_equal(a.samples, b.samples)
    assert encode_wav(a.samples) == encode_wav(b.samples)


def test_event_rng_streams_independent():
    a = event_rng(0, 1, 0).random(4)
    b = event_rng(0, 1, 1).random(4)
    c = event_rng(0, 2, 0).random(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_spatialize_distance_gain_and_delay():
    mono = np.ones(1000) * 0.5
    clip = ImpactClip(SAMPLE_RATE, mono, 1.0, (0.0, 0.0, 10.0), impact_event())
    out = spatialize(clip, (0.0, 0.0, 0.0), IDENTITY_QUAT)
    expected_delay = round(10.0 / 343.0 * SAMPLE_RATE)
    assert out.shape[0] == expected_delay + 1000
    assert np.all(out[:expected_delay] == 0.0)
    # 1/d gain, centered pan splits power equally
    level = math.hypot(out[expected_delay, 0], out[expected_delay, 1])
    assert level == pytest.approx(0.5 / 10.0, rel=1e-9)


def test_spatialize_pan_left_right():
    mono = np.ones(100) * 0.1
    left = spatialize(ImpactClip(SAMPLE_RATE, mono, 1.0, (-5.0, 0.0, 0.0),
                                 impact_event()), (0, 0, 0), IDENTITY_QUAT)
    right = spatialize(ImpactClip(SAMPLE_RATE, mono, 1.0, (5.0, 0.0, 0.0),
                                  impact_event()), (0, 0, 0), IDENTITY_QUAT)
    assert abs(left[:, 0]).sum() > abs(left[:, 1]).sum()
    assert abs(right[:, 1]).sum() > abs(right[:, 0]).sum()
    # constant power: summed channel energy is pan-invariant
    assert np.sum(left ** 2) == pytest.approx(np.sum(right ** 2), rel=1e-9)


def occlusion_world():
    w = World()
    w.load_scene("ProcGenScene")
    w.create_empty_room(8.0, 8.0)
    w.add_object("iron_box", 50, position=(0.0, 0.4, 1.5))  # spans y 0.4..0.6
    return w


def test_is_occluded_geometry():
    w = occlusion_world()
    assert is_occluded(w, (0.0, 0.5, 0.0), (0.0, 0.5, 3.0))
    assert not is_occluded(w, (0.0, 0.5, 0.0), (0.0, 0.5, 3.0), exclude_ids=(50,))
    assert not is_occluded(w, (2.0, 0.5, 0.0), (2.0, 0.5, 3.0))


def test_occlusion_attenuates_12db():
    # low-frequency content so the 1 kHz lowpass barely moves the RMS
    samples, _ = synthesize_modes([(120.0, 3.0, 1.0), (200.0, 3.0, 0.5)], gain=0.4)
    clip = ImpactClip(SAMPLE_RATE, samples, 1.0, (0.0, 0.5, 3.0), impact_event())
    w = occlusion_world()
    occ = spatialize(clip, (0.0, 0.5, 0.0), IDENTITY_QUAT, world=w)
    clear = spatialize(clip, (0.0, 0.5, 0.0), IDENTITY_QUAT, world=w,
                       exclude_ids=(50,))
    rms = lambda x: float(np.sqrt(np.mean(x ** 2)))
    drop_db = 20 * math.log10(rms(clear) / rms(occ))
    assert drop_db == pytest.approx(12.0, abs=0.5)


def test_wav_roundtrip_mono_and_stereo():
    rng = np.random.default_rng(0)
    mono = rng.uniform(-0.9, 0.9, 500)
    back, rate = decode_wav(encode_wav(mono))
    assert rate == SAMPLE_RATE and back.shape == (500, 1)
    assert np.allclose(back[:, 0], mono, atol=1.0 / 32767)
    stereo = rng.uniform(-0.9, 0.9, (300, 2))
    back, _ = decode_wav(encode_wav(stereo))
    assert back.shape == (300, 2)
    assert np.allclose(back, stereo, atol=1.0 / 32767)


def test_peak_normalization_caps_output():
    samples, _ = synthesize_modes([(300.0, 2.0, 1.0)], gain=50.0)
    assert np.abs(samples).max() <= 0.99 + 1e-12
