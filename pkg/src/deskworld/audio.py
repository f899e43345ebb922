"""Physics-driven impact-sound synthesis and listener spatialization.

Each collision event excites a set of resonant modes sampled from the
struck object's material table; the clip is the sum of exponentially
decaying sinusoids.  Synthesis is a pure function of (event, tables, rng),
so per-event rng substreams derived from (seed, frame, event index) make
the whole audio pipeline sample-exact across reruns.
"""

from __future__ import annotations

import io
import json
import math
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SubThresholdImpact, UnknownMaterial
from .mathutil import Vec3, q_conj, q_rotate, v_norm, v_sub
from .physics.hull import SphereCollider
from .sensors import _ray_hull, _ray_sphere

SAMPLE_RATE = 44100
SPEED_THRESHOLD = 0.01        # m/s; quieter impacts make no sound
FREQ_MIN, FREQ_MAX = 20.0, 20000.0
SPEED_OF_SOUND = 343.0        # m/s
OCCLUSION_DB = -12.0
OCCLUSION_LPF_HZ = 1000.0
PEAK_CEILING = 0.99
MAX_DURATION = 3.0
DECAY_60DB = math.log(1000.0)  # amplitude ratio for a 60 dB drop


def default_materials_path() -> Path:
    return Path(__file__).parent / "data" / "audio_materials.json"


class MaterialModeTable:
    """Per-material mode distributions loaded from the JSON data file."""

    def __init__(self, path: str | Path | None = None):
        raw = json.loads(Path(path or default_materials_path()).read_text())
        self.m_ref = float(raw.get("m_ref_kg", 0.1))
        self.mass_exponent = float(raw.get("mass_frequency_exponent", 0.125))
        self.gain_scale = float(raw.get("gain_scale", 0.05))
        self.materials: dict[str, dict] = raw["materials"]
        for name, m in self.materials.items():
            lo, hi = m["mode_count_range"]
            if not 1 <= lo <= hi <= 64:
                raise ValueError(f"{name}: mode_count_range outside [1, 64]")
            for band in m["bands"]:
                if band["freq_log_sd"] < 0 or band["damping_sd"] < 0:
                    raise ValueError(f"{name}: negative sd")

    def get(self, material: str) -> dict:
        try:
            return self.materials[material]
        except KeyError:
            raise UnknownMaterial(material) from None


@dataclass
class ModeSet:
    modes: list[tuple[float, float, float]]   # (frequency Hz, decay 1/s, amplitude)
    rng_draws: list[float] = field(default_factory=list)


@dataclass
class ImpactClip:
    sample_rate: int
    samples: np.ndarray           # float64 mono in [-1, 1]
    duration: float
    source_position: Vec3
    event: object                 # CollisionEvent


def event_rng(seed: int, frame: int, event_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, frame, event_index)))


def sample_modes(table: MaterialModeTable, material_struck: str,
                 material_striker: str, rng: np.random.Generator) -> ModeSet:
    struck = table.get(material_struck)
    striker = table.get(material_striker)
    bands = struck["bands"]
    weights = np.array([b["weight"] for b in bands], dtype=np.float64)
    weights /= weights.sum()
    lo, hi = struck["mode_count_range"]
    draws: list[float] = []
    count = int(rng.integers(lo, hi + 1))
    draws.append(float(count))
    rolloff = struck["amplitude_decay_exponent"]
    tilt = striker["hardness"] - 0.5          # harder striker -> brighter
    modes = []
    log_span = math.log(FREQ_MAX) - math.log(FREQ_MIN)
    for _ in range(count):
        band = bands[int(rng.choice(len(bands), p=weights))]
        f = math.exp(rng.normal(band["freq_log_mean"], band["freq_log_sd"]))
        f = min(max(f, FREQ_MIN), FREQ_MAX)
        d = max(0.1, rng.normal(band["damping_mean"], band["damping_sd"]))
        x = (math.log(f) - math.log(FREQ_MIN)) / log_span   # 0 at 20 Hz, 1 at 20 kHz
        amp = math.exp(-rolloff * x) * math.exp(tilt * x)
        draws += [f, d, amp]
        modes.append((f, d, amp))
    modes.sort(key=lambda m: m[0])
    return ModeSet(modes, draws)


def synthesize_modes(modes: list[tuple[float, float, float]], gain: float,
                     sample_rate: int = SAMPLE_RATE) -> tuple[np.ndarray, float]:
    """Render Σ aᵢ·exp(−dᵢt)·sin(2πfᵢt), amplitudes pre-normalized to sum 1."""
    total = sum(m[2] for m in modes)
    loudest = max(modes, key=lambda m: m[2])
    duration = min(MAX_DURATION, DECAY_60DB / loudest[1])
    n = max(1, int(round(duration * sample_rate)))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for f, d, a in modes:
        out += (a / total) * np.exp(-d * t) * np.sin(2 * math.pi * f * t)
    out *= gain
    peak = np.abs(out).max()
    if peak > PEAK_CEILING:
        out *= PEAK_CEILING / peak
    return out, duration


def synthesize_impact(event, struck: tuple[str, float], striker: tuple[str, float],
                      rng: np.random.Generator,
                      table: MaterialModeTable | None = None) -> ImpactClip:
    """struck/striker are (material name, mass kg) pairs."""
    if event.state != "enter" or event.relative_normal_speed <= SPEED_THRESHOLD:
        raise SubThresholdImpact(
            f"speed {event.relative_normal_speed:.4f} m/s at state {event.state}")
    table = table or _default_table()
    mat_a, m1 = struck
    mat_b, m2 = striker
    modeset = sample_modes(table, mat_a, mat_b, rng)
    m_eff = m1 * m2 / (m1 + m2) if math.isfinite(m1) and math.isfinite(m2) else min(m1, m2)
    shift = (table.m_ref / m_eff) ** table.mass_exponent   # heavier -> lower pitch
    modes = [(min(max(f * shift, FREQ_MIN), FREQ_MAX), d, a) for f, d, a in modeset.modes]
    gain = table.gain_scale * event.impulse / (1.0 + m_eff)
    samples, duration = synthesize_modes(modes, gain)
    return ImpactClip(SAMPLE_RATE, samples, duration, event.point, event)


_TABLE_CACHE: dict[str, MaterialModeTable] = {}


def _default_table() -> MaterialModeTable:
    if "default" not in _TABLE_CACHE:
        _TABLE_CACHE["default"] = MaterialModeTable()
    return _TABLE_CACHE["default"]


# -- spatialization --------------------------------------------------------


def is_occluded(world, listener_pos: Vec3, source_pos: Vec3,
                exclude_ids: tuple[int, ...] = ()) -> bool:
    """True iff a straight ray listener -> source hits another body first."""
    delta = v_sub(source_pos, listener_pos)
    dist = v_norm(delta)
    if dist < 1e-9:
        return False
    d = np.array([[delta[0] / dist, delta[1] / dist, delta[2] / dist]])
    origin = np.asarray(listener_pos, dtype=np.float64)
    bodies = [o.body for o in world.statics.values()]
    bodies += [o.body for o in world.objects.values()]
    for body in bodies:
        if body.id in exclude_ids:
            continue
        for coll in body.colliders:
            if isinstance(coll, SphereCollider):
                t = _ray_sphere(origin, d, coll, body.position, body.orientation)
            else:
                t = _ray_hull(origin, d, coll, body.position, body.orientation)
            if t[0] < dist - 1e-6:
                return True
    return False


def spatialize(clip: ImpactClip, listener_pos: Vec3, listener_orientation,
               world=None, exclude_ids: tuple[int, ...] = ()) -> np.ndarray:
    """(N, 2) stereo render: 1/d gain, d/343 delay, occlusion, constant-power pan."""
    delta = v_sub(clip.source_position, listener_pos)
    dist = v_norm(delta)
    gain = 1.0 / max(dist, 1.0)
    delay = int(round(dist / SPEED_OF_SOUND * clip.sample_rate))
    mono = clip.samples * gain
    if world is not None and is_occluded(world, listener_pos, clip.source_position,
                                         exclude_ids):
        mono = mono * 10.0 ** (OCCLUSION_DB / 20.0)
        mono = _one_pole_lowpass(mono, OCCLUSION_LPF_HZ, clip.sample_rate)
    # listener-frame azimuth; forward is +z, right is +x
    local = q_rotate(q_conj(listener_orientation), delta)
    if dist < 1e-9 or (abs(local[0]) < 1e-12 and abs(local[2]) < 1e-12):
        az = 0.0
    else:
        az = math.atan2(local[0], local[2])
    pan = max(-1.0, min(1.0, math.sin(az)))
    theta = (pan + 1.0) * math.pi / 4.0       # constant power: gl^2 + gr^2 = 1
    gl, gr = math.cos(theta), math.sin(theta)
    out = np.zeros((delay + mono.shape[0], 2))
    out[delay:, 0] = mono * gl
    out[delay:, 1] = mono * gr
    return out


def _one_pole_lowpass(x: np.ndarray, cutoff_hz: float, sample_rate: int) -> np.ndarray:
    from scipy.signal import lfilter
    alpha = 1.0 - math.exp(-2.0 * math.pi * cutoff_hz / sample_rate)
    return lfilter([alpha], [1.0, -(1.0 - alpha)], x)


# -- WAV export ------------------------------------------------------------


def encode_wav(samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> bytes:
    """16-bit PCM WAV; accepts mono (N,) or stereo (N, 2) float in [-1, 1]."""
    if samples.ndim == 1:
        samples = samples[:, None]
    pcm = np.clip(samples, -1.0, 1.0)
    pcm = (pcm * 32767.0).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(samples.shape[1])
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())
    return buf.getvalue()


def decode_wav(data: bytes) -> tuple[np.ndarray, int]:
    with wave.open(io.BytesIO(data), "rb") as w:
        n, ch, rate = w.getnframes(), w.getnchannels(), w.getframerate()
        pcm = np.frombuffer(w.readframes(n), dtype="<i2").reshape(n, ch)
    return pcm.astype(np.float64) / 32767.0, rate
