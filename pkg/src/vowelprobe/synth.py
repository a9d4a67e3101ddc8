"""Formant-synthesized vowels and a synthetic TIMIT-style corpus.

Vowels are resonator cascades (two-pole sections with unity DC gain) driven
either by white noise (clean AR targets for formant recovery checks) or by a
low-passed pulse train (voiced, speech-like; used for the synthetic corpus).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio import encode_riff_pcm16
from .corpus import FRONT_PHONES, BACK_PHONES

# (F1, F2) targets per phone, male-range values on a front/back grid
VOWEL_FORMANTS: dict[str, tuple[float, float]] = {
    "iy": (270.0, 2290.0),
    "ih": (390.0, 1990.0),
    "eh": (530.0, 1840.0),
    "ae": (660.0, 1720.0),
    "aa": (730.0, 1090.0),
    "ao": (570.0, 840.0),
    "ow": (490.0, 910.0),
    "uh": (440.0, 1020.0),
    "uw": (300.0, 870.0),
}


def resonator_coeffs(freq: float, bandwidth: float, sample_rate: int):
    r = np.exp(-np.pi * bandwidth / sample_rate)
    theta = 2.0 * np.pi * freq / sample_rate
    a = np.array([1.0, -2.0 * r * np.cos(theta), r * r])
    return np.array([a.sum()]), a  # unity gain at DC


def apply_resonators(x: np.ndarray, formants, sample_rate: int) -> np.ndarray:
    y = np.asarray(x, dtype=np.float64)
    for freq, bandwidth in formants:
        b, a = resonator_coeffs(freq, bandwidth, sample_rate)
        y = lfilter(b, a, y)
    return y


def _normalize(x: np.ndarray, peak: float = 0.3) -> np.ndarray:
    top = np.max(np.abs(x))
    return x * (peak / top) if top > 0 else x


def _shape_and_filter(excitation: np.ndarray, f1, f2, f3, sample_rate: int) -> np.ndarray:
    # glottal tilt (-12 dB/oct) then resonators then lip radiation (+6 dB/oct),
    # so analysis pre-emphasis sees a speech-like spectral slope
    shaped = lfilter([1.0], [1.0, -0.98], excitation)
    shaped = lfilter([1.0], [1.0, -0.98], shaped)
    y = apply_resonators(shaped, [(f1, 80.0), (f2, 110.0), (f3, 180.0)], sample_rate)
    y = np.append(y[0], np.diff(y))
    return _normalize(y)


def synth_vowel_noise(
    f1: float, f2: float, n_samples: int, sample_rate: int = 16000, seed: int = 0, f3: float = 2800.0
) -> np.ndarray:
    """Noise-excited (whispered) vowel: an AR process with poles at the formants."""
    rng = np.random.default_rng(seed)
    return _shape_and_filter(rng.standard_normal(n_samples), f1, f2, f3, sample_rate)


def synth_vowel_voiced(
    f1: float,
    f2: float,
    n_samples: int,
    sample_rate: int = 16000,
    f0: float = 115.0,
    seed: int = 0,
    f3: float = 2800.0,
) -> np.ndarray:
    """Pulse-train-excited vowel with a touch of aspiration noise."""
    rng = np.random.default_rng(seed)
    period = sample_rate / f0
    excitation = np.zeros(n_samples)
    t = 0.0
    while t < n_samples:
        excitation[int(t)] = 1.0
        t += period * rng.uniform(0.98, 1.02)
    excitation += 0.001 * rng.standard_normal(n_samples)
    return _shape_and_filter(excitation, f1, f2, f3, sample_rate)


def synth_phone(phone: str, n_samples: int, sample_rate: int = 16000, seed: int = 0) -> np.ndarray:
    f1, f2 = VOWEL_FORMANTS[phone]
    rng = np.random.default_rng(seed)
    jitter1, jitter2 = rng.uniform(0.95, 1.05, size=2)
    f0 = rng.uniform(95.0, 140.0)
    return synth_vowel_voiced(f1 * jitter1, f2 * jitter2, n_samples, sample_rate, f0, seed)


def make_synthetic_corpus(
    out_dir,
    n_files: int = 140,
    vowels_per_file: int = 3,
    seed: int = 7,
    sample_rate: int = 16000,
) -> dict:
    """Write a TIMIT-style tree of synthetic utterances; returns summary counts.

    Every third file also carries a too-short vowel and a diphthong span so
    downstream duration/phone filters get exercised on real inputs.
    """
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    n_vowels = 0
    for file_no in range(n_files):
        speaker = f"spk{file_no % 12:02d}"
        spk_dir = out_dir / speaker
        spk_dir.mkdir(parents=True, exist_ok=True)

        pieces = [0.0005 * rng.standard_normal(800)]
        lines = ["0 800 h#"]
        cursor = 800
        for slot in range(vowels_per_file):
            phones = FRONT_PHONES if (file_no + slot) % 2 == 0 else BACK_PHONES
            phone = phones[int(rng.integers(len(phones)))]
            duration = int(rng.integers(1500, 2001))
            pieces.append(synth_phone(phone, duration, sample_rate, seed=int(rng.integers(2**31))))
            lines.append(f"{cursor} {cursor + duration} {phone}")
            cursor += duration
            n_vowels += 1
            gap = int(rng.integers(300, 500))
            pieces.append(0.0005 * rng.standard_normal(gap))
            lines.append(f"{cursor} {cursor + gap} h#")
            cursor += gap
        if file_no % 3 == 0:
            short = synth_phone("iy", 1200, sample_rate, seed=int(rng.integers(2**31)))
            pieces.append(short)
            lines.append(f"{cursor} {cursor + 1200} iy")  # filtered out: too short
            cursor += 1200
            diph = 0.1 * np.sin(2 * np.pi * 500 * np.arange(1700) / sample_rate)
            pieces.append(diph)
            lines.append(f"{cursor} {cursor + 1700} ay")  # filtered out: diphthong
            cursor += 1700
        audio = np.concatenate(pieces)
        stem = spk_dir / f"utt{file_no:04d}"
        stem.with_suffix(".wav").write_bytes(encode_riff_pcm16(audio, sample_rate))
        stem.with_suffix(".phn").write_text("\n".join(lines) + "\n")
    return {"files": n_files, "vowel_segments": n_vowels}
