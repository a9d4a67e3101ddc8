"""F1/F2 estimation via LPC: decimate to 10 kHz, pre-emphasis, Burg, roots.

Per-frame formants are summarized by the median of the first and second
qualifying resonances over all voiced frames. Frames are taken over the
segment's original length only, so zero-padded tails never contribute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import resample_poly

from .dsp import frame_signal, hamming_window
from .errors import ConfigError, EstimationError

LPC_ORDER = 10
PREEMPHASIS = 0.98
ANALYSIS_RATE = 10000
MIN_FORMANT_HZ = 90.0
EDGE_MARGIN_HZ = 50.0
MAX_BANDWIDTH_HZ = 400.0


@dataclass(frozen=True)
class FormantPair:
    f1: float
    f2: float

    def __post_init__(self):
        if not (0.0 < self.f1 < self.f2) or not np.isfinite(self.f1) or not np.isfinite(self.f2):
            raise EstimationError(f"invalid formant pair ({self.f1}, {self.f2})")


@dataclass
class LpcModel:
    order: int
    coefficients: np.ndarray  # a[1..p] of A(z) = 1 + sum a_k z^-k
    gain: float


def preemphasize(x: np.ndarray, alpha: float) -> np.ndarray:
    """y[0] = x[0]; y[n] = x[n] - alpha * x[n-1]."""
    if not (0.0 <= alpha < 1.0):
        raise ConfigError(f"pre-emphasis alpha must be in [0, 1), got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def lpc_burg(x: np.ndarray, order: int) -> LpcModel:
    """Burg's method; reflection coefficients stay in (-1, 1), so A(z) is minimum phase."""
    x = np.asarray(x, dtype=np.float64)
    if order < 2:
        raise ConfigError(f"LPC order must be >= 2, got {order}")
    if x.shape[0] <= 2 * order:
        raise ConfigError(f"need more than {2 * order} samples for order {order}, got {x.shape[0]}")
    energy = float(np.dot(x, x))
    if energy == 0.0:
        raise EstimationError("all-zero input has no LPC solution")

    a = np.zeros(order + 1)
    a[0] = 1.0
    err = energy / x.shape[0]
    fwd = x[1:].copy()
    bwd = x[:-1].copy()
    for m in range(order):
        denom = float(np.dot(fwd, fwd) + np.dot(bwd, bwd))
        if denom <= 0.0:
            break
        k = -2.0 * float(np.dot(fwd, bwd)) / denom
        a[: m + 2] = a[: m + 2] + k * a[: m + 2][::-1]
        err *= 1.0 - k * k
        if m + 1 < order:
            fwd, bwd = fwd[1:] + k * bwd[1:], bwd[:-1] + k * fwd[:-1]
    return LpcModel(order=order, coefficients=a[1:].copy(), gain=max(err, 0.0))


def roots_to_formants(model: LpcModel, sample_rate: int) -> list[tuple[float, float]]:
    """(frequency, bandwidth) pairs from the upper-half-plane roots of A(z), ascending.

    Roots below 90 Hz, above nyquist - 50 Hz, or wider than 400 Hz bandwidth
    are treated as spectral-tilt poles and discarded.
    """
    poly = np.concatenate(([1.0], model.coefficients))
    roots = np.roots(poly)
    out = []
    for root in roots:
        theta = float(np.angle(root))
        if not (0.0 < theta < np.pi):
            continue
        radius = float(np.abs(root))
        if radius <= 0.0:
            continue
        freq = theta * sample_rate / (2.0 * np.pi)
        bandwidth = -(sample_rate / np.pi) * np.log(radius)
        if freq < MIN_FORMANT_HZ or freq > sample_rate / 2.0 - EDGE_MARGIN_HZ:
            continue
        if bandwidth > MAX_BANDWIDTH_HZ:
            continue
        out.append((freq, bandwidth))
    return sorted(out)


def decimate_to(x: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    """Polyphase low-pass resample (16 kHz -> 10 kHz uses up 5 / down 8)."""
    if rate_in == rate_out:
        return np.asarray(x, dtype=np.float64)
    g = np.gcd(rate_in, rate_out)
    return resample_poly(np.asarray(x, dtype=np.float64), rate_out // g, rate_in // g)


def frame_formant_pairs(segment, sample_rate: int = 16000) -> list[tuple[float, float]]:
    """Per-frame (F1, F2) candidates over the unpadded samples; may be empty."""
    samples = getattr(segment, "samples", segment)
    original_length = getattr(segment, "original_length", len(samples))
    voiced = np.asarray(samples[:original_length], dtype=np.float64)

    analysis = decimate_to(voiced, sample_rate, ANALYSIS_RATE)
    analysis = preemphasize(analysis, PREEMPHASIS)
    frame_len = int(round(0.025 * ANALYSIS_RATE))
    hop = int(round(0.010 * ANALYSIS_RATE))
    if analysis.shape[0] < frame_len:
        raise EstimationError(
            f"segment too short for formant analysis ({analysis.shape[0]} samples at {ANALYSIS_RATE} Hz)"
        )
    frames = frame_signal(analysis, frame_len, hop) * hamming_window(frame_len)

    pairs = []
    for frame in frames:
        if not np.any(frame):
            continue
        try:
            model = lpc_burg(frame, LPC_ORDER)
        except EstimationError:
            continue
        formants = roots_to_formants(model, ANALYSIS_RATE)
        if len(formants) >= 2:
            pairs.append((formants[0][0], formants[1][0]))
    return pairs


def estimate_f1f2(segment, sample_rate: int = 16000) -> FormantPair:
    """Median F1/F2 over 25 ms Hamming frames (10 ms hop) of the unpadded samples."""
    pair, _ = estimate_f1f2_frames(segment, sample_rate)
    return pair


def estimate_f1f2_frames(segment, sample_rate: int = 16000) -> tuple[FormantPair, int]:
    """(FormantPair, frames used); raises when no frame yields two formants."""
    pairs = frame_formant_pairs(segment, sample_rate)
    if not pairs:
        raise EstimationError("no frame produced two qualifying formants")
    f1 = float(np.median([p[0] for p in pairs]))
    f2 = float(np.median([p[1] for p in pairs]))
    if not f1 < f2:
        raise EstimationError(f"median formants collapsed (f1={f1:.1f}, f2={f2:.1f})")
    return FormantPair(f1=f1, f2=f2), len(pairs)
