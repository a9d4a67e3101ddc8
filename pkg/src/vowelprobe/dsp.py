"""MFCC extraction: framing, Hamming window, mel filterbank, log, DCT-II.

Frames are taken without centering, so a padded 2000-sample segment at
16 kHz (400-sample window, 160-sample hop) always yields exactly 11 frames.
The magnitude-squared spectrum comes from a length-512 zero-padded real FFT;
the naive-DFT equivalence of that path is asserted by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, DataError

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MfccConfig:
    n_mfcc: int = 13
    frame_len: int = 400
    frame_hop: int = 160
    n_fft: int = 512
    n_filters: int = 40
    f_min: float = 0.0
    f_max: float = 8000.0
    sample_rate: int = 16000

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_MFCC = MfccConfig()


@dataclass
class MfccMatrix:
    frames: np.ndarray  # [n_frames, n_mfcc]
    frame_len: int
    frame_hop: int


def hamming_window(n: int) -> np.ndarray:
    """w[k] = 0.54 - 0.46 cos(2 pi k / (n-1)), k = 0..n-1."""
    if n < 2:
        raise ConfigError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (np.power(10.0, np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_filters: int, n_fft: int, sample_rate: int, f_min: float = 0.0, f_max: float | None = None
) -> np.ndarray:
    """Triangular filters, centers equally spaced on the mel scale.

    Returns [n_filters, n_fft//2 + 1]. Raises if any filter has zero area,
    which happens when n_filters outruns the FFT resolution.
    """
    if f_max is None:
        f_max = sample_rate / 2.0
    if not (0.0 <= f_min < f_max <= sample_rate / 2.0):
        raise ConfigError(f"need 0 <= f_min < f_max <= nyquist, got [{f_min}, {f_max}]")
    n_bins = n_fft // 2 + 1
    bin_freqs = np.arange(n_bins) * (sample_rate / n_fft)
    points_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_filters + 2))
    bank = np.zeros((n_filters, n_bins))
    for i in range(n_filters):
        left, center, right = points_hz[i], points_hz[i + 1], points_hz[i + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        bank[i] = np.maximum(0.0, np.minimum(up, down))
    if np.any(bank.sum(axis=1) <= 0.0):
        raise ConfigError(
            f"{n_filters} filters exceed the resolution of a {n_fft}-point FFT at {sample_rate} Hz"
        )
    return bank


def dct_ortho_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II analysis matrix, rows = coefficients."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.cos(np.pi * k * (2 * n + 1) / (2.0 * n_in))
    mat *= np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


def frame_signal(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """[n_frames, frame_len] view without centering; n = 1 + (len-frame_len)//hop."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[0] < frame_len:
        raise DataError(f"signal length {x.shape[0]} shorter than frame {frame_len}")
    n_frames = 1 + (x.shape[0] - frame_len) // hop
    return np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop][:n_frames]


def power_spectrum(frames: np.ndarray, n_fft: int) -> np.ndarray:
    """Magnitude-squared one-sided spectrum of zero-padded frames."""
    spectrum = np.fft.rfft(frames, n=n_fft, axis=-1)
    return (spectrum.real**2 + spectrum.imag**2).astype(np.float64)


def mfcc(x, cfg: MfccConfig = DEFAULT_MFCC) -> MfccMatrix:
    """13 MFCCs per frame: window -> |FFT|^2 -> mel energies -> log -> DCT-II."""
    samples = getattr(x, "samples", x)
    frames = frame_signal(np.asarray(samples, dtype=np.float64), cfg.frame_len, cfg.frame_hop)
    windowed = frames * hamming_window(cfg.frame_len)
    power = power_spectrum(windowed, cfg.n_fft)
    bank = mel_filterbank(cfg.n_filters, cfg.n_fft, cfg.sample_rate, cfg.f_min, cfg.f_max)
    energies = power @ bank.T
    log_energies = np.log(energies + LOG_FLOOR)
    dct = dct_ortho_matrix(cfg.n_mfcc, cfg.n_filters)
    return MfccMatrix(frames=log_energies @ dct.T, frame_len=cfg.frame_len, frame_hop=cfg.frame_hop)


def pool_frames(m: MfccMatrix, mode: str = "mean") -> np.ndarray:
    """Collapse frames to one vector: 'mean' keeps 13 dims, 'flatten' concatenates rows."""
    frames = m.frames if isinstance(m, MfccMatrix) else np.asarray(m)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ConfigError("pooling needs a nonempty [n_frames, n_coeffs] matrix")
    if mode == "mean":
        return frames.mean(axis=0)
    if mode == "flatten":
        return frames.reshape(-1)
    raise ConfigError(f"unknown pooling mode {mode!r}")


class MinMaxScaler:
    """Per-dimension min/max scaling to [0, 1], fit on training rows only.

    Constant dimensions map to 0. Transform does not clamp, so test rows
    may land outside [0, 1].
    """

    def __init__(self):
        self.min_ = None
        self.max_ = None

    def fit(self, rows: np.ndarray) -> "MinMaxScaler":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ConfigError("fit needs a nonempty 2-D matrix")
        self.min_ = rows.min(axis=0)
        self.max_ = rows.max(axis=0)
        return self

    def transform(self, rows: np.ndarray) -> np.ndarray:
        if self.min_ is None:
            raise ConfigError("scaler not fitted")
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.min_.shape[0]:
            raise ConfigError(
                f"dimension mismatch: fitted {self.min_.shape[0]}, got {rows.shape}"
            )
        span = self.max_ - self.min_
        safe = np.where(span > 0.0, span, 1.0)
        out = (rows - self.min_) / safe
        out[:, span == 0.0] = 0.0
        return out

    def fit_transform(self, rows: np.ndarray) -> np.ndarray:
        return self.fit(rows).transform(rows)
