"""Audio decoding: NIST SPHERE and RIFF WAVE PCM16 mono readers.

Samples are mapped to float64 in [-1, 1) by dividing the 16-bit integers
by 32768. Anything that is not mono 16-bit PCM is rejected rather than
resampled or converted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError

SPHERE_MAGIC = b"NIST_1A"


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise AudioFormatError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise AudioFormatError("waveform contains non-finite samples")


def _parse_sphere_header(header: bytes) -> dict:
    fields = {}
    for raw in header.split(b"\n"):
        line = raw.strip()
        if not line or line == b"end_head":
            continue
        parts = line.split()
        if len(parts) < 3:
            continue
        key, typ, value = parts[0].decode("ascii"), parts[1], b" ".join(parts[2:])
        if typ == b"-i":
            fields[key] = int(value)
        else:
            fields[key] = value.decode("ascii", errors="replace")
    return fields


def _decode_sphere(data: bytes) -> Waveform:
    # Second header line declares the header size; TIMIT uses 1024.
    try:
        head_size = int(data.split(b"\n", 2)[1].strip())
    except (IndexError, ValueError) as exc:
        raise AudioFormatError("SPHERE header size line unreadable") from exc
    fields = _parse_sphere_header(data[:head_size])

    coding = str(fields.get("sample_coding", "pcm"))
    if "pcm" not in coding or "shorten" in coding:
        raise AudioFormatError(f"unsupported SPHERE sample_coding {coding!r}")
    if fields.get("channel_count", 1) != 1:
        raise AudioFormatError(f"only mono supported, got {fields['channel_count']} channels")
    if fields.get("sample_n_bytes", 2) != 2:
        raise AudioFormatError(f"only 16-bit samples supported, got {fields['sample_n_bytes']} bytes")

    byte_format = str(fields.get("sample_byte_format", "01"))
    dtype = "<i2" if byte_format == "01" else ">i2"
    n = fields.get("sample_count")
    raw = data[head_size:]
    if n is not None:
        raw = raw[: 2 * n]
    ints = np.frombuffer(raw, dtype=dtype)
    rate = int(fields.get("sample_rate", 16000))
    return Waveform(ints.astype(np.float64) / 32768.0, rate)


def _decode_riff(data: bytes) -> Waveform:
    if data[8:12] != b"WAVE":
        raise AudioFormatError("RIFF file is not WAVE")
    pos = 12
    fmt = None
    pcm = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            pcm = body
        pos += 8 + chunk_size + (chunk_size & 1)
    if fmt is None or pcm is None:
        raise AudioFormatError("RIFF file missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if audio_format != 1:
        raise AudioFormatError(f"only PCM WAVE supported, got format tag {audio_format}")
    if channels != 1:
        raise AudioFormatError(f"only mono supported, got {channels} channels")
    if bits != 16:
        raise AudioFormatError(f"only 16-bit samples supported, got {bits} bits")
    ints = np.frombuffer(pcm[: len(pcm) & ~1], dtype="<i2")
    return Waveform(ints.astype(np.float64) / 32768.0, int(rate))


def decode_audio(data: bytes) -> Waveform:
    """Decode NIST SPHERE or RIFF WAVE PCM16 mono bytes into a Waveform."""
    if data[: len(SPHERE_MAGIC)] == SPHERE_MAGIC:
        return _decode_sphere(data)
    if data[:4] == b"RIFF":
        return _decode_riff(data)
    raise AudioFormatError("unknown audio magic (expected NIST_1A or RIFF)")


def read_audio(path) -> Waveform:
    with open(path, "rb") as fh:
        return decode_audio(fh.read())


def encode_riff_pcm16(samples: np.ndarray, sample_rate: int) -> bytes:
    """Write float samples in [-1, 1) as mono PCM16 RIFF bytes (used by the synthesizer)."""
    ints = np.clip(np.asarray(samples, dtype=np.float64) * 32768.0, -32768, 32767).astype("<i2")
    pcm = ints.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, sample_rate, sample_rate * 2, 2, 16)
    chunks = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(pcm)) + pcm
    return b"RIFF" + struct.pack("<I", len(chunks)) + chunks
