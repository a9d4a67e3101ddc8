import struct

import numpy as np
import pytest

from vowelprobe import audio
from vowelprobe.errors import AudioFormatError


def sphere_bytes(samples, rate=16000, byte_format=b"01", extra=b""):
    ints = np.asarray(samples, dtype="<i2" if byte_format == b"01" else ">i2")
    header = (
        b"NIST_1A\n   1024\n"
        + b"sample_rate -i " + str(rate).encode() + b"\n"
        + b"channel_count -i 1\n"
        + b"sample_n_bytes -i 2\n"
        + b"sample_byte_format -s2 " + byte_format + b"\n"
        + b"sample_count -i " + str(len(ints)).encode() + b"\n"
        + extra
        + b"end_head\n"
    )
    return header.ljust(1024, b" ") + ints.tobytes()


def riff_bytes(samples, rate=16000):
    return audio.encode_riff_pcm16(np.asarray(samples, dtype=np.float64) / 32768.0, rate)


def test_pcm16_scaling_riff():
    wf = audio.decode_audio(riff_bytes([16384, -32768, 0, 32767]))
    assert wf.samples[0] == 0.5
    assert wf.samples[1] == -1.0
    assert wf.samples[2] == 0.0
    assert wf.samples[3] == pytest.approx(32767 / 32768)


def test_sphere_header_echo_and_scaling():
    wf = audio.decode_audio(sphere_bytes([16384, -32768], rate=16000))
    assert wf.sample_rate == 16000
    assert wf.samples[0] == 0.5 and wf.samples[1] == -1.0


def test_sphere_big_endian():
    wf = audio.decode_audio(sphere_bytes([1000, -1000], byte_format=b"10"))
    assert wf.samples[0] == pytest.approx(1000 / 32768)


def test_unknown_magic_rejected():
    with pytest.raises(AudioFormatError):
        audio.decode_audio(b"OGGS" + b"\x00" * 100)


def test_sphere_shorten_rejected():
    data = sphere_bytes([0, 0], extra=b"sample_coding -s26 pcm,embedded-shorten-v2.00\n")
    with pytest.raises(AudioFormatError):
        audio.decode_audio(data)


def test_riff_stereo_rejected():
    fmt = struct.pack("<HHIIHH", 1, 2, 16000, 64000, 4, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", 0)
    with pytest.raises(AudioFormatError):
        audio.decode_audio(b"RIFF" + struct.pack("<I", len(body)) + body)


def test_riff_roundtrip():
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.9, 0.9, 500)
    wf = audio.decode_audio(audio.encode_riff_pcm16(x, 16000))
    assert wf.sample_rate == 16000
    assert np.abs(wf.samples - x).max() < 1.0 / 32768
