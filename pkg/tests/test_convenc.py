import numpy as np
import pytest

from vowelprobe import convenc
from vowelprobe.errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    DataError,
    MissingTensorError,
    TensorShapeError,
)

import oracles


class TestFnv:
    def test_reference_vectors(self):
        assert convenc.fnv1a64(b"") == 0xCBF29CE484222325
        assert convenc.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert convenc.fnv1a64(b"foobar") == 0x85944171F73967E8


class TestContainer:
    def test_roundtrip_bit_exact(self, weight_store):
        blob = convenc.write_container(list(weight_store.tensors.values()))
        loaded = convenc.load_weights(blob)
        assert len(loaded.tensors) == 28
        for name, tensor in weight_store.tensors.items():
            assert np.array_equal(tensor.data, loaded.tensors[name].data)
        assert convenc.write_container(list(loaded.tensors.values())) == blob

    def test_missing_tensor_named(self, weight_store):
        tensors = [t for n, t in weight_store.tensors.items() if n != "conv6.bias"]
        with pytest.raises(MissingTensorError, match="conv6.bias"):
            convenc.load_weights(convenc.write_container(tensors))

    def test_shape_mismatch(self, weight_store):
        tensors = dict(weight_store.tensors)
        bad = convenc.TensorBlob("conv0.weight", (512, 2, 10), np.zeros(512 * 2 * 10, dtype=np.float32))
        tensors["conv0.weight"] = bad
        with pytest.raises(TensorShapeError, match="conv0.weight"):
            convenc.load_weights(convenc.write_container(list(tensors.values())))

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            convenc.load_weights(b"NOPE" + b"\x00" * 64)

    def test_checksum_failure(self, weight_store):
        blob = bytearray(convenc.write_container(list(weight_store.tensors.values())))
        blob[100] ^= 0xFF
        with pytest.raises(ChecksumError):
            convenc.load_weights(bytes(blob))

    def test_truncated(self, weight_store):
        blob = convenc.write_container(list(weight_store.tensors.values()))
        with pytest.raises(DataError):
            convenc.load_weights(blob[:40])


class TestConv1d:
    def test_identity_kernel(self):
        x = np.random.default_rng(0).standard_normal((3, 20))
        kernel = np.eye(3)[:, :, None]
        out = convenc.conv1d(x, kernel, np.zeros(3), 1)
        assert np.allclose(out, x)

    def test_length_formula(self):
        x = np.zeros((1, 2000))
        out = convenc.conv1d(x, np.zeros((4, 1, 10)), np.zeros(4), 5)
        assert out.shape == (4, 399)

    def test_against_naive_oracle(self):
        rng = np.random.default_rng(1)
        for trial in range(25):
            in_ch = int(rng.integers(1, 5))
            out_ch = int(rng.integers(1, 6))
            width = int(rng.integers(1, 6))
            stride = int(rng.integers(1, 4))
            t = int(rng.integers(width, width + 30))
            x = rng.standard_normal((in_ch, t))
            kernel = rng.standard_normal((out_ch, in_ch, width))
            bias = rng.standard_normal(out_ch)
            fast = convenc.conv1d(x, kernel, bias, stride)
            slow = oracles.naive_conv1d(x, kernel, bias, stride)
            assert np.abs(fast - slow).max() < 1e-5

    def test_too_short_rejected(self):
        with pytest.raises(DataError):
            convenc.conv1d(np.zeros((1, 5)), np.zeros((2, 1, 10)), np.zeros(2), 5)


class TestChannelNorm:
    def test_constant_column_zeroed(self):
        x = np.full((8, 3), 2.5)
        out = convenc.channel_layer_norm(x, np.ones(8), np.zeros(8))
        assert np.abs(out).max() < 1e-6  # eps floor keeps it finite and ~0

    def test_zero_gain_gives_bias(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((6, 4))
        out = convenc.channel_layer_norm(x, np.zeros(6), np.full(6, 1.5))
        assert np.allclose(out, 1.5)

    def test_moments(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((512, 5)) * 3 + 1
        out = convenc.channel_layer_norm(x, np.ones(512), np.zeros(512))
        assert np.abs(out.mean(axis=0)).max() < 1e-4
        assert np.abs(out.var(axis=0) - 1.0).max() < 1e-4


class TestGelu:
    def test_zero(self):
        assert convenc.gelu(0.0) == 0.0

    def test_odd_identity(self):
        # gelu(-x) = gelu(x) - x because Phi(x) + Phi(-x) = 1
        xs = np.linspace(-4, 4, 41)
        assert np.abs(convenc.gelu(-xs) - (convenc.gelu(xs) - xs)).max() < 1e-12

    def test_reference_value_from_erf_series(self):
        expected = 1.0 * 0.5 * (1.0 + oracles.erf_series(1.0 / np.sqrt(2.0)))
        assert convenc.gelu(1.0) == pytest.approx(expected, abs=1e-12)
        assert convenc.gelu(1.0) == pytest.approx(0.8413447460685429, abs=1e-12)


class TestForward:
    def test_composed_lengths(self, weight_store):
        acts = convenc.extract_activations(weight_store, np.random.default_rng(4).standard_normal(2000))
        assert [a.shape[1] for a in acts.per_layer] == [399, 199, 99, 49, 24, 12, 6]
        assert all(a.shape[0] == 512 for a in acts.per_layer)
        assert convenc.expected_lengths(2000) == [399, 199, 99, 49, 24, 12, 6]

    def test_deterministic_bit_for_bit(self, weight_store):
        x = np.random.default_rng(5).standard_normal(2000)
        a = convenc.extract_activations(weight_store, x)
        b = convenc.extract_activations(weight_store, x.copy())
        for left, right in zip(a.per_layer, b.per_layer):
            assert np.array_equal(left, right)

    def test_zero_input_constant_channels(self, weight_store):
        acts = convenc.extract_activations(weight_store, np.zeros(2000))
        layer0 = acts.per_layer[0]
        # zero input -> conv output constant per channel -> norm/gelu keep it constant
        assert np.abs(layer0 - layer0[:, :1]).max() < 1e-9

    def test_all_finite(self, weight_store):
        acts = convenc.extract_activations(weight_store, np.random.default_rng(6).standard_normal(2000))
        for layer in acts.per_layer:
            assert np.all(np.isfinite(layer))


class TestPoolTime:
    def test_single_frame_mean(self, weight_store):
        acts = convenc.ActivationSet([np.arange(6.0).reshape(3, 2), np.ones((3, 1))], 2000)
        assert np.array_equal(convenc.pool_time(acts, 1, "mean"), np.ones(3))

    def test_flatten_size(self, weight_store):
        acts = convenc.extract_activations(weight_store, np.zeros(2000))
        assert convenc.pool_time(acts, 6, "flatten").shape == (512 * 6,)
        assert convenc.pool_time(acts, 6, "mean").shape == (512,)

    def test_mean_permutation_invariant(self):
        rng = np.random.default_rng(7)
        frames = rng.standard_normal((4, 9))
        acts = convenc.ActivationSet([frames], 2000)
        shuffled = convenc.ActivationSet([frames[:, rng.permutation(9)]], 2000)
        assert np.allclose(convenc.pool_time(acts, 0, "mean"), convenc.pool_time(shuffled, 0, "mean"))

    def test_layer_out_of_range(self, weight_store):
        acts = convenc.extract_activations(weight_store, np.zeros(2000))
        with pytest.raises(ConfigError):
            convenc.pool_time(acts, 7, "mean")
