"""Seven-layer strided 1-D conv feature encoder and its weight container.

Layer k applies valid conv1d -> per-timestep channel normalization -> exact
(erf-based) GELU. Widths/strides are (10,5),(3,2),(3,2),(3,2),(3,2),(2,2),(2,2)
with 512 output channels everywhere, so a 2000-sample input produces time
lengths [399, 199, 99, 49, 24, 12, 6].

Container layout (little-endian):
  magic "W2CV" | u32 version=1 | u32 tensor_count |
  per tensor: u16 name_len, name utf8, u8 rank, rank x u64 dims, f32 data |
  trailing u64 FNV-1a checksum of all preceding bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    DataError,
    MissingTensorError,
    TensorShapeError,
)

MAGIC = b"W2CV"
VERSION = 1
N_LAYERS = 7
CHANNELS = 512
NORM_EPS = 1e-5

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, value: int = FNV_OFFSET) -> int:
    for byte in data:
        value = ((value ^ byte) * FNV_PRIME) & _U64
    return value


@dataclass(frozen=True)
class ConvLayerSpec:
    kernel_width: int
    stride: int
    in_channels: int
    out_channels: int


def default_layer_specs(channels: int = CHANNELS) -> list[ConvLayerSpec]:
    widths = (10, 3, 3, 3, 3, 2, 2)
    strides = (5, 2, 2, 2, 2, 2, 2)
    specs = []
    for k in range(N_LAYERS):
        in_ch = 1 if k == 0 else channels
        specs.append(ConvLayerSpec(widths[k], strides[k], in_ch, channels))
    return specs


LAYER_SPECS = default_layer_specs()


def manifest_names(specs: list[ConvLayerSpec] | None = None) -> dict[str, tuple[int, ...]]:
    """Expected tensor name -> shape for a complete weight store."""
    specs = specs or LAYER_SPECS
    names: dict[str, tuple[int, ...]] = {}
    for k, spec in enumerate(specs):
        names[f"conv{k}.weight"] = (spec.out_channels, spec.in_channels, spec.kernel_width)
        names[f"conv{k}.bias"] = (spec.out_channels,)
        names[f"norm{k}.gain"] = (spec.out_channels,)
        names[f"norm{k}.bias"] = (spec.out_channels,)
    return names


@dataclass
class TensorBlob:
    name: str
    dims: tuple[int, ...]
    data: np.ndarray  # float32, row-major

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.data = np.ascontiguousarray(self.data, dtype=np.float32).reshape(-1)
        if int(np.prod(self.dims)) != self.data.size:
            raise DataError(f"tensor {self.name!r}: dims {self.dims} do not match {self.data.size} values")
        if not np.all(np.isfinite(self.data)):
            raise DataError(f"tensor {self.name!r} contains non-finite values")

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.dims).astype(np.float64)


@dataclass
class WeightStore:
    tensors: dict[str, TensorBlob]
    specs: list[ConvLayerSpec] = field(default_factory=default_layer_specs)

    def layer(self, k: int):
        kernel = self.tensors[f"conv{k}.weight"].array
        bias = self.tensors[f"conv{k}.bias"].array
        gain = self.tensors[f"norm{k}.gain"].array
        shift = self.tensors[f"norm{k}.bias"].array
        return kernel, bias, gain, shift


def write_container(tensors: list[TensorBlob]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for blob in tensors:
        name = blob.name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<B", len(blob.dims)))
        chunks.append(struct.pack(f"<{len(blob.dims)}Q", *blob.dims))
        chunks.append(blob.data.astype("<f4").tobytes())
    payload = b"".join(chunks)
    return payload + struct.pack("<Q", fnv1a64(payload))


def read_container(data: bytes) -> dict[str, TensorBlob]:
    """Parse and checksum-verify a container; no manifest validation here."""
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 20:
        raise DataError("container truncated")
    payload, (stored,) = data[:-8], struct.unpack("<Q", data[-8:])
    if fnv1a64(payload) != stored:
        raise ChecksumError("container checksum mismatch")
    version, count = struct.unpack("<II", payload[4:12])
    if version != VERSION:
        raise BadMagicError(f"unsupported container version {version}")
    pos = 12
    tensors: dict[str, TensorBlob] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", payload[pos : pos + 2])
        pos += 2
        name = payload[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = struct.unpack("<B", payload[pos : pos + 1])
        pos += 1
        dims = struct.unpack(f"<{rank}Q", payload[pos : pos + 8 * rank])
        pos += 8 * rank
        n_values = int(np.prod(dims)) if rank else 1
        raw = payload[pos : pos + 4 * n_values]
        if len(raw) < 4 * n_values:
            raise DataError(f"tensor {name!r} data truncated")
        pos += 4 * n_values
        tensors[name] = TensorBlob(name=name, dims=tuple(int(d) for d in dims), data=np.frombuffer(raw, dtype="<f4").copy())
    return tensors


def load_weights(data: bytes, specs: list[ConvLayerSpec] | None = None) -> WeightStore:
    """Checksum, manifest, and shape validation on top of read_container."""
    specs = specs or default_layer_specs()
    tensors = read_container(data)
    expected = manifest_names(specs)
    for name, shape in expected.items():
        if name not in tensors:
            raise MissingTensorError(name)
        if tensors[name].dims != shape:
            raise TensorShapeError(name, shape, tensors[name].dims)
    return WeightStore(tensors={n: tensors[n] for n in expected}, specs=specs)


def random_weight_store(seed: int, specs: list[ConvLayerSpec] | None = None) -> WeightStore:
    """Seeded random weights with the real manifest; used by smoke runs and CI."""
    specs = specs or default_layer_specs()
    rng = np.random.default_rng(seed)
    tensors: dict[str, TensorBlob] = {}
    for k, spec in enumerate(specs):
        fan_in = spec.in_channels * spec.kernel_width
        kernel = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(spec.out_channels, spec.in_channels, spec.kernel_width))
        bias = rng.normal(0.0, 0.01, size=spec.out_channels)
        gain = rng.normal(1.0, 0.02, size=spec.out_channels)
        shift = rng.normal(0.0, 0.02, size=spec.out_channels)
        for name, arr in (
            (f"conv{k}.weight", kernel),
            (f"conv{k}.bias", bias),
            (f"norm{k}.gain", gain),
            (f"norm{k}.bias", shift),
        ):
            tensors[name] = TensorBlob(name=name, dims=arr.shape, data=arr.astype(np.float32))
    return WeightStore(tensors=tensors, specs=specs)


def conv_output_length(t: int, width: int, stride: int) -> int:
    if t < width:
        raise DataError(f"input length {t} shorter than kernel width {width}")
    return (t - width) // stride + 1


def conv1d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Valid strided conv: y[o,t] = bias[o] + sum_{c,w} K[o,c,w] x[c, t*stride + w]."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    out_ch, in_ch, width = kernel.shape
    if x.shape[0] != in_ch:
        raise DataError(f"input has {x.shape[0]} channels, kernel expects {in_ch}")
    t_out = conv_output_length(x.shape[1], width, stride)
    windows = np.lib.stride_tricks.sliding_window_view(x, width, axis=1)[:, ::stride][:, :t_out]
    cols = windows.transpose(1, 0, 2).reshape(t_out, in_ch * width)
    return kernel.reshape(out_ch, in_ch * width) @ cols.T + np.asarray(bias, dtype=np.float64)[:, None]


def channel_layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Normalize each time step across channels, then per-channel affine."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0, keepdims=True)
    var = x.var(axis=0, keepdims=True)
    normed = (x - mean) / np.sqrt(var + NORM_EPS)
    return normed * np.asarray(gain, dtype=np.float64)[:, None] + np.asarray(bias, dtype=np.float64)[:, None]


def gelu(x):
    """Exact GELU x * Phi(x) via the error function (no tanh approximation)."""
    x = np.asarray(x, dtype=np.float64)
    return x * 0.5 * (1.0 + erf(x / np.sqrt(2.0)))


@dataclass
class ActivationSet:
    per_layer: list[np.ndarray]  # 7 matrices [channels, time]
    input_length: int


def extract_activations(store: WeightStore, segment) -> ActivationSet:
    """Forward pass; per_layer[k] is the post-GELU output of layer k."""
    samples = getattr(segment, "samples", segment)
    x = np.asarray(samples, dtype=np.float64).reshape(1, -1)
    input_length = x.shape[1]
    outputs = []
    for k, spec in enumerate(store.specs):
        kernel, bias, gain, shift = store.layer(k)
        x = gelu(channel_layer_norm(conv1d(x, kernel, bias, spec.stride), gain, shift))
        outputs.append(x)
    return ActivationSet(per_layer=outputs, input_length=input_length)


def pool_time(acts: ActivationSet, layer: int, mode: str = "mean") -> np.ndarray:
    if not (0 <= layer < len(acts.per_layer)):
        raise ConfigError(f"layer must be in 0..{len(acts.per_layer) - 1}, got {layer}")
    matrix = acts.per_layer[layer]
    if mode == "mean":
        return matrix.mean(axis=1)
    if mode == "flatten":
        return matrix.reshape(-1)
    raise ConfigError(f"unknown pooling mode {mode!r}")


def expected_lengths(input_length: int, specs: list[ConvLayerSpec] | None = None) -> list[int]:
    lengths = []
    t = input_length
    for spec in specs or LAYER_SPECS:
        t = conv_output_length(t, spec.kernel_width, spec.stride)
        lengths.append(t)
    return lengths
