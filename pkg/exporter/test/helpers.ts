import { LAYERS } from "../src/manifest";

/** Deterministic generator (mulberry32) so fixtures stay reproducible. */
export function rng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomFloats(count: number, scale: number, next: () => number, offset = 0): Float32Array {
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) out[i] = offset + scale * (next() * 2 - 1);
  return out;
}

export interface FakeTensor {
  shape: number[];
  data: Float32Array;
}

export function fakeCheckpointTensors(seed = 9): Map<string, FakeTensor> {
  const next = rng(seed);
  const tensors = new Map<string, FakeTensor>();
  const prefix = "wav2vec2.feature_extractor.conv_layers";
  LAYERS.forEach((layer, k) => {
    tensors.set(`${prefix}.${k}.conv.weight`, {
      shape: [layer.outCh, layer.inCh, layer.width],
      data: randomFloats(layer.outCh * layer.inCh * layer.width, 0.05, next),
    });
    tensors.set(`${prefix}.${k}.conv.bias`, { shape: [layer.outCh], data: randomFloats(layer.outCh, 0.01, next) });
    tensors.set(`${prefix}.${k}.layer_norm.weight`, {
      shape: [layer.outCh],
      data: randomFloats(layer.outCh, 0.02, next, 1.0),
    });
    tensors.set(`${prefix}.${k}.layer_norm.bias`, { shape: [layer.outCh], data: randomFloats(layer.outCh, 0.02, next) });
  });
  return tensors;
}

export function encodeSafetensors(tensors: Map<string, FakeTensor>): Uint8Array {
  const header: Record<string, { dtype: string; shape: number[]; data_offsets: [number, number] }> = {};
  let offset = 0;
  const blobs: Uint8Array[] = [];
  for (const [name, tensor] of tensors) {
    const bytes = new Uint8Array(tensor.data.buffer.slice(0), tensor.data.byteOffset, tensor.data.byteLength);
    header[name] = { dtype: "F32", shape: tensor.shape, data_offsets: [offset, offset + bytes.length] };
    offset += bytes.length;
    blobs.push(bytes);
  }
  const headBytes = new TextEncoder().encode(JSON.stringify(header));
  const out = new Uint8Array(8 + headBytes.length + offset);
  new DataView(out.buffer).setBigUint64(0, BigInt(headBytes.length), true);
  out.set(headBytes, 8);
  let pos = 8 + headBytes.length;
  for (const blob of blobs) {
    out.set(blob, pos);
    pos += blob.length;
  }
  return out;
}
