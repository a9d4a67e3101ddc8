/**
 * W2CV tensor container (little-endian):
 *   "W2CV" | u32 version=1 | u32 tensorCount |
 *   per tensor: u16 nameLen, utf8 name, u8 rank, rank x u64 dims, f32 data |
 *   trailing u64 FNV-1a checksum of all preceding bytes.
 */

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const U64_MASK = 0xffffffffffffffffn;

export const MAGIC = "W2CV";
export const VERSION = 1;

export function fnv1a64(data: Uint8Array, seed: bigint = FNV_OFFSET): bigint {
  let hash = seed;
  for (let i = 0; i < data.length; i++) {
    hash = ((hash ^ BigInt(data[i])) * FNV_PRIME) & U64_MASK;
  }
  return hash;
}

export interface Tensor {
  name: string;
  dims: number[];
  data: Float32Array;
}

const HOST_IS_LE = new Uint8Array(new Uint32Array([1]).buffer)[0] === 1;

function float32Bytes(values: Float32Array): Uint8Array {
  if (HOST_IS_LE) {
    return new Uint8Array(values.buffer, values.byteOffset, values.byteLength).slice();
  }
  const out = new Uint8Array(values.length * 4);
  const view = new DataView(out.buffer);
  for (let i = 0; i < values.length; i++) view.setFloat32(i * 4, values[i], true);
  return out;
}

function bytesToFloat32(bytes: Uint8Array): Float32Array {
  if (HOST_IS_LE && bytes.byteOffset % 4 === 0) {
    return new Float32Array(bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength));
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const out = new Float32Array(bytes.byteLength / 4);
  for (let i = 0; i < out.length; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
}

export function writeContainer(tensors: Tensor[]): Uint8Array {
  const encoder = new TextEncoder();
  const pieces: Uint8Array[] = [];

  const head = new Uint8Array(12);
  head.set(encoder.encode(MAGIC), 0);
  const headView = new DataView(head.buffer);
  headView.setUint32(4, VERSION, true);
  headView.setUint32(8, tensors.length, true);
  pieces.push(head);

  for (const tensor of tensors) {
    const name = encoder.encode(tensor.name);
    const count = tensor.dims.reduce((a, b) => a * b, 1);
    if (count !== tensor.data.length) {
      throw new Error(`tensor ${tensor.name}: dims [${tensor.dims}] do not match ${tensor.data.length} values`);
    }
    const meta = new Uint8Array(2 + name.length + 1 + 8 * tensor.dims.length);
    const view = new DataView(meta.buffer);
    view.setUint16(0, name.length, true);
    meta.set(name, 2);
    view.setUint8(2 + name.length, tensor.dims.length);
    tensor.dims.forEach((dim, i) => view.setBigUint64(2 + name.length + 1 + 8 * i, BigInt(dim), true));
    pieces.push(meta, float32Bytes(tensor.data));
  }

  const payloadLength = pieces.reduce((a, p) => a + p.length, 0);
  const out = new Uint8Array(payloadLength + 8);
  let offset = 0;
  for (const piece of pieces) {
    out.set(piece, offset);
    offset += piece.length;
  }
  new DataView(out.buffer).setBigUint64(payloadLength, fnv1a64(out.subarray(0, payloadLength)), true);
  return out;
}

export function readContainer(bytes: Uint8Array): Map<string, Tensor> {
  const decoder = new TextDecoder();
  if (decoder.decode(bytes.subarray(0, 4)) !== MAGIC) {
    throw new Error("bad magic: not a W2CV container");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const stored = view.getBigUint64(bytes.length - 8, true);
  if (fnv1a64(bytes.subarray(0, bytes.length - 8)) !== stored) {
    throw new Error("container checksum mismatch");
  }
  const version = view.getUint32(4, true);
  if (version !== VERSION) throw new Error(`unsupported container version ${version}`);
  const count = view.getUint32(8, true);

  const tensors = new Map<string, Tensor>();
  let pos = 12;
  for (let i = 0; i < count; i++) {
    const nameLen = view.getUint16(pos, true);
    pos += 2;
    const name = decoder.decode(bytes.subarray(pos, pos + nameLen));
    pos += nameLen;
    const rank = view.getUint8(pos);
    pos += 1;
    const dims: number[] = [];
    for (let d = 0; d < rank; d++) {
      dims.push(Number(view.getBigUint64(pos, true)));
      pos += 8;
    }
    const valueCount = dims.reduce((a, b) => a * b, 1);
    tensors.set(name, {
      name,
      dims,
      data: bytesToFloat32(bytes.subarray(pos, pos + 4 * valueCount)),
    });
    pos += 4 * valueCount;
  }
  return tensors;
}
