/** Minimal safetensors reader: u64 LE header length, JSON header, raw data. */

export interface SafeTensorEntry {
  dtype: string;
  shape: number[];
  data: Float32Array;
}

interface HeaderEntry {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

export function readSafetensors(bytes: Uint8Array): Map<string, SafeTensorEntry> {
  if (bytes.length < 8) throw new Error("safetensors file truncated");
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const headerLength = Number(view.getBigUint64(0, true));
  if (8 + headerLength > bytes.length) throw new Error("safetensors header exceeds file size");
  const header = JSON.parse(new TextDecoder().decode(bytes.subarray(8, 8 + headerLength))) as Record<
    string,
    HeaderEntry
  >;
  const dataStart = 8 + headerLength;
  const tensors = new Map<string, SafeTensorEntry>();
  for (const [name, entry] of Object.entries(header)) {
    if (name === "__metadata__") continue;
    const [begin, end] = entry.data_offsets;
    const raw = bytes.subarray(dataStart + begin, dataStart + end);
    if (entry.dtype !== "F32") {
      // keep the entry so callers can produce a precise error if they need it
      tensors.set(name, { dtype: entry.dtype, shape: entry.shape, data: new Float32Array(0) });
      continue;
    }
    const data = new Float32Array(raw.length / 4);
    const rawView = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
    for (let i = 0; i < data.length; i++) data[i] = rawView.getFloat32(i * 4, true);
    tensors.set(name, { dtype: entry.dtype, shape: entry.shape, data });
  }
  return tensors;
}
