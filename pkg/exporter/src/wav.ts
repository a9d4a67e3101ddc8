/** Minimal RIFF WAVE PCM16 mono reader for fixture clips. */

export interface Clip {
  samples: Float64Array;
  sampleRate: number;
}

export function readWav(bytes: Uint8Array): Clip {
  const decoder = new TextDecoder();
  if (decoder.decode(bytes.subarray(0, 4)) !== "RIFF" || decoder.decode(bytes.subarray(8, 12)) !== "WAVE") {
    throw new Error("not a RIFF WAVE file");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let pos = 12;
  let sampleRate = 0;
  let pcm: Uint8Array | null = null;
  while (pos + 8 <= bytes.length) {
    const chunkId = decoder.decode(bytes.subarray(pos, pos + 4));
    const chunkSize = view.getUint32(pos + 4, true);
    if (chunkId === "fmt ") {
      const format = view.getUint16(pos + 8, true);
      const channels = view.getUint16(pos + 10, true);
      sampleRate = view.getUint32(pos + 12, true);
      const bits = view.getUint16(pos + 22, true);
      if (format !== 1 || channels !== 1 || bits !== 16) {
        throw new Error(`need mono PCM16, got format=${format} channels=${channels} bits=${bits}`);
      }
    } else if (chunkId === "data") {
      pcm = bytes.subarray(pos + 8, pos + 8 + chunkSize);
    }
    pos += 8 + chunkSize + (chunkSize & 1);
  }
  if (!sampleRate || !pcm) throw new Error("WAVE file missing fmt or data chunk");
  const count = Math.floor(pcm.length / 2);
  const samples = new Float64Array(count);
  const pcmView = new DataView(pcm.buffer, pcm.byteOffset, pcm.byteLength);
  for (let i = 0; i < count; i++) {
    samples[i] = pcmView.getInt16(i * 2, true) / 32768;
  }
  return { samples, sampleRate };
}
