/** Conv extractor architecture and checkpoint-name mapping. */

export interface LayerSpec {
  width: number;
  stride: number;
  inCh: number;
  outCh: number;
}

export const CHANNELS = 512;

export const LAYERS: LayerSpec[] = [
  { width: 10, stride: 5, inCh: 1, outCh: CHANNELS },
  { width: 3, stride: 2, inCh: CHANNELS, outCh: CHANNELS },
  { width: 3, stride: 2, inCh: CHANNELS, outCh: CHANNELS },
  { width: 3, stride: 2, inCh: CHANNELS, outCh: CHANNELS },
  { width: 3, stride: 2, inCh: CHANNELS, outCh: CHANNELS },
  { width: 2, stride: 2, inCh: CHANNELS, outCh: CHANNELS },
  { width: 2, stride: 2, inCh: CHANNELS, outCh: CHANNELS },
];

export interface ExpectedTensor {
  name: string;
  dims: number[];
  /** checkpoint keys to try, in order */
  sourceKeys: string[];
}

const HF_PREFIXES = ["wav2vec2.feature_extractor.conv_layers", "feature_extractor.conv_layers"];

export function expectedTensors(): ExpectedTensor[] {
  const out: ExpectedTensor[] = [];
  LAYERS.forEach((layer, k) => {
    const sources = (suffix: string) => HF_PREFIXES.map((p) => `${p}.${k}.${suffix}`);
    out.push(
      { name: `conv${k}.weight`, dims: [layer.outCh, layer.inCh, layer.width], sourceKeys: sources("conv.weight") },
      { name: `conv${k}.bias`, dims: [layer.outCh], sourceKeys: sources("conv.bias") },
      { name: `norm${k}.gain`, dims: [layer.outCh], sourceKeys: sources("layer_norm.weight") },
      { name: `norm${k}.bias`, dims: [layer.outCh], sourceKeys: sources("layer_norm.bias") },
    );
  });
  return out;
}

export function expectedLengths(inputLength: number): number[] {
  const lengths: number[] = [];
  let t = inputLength;
  for (const layer of LAYERS) {
    t = Math.floor((t - layer.width) / layer.stride) + 1;
    lengths.push(t);
  }
  return lengths;
}
