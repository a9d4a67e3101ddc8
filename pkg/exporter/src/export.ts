/** Core export operations shared by the CLI and the tests. */

import * as fs from "fs";

import { Tensor, writeContainer, fnv1a64 } from "./container";
import { expectedTensors, expectedLengths } from "./manifest";
import { readSafetensors, SafeTensorEntry } from "./safetensors";
import { forwardPass } from "./forward";
import { readWav } from "./wav";

export interface ExportManifest {
  source: string;
  tensors: { name: string; dims: number[] }[];
  checksum: string;
}

const HF_BASE = "https://huggingface.co";

/** Local safetensors path, or an HF repo id to download (one-shot, cached next to cwd). */
export async function loadCheckpoint(model: string): Promise<{ tensors: Map<string, SafeTensorEntry>; source: string }> {
  if (fs.existsSync(model)) {
    return { tensors: readSafetensors(new Uint8Array(fs.readFileSync(model))), source: model };
  }
  const url = `${HF_BASE}/${model}/resolve/main/model.safetensors`;
  const response = await fetch(url);
  if (!response.ok) {
    throw new Error(`cannot fetch checkpoint ${model}: HTTP ${response.status} from ${url}`);
  }
  const bytes = new Uint8Array(await response.arrayBuffer());
  return { tensors: readSafetensors(bytes), source: url };
}

function shapesEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

export function collectConvTensors(checkpoint: Map<string, SafeTensorEntry>): Tensor[] {
  const out: Tensor[] = [];
  const problems: string[] = [];
  for (const expected of expectedTensors()) {
    const key = expected.sourceKeys.find((k) => checkpoint.has(k));
    if (!key) {
      problems.push(`missing: ${expected.sourceKeys.join(" | ")}`);
      continue;
    }
    const entry = checkpoint.get(key)!;
    if (entry.dtype !== "F32") {
      problems.push(`${key}: dtype ${entry.dtype}, need F32`);
      continue;
    }
    if (!shapesEqual(entry.shape, expected.dims)) {
      problems.push(`${key}: shape [${entry.shape}], expected [${expected.dims}]`);
      continue;
    }
    out.push({ name: expected.name, dims: expected.dims, data: entry.data });
  }
  if (problems.length > 0) {
    throw new Error(`checkpoint does not match the conv extractor manifest:\n  ${problems.join("\n  ")}`);
  }
  return out;
}

export async function exportWeights(model: string, outPath: string): Promise<ExportManifest> {
  const { tensors: checkpoint, source } = await loadCheckpoint(model);
  const tensors = collectConvTensors(checkpoint);
  const container = writeContainer(tensors);
  fs.writeFileSync(outPath, container);
  return {
    source,
    tensors: tensors.map((t) => ({ name: t.name, dims: t.dims })),
    checksum: fnv1a64(container.subarray(0, container.length - 8)).toString(16).padStart(16, "0"),
  };
}

export async function exportTrace(model: string, wavPath: string, outPath: string): Promise<number[][]> {
  const { tensors: checkpoint } = await loadCheckpoint(model);
  const tensors = collectConvTensors(checkpoint);
  const byName = new Map(tensors.map((t) => [t.name, t]));

  const clip = readWav(new Uint8Array(fs.readFileSync(wavPath)));
  if (clip.sampleRate !== 16000) {
    throw new Error(`fixture clip must be 16 kHz, got ${clip.sampleRate}`);
  }
  if (clip.samples.length !== 2000) {
    throw new Error(`fixture clip must be exactly 2000 samples, got ${clip.samples.length}`);
  }

  const outputs = forwardPass(byName, clip.samples);
  const lengths = expectedLengths(clip.samples.length);
  const traceTensors: Tensor[] = outputs.map((layer, k) => {
    if (layer.cols !== lengths[k]) {
      throw new Error(`layer ${k} produced ${layer.cols} frames, expected ${lengths[k]}`);
    }
    return { name: `trace.layer${k}`, dims: [layer.rows, layer.cols], data: Float32Array.from(layer.data) };
  });
  fs.writeFileSync(outPath, writeContainer(traceTensors));
  return outputs.map((layer) => [layer.rows, layer.cols]);
}
