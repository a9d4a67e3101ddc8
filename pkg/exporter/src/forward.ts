/** Float64 forward pass of the conv stack: conv1d -> channel norm -> exact GELU. */

import { LAYERS } from "./manifest";
import { Tensor } from "./container";

export interface Matrix {
  rows: number;
  cols: number;
  data: Float64Array; // row-major
}

export function matrix(rows: number, cols: number): Matrix {
  return { rows, cols, data: new Float64Array(rows * cols) };
}

export function conv1d(x: Matrix, kernel: Float64Array, outCh: number, inCh: number, width: number, bias: Float64Array, stride: number): Matrix {
  if (x.rows !== inCh) throw new Error(`input has ${x.rows} channels, kernel expects ${inCh}`);
  if (x.cols < width) throw new Error(`input length ${x.cols} shorter than kernel width ${width}`);
  const tOut = Math.floor((x.cols - width) / stride) + 1;
  const y = matrix(outCh, tOut);
  for (let o = 0; o < outCh; o++) {
    const kernelBase = o * inCh * width;
    for (let t = 0; t < tOut; t++) {
      let acc = bias[o];
      const start = t * stride;
      for (let c = 0; c < inCh; c++) {
        const kBase = kernelBase + c * width;
        const xBase = c * x.cols + start;
        for (let w = 0; w < width; w++) {
          acc += kernel[kBase + w] * x.data[xBase + w];
        }
      }
      y.data[o * tOut + t] = acc;
    }
  }
  return y;
}

export function channelLayerNorm(x: Matrix, gain: Float64Array, bias: Float64Array, eps = 1e-5): Matrix {
  const y = matrix(x.rows, x.cols);
  for (let t = 0; t < x.cols; t++) {
    let mean = 0;
    for (let c = 0; c < x.rows; c++) mean += x.data[c * x.cols + t];
    mean /= x.rows;
    let variance = 0;
    for (let c = 0; c < x.rows; c++) {
      const d = x.data[c * x.cols + t] - mean;
      variance += d * d;
    }
    variance /= x.rows;
    const scale = 1 / Math.sqrt(variance + eps);
    for (let c = 0; c < x.rows; c++) {
      y.data[c * x.cols + t] = (x.data[c * x.cols + t] - mean) * scale * gain[c] + bias[c];
    }
  }
  return y;
}

/**
 * erf to near machine precision: Maclaurin series below 2.5, a Lentz-style
 * continued fraction for erfc above. No tanh shortcut.
 */
export function erf(x: number): number {
  if (x < 0) return -erf(-x);
  if (x === 0) return 0;
  if (x < 2.5) {
    let term = x;
    let sum = x;
    for (let n = 1; n < 200; n++) {
      term *= (-x * x) / n;
      const contribution = term / (2 * n + 1);
      sum += contribution;
      if (Math.abs(contribution) < 1e-18 * Math.abs(sum)) break;
    }
    return (2 / Math.sqrt(Math.PI)) * sum;
  }
  return 1 - erfc_large(x);
}

function erfc_large(x: number): number {
  // erfc(x) = exp(-x^2)/(x sqrt(pi)) / G with G = 1 + q1/(1 + q2/(1 + ...)),
  // q_n = n/(2 x^2); G evaluated by modified Lentz
  const tiny = 1e-300;
  let f = 1; // b0
  let c = f;
  let d = 0;
  for (let n = 1; n < 400; n++) {
    const a = n / (2 * x * x);
    d = 1 + a * d;
    if (d === 0) d = tiny;
    c = 1 + a / c;
    if (c === 0) c = tiny;
    d = 1 / d;
    const delta = c * d;
    f *= delta;
    if (Math.abs(delta - 1) < 1e-16) break;
  }
  return Math.exp(-x * x) / (x * Math.sqrt(Math.PI) * f);
}

export function gelu(x: number): number {
  return x * 0.5 * (1 + erf(x / Math.SQRT2));
}

export function geluMatrix(x: Matrix): Matrix {
  const y = matrix(x.rows, x.cols);
  for (let i = 0; i < x.data.length; i++) y.data[i] = gelu(x.data[i]);
  return y;
}

function toFloat64(values: Float32Array): Float64Array {
  const out = new Float64Array(values.length);
  for (let i = 0; i < values.length; i++) out[i] = values[i];
  return out;
}

/** Sequential conv -> norm -> gelu over all seven layers; returns post-GELU outputs. */
export function forwardPass(tensors: Map<string, Tensor>, samples: Float64Array): Matrix[] {
  let x: Matrix = { rows: 1, cols: samples.length, data: Float64Array.from(samples) };
  const outputs: Matrix[] = [];
  LAYERS.forEach((layer, k) => {
    const kernel = tensors.get(`conv${k}.weight`);
    const bias = tensors.get(`conv${k}.bias`);
    const gain = tensors.get(`norm${k}.gain`);
    const shift = tensors.get(`norm${k}.bias`);
    if (!kernel || !bias || !gain || !shift) throw new Error(`missing tensors for layer ${k}`);
    const conv = conv1d(
      x,
      toFloat64(kernel.data),
      layer.outCh,
      layer.inCh,
      layer.width,
      toFloat64(bias.data),
      layer.stride,
    );
    x = geluMatrix(channelLayerNorm(conv, toFloat64(gain.data), toFloat64(shift.data)));
    outputs.push(x);
  });
  return outputs;
}
