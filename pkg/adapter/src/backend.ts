/**
 * Reference model backend.
 *
 * Real deployments plug a class-agnostic segmentation network and a
 * vision-language embedding model into the Segmenter/Embedder interfaces;
 * this built-in backend is deterministic and dependency-free so the
 * extraction pipeline can run and be tested offline. It segments by
 * connected regions of quantized color and embeds crops as normalized
 * color histograms, with text hashed into the same space.
 */

import type { Embedder, RegionProposal, RgbImage, Segmenter } from "./types.js";

export interface ColorRegionOptions {
  /** Drop regions smaller than this many pixels. */
  minArea?: number;
  /** Drop regions covering more than this fraction of the image. */
  maxAreaFraction?: number;
  /** Dilation radius applied to every region; adjacent proposals overlap. */
  dilatePx?: number;
}

const QUANT_SHIFT = 5; // 8 levels per channel

export class ColorRegionSegmenter implements Segmenter {
  private readonly minArea: number;
  private readonly maxAreaFraction: number;
  private readonly dilatePx: number;

  constructor(options: ColorRegionOptions = {}) {
    this.minArea = options.minArea ?? 12;
    this.maxAreaFraction = options.maxAreaFraction ?? 0.5;
    this.dilatePx = options.dilatePx ?? 1;
  }

  segment(image: RgbImage): RegionProposal[] {
    const { width, height, data } = image;
    const n = width * height;
    const key = new Int32Array(n);
    for (let p = 0; p < n; p += 1) {
      const r = data[3 * p] >> QUANT_SHIFT;
      const g = data[3 * p + 1] >> QUANT_SHIFT;
      const b = data[3 * p + 2] >> QUANT_SHIFT;
      key[p] = (r << 10) | (g << 5) | b;
    }

    const labels = new Int32Array(n).fill(-1);
    const proposals: RegionProposal[] = [];
    const queue = new Int32Array(n);
    let nextLabel = 0;
    for (let seed = 0; seed < n; seed += 1) {
      if (labels[seed] !== -1) continue;
      let head = 0;
      let tail = 0;
      queue[tail++] = seed;
      labels[seed] = nextLabel;
      const members: number[] = [];
      while (head < tail) {
        const p = queue[head++];
        members.push(p);
        const u = p % width;
        const v = (p - u) / width;
        const neighbors = [
          u > 0 ? p - 1 : -1,
          u + 1 < width ? p + 1 : -1,
          v > 0 ? p - width : -1,
          v + 1 < height ? p + width : -1,
        ];
        for (const q of neighbors) {
          if (q >= 0 && labels[q] === -1 && key[q] === key[p]) {
            labels[q] = nextLabel;
            queue[tail++] = q;
          }
        }
      }
      nextLabel += 1;
      if (members.length >= this.minArea && members.length <= this.maxAreaFraction * n) {
        proposals.push({ pixels: this.dilate(members, width, height) });
      }
    }
    return proposals;
  }

  private dilate(members: number[], width: number, height: number): Uint32Array {
    if (this.dilatePx <= 0) {
      return Uint32Array.from(members);
    }
    const r = this.dilatePx;
    const out = new Set<number>();
    for (const p of members) {
      const u = p % width;
      const v = (p - u) / width;
      for (let dv = -r; dv <= r; dv += 1) {
        for (let du = -r; du <= r; du += 1) {
          const nu = u + du;
          const nv = v + dv;
          if (nu >= 0 && nu < width && nv >= 0 && nv < height) {
            out.add(nv * width + nu);
          }
        }
      }
    }
    return Uint32Array.from(out).sort();
  }
}

const HIST_BINS = 4; // per channel; dim = 4^3

export class HistogramEmbedder implements Embedder {
  readonly dim = HIST_BINS * HIST_BINS * HIST_BINS;

  embedRegion(image: RgbImage, pixels: Uint32Array): Float64Array {
    const hist = new Float64Array(this.dim);
    const shift = 8 - Math.log2(HIST_BINS);
    for (const p of pixels) {
      const r = image.data[3 * p] >> shift;
      const g = image.data[3 * p + 1] >> shift;
      const b = image.data[3 * p + 2] >> shift;
      hist[(r * HIST_BINS + g) * HIST_BINS + b] += 1;
    }
    return normalize(hist);
  }

  embedText(text: string): Float64Array {
    const hist = new Float64Array(this.dim);
    const padded = `  ${text.toLowerCase()} `;
    for (let i = 0; i + 3 <= padded.length; i += 1) {
      hist[fnv1a(padded.slice(i, i + 3)) % this.dim] += 1;
    }
    return normalize(hist);
  }
}

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i += 1) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h;
}

function normalize(v: Float64Array): Float64Array {
  let norm = 0;
  for (const x of v) norm += x * x;
  norm = Math.sqrt(norm);
  if (norm === 0) {
    // Degenerate region or empty text: a fixed unit vector keeps the
    // cosine well-defined.
    const out = new Float64Array(v.length);
    out[0] = 1;
    return out;
  }
  const out = new Float64Array(v.length);
  for (let i = 0; i < v.length; i += 1) out[i] = v[i] / norm;
  return out;
}

export function cosine(a: Float64Array, b: Float64Array): number {
  let dot = 0;
  for (let i = 0; i < a.length; i += 1) dot += a[i] * b[i];
  return Math.min(1, Math.max(-1, dot));
}
