/**
 * Extraction pipeline: RGB frames + poses + tasks -> observation log.
 *
 * Per frame: the segmenter proposes candidate regions, overlapping pixels
 * are resolved so each pixel belongs to at most one mask (smallest covering
 * region wins), every surviving mask is embedded, and per-task cosine
 * scores are written in the engine's JSON Lines log format. Scores, not
 * embeddings, cross the boundary.
 */

import { readFileSync, readdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { cosine } from "./backend.js";
import { readPpm } from "./ppm.js";
import { rleEncode } from "./rle.js";
import type {
  CameraPose,
  Embedder,
  FrameRecord,
  MaskRecord,
  RgbImage,
  Segmenter,
} from "./types.js";

export interface ExtractOptions {
  segmenter: Segmenter;
  embedder: Embedder;
}

export function listFrames(framesDir: string): string[] {
  const names = readdirSync(framesDir)
    .filter((name) => name.endsWith(".ppm"))
    .sort();
  if (names.length === 0) {
    throw new Error(`no .ppm frames found in ${framesDir}`);
  }
  return names.map((name) => join(framesDir, name));
}

export function readPoses(path: string): CameraPose[] {
  const doc = JSON.parse(readFileSync(path, "utf-8"));
  if (!Array.isArray(doc)) {
    throw new Error(`${path}: poses file must be an array`);
  }
  for (const [i, pose] of doc.entries()) {
    for (const key of [
      "frame_id", "rotation", "translation", "fx", "fy", "cx", "cy", "width", "height",
    ]) {
      if (!(key in pose)) {
        throw new Error(`${path}: poses[${i}] missing '${key}'`);
      }
    }
    if (pose.rotation.length !== 9 || pose.translation.length !== 3) {
      throw new Error(`${path}: poses[${i}] has malformed rotation/translation`);
    }
  }
  return doc as CameraPose[];
}

export function readTasks(path: string): string[] {
  const doc = JSON.parse(readFileSync(path, "utf-8"));
  if (!Array.isArray(doc) || !doc.every((t) => typeof t === "string")) {
    throw new Error(`${path}: task file must be an array of strings`);
  }
  if (doc.length === 0) {
    throw new Error(`${path}: task list is empty`);
  }
  return doc;
}

/**
 * Assign every pixel claimed by several proposals to the smallest covering
 * one, returning disjoint masks (empty survivors dropped).
 */
export function resolveOverlaps(
  proposals: { pixels: Uint32Array }[],
  nPixels: number,
): Uint32Array[] {
  const owner = new Int32Array(nPixels).fill(-1);
  const size = proposals.map((p) => p.pixels.length);
  for (let i = 0; i < proposals.length; i += 1) {
    for (const p of proposals[i].pixels) {
      const current = owner[p];
      if (current === -1 || size[i] < size[current]) {
        owner[p] = i;
      }
    }
  }
  const buckets: number[][] = proposals.map(() => []);
  for (let p = 0; p < nPixels; p += 1) {
    if (owner[p] >= 0) {
      buckets[owner[p]].push(p);
    }
  }
  return buckets.filter((b) => b.length > 0).map((b) => Uint32Array.from(b));
}

export function frameRecord(
  image: RgbImage,
  pose: CameraPose,
  taskEmbeddings: Float64Array[],
  options: ExtractOptions,
): FrameRecord {
  if (image.width !== pose.width || image.height !== pose.height) {
    throw new Error(
      `frame ${pose.frame_id}: image is ${image.width}x${image.height}, ` +
        `pose says ${pose.width}x${pose.height}`,
    );
  }
  const proposals = options.segmenter.segment(image);
  const masks = resolveOverlaps(proposals, image.width * image.height);
  const records: MaskRecord[] = masks.map((pixels, maskId) => {
    const embedding = options.embedder.embedRegion(image, pixels);
    return {
      mask_id: maskId,
      rle: rleEncode(pixels),
      scores: taskEmbeddings.map((t) => cosine(embedding, t)),
    };
  });
  const { frame_id, ...camera } = pose;
  return { frame_id, camera, masks: records };
}

export function extract(
  framesDir: string,
  posesPath: string,
  tasksPath: string,
  outPath: string,
  options: ExtractOptions,
): { frames: number; masks: number } {
  const framePaths = listFrames(framesDir);
  const poses = readPoses(posesPath);
  if (poses.length !== framePaths.length) {
    throw new Error(
      `${framePaths.length} frames but ${poses.length} poses; ` +
        "they must align by sorted filename order",
    );
  }
  const tasks = readTasks(tasksPath);
  const taskEmbeddings = tasks.map((t) => options.embedder.embedText(t));

  const ordered = poses
    .map((pose, i) => ({ pose, path: framePaths[i] }))
    .sort((a, b) => a.pose.frame_id - b.pose.frame_id);

  let maskCount = 0;
  const lines: string[] = [];
  for (const { pose, path } of ordered) {
    const record = frameRecord(readPpm(path), pose, taskEmbeddings, options);
    maskCount += record.masks.length;
    lines.push(JSON.stringify(record));
  }
  writeFileSync(outPath, lines.join("\n") + "\n");
  return { frames: ordered.length, masks: maskCount };
}

export function calibrateNegatives(
  framesDir: string,
  decoyTasksPath: string,
  outPath: string,
  options: ExtractOptions,
): { scores: number } {
  const framePaths = listFrames(framesDir);
  const decoys = readTasks(decoyTasksPath);
  const decoyEmbeddings = decoys.map((t) => options.embedder.embedText(t));

  const negatives: number[] = [];
  for (const path of framePaths) {
    const image = readPpm(path);
    const proposals = options.segmenter.segment(image);
    const masks = resolveOverlaps(proposals, image.width * image.height);
    for (const pixels of masks) {
      const embedding = options.embedder.embedRegion(image, pixels);
      for (const decoy of decoyEmbeddings) {
        negatives.push(cosine(embedding, decoy));
      }
    }
  }
  writeFileSync(outPath, JSON.stringify({ negative_scores: negatives }) + "\n");
  return { scores: negatives.length };
}
