/** Wire-format types shared with the mapping engine's observation log. */

export interface CameraPose {
  frame_id: number;
  /** Row-major 3x3 camera-from-world rotation. */
  rotation: number[];
  translation: number[];
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface MaskRecord {
  mask_id: number;
  /** Flat [start, length, ...] runs over row-major pixels. */
  rle: number[];
  /** One cosine score per task, in task order. */
  scores: number[];
}

export interface FrameRecord {
  frame_id: number;
  camera: Omit<CameraPose, "frame_id">;
  masks: MaskRecord[];
}

export interface RgbImage {
  width: number;
  height: number;
  /** Interleaved RGB, 3 bytes per pixel, row-major. */
  data: Uint8Array;
}

/** A candidate 2D region: row-major pixel indices, possibly overlapping others. */
export interface RegionProposal {
  pixels: Uint32Array;
}

/** Class-agnostic segmentation: an image in, candidate regions out. */
export interface Segmenter {
  segment(image: RgbImage): RegionProposal[];
}

/** Maps a masked crop or a text string to a unit-norm embedding. */
export interface Embedder {
  readonly dim: number;
  embedRegion(image: RgbImage, pixels: Uint32Array): Float64Array;
  embedText(text: string): Float64Array;
}
