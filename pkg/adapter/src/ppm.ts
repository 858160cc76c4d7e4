/** Minimal binary PPM (P6) reader/writer, the dependency-free frame format. */

import { readFileSync, writeFileSync } from "node:fs";

import type { RgbImage } from "./types.js";

export function decodePpm(buffer: Buffer): RgbImage {
  let offset = 0;
  const token = (): string => {
    // Skip whitespace and '#' comment lines between header fields.
    while (offset < buffer.length) {
      const c = buffer[offset];
      if (c === 0x23) {
        while (offset < buffer.length && buffer[offset] !== 0x0a) offset += 1;
      } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
        offset += 1;
      } else {
        break;
      }
    }
    const start = offset;
    while (offset < buffer.length && !/\s/.test(String.fromCharCode(buffer[offset]))) {
      offset += 1;
    }
    return buffer.subarray(start, offset).toString("ascii");
  };

  if (token() !== "P6") {
    throw new Error("not a binary PPM (P6) file");
  }
  const width = Number(token());
  const height = Number(token());
  const maxval = Number(token());
  if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
    throw new Error("invalid PPM dimensions");
  }
  if (maxval !== 255) {
    throw new Error(`unsupported PPM maxval ${maxval}`);
  }
  offset += 1; // single whitespace after maxval
  const expected = width * height * 3;
  const data = buffer.subarray(offset, offset + expected);
  if (data.length !== expected) {
    throw new Error(`PPM payload is ${data.length} bytes, expected ${expected}`);
  }
  return { width, height, data: new Uint8Array(data) };
}

export function readPpm(path: string): RgbImage {
  return decodePpm(readFileSync(path));
}

export function encodePpm(image: RgbImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(image.data)]);
}

export function writePpm(path: string, image: RgbImage): void {
  writeFileSync(path, encodePpm(image));
}
