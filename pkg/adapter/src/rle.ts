/** Run-length encoding over sorted row-major pixel indices. */

export function rleEncode(pixels: Uint32Array | number[]): number[] {
  const sorted = Array.from(pixels).sort((a, b) => a - b);
  const out: number[] = [];
  let i = 0;
  while (i < sorted.length) {
    const start = sorted[i];
    let end = i;
    while (end + 1 < sorted.length && sorted[end + 1] === sorted[end] + 1) {
      end += 1;
    }
    out.push(start, end - i + 1);
    i = end + 1;
  }
  return out;
}

export function rleDecode(rle: number[], nPixels: number): Uint32Array {
  if (rle.length % 2 !== 0) {
    throw new Error("rle must hold start,length pairs");
  }
  let total = 0;
  for (let i = 1; i < rle.length; i += 2) {
    total += rle[i];
  }
  const out = new Uint32Array(total);
  let k = 0;
  let prevEnd = -1;
  for (let i = 0; i < rle.length; i += 2) {
    const start = rle[i];
    const len = rle[i + 1];
    if (len <= 0 || start < prevEnd) {
      throw new Error("rle runs must be ascending and non-overlapping");
    }
    if (start + len > nPixels) {
      throw new Error(`rle run ends beyond ${nPixels} pixels`);
    }
    for (let p = start; p < start + len; p += 1) {
      out[k] = p;
      k += 1;
    }
    prevEnd = start + len;
  }
  return out;
}
