/** Structural validation of observation-log lines against the shared schema. */

export function validateFrameLine(line: string, where: string): void {
  let doc: any;
  try {
    doc = JSON.parse(line);
  } catch (err) {
    throw new Error(`${where}: invalid JSON (${err})`);
  }
  if (!Number.isInteger(doc.frame_id)) {
    throw new Error(`${where}: frame_id must be an integer`);
  }
  const cam = doc.camera;
  if (typeof cam !== "object" || cam === null) {
    throw new Error(`${where}: missing camera`);
  }
  if (!Array.isArray(cam.rotation) || cam.rotation.length !== 9) {
    throw new Error(`${where}: camera.rotation must have 9 entries`);
  }
  if (!Array.isArray(cam.translation) || cam.translation.length !== 3) {
    throw new Error(`${where}: camera.translation must have 3 entries`);
  }
  for (const key of ["fx", "fy", "cx", "cy", "width", "height"]) {
    if (typeof cam[key] !== "number") {
      throw new Error(`${where}: camera.${key} must be a number`);
    }
  }
  if (!Array.isArray(doc.masks)) {
    throw new Error(`${where}: masks must be an array`);
  }
  doc.masks.forEach((mask: any, i: number) => {
    const mwhere = `${where}: masks[${i}]`;
    if (!Number.isInteger(mask.mask_id)) {
      throw new Error(`${mwhere}: mask_id must be an integer`);
    }
    const hasRle = Array.isArray(mask.rle);
    const hasIds = Array.isArray(mask.gaussian_ids);
    if (hasRle === hasIds) {
      throw new Error(`${mwhere}: exactly one of rle/gaussian_ids required`);
    }
    if (hasRle) {
      if (mask.rle.length % 2 !== 0) {
        throw new Error(`${mwhere}: rle must hold start,length pairs`);
      }
      const limit = cam.width * cam.height;
      let prevEnd = -1;
      for (let k = 0; k < mask.rle.length; k += 2) {
        const start = mask.rle[k];
        const len = mask.rle[k + 1];
        if (len <= 0 || start < prevEnd) {
          throw new Error(`${mwhere}: rle runs must be ascending and disjoint`);
        }
        if (start + len > limit) {
          throw new Error(`${mwhere}: rle run exceeds ${limit} pixels`);
        }
        prevEnd = start + len;
      }
    }
    if (!Array.isArray(mask.scores) || mask.scores.length === 0) {
      throw new Error(`${mwhere}: scores must be a non-empty array`);
    }
    for (const s of mask.scores) {
      if (typeof s !== "number" || Math.abs(s) > 1) {
        throw new Error(`${mwhere}: scores must be cosines in [-1, 1]`);
      }
    }
  });
}

/** Validate a whole log: every line, plus strictly ascending frame ids and
 * pixel-disjoint masks within each frame. */
export function validateLog(content: string): number {
  const lines = content.split("\n").filter((l) => l.trim().length > 0);
  let last = -Infinity;
  lines.forEach((line, i) => {
    const where = `line ${i + 1}`;
    validateFrameLine(line, where);
    const doc = JSON.parse(line);
    if (doc.frame_id <= last) {
      throw new Error(`${where}: frame_id not strictly ascending`);
    }
    last = doc.frame_id;
    const claimed = new Set<number>();
    for (const mask of doc.masks) {
      if (!mask.rle) continue;
      for (let k = 0; k < mask.rle.length; k += 2) {
        for (let p = mask.rle[k]; p < mask.rle[k] + mask.rle[k + 1]; p += 1) {
          if (claimed.has(p)) {
            throw new Error(`${where}: pixel ${p} claimed by two masks`);
          }
          claimed.add(p);
        }
      }
    }
  });
  return lines.length;
}
