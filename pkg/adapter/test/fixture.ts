/** Deterministic 3-frame fixture: colored blocks drifting over a dark floor. */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { writePpm } from "../src/ppm.js";
import type { CameraPose, RgbImage } from "../src/types.js";

export const WIDTH = 64;
export const HEIGHT = 48;

function blank(): RgbImage {
  const data = new Uint8Array(WIDTH * HEIGHT * 3);
  for (let p = 0; p < WIDTH * HEIGHT; p += 1) {
    data[3 * p] = 20;
    data[3 * p + 1] = 20;
    data[3 * p + 2] = 30;
  }
  return { width: WIDTH, height: HEIGHT, data };
}

function paint(image: RgbImage, u0: number, v0: number, w: number, h: number,
               rgb: [number, number, number]): void {
  for (let v = v0; v < v0 + h; v += 1) {
    for (let u = u0; u < u0 + w; u += 1) {
      if (u >= 0 && u < WIDTH && v >= 0 && v < HEIGHT) {
        const p = v * WIDTH + u;
        image.data[3 * p] = rgb[0];
        image.data[3 * p + 1] = rgb[1];
        image.data[3 * p + 2] = rgb[2];
      }
    }
  }
}

export function writeFixture(dir: string): { poses: string; tasks: string; decoys: string } {
  mkdirSync(dir, { recursive: true });
  const poses: CameraPose[] = [];
  for (let f = 0; f < 3; f += 1) {
    const image = blank();
    paint(image, 6 + f, 8, 12, 10, [220, 40, 40]);
    paint(image, 30, 20 + f, 10, 12, [40, 200, 60]);
    paint(image, 48, 6 + 2 * f, 8, 8, [60, 80, 230]);
    writePpm(join(dir, `frame_${String(f).padStart(3, "0")}.ppm`), image);
    poses.push({
      frame_id: f,
      rotation: [1, 0, 0, 0, 1, 0, 0, 0, 1],
      translation: [0.1 * f, 0, 0],
      fx: 60,
      fy: 60,
      cx: WIDTH / 2,
      cy: HEIGHT / 2,
      width: WIDTH,
      height: HEIGHT,
    });
  }
  const posesPath = join(dir, "poses.json");
  writeFileSync(posesPath, JSON.stringify(poses, null, 2));
  const tasksPath = join(dir, "tasks.json");
  writeFileSync(tasksPath, JSON.stringify(["grab the red bin", "water the plant"]));
  const decoysPath = join(dir, "decoys.json");
  writeFileSync(
    decoysPath,
    JSON.stringify(["find the submarine", "pet the giraffe", "tune the piano"]),
  );
  return { poses: posesPath, tasks: tasksPath, decoys: decoysPath };
}
