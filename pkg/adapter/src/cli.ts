#!/usr/bin/env node
/**
 * taskmap-adapter extract --frames DIR --poses FILE --tasks FILE -o LOG
 * taskmap-adapter calibrate-negatives --frames DIR --tasks DECOYS -o SAMPLES
 *
 * Flags: --min-area N, --max-area-fraction F, --dilate-px N tune the
 * reference segmenter's granularity (finer masks over-segment the scene).
 */

import { ColorRegionSegmenter, HistogramEmbedder } from "./backend.js";
import { calibrateNegatives, extract } from "./extract.js";

interface Args {
  command: string;
  values: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new Error("usage: taskmap-adapter <extract|calibrate-negatives> ...");
  }
  const [command, ...rest] = argv;
  const values = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    if (!flag.startsWith("-") || i + 1 >= rest.length) {
      throw new Error(`malformed arguments near '${flag}'`);
    }
    values.set(flag.replace(/^--?/, ""), rest[i + 1]);
  }
  return { command, values };
}

function required(args: Args, name: string): string {
  const value = args.values.get(name);
  if (value === undefined) {
    throw new Error(`missing required --${name}`);
  }
  return value;
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const segmenter = new ColorRegionSegmenter({
      minArea: Number(args.values.get("min-area") ?? 12),
      maxAreaFraction: Number(args.values.get("max-area-fraction") ?? 0.5),
      dilatePx: Number(args.values.get("dilate-px") ?? 1),
    });
    const options = { segmenter, embedder: new HistogramEmbedder() };

    if (args.command === "extract") {
      const out = required(args, "o");
      const stats = extract(
        required(args, "frames"),
        required(args, "poses"),
        required(args, "tasks"),
        out,
        options,
      );
      console.log(`${stats.frames} frames, ${stats.masks} masks -> ${out}`);
      return 0;
    }
    if (args.command === "calibrate-negatives") {
      const out = required(args, "o");
      const stats = calibrateNegatives(
        required(args, "frames"),
        required(args, "tasks"),
        out,
        options,
      );
      console.log(`${stats.scores} negative scores -> ${out}`);
      return 0;
    }
    throw new Error(`unknown command '${args.command}'`);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
