/**
 * Bindings to the maskkit core for Node/TypeScript preprocessing pipelines.
 *
 * Nothing here reimplements core logic: every call marshals to the core
 * tool through its stable surfaces (plain-bitmap masks, plain-graymap
 * images, CSV reports) and decodes the result, so bound outputs are
 * bit-identical to what the core produces for the same inputs.
 *
 * The core executable is resolved from MASKKIT_BIN (whitespace-separated
 * command) and defaults to `python3 -m maskkit`.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Raised when the core rejects inputs or cannot be executed. */
export class BindingError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BindingError";
  }
}

/** Boolean mask over a patch grid, row-major; 1 = masked. */
export interface BoundMask {
  cols: number;
  rows: number;
  cells: Uint8Array;
}

/** Single-channel image buffer, row-major intensities in [0, maxValue]. */
export interface GrayBuffer {
  width: number;
  height: number;
  maxValue: number;
  pixels: Uint16Array;
}

/** One-decimal percentages as reported by the core; null = undefined metric. */
export interface BoundMetrics {
  accuracy: number | null;
  precision: number | null;
  recall: number | null;
  f1: number | null;
}

export interface BoundClassWeights {
  n0: number;
  n1: number;
  w0: number;
  w1: number;
}

export interface BoundOcclusion {
  probability: number;
  stderr: number;
  method: "exact" | "monte_carlo";
  trials: number;
}

export type PatternName = "mesh" | "random" | "square" | "blockwise";

export interface GenerateOptions {
  pattern: PatternName;
  cols: number;
  rows: number;
  /** Pass ratios as strings ("0.6") to keep their decimal meaning exact. */
  ratio: string | number;
  seed: number;
  /** square pattern: side length in patches */
  side?: number;
  /** blockwise pattern */
  minBlockArea?: number;
  aspect?: [number, number];
  /** mesh pattern */
  rounding?: "floor" | "round";
  parityMode?: "linear" | "checkerboard";
}

export interface OcclusionOptions extends GenerateOptions {
  region: { x: number; y: number; w: number; h: number };
  mode: "exact" | "mc";
  trials?: number;
  threads?: number;
}

function coreCommand(): string[] {
  const raw = process.env.MASKKIT_BIN?.trim();
  return raw && raw.length > 0 ? raw.split(/\s+/) : ["python3", "-m", "maskkit"];
}

function runCore(args: string[]): string {
  const [cmd, ...prefix] = coreCommand();
  const proc = spawnSync(cmd, [...prefix, ...args], { encoding: "utf8" });
  if (proc.error) {
    throw new BindingError(`cannot run core tool: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = proc.stderr.trim() || `exit status ${proc.status}`;
    throw new BindingError(detail);
  }
  return proc.stdout;
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "maskkit-bind-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

// ---------------------------------------------------------------------------
// wire-format codecs (portable anymaps, CSV)

function stripComments(text: string): string[] {
  return text
    .split("\n")
    .filter((line) => !line.startsWith("#"))
    .join("\n")
    .split(/\s+/)
    .filter((tok) => tok.length > 0);
}

function parseBitmap(text: string): BoundMask {
  const tokens = stripComments(text);
  if (tokens[0] !== "P1") {
    throw new BindingError(`expected P1 bitmap, got magic ${tokens[0]}`);
  }
  const cols = Number(tokens[1]);
  const rows = Number(tokens[2]);
  // raster digits may be packed without separators
  const digits = tokens.slice(3).join("");
  if (digits.length !== cols * rows) {
    throw new BindingError(`bitmap raster holds ${digits.length} digits, expected ${cols * rows}`);
  }
  const cells = new Uint8Array(cols * rows);
  for (let i = 0; i < digits.length; i++) {
    const d = digits[i];
    if (d !== "0" && d !== "1") {
      throw new BindingError(`invalid bitmap digit ${d}`);
    }
    cells[i] = d === "1" ? 1 : 0;
  }
  return { cols, rows, cells };
}

function formatBitmap(mask: BoundMask): string {
  if (mask.cells.length !== mask.cols * mask.rows) {
    throw new BindingError("mask cell count does not match dimensions");
  }
  let out = `P1\n${mask.cols} ${mask.rows}\n`;
  for (let r = 0; r < mask.rows; r++) {
    const row = Array.from(mask.cells.subarray(r * mask.cols, (r + 1) * mask.cols));
    out += row.join(" ") + "\n";
  }
  return out;
}

function parseGraymap(text: string): GrayBuffer {
  const tokens = stripComments(text);
  if (tokens[0] !== "P2") {
    throw new BindingError(`expected plain P2 graymap, got magic ${tokens[0]}`);
  }
  const width = Number(tokens[1]);
  const height = Number(tokens[2]);
  const maxValue = Number(tokens[3]);
  const pixels = new Uint16Array(width * height);
  if (tokens.length - 4 !== pixels.length) {
    throw new BindingError(`graymap raster holds ${tokens.length - 4} values, expected ${pixels.length}`);
  }
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = Number(tokens[4 + i]);
  }
  return { width, height, maxValue, pixels };
}

function formatGraymap(img: GrayBuffer): string {
  if (img.pixels.length !== img.width * img.height) {
    throw new BindingError("pixel count does not match dimensions");
  }
  let out = `P2\n${img.width} ${img.height}\n${img.maxValue}\n`;
  for (let r = 0; r < img.height; r++) {
    const row = Array.from(img.pixels.subarray(r * img.width, (r + 1) * img.width));
    out += row.join(" ") + "\n";
  }
  return out;
}

function csvDataRow(text: string): Record<string, string> {
  const lines = text.split("\n").filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length < 2) {
    throw new BindingError("core emitted no CSV data row");
  }
  const header = lines[0].split(",");
  const cells = lines[1].split(",");
  const row: Record<string, string> = {};
  header.forEach((name, i) => {
    row[name] = cells[i] ?? "";
  });
  return row;
}

function patternFlags(opts: GenerateOptions): string[] {
  const flags = [
    "--pattern", opts.pattern,
    "--grid", `${opts.cols}x${opts.rows}`,
    "--ratio", String(opts.ratio),
  ];
  if (opts.side !== undefined) flags.push("--side", String(opts.side));
  if (opts.minBlockArea !== undefined) flags.push("--min-block-area", String(opts.minBlockArea));
  if (opts.aspect !== undefined) flags.push("--aspect", `${opts.aspect[0]}:${opts.aspect[1]}`);
  if (opts.rounding !== undefined) flags.push("--rounding", opts.rounding);
  if (opts.parityMode !== undefined) flags.push("--parity-mode", opts.parityMode);
  return flags;
}

// ---------------------------------------------------------------------------
// bound operations

/** Generate a mask; bit-identical to the core generator for the same inputs. */
export function generateMask(opts: GenerateOptions): BoundMask {
  return withTempDir((dir) => {
    const out = join(dir, "mask.pbm");
    runCore(["gen", ...patternFlags(opts), "--seed", String(opts.seed), "-o", out]);
    return parseBitmap(readFileSync(out, "utf8"));
  });
}

/** Fill every pixel of each masked patch; margins pass through unchanged. */
export function applyMask(
  image: GrayBuffer,
  mask: BoundMask,
  patchSize: number,
  fill: number,
): GrayBuffer {
  return withTempDir((dir) => {
    const imgPath = join(dir, "in.pgm");
    const maskPath = join(dir, "mask.pbm");
    const outPath = join(dir, "out.pgm");
    writeFileSync(imgPath, formatGraymap(image));
    writeFileSync(maskPath, formatBitmap(mask));
    runCore([
      "apply",
      "--image", imgPath,
      "--mask", maskPath,
      "--patch-size", String(patchSize),
      "--fill", String(fill),
      "-o", outPath,
    ]);
    return parseGraymap(readFileSync(outPath, "utf8"));
  });
}

/** Accuracy/precision/recall/F1 from confusion counts, as the core reports them. */
export function computeMetrics(counts: { tp: number; fp: number; tn: number; fn: number }): BoundMetrics {
  for (const [name, value] of Object.entries(counts)) {
    if (!Number.isInteger(value) || value < 0) {
      throw new BindingError(`count ${name} must be a non-negative integer, got ${value}`);
    }
  }
  return withTempDir((dir) => {
    const csvPath = join(dir, "pairs.csv");
    const lines = ["truth,pred"];
    for (let i = 0; i < counts.tp; i++) lines.push("1,1");
    for (let i = 0; i < counts.fp; i++) lines.push("0,1");
    for (let i = 0; i < counts.tn; i++) lines.push("0,0");
    for (let i = 0; i < counts.fn; i++) lines.push("1,0");
    writeFileSync(csvPath, lines.join("\n") + "\n");
    const row = csvDataRow(runCore(["metrics", "--csv", csvPath]));
    const pick = (name: string) => (row[name] === "" ? null : Number(row[name]));
    return {
      accuracy: pick("accuracy"),
      precision: pick("precision"),
      recall: pick("recall"),
      f1: pick("f1"),
    };
  });
}

/** Inverse-frequency class weights for (negative, positive) training counts. */
export function computeClassWeights(n0: number, n1: number): BoundClassWeights {
  const row = csvDataRow(runCore(["weights", "--n0", String(n0), "--n1", String(n1)]));
  return {
    n0: Number(row.n0),
    n1: Number(row.n1),
    w0: Number(row.w0),
    w1: Number(row.w1),
  };
}

/** Probability that a patch region is fully masked (exact or Monte-Carlo). */
export function estimateOcclusion(opts: OcclusionOptions): BoundOcclusion {
  const args = [
    "occlusion",
    ...patternFlags(opts),
    "--region", `${opts.region.w}x${opts.region.h}`,
    "--at", `${opts.region.x},${opts.region.y}`,
    "--mode", opts.mode,
  ];
  if (opts.mode === "mc") {
    args.push("--trials", String(opts.trials ?? 100000), "--seed", String(opts.seed));
    if (opts.threads !== undefined) args.push("--threads", String(opts.threads));
  }
  const row = csvDataRow(runCore(args));
  return {
    probability: Number(row.probability),
    stderr: Number(row.stderr),
    method: row.method as "exact" | "monte_carlo",
    trials: Number(row.trials),
  };
}
