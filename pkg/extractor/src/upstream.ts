// Upstream registry. An upstream turns a mono sample array into a stack of
// named representation layers; the extract config picks the model and the
// layer to dump. Built-in models are deterministic DSP stacks; a model
// identifier may also be a path to a JSON "checkpoint" describing a custom
// stack with the same families.

import { readFileSync } from "node:fs";
import { z } from "zod";

import {
  FrameSpec,
  applyFilterbank,
  dct2,
  frameCount,
  hannWindow,
  logCompress,
  melFilterbank,
  powerSpectrum,
} from "./dsp.js";

export class ModelError extends Error {}

export const upstreamSpecSchema = z
  .object({
    family: z.enum(["logmel", "mfcc"]),
    frame_length: z.number().int().min(2),
    hop: z.number().int().min(1),
    num_mels: z.number().int().min(1),
    num_coeffs: z.number().int().min(1).default(13),
    fmin: z.number().min(0).default(20),
    fmax: z.number().positive().default(7600),
  })
  .strict();

export type UpstreamSpec = z.infer<typeof upstreamSpecSchema>;

export interface LayerOutput {
  m: number;
  q: number;
  /** Row-major m*q float32 values. */
  frames: Float32Array;
}

export class Upstream {
  constructor(
    public readonly name: string,
    public readonly spec: UpstreamSpec,
  ) {}

  get layers(): string[] {
    return this.spec.family === "logmel"
      ? ["power", "mel", "logmel"]
      : ["logmel", "mfcc", "mfcc_delta"];
  }

  layerDim(layer: string): number {
    const bins = Math.floor(this.spec.frame_length / 2) + 1;
    switch (layer) {
      case "power":
        return bins;
      case "mel":
      case "logmel":
        return this.spec.num_mels;
      case "mfcc":
        return this.spec.num_coeffs;
      case "mfcc_delta":
        return 2 * this.spec.num_coeffs;
      default:
        throw new ModelError(`model ${this.name} has no layer ${layer}`);
    }
  }

  resolveLayer(layer: string | number): string {
    if (typeof layer === "number") {
      const name = this.layers[layer];
      if (name === undefined) {
        throw new ModelError(
          `layer index ${layer} out of range for model ${this.name} ` +
            `(${this.layers.length} layers)`,
        );
      }
      return name;
    }
    if (!this.layers.includes(layer)) {
      throw new ModelError(
        `model ${this.name} has no layer ${JSON.stringify(layer)}; ` +
          `available: ${this.layers.join(", ")}`,
      );
    }
    return layer;
  }

  extract(
    samples: Float32Array,
    sampleRate: number,
    layer: string | number,
  ): LayerOutput {
    const layerName = this.resolveLayer(layer);
    const spec: FrameSpec = {
      frameLength: this.spec.frame_length,
      hop: this.spec.hop,
    };
    const m = frameCount(samples.length, spec);
    const window = hannWindow(spec.frameLength);
    const bank = melFilterbank(
      Math.floor(spec.frameLength / 2) + 1,
      this.spec.num_mels,
      sampleRate,
      this.spec.fmin,
      this.spec.fmax,
    );

    const rows: Float64Array[] = [];
    for (let f = 0; f < m; f++) {
      const frame = new Float64Array(spec.frameLength);
      for (let i = 0; i < spec.frameLength; i++) {
        frame[i] = (samples[f * spec.hop + i] as number) * (window[i] as number);
      }
      const power = powerSpectrum(frame);
      if (layerName === "power") {
        rows.push(power);
        continue;
      }
      const mel = applyFilterbank(power, bank);
      if (layerName === "mel") {
        rows.push(mel);
        continue;
      }
      const logmel = logCompress(mel);
      if (layerName === "logmel") {
        rows.push(logmel);
        continue;
      }
      rows.push(dct2(logmel, this.spec.num_coeffs));
    }

    if (layerName === "mfcc_delta") {
      const withDeltas: Float64Array[] = [];
      for (let t = 0; t < rows.length; t++) {
        const prev = rows[Math.max(0, t - 1)]!;
        const next = rows[Math.min(rows.length - 1, t + 1)]!;
        const cur = rows[t]!;
        const row = new Float64Array(2 * cur.length);
        row.set(cur, 0);
        for (let d = 0; d < cur.length; d++) {
          row[cur.length + d] =
            ((next[d] as number) - (prev[d] as number)) / 2;
        }
        withDeltas.push(row);
      }
      rows.length = 0;
      rows.push(...withDeltas);
    }

    const q = this.layerDim(layerName);
    const frames = new Float32Array(m * q);
    for (let f = 0; f < m; f++) {
      frames.set(Float32Array.from(rows[f]!), f * q);
    }
    return { m, q, frames };
  }
}

const REGISTRY: Record<string, UpstreamSpec> = {
  "logmel-base": upstreamSpecSchema.parse({
    family: "logmel",
    frame_length: 400,
    hop: 160,
    num_mels: 24,
  }),
  "mfcc-base": upstreamSpecSchema.parse({
    family: "mfcc",
    frame_length: 400,
    hop: 160,
    num_mels: 24,
    num_coeffs: 13,
  }),
};

export function upstreamNames(): string[] {
  return Object.keys(REGISTRY).sort();
}

/** Registry name or path to a JSON checkpoint; anything else aborts. */
export function resolveUpstream(identifier: string): Upstream {
  const builtin = REGISTRY[identifier];
  if (builtin !== undefined) {
    return new Upstream(identifier, builtin);
  }
  if (identifier.endsWith(".json")) {
    let raw: string;
    try {
      raw = readFileSync(identifier, "utf-8");
    } catch (err) {
      throw new ModelError(`cannot read model checkpoint ${identifier}: ${err}`);
    }
    let parsed: unknown;
    try {
      parsed = JSON.parse(raw);
    } catch (err) {
      throw new ModelError(`invalid model checkpoint ${identifier}: ${err}`);
    }
    const result = upstreamSpecSchema.safeParse(parsed);
    if (!result.success) {
      throw new ModelError(
        `invalid model checkpoint ${identifier}: ${result.error.message}`,
      );
    }
    return new Upstream(identifier, result.data);
  }
  throw new ModelError(
    `cannot resolve model ${JSON.stringify(identifier)}; expected one of ` +
      `[${upstreamNames().join(", ")}] or a .json checkpoint path`,
  );
}
