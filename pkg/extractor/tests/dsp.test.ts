import { describe, expect, it } from "vitest";

import {
  dct2,
  frameCount,
  hannWindow,
  melFilterbank,
  powerSpectrum,
} from "../src/dsp.js";
import { ModelError, resolveUpstream, upstreamNames } from "../src/upstream.js";

describe("framing", () => {
  it("counts frames like 1 + floor((n - length) / hop)", () => {
    const spec = { frameLength: 400, hop: 160 };
    expect(frameCount(399, spec)).toBe(0);
    expect(frameCount(400, spec)).toBe(1);
    expect(frameCount(559, spec)).toBe(1);
    expect(frameCount(560, spec)).toBe(2);
    expect(frameCount(1920, spec)).toBe(10);
  });

  it("hann window is zero at the left edge and peaks mid-frame", () => {
    const w = hannWindow(400);
    expect(w[0]).toBe(0);
    expect(w[200]).toBeCloseTo(1, 12);
  });
});

describe("powerSpectrum", () => {
  it("concentrates a pure integer-cycle cosine at its bin", () => {
    const n = 64;
    const k0 = 5;
    const frame = new Float64Array(n);
    for (let t = 0; t < n; t++) {
      frame[t] = Math.cos((2 * Math.PI * k0 * t) / n);
    }
    const power = powerSpectrum(frame);
    // re(X_{k0}) = n/2 for a unit cosine, so power = (n/2)^2
    expect(power[k0]).toBeCloseTo((n / 2) ** 2, 6);
    for (let k = 0; k < power.length; k++) {
      if (k !== k0) {
        expect(power[k] as number).toBeLessThan(1e-18 * (n / 2) ** 2 + 1e-12);
      }
    }
  });
});

describe("melFilterbank", () => {
  it("rows are nonnegative and each covers some bins", () => {
    const bank = melFilterbank(201, 24, 16000, 20, 7600);
    expect(bank.length).toBe(24);
    for (const row of bank) {
      let sum = 0;
      for (const v of row) {
        expect(v).toBeGreaterThanOrEqual(0);
        sum += v;
      }
      expect(sum).toBeGreaterThan(0);
    }
  });
});

describe("dct2", () => {
  it("maps a constant vector to a single DC coefficient", () => {
    const n = 24;
    const c = 0.7;
    const values = new Float64Array(n).fill(c);
    const coeffs = dct2(values, 13);
    expect(coeffs[0]).toBeCloseTo(Math.sqrt(n) * c, 12);
    for (let k = 1; k < coeffs.length; k++) {
      expect(Math.abs(coeffs[k] as number)).toBeLessThan(1e-12);
    }
  });
});

describe("upstream registry", () => {
  it("exposes layer stacks with the documented dimensions", () => {
    expect(upstreamNames()).toEqual(["logmel-base", "mfcc-base"]);

    const logmel = resolveUpstream("logmel-base");
    expect(logmel.layers).toEqual(["power", "mel", "logmel"]);
    expect(logmel.layerDim("power")).toBe(201);
    expect(logmel.layerDim("logmel")).toBe(24);

    const mfcc = resolveUpstream("mfcc-base");
    expect(mfcc.layers).toEqual(["logmel", "mfcc", "mfcc_delta"]);
    expect(mfcc.layerDim("mfcc")).toBe(13);
    expect(mfcc.layerDim("mfcc_delta")).toBe(26);
    expect(mfcc.resolveLayer(1)).toBe("mfcc");
  });

  it("extracts bit-identical features for identical input", () => {
    const samples = Float32Array.from(
      Array.from({ length: 1920 }, (_, i) => Math.sin(i * 0.05) * 0.4),
    );
    const upstream = resolveUpstream("mfcc-base");
    const a = upstream.extract(samples, 16000, "mfcc");
    const b = upstream.extract(samples, 16000, "mfcc");
    expect(a.m).toBe(10);
    expect(a.q).toBe(13);
    expect(
      Buffer.from(a.frames.buffer).equals(Buffer.from(b.frames.buffer)),
    ).toBe(true);
  });

  it("layer selection changes the output dimensionality", () => {
    const samples = Float32Array.from(
      Array.from({ length: 800 }, (_, i) => Math.sin(i * 0.02)),
    );
    const upstream = resolveUpstream("logmel-base");
    expect(upstream.extract(samples, 16000, 0).q).toBe(201);
    expect(upstream.extract(samples, 16000, "logmel").q).toBe(24);
  });

  it("rejects unknown models and layers", () => {
    expect(() => resolveUpstream("no-such-model")).toThrow(ModelError);
    expect(() => resolveUpstream("no-such-model")).toThrow(/logmel-base/);
    const upstream = resolveUpstream("logmel-base");
    expect(() => upstream.resolveLayer("mfcc")).toThrow(ModelError);
    expect(() => upstream.resolveLayer(7)).toThrow(/out of range/);
  });
});
