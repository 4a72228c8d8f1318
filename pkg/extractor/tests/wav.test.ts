import { describe, expect, it } from "vitest";

import { decodeWav, encodeWav, reverseSamples, WavError } from "../src/wav.js";

describe("decodeWav", () => {
  it("reads hand-built PCM16 mono bytes exactly", () => {
    const ints = [0, 1, -1, 32767, -32768, 12345];
    const buf = encodeWav(new Float32Array(ints.length), 16000);
    ints.forEach((v, i) => buf.writeInt16LE(v, 44 + 2 * i));

    const wav = decodeWav(buf);
    expect(wav.sampleRate).toBe(16000);
    expect(Array.from(wav.samples)).toEqual(
      ints.map((v) => Math.fround(v / 32768)),
    );
  });

  it("rejects non-RIFF data, stereo, and non-16-bit formats", () => {
    expect(() => decodeWav(Buffer.from("not audio at all"))).toThrow(WavError);

    const stereo = encodeWav(new Float32Array(4), 16000);
    stereo.writeUInt16LE(2, 22);
    expect(() => decodeWav(stereo)).toThrow(/mono/);

    const eightBit = encodeWav(new Float32Array(4), 16000);
    eightBit.writeUInt16LE(8, 34);
    expect(() => decodeWav(eightBit)).toThrow(/16-bit/);

    const truncated = encodeWav(new Float32Array(100), 16000);
    expect(() => decodeWav(truncated.subarray(0, 60))).toThrow(/truncated/);
  });

  it("round-trips through encodeWav at int16 precision", () => {
    const samples = Float32Array.from(
      Array.from({ length: 256 }, (_, i) => Math.sin(i / 7) * 0.8),
    );
    const wav = decodeWav(encodeWav(samples, 16000));
    // encode rounds x*32767, decode divides by 32768:
    // |err| <= 0.5/32767 + |n|*(1/32767 - 1/32768) <= 1/65534 + 1/32768
    const bound = 1 / 65534 + 1 / 32768;
    for (let i = 0; i < samples.length; i++) {
      expect(Math.abs((wav.samples[i] as number) - (samples[i] as number)))
        .toBeLessThanOrEqual(bound);
    }
  });
});

describe("reverseSamples", () => {
  it("reverses order and is an involution, bit for bit", () => {
    const samples = Float32Array.from(
      Array.from({ length: 999 }, (_, i) => Math.sin(i * 0.31) * 0.5),
    );
    const once = reverseSamples(samples);
    expect(once[0]).toBe(samples[998]);
    expect(once[998]).toBe(samples[0]);

    const twice = reverseSamples(once);
    expect(
      Buffer.from(twice.buffer).equals(Buffer.from(samples.buffer)),
    ).toBe(true);
  });

  it("does not mutate its input", () => {
    const samples = Float32Array.from([1, 2, 3]);
    reverseSamples(samples);
    expect(Array.from(samples)).toEqual([1, 2, 3]);
  });
});
