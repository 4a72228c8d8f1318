import { describe, expect, it } from "vitest";

import { decodeMiaf, encodeMiaf, MiafError } from "../src/miaf.js";

function sample(): Parameters<typeof encodeMiaf>[0] {
  return {
    utteranceId: "u1",
    speakerId: "s1",
    m: 2,
    q: 3,
    frames: Float32Array.from([1, 0, 0, 0, 1, 0]),
  };
}

describe("encodeMiaf", () => {
  it("produces the documented byte layout", () => {
    const buf = encodeMiaf(sample());
    // magic | version | m | q
    const expected = Buffer.alloc(16);
    expected.write("MIAF", 0, "ascii");
    expected.writeUInt32LE(1, 4);
    expected.writeUInt32LE(2, 8);
    expected.writeUInt32LE(3, 12);
    // length-prefixed ids
    const ids = Buffer.alloc(12);
    ids.writeUInt32LE(2, 0);
    ids.write("u1", 4, "ascii");
    ids.writeUInt32LE(2, 6);
    ids.write("s1", 10, "ascii");
    // 6 float32 values
    const payload = Buffer.alloc(24);
    [1, 0, 0, 0, 1, 0].forEach((v, i) => payload.writeFloatLE(v, 4 * i));

    expect(buf.length).toBe(52);
    expect(buf.equals(Buffer.concat([expected, ids, payload]))).toBe(true);
  });

  it("round-trips bit-exactly, including awkward float32 values", () => {
    const frames = Float32Array.from([
      1.5, -0.1, 3.40282e38, 1.17549e-38, 0, -0,
    ]);
    const seq = {
      utteranceId: "spk-seen-000-u000",
      speakerId: "spk-seen-000",
      m: 3,
      q: 2,
      frames,
    };
    const back = decodeMiaf(encodeMiaf(seq));
    expect(back.utteranceId).toBe(seq.utteranceId);
    expect(back.speakerId).toBe(seq.speakerId);
    expect(back.m).toBe(3);
    expect(back.q).toBe(2);
    expect(Buffer.from(back.frames.buffer).equals(Buffer.from(frames.buffer)))
      .toBe(true);
  });

  it("rejects non-finite values and shape mismatches", () => {
    const bad = sample();
    bad.frames = Float32Array.from([1, 0, NaN, 0, 1, 0]);
    expect(() => encodeMiaf(bad)).toThrow(MiafError);

    const short = sample();
    short.frames = Float32Array.from([1, 2, 3]);
    expect(() => encodeMiaf(short)).toThrow(/m\*q/);

    const zeroQ = sample();
    zeroQ.q = 0;
    zeroQ.frames = new Float32Array(0);
    expect(() => encodeMiaf(zeroQ)).toThrow(MiafError);
  });
});

describe("decodeMiaf", () => {
  it("rejects bad magic, truncation, and trailing bytes", () => {
    const good = encodeMiaf(sample());

    const wrongMagic = Buffer.from(good);
    wrongMagic.write("MIAX", 0, "ascii");
    expect(() => decodeMiaf(wrongMagic)).toThrow(/magic/);

    expect(() => decodeMiaf(good.subarray(0, good.length - 1))).toThrow(
      /truncated/,
    );

    const extra = Buffer.concat([good, Buffer.from([0])]);
    expect(() => decodeMiaf(extra)).toThrow(/trailing/);
  });

  it("rejects unsupported versions", () => {
    const buf = encodeMiaf(sample());
    buf.writeUInt32LE(99, 4);
    expect(() => decodeMiaf(buf)).toThrow(/99/);
  });
});
