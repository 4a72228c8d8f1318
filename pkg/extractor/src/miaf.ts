// MIAF feature-file codec. Layout, all little-endian:
//   "MIAF" | u32 version=1 | u32 m | u32 q
//   | u32 len + utterance id (UTF-8) | u32 len + speaker id (UTF-8)
//   | m*q float32, row-major

export const MIAF_MAGIC = "MIAF";
export const MIAF_VERSION = 1;

export interface FeatureSequence {
  utteranceId: string;
  speakerId: string;
  /** Frame count. */
  m: number;
  /** Feature dimensionality, constant within a file. */
  q: number;
  /** Row-major m*q values. */
  frames: Float32Array;
}

export class MiafError extends Error {}

function lengthPrefixed(text: string): Buffer {
  const raw = Buffer.from(text, "utf-8");
  const out = Buffer.alloc(4 + raw.length);
  out.writeUInt32LE(raw.length, 0);
  raw.copy(out, 4);
  return out;
}

export function encodeMiaf(seq: FeatureSequence): Buffer {
  if (!Number.isInteger(seq.m) || seq.m < 1) {
    throw new MiafError(`m must be a positive integer, got ${seq.m}`);
  }
  if (!Number.isInteger(seq.q) || seq.q < 1) {
    throw new MiafError(`q must be a positive integer, got ${seq.q}`);
  }
  if (seq.frames.length !== seq.m * seq.q) {
    throw new MiafError(
      `frames length ${seq.frames.length} != m*q = ${seq.m * seq.q}`,
    );
  }
  for (let i = 0; i < seq.frames.length; i++) {
    const v = seq.frames[i] as number;
    if (!Number.isFinite(v)) {
      throw new MiafError(
        `non-finite value at flat index ${i} of utterance ${seq.utteranceId}`,
      );
    }
  }
  const header = Buffer.alloc(16);
  header.write(MIAF_MAGIC, 0, "ascii");
  header.writeUInt32LE(MIAF_VERSION, 4);
  header.writeUInt32LE(seq.m, 8);
  header.writeUInt32LE(seq.q, 12);
  const payload = Buffer.alloc(4 * seq.frames.length);
  for (let i = 0; i < seq.frames.length; i++) {
    payload.writeFloatLE(seq.frames[i] as number, 4 * i);
  }
  return Buffer.concat([
    header,
    lengthPrefixed(seq.utteranceId),
    lengthPrefixed(seq.speakerId),
    payload,
  ]);
}

class Cursor {
  pos = 0;

  constructor(private readonly data: Buffer) {}

  take(n: number): Buffer {
    if (this.pos + n > this.data.length) {
      throw new MiafError("truncated feature file");
    }
    const out = this.data.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  takeString(): string {
    const n = this.take(4).readUInt32LE(0);
    return this.take(n).toString("utf-8");
  }

  atEnd(): boolean {
    return this.pos === this.data.length;
  }
}

export function decodeMiaf(data: Buffer): FeatureSequence {
  const cur = new Cursor(data);
  const magic = cur.take(4).toString("ascii");
  if (magic !== MIAF_MAGIC) {
    throw new MiafError(`bad magic ${JSON.stringify(magic)}`);
  }
  const version = cur.take(4).readUInt32LE(0);
  if (version !== MIAF_VERSION) {
    throw new MiafError(`unsupported version ${version}`);
  }
  const m = cur.take(4).readUInt32LE(0);
  const q = cur.take(4).readUInt32LE(0);
  const utteranceId = cur.takeString();
  const speakerId = cur.takeString();
  const payload = cur.take(4 * m * q);
  if (!cur.atEnd()) {
    throw new MiafError("trailing bytes after payload");
  }
  const frames = new Float32Array(m * q);
  for (let i = 0; i < frames.length; i++) {
    frames[i] = payload.readFloatLE(4 * i);
  }
  return { utteranceId, speakerId, m, q, frames };
}
