// Minimal RIFF/WAVE codec for 16-bit PCM mono, the only layout the
// extraction pipeline consumes. Anything else is reported as undecodable
// so the caller can skip the file.

export class WavError extends Error {}

export interface WavData {
  sampleRate: number;
  /** Mono samples scaled to [-1, 1). */
  samples: Float32Array;
}

export function decodeWav(data: Buffer): WavData {
  if (data.length < 12 || data.toString("ascii", 0, 4) !== "RIFF") {
    throw new WavError("not a RIFF file");
  }
  if (data.toString("ascii", 8, 12) !== "WAVE") {
    throw new WavError("not a WAVE file");
  }
  let fmt: { channels: number; sampleRate: number; bits: number } | null =
    null;
  let pos = 12;
  while (pos + 8 <= data.length) {
    const id = data.toString("ascii", pos, pos + 4);
    const size = data.readUInt32LE(pos + 4);
    const body = pos + 8;
    if (body + size > data.length) {
      throw new WavError(`truncated ${JSON.stringify(id)} chunk`);
    }
    if (id === "fmt ") {
      if (size < 16) {
        throw new WavError("fmt chunk too small");
      }
      const audioFormat = data.readUInt16LE(body);
      if (audioFormat !== 1) {
        throw new WavError(`unsupported audio format ${audioFormat} (want PCM)`);
      }
      fmt = {
        channels: data.readUInt16LE(body + 2),
        sampleRate: data.readUInt32LE(body + 4),
        bits: data.readUInt16LE(body + 14),
      };
    } else if (id === "data") {
      if (!fmt) {
        throw new WavError("data chunk before fmt chunk");
      }
      if (fmt.channels !== 1) {
        throw new WavError(`expected mono, got ${fmt.channels} channels`);
      }
      if (fmt.bits !== 16) {
        throw new WavError(`expected 16-bit samples, got ${fmt.bits}`);
      }
      const count = Math.floor(size / 2);
      const samples = new Float32Array(count);
      for (let i = 0; i < count; i++) {
        samples[i] = data.readInt16LE(body + 2 * i) / 32768;
      }
      return { sampleRate: fmt.sampleRate, samples };
    }
    // Chunks are word-aligned; odd sizes carry one pad byte.
    pos = body + size + (size % 2);
  }
  throw new WavError("no data chunk");
}

export function encodeWav(samples: Float32Array, sampleRate: number): Buffer {
  const dataSize = samples.length * 2;
  const out = Buffer.alloc(44 + dataSize);
  out.write("RIFF", 0, "ascii");
  out.writeUInt32LE(36 + dataSize, 4);
  out.write("WAVE", 8, "ascii");
  out.write("fmt ", 12, "ascii");
  out.writeUInt32LE(16, 16);
  out.writeUInt16LE(1, 20); // PCM
  out.writeUInt16LE(1, 22); // mono
  out.writeUInt32LE(sampleRate, 24);
  out.writeUInt32LE(sampleRate * 2, 28); // byte rate
  out.writeUInt16LE(2, 32); // block align
  out.writeUInt16LE(16, 34);
  out.write("data", 36, "ascii");
  out.writeUInt32LE(dataSize, 40);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i] as number));
    out.writeInt16LE(Math.round(clamped * 32767), 44 + 2 * i);
  }
  return out;
}

/** New array with the sample order reversed; applying it twice returns the
 * original order. */
export function reverseSamples(samples: Float32Array): Float32Array {
  const out = new Float32Array(samples.length);
  for (let i = 0; i < samples.length; i++) {
    out[i] = samples[samples.length - 1 - i] as number;
  }
  return out;
}
