// Deterministic feature DSP: framing, Hann window, DFT power spectrum,
// mel filterbank, log compression, DCT-II. Everything computes in float64
// with fixed iteration order, so identical input samples always produce
// bit-identical features.

export interface FrameSpec {
  frameLength: number;
  hop: number;
}

export function frameCount(numSamples: number, spec: FrameSpec): number {
  if (numSamples < spec.frameLength) {
    return 0;
  }
  return 1 + Math.floor((numSamples - spec.frameLength) / spec.hop);
}

export function hannWindow(length: number): Float64Array {
  const w = new Float64Array(length);
  for (let i = 0; i < length; i++) {
    w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / length);
  }
  return w;
}

/** Power spectrum |X_k|^2 of one windowed frame, k = 0..floor(n/2).
 * Plain DFT; frame lengths here are small enough that O(n^2) is fine. */
export function powerSpectrum(frame: Float64Array): Float64Array {
  const n = frame.length;
  const bins = Math.floor(n / 2) + 1;
  const out = new Float64Array(bins);
  for (let k = 0; k < bins; k++) {
    let re = 0;
    let im = 0;
    for (let t = 0; t < n; t++) {
      const angle = (-2 * Math.PI * k * t) / n;
      const v = frame[t] as number;
      re += v * Math.cos(angle);
      im += v * Math.sin(angle);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

function hzToMel(hz: number): number {
  return 2595 * Math.log10(1 + hz / 700);
}

function melToHz(mel: number): number {
  return 700 * (Math.pow(10, mel / 2595) - 1);
}

/** Triangular mel filterbank as numMels rows over numBins spectrum bins. */
export function melFilterbank(
  numBins: number,
  numMels: number,
  sampleRate: number,
  fmin: number,
  fmax: number,
): Float64Array[] {
  const melLo = hzToMel(fmin);
  const melHi = hzToMel(fmax);
  const centers: number[] = [];
  for (let i = 0; i < numMels + 2; i++) {
    const hz = melToHz(melLo + ((melHi - melLo) * i) / (numMels + 1));
    centers.push((hz * 2 * (numBins - 1)) / sampleRate);
  }
  const bank: Float64Array[] = [];
  for (let mel = 0; mel < numMels; mel++) {
    const row = new Float64Array(numBins);
    const [lo, mid, hi] = [centers[mel]!, centers[mel + 1]!, centers[mel + 2]!];
    for (let bin = 0; bin < numBins; bin++) {
      if (bin > lo && bin < mid) {
        row[bin] = (bin - lo) / (mid - lo);
      } else if (bin >= mid && bin < hi) {
        row[bin] = (hi - bin) / (hi - mid);
      }
    }
    bank.push(row);
  }
  return bank;
}

export function applyFilterbank(
  spectrum: Float64Array,
  bank: Float64Array[],
): Float64Array {
  const out = new Float64Array(bank.length);
  for (let mel = 0; mel < bank.length; mel++) {
    const row = bank[mel]!;
    let acc = 0;
    for (let bin = 0; bin < spectrum.length; bin++) {
      acc += (row[bin] as number) * (spectrum[bin] as number);
    }
    out[mel] = acc;
  }
  return out;
}

const LOG_FLOOR = 1e-10;

export function logCompress(energies: Float64Array): Float64Array {
  const out = new Float64Array(energies.length);
  for (let i = 0; i < energies.length; i++) {
    out[i] = Math.log(Math.max(energies[i] as number, LOG_FLOOR));
  }
  return out;
}

/** Orthonormal DCT-II, keeping the first numCoeffs coefficients. */
export function dct2(values: Float64Array, numCoeffs: number): Float64Array {
  const n = values.length;
  const out = new Float64Array(numCoeffs);
  for (let k = 0; k < numCoeffs; k++) {
    let acc = 0;
    for (let t = 0; t < n; t++) {
      acc += (values[t] as number) * Math.cos((Math.PI * k * (t + 0.5)) / n);
    }
    const scale = k === 0 ? Math.sqrt(1 / n) : Math.sqrt(2 / n);
    out[k] = scale * acc;
  }
  return out;
}
