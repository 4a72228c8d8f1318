export { writeFileAtomic } from "./atomic.js";
export { ConfigError, ExtractConfig, extractConfigSchema, loadConfig } from "./config.js";
export {
  applyFilterbank,
  dct2,
  frameCount,
  hannWindow,
  logCompress,
  melFilterbank,
  powerSpectrum,
} from "./dsp.js";
export { ExtractResult, SkipRecord, extract } from "./extract.js";
export {
  Membership,
  ManifestEntry,
  renderManifest,
  writeManifest,
} from "./manifest.js";
export {
  FeatureSequence,
  MIAF_MAGIC,
  MIAF_VERSION,
  MiafError,
  decodeMiaf,
  encodeMiaf,
} from "./miaf.js";
export {
  LayerOutput,
  ModelError,
  Upstream,
  UpstreamSpec,
  resolveUpstream,
  upstreamNames,
  upstreamSpecSchema,
} from "./upstream.js";
export { WavData, WavError, decodeWav, encodeWav, reverseSamples } from "./wav.js";
