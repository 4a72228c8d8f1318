// Walks dataset_root/<split>/<speaker>/<utterance>.wav, runs the configured
// upstream layer over each file, and dumps MIAF feature files plus an NDJSON
// manifest. Membership labels come only from the configured split mapping,
// never from the audio. Undecodable files are skipped and reported; an
// unresolvable model aborts the whole run.

import { readdirSync, readFileSync, statSync } from "node:fs";
import * as path from "node:path";

import { writeFileAtomic } from "./atomic.js";
import { ExtractConfig } from "./config.js";
import { ManifestEntry, writeManifest } from "./manifest.js";
import { encodeMiaf } from "./miaf.js";
import { Upstream, resolveUpstream } from "./upstream.js";
import { WavError, decodeWav, reverseSamples } from "./wav.js";

export interface SkipRecord {
  path: string;
  reason: string;
}

export interface ExtractResult {
  manifestPath: string;
  entries: ManifestEntry[];
  skipped: SkipRecord[];
  q: number;
}

function listDirs(root: string): string[] {
  return readdirSync(root)
    .filter((name) => statSync(path.join(root, name)).isDirectory())
    .sort();
}

function listWavs(dir: string): string[] {
  return readdirSync(dir)
    .filter((name) => name.toLowerCase().endsWith(".wav"))
    .sort();
}

function loadSamples(
  wavPath: string,
  expectedRate: number,
): Float32Array {
  const wav = decodeWav(readFileSync(wavPath));
  if (wav.sampleRate !== expectedRate) {
    throw new WavError(
      `sample rate ${wav.sampleRate} != expected ${expectedRate}`,
    );
  }
  return wav.samples;
}

export async function extract(
  cfg: ExtractConfig,
  log: (line: string) => void = (line) => console.error(line),
): Promise<ExtractResult> {
  const upstream: Upstream = resolveUpstream(cfg.model); // abort if unresolvable
  const layerName = upstream.resolveLayer(cfg.layer);

  const entries: ManifestEntry[] = [];
  const skipped: SkipRecord[] = [];
  let q = 0;

  for (const split of Object.keys(cfg.splits).sort()) {
    const membership = cfg.splits[split]!;
    const splitDir = path.join(cfg.dataset_root, split);
    for (const speakerId of listDirs(splitDir)) {
      const speakerDir = path.join(splitDir, speakerId);
      for (const wavName of listWavs(speakerDir)) {
        const wavPath = path.join(speakerDir, wavName);
        const utteranceId = path.basename(wavName, path.extname(wavName));
        let samples: Float32Array;
        try {
          samples = loadSamples(wavPath, cfg.sample_rate);
        } catch (err) {
          if (err instanceof WavError) {
            skipped.push({ path: wavPath, reason: err.message });
            log(`skip ${wavPath}: ${err.message}`);
            continue;
          }
          throw err;
        }
        if (cfg.reverse_waveform) {
          samples = reverseSamples(samples);
        }
        const out = upstream.extract(samples, cfg.sample_rate, layerName);
        if (out.m < 1) {
          const reason = `too short for one frame (${samples.length} samples)`;
          skipped.push({ path: wavPath, reason });
          log(`skip ${wavPath}: ${reason}`);
          continue;
        }
        if (q === 0) {
          q = out.q;
        } else if (out.q !== q) {
          throw new Error(
            `inconsistent q within dump: ${out.q} != ${q} at ${wavPath}`,
          );
        }
        const rel = path.join("features", `${utteranceId}.miaf`);
        await writeFileAtomic(
          path.join(cfg.out_dir, rel),
          encodeMiaf({
            utteranceId,
            speakerId,
            m: out.m,
            q: out.q,
            frames: out.frames,
          }),
        );
        entries.push({
          utterance_id: utteranceId,
          speaker_id: speakerId,
          path: rel,
          membership,
        });
      }
    }
  }

  const manifestPath = path.join(cfg.out_dir, "manifest.ndjson");
  await writeManifest(entries, manifestPath, {
    generator: "miaf-extractor",
    model: upstream.name,
    layer: layerName,
    reverse_waveform: cfg.reverse_waveform,
    sample_rate: cfg.sample_rate,
  });
  return { manifestPath, entries, skipped, q };
}
