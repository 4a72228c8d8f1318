// NDJSON manifest: optional {"metadata": ...} first line, then one entry
// per line with keys sorted alphabetically (matches the audit engine's
// writer, so diffs between the two producers stay meaningful).

import { writeFileAtomic } from "./atomic.js";

export type Membership = "seen" | "unseen" | "unknown";

export interface ManifestEntry {
  utterance_id: string;
  speaker_id: string;
  /** Feature-file path relative to the manifest's directory. */
  path: string;
  membership: Membership;
}

/** JSON with sorted keys and `", "`/`": "` spacing at every level, byte-
 * compatible with the audit engine's json.dumps(..., sort_keys=True). */
function sortedJson(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(sortedJson).join(", ")}]`;
  }
  if (value !== null && typeof value === "object") {
    const obj = value as Record<string, unknown>;
    const pairs = Object.keys(obj)
      .sort()
      .map((k) => `${JSON.stringify(k)}: ${sortedJson(obj[k])}`);
    return `{${pairs.join(", ")}}`;
  }
  return JSON.stringify(value);
}

export function renderManifest(
  entries: ManifestEntry[],
  metadata?: Record<string, unknown>,
): string {
  const lines: string[] = [];
  if (metadata !== undefined) {
    lines.push(sortedJson({ metadata }));
  }
  for (const e of entries) {
    lines.push(
      sortedJson({
        membership: e.membership,
        path: e.path,
        speaker_id: e.speaker_id,
        utterance_id: e.utterance_id,
      }),
    );
  }
  return lines.length ? lines.join("\n") + "\n" : "";
}

export async function writeManifest(
  entries: ManifestEntry[],
  path: string,
  metadata?: Record<string, unknown>,
): Promise<void> {
  await writeFileAtomic(path, renderManifest(entries, metadata));
}
