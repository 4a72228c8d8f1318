import { readFileSync } from "node:fs";
import * as path from "node:path";
import { z } from "zod";

export class ConfigError extends Error {}

const membershipSchema = z.enum(["seen", "unseen", "unknown"]);

export const extractConfigSchema = z
  .object({
    /** Registry name or path to a JSON checkpoint. */
    model: z.string().min(1),
    /** Layer name or index into the model's layer stack. */
    layer: z.union([z.string().min(1), z.number().int().min(0)]),
    dataset_root: z.string().min(1),
    /** Which splits to dump and the membership label each one carries. */
    splits: z.record(z.string().min(1), membershipSchema),
    reverse_waveform: z.boolean().default(false),
    out_dir: z.string().min(1),
    sample_rate: z.number().int().positive().default(16000),
  })
  .strict();

export type ExtractConfig = z.infer<typeof extractConfigSchema>;

/** Load and validate a config file; relative paths resolve against the
 * config file's directory. */
export function loadConfig(configPath: string): ExtractConfig {
  let raw: string;
  try {
    raw = readFileSync(configPath, "utf-8");
  } catch (err) {
    throw new ConfigError(`cannot read config ${configPath}: ${err}`);
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (err) {
    throw new ConfigError(`invalid JSON in config ${configPath}: ${err}`);
  }
  const result = extractConfigSchema.safeParse(parsed);
  if (!result.success) {
    const issue = result.error.issues[0];
    const where = issue?.path.join(".") || "(root)";
    throw new ConfigError(
      `invalid config ${configPath}: ${where}: ${issue?.message}`,
    );
  }
  const cfg = result.data;
  if (Object.keys(cfg.splits).length === 0) {
    throw new ConfigError(`invalid config ${configPath}: splits is empty`);
  }
  const base = path.dirname(path.resolve(configPath));
  cfg.dataset_root = path.resolve(base, cfg.dataset_root);
  cfg.out_dir = path.resolve(base, cfg.out_dir);
  if (cfg.model.endsWith(".json")) {
    cfg.model = path.resolve(base, cfg.model);
  }
  return cfg;
}
