#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadConfig } from "./config.js";
import { extract } from "./extract.js";

export async function main(argv: string[]): Promise<number> {
  try {
    const args = await yargs(argv)
      .scriptName("miaf-extract")
      .usage("Usage: $0 --config <file>")
      .option("config", {
        type: "string",
        demandOption: true,
        describe: "ExtractConfig JSON file",
      })
      .strict()
      .exitProcess(false)
      .parse();
    if (args.help || args.version) {
      return 0;
    }
    const cfg = loadConfig(args.config);
    const result = await extract(cfg);
    console.log(
      `wrote ${result.entries.length} feature file(s) (q=${result.q}), ` +
        `skipped ${result.skipped.length} -> ${result.manifestPath}`,
    );
    return 0;
  } catch (err) {
    const name = err instanceof Error ? err.constructor.name : "Error";
    const message = err instanceof Error ? err.message : String(err);
    console.error(JSON.stringify({ error: name, message }));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
