#!/usr/bin/env node
/**
 * Command-line driver. Exit codes: 0 success, 1 export error, 2 usage.
 *
 *   cfm-exporter export --manifest data.tsv --out-prefix out [--size 32] [--text-dim 64]
 */

import { runExport } from "./export";

const USAGE =
  "usage: cfm-exporter export --manifest <tsv> --out-prefix <prefix> " +
  "[--size <n>] [--text-dim <n>]";

function parseArgs(argv: string[]): { [key: string]: string } {
  const out: { [key: string]: string } = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`bad argument ${flag}`);
    }
    out[flag.slice(2)] = value;
  }
  return out;
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] === "-h" || argv[0] === "--help") {
    console.log(USAGE);
    return argv.length === 0 ? 2 : 0;
  }
  if (argv[0] !== "export") {
    console.error(`error: unknown command ${JSON.stringify(argv[0])}\n${USAGE}`);
    return 2;
  }
  let flags: { [key: string]: string };
  try {
    flags = parseArgs(argv.slice(1));
  } catch (err) {
    console.error(`error: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  if (!flags["manifest"] || !flags["out-prefix"]) {
    console.error(`error: --manifest and --out-prefix are required\n${USAGE}`);
    return 2;
  }
  const size = flags["size"] !== undefined ? Number(flags["size"]) : undefined;
  const textDim = flags["text-dim"] !== undefined ? Number(flags["text-dim"]) : undefined;
  if (size !== undefined && (!Number.isInteger(size) || size <= 0)) {
    console.error(`error: --size must be a positive integer\n${USAGE}`);
    return 2;
  }
  if (textDim !== undefined && (!Number.isInteger(textDim) || textDim <= 0)) {
    console.error(`error: --text-dim must be a positive integer\n${USAGE}`);
    return 2;
  }
  try {
    runExport({
      manifestPath: flags["manifest"],
      outPrefix: flags["out-prefix"],
      imageSize: size,
      textDim,
      log: (msg) => console.error(msg),
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
