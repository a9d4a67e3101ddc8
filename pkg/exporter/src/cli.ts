#!/usr/bin/env node
/**
 * export-weights --model <safetensors path or HF repo id> --out weights.w2cv
 * export-trace   --model <...> --wav fixture.wav --out trace.w2cv
 */

import { exportWeights, exportTrace } from "./export";

function parseArgs(argv: string[]): { command: string; options: Record<string, string> } {
  const [command, ...rest] = argv;
  const options: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    if (!rest[i].startsWith("--") || rest[i + 1] === undefined) {
      throw new Error(`bad argument ${rest[i]}`);
    }
    options[rest[i].slice(2)] = rest[i + 1];
  }
  return { command, options };
}

function need(options: Record<string, string>, key: string): string {
  const value = options[key];
  if (!value) throw new Error(`missing required option --${key}`);
  return value;
}

async function main(): Promise<number> {
  const { command, options } = parseArgs(process.argv.slice(2));
  if (command === "export-weights") {
    const manifest = await exportWeights(need(options, "model"), need(options, "out"));
    console.log(JSON.stringify(manifest, null, 2));
    return 0;
  }
  if (command === "export-trace") {
    const shapes = await exportTrace(need(options, "model"), need(options, "wav"), need(options, "out"));
    console.log(JSON.stringify({ layers: shapes }, null, 2));
    return 0;
  }
  console.error("usage: cli.js export-weights --model M --out F | export-trace --model M --wav W --out F");
  return 2;
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  });
