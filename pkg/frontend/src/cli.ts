#!/usr/bin/env node
/** plots render --spec spec.json */

import { MalformedCsvError } from "./csv";
import { loadSpec, render } from "./render";

function usage(): void {
  process.stderr.write("usage: plots render --spec spec.json\n");
}

export function main(argv: string[]): number {
  if (argv.length < 1 || argv[0] !== "render") {
    usage();
    return 2;
  }
  const specIdx = argv.indexOf("--spec");
  if (specIdx < 0 || specIdx + 1 >= argv.length) {
    usage();
    return 2;
  }
  try {
    const spec = loadSpec(argv[specIdx + 1]);
    const result = render(spec);
    process.stdout.write(
      `rendered ${result.svgPath} and ${result.pngPath} [${result.annotation}]\n`
    );
    return 0;
  } catch (err) {
    if (err instanceof MalformedCsvError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
