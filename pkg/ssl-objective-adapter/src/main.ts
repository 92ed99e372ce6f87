/**
 * Entry point: serve the objective protocol over stdin/stdout.
 *
 * Optional flags override the desk-scale trainer defaults:
 *   --pretrain-epochs N   --eval-epochs N   --width N   --embedding-dim N
 *   --learning-rate X     --weight-decay X
 */

import * as readline from "node:readline";
import { handleLine } from "./server.js";
import { DEFAULT_CONFIG, ToyTrainerConfig, validateConfig } from "./simsiam.js";

function configFromArgv(argv: string[]): ToyTrainerConfig {
  const cfg = { ...DEFAULT_CONFIG };
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = Number(argv[i + 1]);
    if (!Number.isFinite(value)) {
      throw new RangeError(`flag ${flag} needs a numeric value`);
    }
    switch (flag) {
      case "--pretrain-epochs":
        cfg.pretrainEpochs = value;
        break;
      case "--eval-epochs":
        cfg.evalEpochs = value;
        break;
      case "--width":
        cfg.encoderWidth = value;
        break;
      case "--embedding-dim":
        cfg.embeddingDim = value;
        break;
      case "--learning-rate":
        cfg.learningRate = value;
        break;
      case "--weight-decay":
        cfg.weightDecay = value;
        break;
      default:
        throw new RangeError(`unknown flag ${flag}`);
    }
  }
  validateConfig(cfg);
  return cfg;
}

function main(): void {
  const cfg = configFromArgv(process.argv.slice(2));
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => {
    const result = handleLine(line, cfg);
    if (result.response !== null) {
      process.stdout.write(JSON.stringify(result.response) + "\n");
    }
    if (result.shutdown) {
      process.exit(0);
    }
  });
}

main();
