/**
 * Toy SimSiam trainer with a linear-probe evaluation.
 *
 * Deliberately desk-scale: a two-layer MLP encoder over tiny synthetic
 * images, two augmented views per sample, negative-cosine loss with a
 * stop-gradient on the target branch, then a frozen-encoder linear probe
 * whose validation accuracy is the reported score.
 *
 * Collapse is flagged when the per-dimension standard deviation of the
 * L2-normalized probe embeddings, averaged over dimensions, falls below
 * 0.01 * (1 / sqrt(d)) -- the operational reading of "constant outputs".
 */

import { applyPolicy, Image } from "./augment.js";
import { GroupAugmentPolicy } from "./policy.js";
import { RngStream } from "./rng.js";

export interface ToyTrainerConfig {
  dataset: string;
  encoderWidth: number;
  embeddingDim: number;
  pretrainEpochs: number;
  evalEpochs: number;
  device: string;
  learningRate: number;
  weightDecay: number;
}

export const DEFAULT_CONFIG: ToyTrainerConfig = {
  dataset: "synthetic",
  encoderWidth: 64,
  embeddingDim: 16,
  pretrainEpochs: 30,
  evalEpochs: 60,
  device: "cpu",
  learningRate: 0.02,
  weightDecay: 1e-4,
};

const IMG_SIDE = 8;
const IMG_DIM = IMG_SIDE * IMG_SIDE * 3;
const N_CLASSES = 4;
const N_PRETRAIN = 192;
const N_PROBE_TRAIN = 160;
const N_PROBE_VAL = 80;
const BATCH = 32;
const COLLAPSE_FACTOR = 0.01;

export function validateConfig(cfg: ToyTrainerConfig): void {
  // desk-scale bounds: keeps any single trial far under the CPU budget
  if (cfg.dataset !== "synthetic") {
    throw new RangeError(`unknown dataset '${cfg.dataset}'`);
  }
  if (cfg.device !== "cpu") {
    throw new RangeError(`unknown device '${cfg.device}'`);
  }
  if (!(cfg.encoderWidth >= 4 && cfg.encoderWidth <= 256)) {
    throw new RangeError(`encoderWidth out of desk-scale bounds: ${cfg.encoderWidth}`);
  }
  if (!(cfg.embeddingDim >= 2 && cfg.embeddingDim <= 64)) {
    throw new RangeError(`embeddingDim out of desk-scale bounds: ${cfg.embeddingDim}`);
  }
  if (!(cfg.pretrainEpochs >= 1 && cfg.pretrainEpochs <= 300)) {
    throw new RangeError(`pretrainEpochs out of desk-scale bounds: ${cfg.pretrainEpochs}`);
  }
  if (!(cfg.evalEpochs >= 1 && cfg.evalEpochs <= 500)) {
    throw new RangeError(`evalEpochs out of desk-scale bounds: ${cfg.evalEpochs}`);
  }
  if (!(cfg.learningRate > 0 && cfg.learningRate <= 1)) {
    throw new RangeError(`learningRate out of bounds: ${cfg.learningRate}`);
  }
  if (!(cfg.weightDecay >= 0 && cfg.weightDecay <= 1)) {
    throw new RangeError(`weightDecay out of bounds: ${cfg.weightDecay}`);
  }
}

interface Sample {
  img: Image;
  label: number;
}

/** Class-structured synthetic images: shared class pattern plus noise. */
function makeDataset(rng: RngStream, n: number): Sample[] {
  const bases: Float64Array[] = [];
  for (let k = 0; k < N_CLASSES; k++) {
    const base = new Float64Array(IMG_DIM);
    for (let i = 0; i < IMG_DIM; i++) {
      base[i] = rng.uniform();
    }
    bases.push(base);
  }
  const samples: Sample[] = [];
  for (let i = 0; i < n; i++) {
    const label = i % N_CLASSES;
    const data = new Float64Array(IMG_DIM);
    const base = bases[label];
    for (let j = 0; j < IMG_DIM; j++) {
      const noisy = 0.75 * base[j] + 0.25 * rng.uniform();
      data[j] = noisy < 0 ? 0 : noisy > 1 ? 1 : noisy;
    }
    samples.push({ img: { h: IMG_SIDE, w: IMG_SIDE, data }, label });
  }
  return samples;
}

/** Dense layer with bias; stores the last input for the backward pass. */
class Linear {
  readonly nIn: number;
  readonly nOut: number;
  w: Float64Array;
  b: Float64Array;
  private mw: Float64Array;
  private mb: Float64Array;
  private lastX: Float64Array | null = null;
  private lastRows = 0;
  gw: Float64Array;
  gb: Float64Array;

  constructor(nIn: number, nOut: number, rng: RngStream) {
    this.nIn = nIn;
    this.nOut = nOut;
    this.w = new Float64Array(nIn * nOut);
    const bound = Math.sqrt(6 / (nIn + nOut));
    for (let i = 0; i < this.w.length; i++) {
      this.w[i] = rng.uniformRange(-bound, bound);
    }
    this.b = new Float64Array(nOut);
    this.mw = new Float64Array(nIn * nOut);
    this.mb = new Float64Array(nOut);
    this.gw = new Float64Array(nIn * nOut);
    this.gb = new Float64Array(nOut);
  }

  forward(x: Float64Array, rows: number): Float64Array {
    this.lastX = x;
    this.lastRows = rows;
    const out = new Float64Array(rows * this.nOut);
    for (let r = 0; r < rows; r++) {
      for (let o = 0; o < this.nOut; o++) {
        let acc = this.b[o];
        for (let i = 0; i < this.nIn; i++) {
          acc += x[r * this.nIn + i] * this.w[i * this.nOut + o];
        }
        out[r * this.nOut + o] = acc;
      }
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const x = this.lastX!;
    const rows = this.lastRows;
    const gradIn = new Float64Array(rows * this.nIn);
    for (let r = 0; r < rows; r++) {
      for (let o = 0; o < this.nOut; o++) {
        const g = gradOut[r * this.nOut + o];
        if (g === 0) {
          continue;
        }
        this.gb[o] += g;
        for (let i = 0; i < this.nIn; i++) {
          this.gw[i * this.nOut + o] += x[r * this.nIn + i] * g;
          gradIn[r * this.nIn + i] += this.w[i * this.nOut + o] * g;
        }
      }
    }
    return gradIn;
  }

  zeroGrad(): void {
    this.gw.fill(0);
    this.gb.fill(0);
  }

  step(lr: number, momentum: number, weightDecay: number, scale: number): void {
    for (let i = 0; i < this.w.length; i++) {
      this.mw[i] = momentum * this.mw[i] + this.gw[i] * scale + weightDecay * this.w[i];
      this.w[i] -= lr * this.mw[i];
    }
    for (let i = 0; i < this.b.length; i++) {
      this.mb[i] = momentum * this.mb[i] + this.gb[i] * scale;
      this.b[i] -= lr * this.mb[i];
    }
  }
}

function relu(x: Float64Array): Float64Array {
  const out = new Float64Array(x.length);
  for (let i = 0; i < x.length; i++) {
    out[i] = x[i] > 0 ? x[i] : 0;
  }
  return out;
}

function reluBackward(x: Float64Array, grad: Float64Array): Float64Array {
  const out = new Float64Array(grad.length);
  for (let i = 0; i < grad.length; i++) {
    out[i] = x[i] > 0 ? grad[i] : 0;
  }
  return out;
}

class Encoder {
  l1: Linear;
  l2: Linear;
  private pre1: Float64Array | null = null;

  constructor(width: number, embDim: number, rng: RngStream) {
    this.l1 = new Linear(IMG_DIM, width, rng);
    this.l2 = new Linear(width, embDim, rng);
  }

  forward(x: Float64Array, rows: number): Float64Array {
    this.pre1 = this.l1.forward(x, rows);
    return this.l2.forward(relu(this.pre1), rows);
  }

  backward(grad: Float64Array): void {
    const gHidden = this.l2.backward(grad);
    this.l1.backward(reluBackward(this.pre1!, gHidden));
  }

  zeroGrad(): void {
    this.l1.zeroGrad();
    this.l2.zeroGrad();
  }

  step(lr: number, momentum: number, wd: number, scale: number): void {
    this.l1.step(lr, momentum, wd, scale);
    this.l2.step(lr, momentum, wd, scale);
  }
}

function l2NormalizeRows(z: Float64Array, rows: number, dim: number): Float64Array {
  const out = new Float64Array(z.length);
  for (let r = 0; r < rows; r++) {
    let norm = 0;
    for (let i = 0; i < dim; i++) {
      norm += z[r * dim + i] ** 2;
    }
    norm = Math.sqrt(norm) + 1e-12;
    for (let i = 0; i < dim; i++) {
      out[r * dim + i] = z[r * dim + i] / norm;
    }
  }
  return out;
}

/**
 * Gradient of -cos(p, target) w.r.t. p, targets held constant (stop-grad).
 * Returns the mean loss over rows and writes the gradient in place.
 */
function negCosineGrad(
  p: Float64Array,
  target: Float64Array,
  rows: number,
  dim: number,
  gradOut: Float64Array,
): number {
  const tHat = l2NormalizeRows(target, rows, dim);
  let loss = 0;
  for (let r = 0; r < rows; r++) {
    let norm = 0;
    for (let i = 0; i < dim; i++) {
      norm += p[r * dim + i] ** 2;
    }
    norm = Math.sqrt(norm) + 1e-12;
    let dot = 0;
    for (let i = 0; i < dim; i++) {
      dot += (p[r * dim + i] / norm) * tHat[r * dim + i];
    }
    loss -= dot;
    for (let i = 0; i < dim; i++) {
      const pHat = p[r * dim + i] / norm;
      gradOut[r * dim + i] = -(tHat[r * dim + i] - dot * pHat) / norm;
    }
  }
  return loss / rows;
}

function imageToRow(img: Image, out: Float64Array, offset: number): void {
  out.set(img.data, offset);
}

export interface TrialOutcome {
  score: number;
  collapsed: boolean;
  metrics: {
    embedding_std: number;
    pretrain_loss: number;
    probe_train_accuracy: number;
  };
}

/**
 * Pretrain with two augmented views per sample, freeze, probe, report.
 * `policy` null means the two views are the identical raw image -- the
 * zero-augmentation setup that invites collapse.
 */
export function runTrial(
  policy: GroupAugmentPolicy | null,
  seed: number,
  cfg: ToyTrainerConfig = DEFAULT_CONFIG,
): TrialOutcome {
  validateConfig(cfg);
  const dataRng = RngStream.fromKeys(seed, "toy-data");
  const initRng = RngStream.fromKeys(seed, "toy-init");
  const augRng = RngStream.fromKeys(seed, "toy-aug");
  const orderRng = RngStream.fromKeys(seed, "toy-order");

  const all = makeDataset(dataRng, N_PRETRAIN + N_PROBE_TRAIN + N_PROBE_VAL);
  const pretrain = all.slice(0, N_PRETRAIN);
  const probeTrain = all.slice(N_PRETRAIN, N_PRETRAIN + N_PROBE_TRAIN);
  const probeVal = all.slice(N_PRETRAIN + N_PROBE_TRAIN);

  const emb = cfg.embeddingDim;
  const encoder = new Encoder(cfg.encoderWidth, emb, initRng);
  const predictor = new Linear(emb, emb, initRng);

  const lr = cfg.learningRate;
  const momentum = 0.9;
  const weightDecay = cfg.weightDecay;
  let lastLoss = 0;

  const x1 = new Float64Array(BATCH * IMG_DIM);
  const x2 = new Float64Array(BATCH * IMG_DIM);
  for (let epoch = 0; epoch < cfg.pretrainEpochs; epoch++) {
    const order = orderRng.shuffled(pretrain.length);
    for (let start = 0; start + BATCH <= pretrain.length; start += BATCH) {
      for (let r = 0; r < BATCH; r++) {
        const sample = pretrain[order[start + r]];
        const v1 = policy ? applyPolicy(policy, sample.img, augRng) : sample.img;
        const v2 = policy ? applyPolicy(policy, sample.img, augRng) : sample.img;
        imageToRow(v1, x1, r * IMG_DIM);
        imageToRow(v2, x2, r * IMG_DIM);
      }
      // two stop-grad passes: predict view2 from view1, then the reverse
      encoder.zeroGrad();
      predictor.zeroGrad();
      let loss = 0;
      const grad = new Float64Array(BATCH * emb);
      for (const [xa, xb] of [
        [x1, x2],
        [x2, x1],
      ] as const) {
        const zb = encoder.forward(xb, BATCH); // target branch, no grads kept
        const za = encoder.forward(xa, BATCH);
        const p = predictor.forward(za, BATCH);
        loss += negCosineGrad(p, zb, BATCH, emb, grad);
        encoder.backward(predictor.backward(grad));
      }
      lastLoss = loss / 2;
      const scale = 1 / (2 * BATCH);
      encoder.step(lr, momentum, weightDecay, scale);
      predictor.step(lr, momentum, weightDecay, scale);
    }
  }

  // collapse probe: spread of normalized embeddings on held-out data
  const probeX = new Float64Array(probeTrain.length * IMG_DIM);
  probeTrain.forEach((s, i) => imageToRow(s.img, probeX, i * IMG_DIM));
  const zTrain = encoder.forward(probeX, probeTrain.length);
  const zHat = l2NormalizeRows(zTrain, probeTrain.length, emb);
  let stdSum = 0;
  for (let i = 0; i < emb; i++) {
    let mean = 0;
    for (let r = 0; r < probeTrain.length; r++) {
      mean += zHat[r * emb + i];
    }
    mean /= probeTrain.length;
    let varAcc = 0;
    for (let r = 0; r < probeTrain.length; r++) {
      varAcc += (zHat[r * emb + i] - mean) ** 2;
    }
    stdSum += Math.sqrt(varAcc / probeTrain.length);
  }
  const embeddingStd = stdSum / emb;
  const collapsed = embeddingStd < COLLAPSE_FACTOR / Math.sqrt(emb);

  // linear evaluation on frozen features
  const valX = new Float64Array(probeVal.length * IMG_DIM);
  probeVal.forEach((s, i) => imageToRow(s.img, valX, i * IMG_DIM));
  const zVal = l2NormalizeRows(encoder.forward(valX, probeVal.length), probeVal.length, emb);
  const head = new Linear(emb, N_CLASSES, initRng);
  const headLr = 0.5;
  for (let epoch = 0; epoch < cfg.evalEpochs; epoch++) {
    head.zeroGrad();
    const logits = head.forward(zHat, probeTrain.length);
    const grad = new Float64Array(probeTrain.length * N_CLASSES);
    for (let r = 0; r < probeTrain.length; r++) {
      let maxLogit = -Infinity;
      for (let c = 0; c < N_CLASSES; c++) {
        maxLogit = Math.max(maxLogit, logits[r * N_CLASSES + c]);
      }
      let denom = 0;
      for (let c = 0; c < N_CLASSES; c++) {
        denom += Math.exp(logits[r * N_CLASSES + c] - maxLogit);
      }
      for (let c = 0; c < N_CLASSES; c++) {
        const pc = Math.exp(logits[r * N_CLASSES + c] - maxLogit) / denom;
        grad[r * N_CLASSES + c] = pc - (probeTrain[r].label === c ? 1 : 0);
      }
    }
    head.backward(grad);
    head.step(headLr, 0.9, 1e-4, 1 / probeTrain.length);
  }

  const accuracyOf = (z: Float64Array, samples: Sample[]): number => {
    const logits = head.forward(z, samples.length);
    let correct = 0;
    for (let r = 0; r < samples.length; r++) {
      let best = 0;
      for (let c = 1; c < N_CLASSES; c++) {
        if (logits[r * N_CLASSES + c] > logits[r * N_CLASSES + best]) {
          best = c;
        }
      }
      if (best === samples[r].label) {
        correct++;
      }
    }
    return correct / samples.length;
  };

  return {
    score: accuracyOf(zVal, probeVal),
    collapsed,
    metrics: {
      embedding_std: embeddingStd,
      pretrain_loss: lastLoss,
      probe_train_accuracy: accuracyOf(zHat, probeTrain),
    },
  };
}
