/**
 * Small-image augmentation kernels for the toy trainer.
 *
 * These implement the catalog operations with simplified semantics on tiny
 * float images in [0, 1]. Pixel-level parity with the sibling kernel stack
 * is intentionally not a goal; the cross-language contract covers which
 * operations a policy draw selects, not what their pixels look like.
 */

import { AugmentationSpec, GroupAugmentPolicy } from "./policy.js";
import { RngStream } from "./rng.js";

export interface Image {
  h: number;
  w: number;
  /** Row-major, 3 channels interleaved, length h*w*3. */
  data: Float64Array;
}

export function cloneImage(img: Image): Image {
  return { h: img.h, w: img.w, data: new Float64Array(img.data) };
}

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

function reflectIndex(i: number, n: number): number {
  if (n === 1) {
    return 0;
  }
  const period = 2 * n - 2;
  let j = Math.abs(i) % period;
  if (j >= n) {
    j = period - j;
  }
  return j;
}

function samplePixel(img: Image, y: number, x: number, c: number): number {
  const yi = reflectIndex(Math.round(y), img.h);
  const xi = reflectIndex(Math.round(x), img.w);
  return img.data[(yi * img.w + xi) * 3 + c];
}

function mapCoordinates(img: Image, yMap: Float64Array, xMap: Float64Array): Image {
  const out = { h: img.h, w: img.w, data: new Float64Array(img.data.length) };
  for (let y = 0; y < img.h; y++) {
    for (let x = 0; x < img.w; x++) {
      const i = y * img.w + x;
      for (let c = 0; c < 3; c++) {
        out.data[i * 3 + c] = samplePixel(img, yMap[i], xMap[i], c);
      }
    }
  }
  return out;
}

function luma(r: number, g: number, b: number): number {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

function colorJitter(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const b = rng.uniformRange(Math.max(0, 1 - params.brightness), 1 + params.brightness);
  const ct = rng.uniformRange(Math.max(0, 1 - params.contrast), 1 + params.contrast);
  const s = rng.uniformRange(Math.max(0, 1 - params.saturation), 1 + params.saturation);
  const hueShift = rng.uniformRange(-params.hue, params.hue);
  const out = cloneImage(img);
  let mean = 0;
  for (const v of img.data) {
    mean += v;
  }
  mean /= img.data.length;
  for (let i = 0; i < img.h * img.w; i++) {
    let r = img.data[i * 3] * b;
    let g = img.data[i * 3 + 1] * b;
    let bl = img.data[i * 3 + 2] * b;
    r = mean + (r - mean) * ct;
    g = mean + (g - mean) * ct;
    bl = mean + (bl - mean) * ct;
    const gray = luma(r, g, bl);
    r = gray + (r - gray) * s;
    g = gray + (g - gray) * s;
    bl = gray + (bl - gray) * s;
    // cheap hue proxy: rotate channels toward their cyclic neighbour
    const t = hueShift;
    const r2 = r + t * (g - r);
    const g2 = g + t * (bl - g);
    const b2 = bl + t * (r - bl);
    out.data[i * 3] = clamp01(r2);
    out.data[i * 3 + 1] = clamp01(g2);
    out.data[i * 3 + 2] = clamp01(b2);
  }
  return out;
}

function toGray(img: Image): Image {
  const out = cloneImage(img);
  for (let i = 0; i < img.h * img.w; i++) {
    const g = luma(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
    out.data[i * 3] = g;
    out.data[i * 3 + 1] = g;
    out.data[i * 3 + 2] = g;
  }
  return out;
}

function solarize(img: Image, params: Record<string, number>): Image {
  const t = params.threshold / 255;
  const out = cloneImage(img);
  for (let i = 0; i < out.data.length; i++) {
    if (out.data[i] >= t) {
      out.data[i] = 1 - out.data[i];
    }
  }
  return out;
}

function equalize(img: Image): Image {
  // rank transform per channel: a discrete histogram equalization
  const out = cloneImage(img);
  const n = img.h * img.w;
  for (let c = 0; c < 3; c++) {
    const order = Array.from({ length: n }, (_, i) => i);
    order.sort((a, b) => img.data[a * 3 + c] - img.data[b * 3 + c] || a - b);
    for (let rank = 0; rank < n; rank++) {
      out.data[order[rank] * 3 + c] = n === 1 ? 0 : rank / (n - 1);
    }
  }
  return out;
}

function channelShuffle(img: Image, rng: RngStream): Image {
  const perm = rng.shuffled(3);
  const out = cloneImage(img);
  for (let i = 0; i < img.h * img.w; i++) {
    for (let c = 0; c < 3; c++) {
      out.data[i * 3 + c] = img.data[i * 3 + perm[c]];
    }
  }
  return out;
}

function shiftScaleRotate(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const dy = rng.uniformRange(-params.shift_limit, params.shift_limit) * img.h;
  const dx = rng.uniformRange(-params.shift_limit, params.shift_limit) * img.w;
  const scale = 1 + rng.uniformRange(-params.scale_limit, params.scale_limit);
  const angle = (rng.uniformRange(-params.rotate_limit, params.rotate_limit) * Math.PI) / 180;
  const cy = (img.h - 1) / 2;
  const cx = (img.w - 1) / 2;
  const cos = Math.cos(angle) / scale;
  const sin = Math.sin(angle) / scale;
  const yMap = new Float64Array(img.h * img.w);
  const xMap = new Float64Array(img.h * img.w);
  for (let y = 0; y < img.h; y++) {
    for (let x = 0; x < img.w; x++) {
      const ry = y - cy - dy;
      const rx = x - cx - dx;
      yMap[y * img.w + x] = cy + (sin * rx + cos * ry);
      xMap[y * img.w + x] = cx + (cos * rx - sin * ry);
    }
  }
  return mapCoordinates(img, yMap, xMap);
}

function horizontalFlip(img: Image): Image {
  const out = cloneImage(img);
  for (let y = 0; y < img.h; y++) {
    for (let x = 0; x < img.w; x++) {
      for (let c = 0; c < 3; c++) {
        out.data[(y * img.w + x) * 3 + c] = img.data[(y * img.w + (img.w - 1 - x)) * 3 + c];
      }
    }
  }
  return out;
}

function elastic(img: Image, params: Record<string, number>, rng: RngStream): Image {
  // coarse smooth displacement: one random offset per image quadrant,
  // bilinearly interpolated; stands in for the Gaussian-filtered field
  const amp = params.alpha / 10;
  const corners = Array.from({ length: 8 }, () => rng.uniformRange(-amp, amp));
  const yMap = new Float64Array(img.h * img.w);
  const xMap = new Float64Array(img.h * img.w);
  for (let y = 0; y < img.h; y++) {
    for (let x = 0; x < img.w; x++) {
      const fy = img.h === 1 ? 0 : y / (img.h - 1);
      const fx = img.w === 1 ? 0 : x / (img.w - 1);
      const dy =
        corners[0] * (1 - fy) * (1 - fx) +
        corners[1] * (1 - fy) * fx +
        corners[2] * fy * (1 - fx) +
        corners[3] * fy * fx;
      const dx =
        corners[4] * (1 - fy) * (1 - fx) +
        corners[5] * (1 - fy) * fx +
        corners[6] * fy * (1 - fx) +
        corners[7] * fy * fx;
      yMap[y * img.w + x] = y + dy;
      xMap[y * img.w + x] = x + dx;
    }
  }
  return mapCoordinates(img, yMap, xMap);
}

function gridDistortion(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const steps = Math.max(2, Math.trunc(params.num_steps));
  const stretchY: number[] = [];
  const stretchX: number[] = [];
  for (let i = 0; i < steps; i++) {
    stretchY.push(1 + rng.uniformRange(-params.distort_limit, params.distort_limit));
    stretchX.push(1 + rng.uniformRange(-params.distort_limit, params.distort_limit));
  }
  const edges = (stretch: number[], n: number): number[] => {
    const total = stretch.reduce((a, b) => a + b, 0);
    const out = [0];
    let acc = 0;
    for (const s of stretch) {
      acc += (s / total) * (n - 1);
      out.push(acc);
    }
    return out;
  };
  const ey = edges(stretchY, img.h);
  const ex = edges(stretchX, img.w);
  const warp = (t: number, e: number[], n: number): number => {
    const cell = Math.min(steps - 1, Math.floor((t / (n - 1)) * steps));
    const t0 = ((n - 1) * cell) / steps;
    const t1 = ((n - 1) * (cell + 1)) / steps;
    const f = t1 === t0 ? 0 : (t - t0) / (t1 - t0);
    return e[cell] + f * (e[cell + 1] - e[cell]);
  };
  const yMap = new Float64Array(img.h * img.w);
  const xMap = new Float64Array(img.h * img.w);
  for (let y = 0; y < img.h; y++) {
    for (let x = 0; x < img.w; x++) {
      yMap[y * img.w + x] = img.h === 1 ? 0 : warp(y, ey, img.h);
      xMap[y * img.w + x] = img.w === 1 ? 0 : warp(x, ex, img.w);
    }
  }
  return mapCoordinates(img, yMap, xMap);
}

function opticalDistortion(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const k = rng.uniformRange(-params.distort_limit, params.distort_limit);
  const sy = rng.uniformRange(-params.shift_limit, params.shift_limit) * img.h;
  const sx = rng.uniformRange(-params.shift_limit, params.shift_limit) * img.w;
  const cy = (img.h - 1) / 2 + sy;
  const cx = (img.w - 1) / 2 + sx;
  const rMax = Math.sqrt(cy * cy + cx * cx) || 1;
  const yMap = new Float64Array(img.h * img.w);
  const xMap = new Float64Array(img.h * img.w);
  for (let y = 0; y < img.h; y++) {
    for (let x = 0; x < img.w; x++) {
      const ry = y - cy;
      const rx = x - cx;
      const r = Math.sqrt(ry * ry + rx * rx) / rMax;
      const f = 1 + k * r * r;
      yMap[y * img.w + x] = cy + ry * f;
      xMap[y * img.w + x] = cx + rx * f;
    }
  }
  return mapCoordinates(img, yMap, xMap);
}

function gaussianBlur(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const sigma = rng.uniformRange(params.sigma_lo, params.sigma_hi);
  const taps = [Math.exp(-0.5 / (sigma * sigma)), 1, Math.exp(-0.5 / (sigma * sigma))];
  const norm = taps[0] + taps[1] + taps[2];
  const pass = (src: Image, dy: number, dx: number): Image => {
    const out = { h: src.h, w: src.w, data: new Float64Array(src.data.length) };
    for (let y = 0; y < src.h; y++) {
      for (let x = 0; x < src.w; x++) {
        for (let c = 0; c < 3; c++) {
          let acc = 0;
          for (let t = -1; t <= 1; t++) {
            acc += taps[t + 1] * samplePixel(src, y + t * dy, x + t * dx, c);
          }
          out.data[(y * src.w + x) * 3 + c] = acc / norm;
        }
      }
    }
    return out;
  };
  return pass(pass(img, 1, 0), 0, 1);
}

function gaussNoise(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const variance = rng.uniformRange(params.var_lo, params.var_hi);
  const sigma = Math.sqrt(variance) / 255;
  const out = cloneImage(img);
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = clamp01(out.data[i] + sigma * rng.normal());
  }
  return out;
}

function randomGridShuffle(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const grid = Math.max(1, Math.trunc(params.grid));
  const th = Math.floor(img.h / grid);
  const tw = Math.floor(img.w / grid);
  if (th === 0 || tw === 0) {
    return cloneImage(img);
  }
  const perm = rng.shuffled(grid * grid);
  const out = cloneImage(img);
  for (let ty = 0; ty < grid; ty++) {
    for (let tx = 0; tx < grid; tx++) {
      const src = perm[ty * grid + tx];
      const sy = Math.floor(src / grid) * th;
      const sx = (src % grid) * tw;
      for (let y = 0; y < th; y++) {
        for (let x = 0; x < tw; x++) {
          for (let c = 0; c < 3; c++) {
            out.data[((ty * th + y) * img.w + (tx * tw + x)) * 3 + c] =
              img.data[((sy + y) * img.w + (sx + x)) * 3 + c];
          }
        }
      }
    }
  }
  return out;
}

function cutout(img: Image, params: Record<string, number>, rng: RngStream): Image {
  const out = cloneImage(img);
  const holes = Math.max(1, Math.trunc(params.num_holes));
  for (let k = 0; k < holes; k++) {
    const hh = Math.max(1, Math.round(img.h * params.max_h_frac));
    const hw = Math.max(1, Math.round(img.w * params.max_w_frac));
    const y0 = rng.randbelow(Math.max(1, img.h - hh + 1));
    const x0 = rng.randbelow(Math.max(1, img.w - hw + 1));
    for (let y = y0; y < y0 + hh && y < img.h; y++) {
      for (let x = x0; x < x0 + hw && x < img.w; x++) {
        out.data[(y * img.w + x) * 3] = 0;
        out.data[(y * img.w + x) * 3 + 1] = 0;
        out.data[(y * img.w + x) * 3 + 2] = 0;
      }
    }
  }
  return out;
}

export function applyAugmentation(spec: AugmentationSpec, img: Image, rng: RngStream): Image {
  switch (spec.name) {
    case "color_jitter":
      return colorJitter(img, spec.params, rng);
    case "to_gray":
      return toGray(img);
    case "solarize":
      return solarize(img, spec.params);
    case "equalize":
      return equalize(img);
    case "channel_shuffle":
      return channelShuffle(img, rng);
    case "shift_scale_rotate":
      return shiftScaleRotate(img, spec.params, rng);
    case "horizontal_flip":
      return horizontalFlip(img);
    case "elastic":
      return elastic(img, spec.params, rng);
    case "grid_distortion":
      return gridDistortion(img, spec.params, rng);
    case "optical_distortion":
      return opticalDistortion(img, spec.params, rng);
    case "gaussian_blur":
      return gaussianBlur(img, spec.params, rng);
    case "gauss_noise":
      return gaussNoise(img, spec.params, rng);
    case "random_grid_shuffle":
      return randomGridShuffle(img, spec.params, rng);
    case "cutout":
      return cutout(img, spec.params, rng);
    default:
      throw new RangeError(`unknown augmentation ${spec.name}`);
  }
}

/** One fresh policy draw folded over the image. */
export function applyPolicy(policy: GroupAugmentPolicy, img: Image, rng: RngStream): Image {
  let out = img;
  for (const seq of policy.sampleSequences(rng)) {
    for (const spec of seq) {
      out = applyAugmentation(spec, out, rng);
    }
  }
  return out;
}
