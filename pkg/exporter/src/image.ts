/**
 * Pixel-level image features: decode (PGM or PNG), convert to grayscale in
 * [0, 1], bilinear-resize to a square, flatten row-major. The default 32x32
 * gives D = 1024.
 */

import { readFileSync } from "node:fs";
import { PNG } from "pngjs";

export interface GrayImage {
  width: number;
  height: number;
  /** row-major luminance in [0, 1] */
  pixels: Float64Array;
}

export class ImageError extends Error {}

function decodePgm(blob: Buffer, path: string): GrayImage {
  // P5 header: magic, whitespace-separated width/height/maxval, one
  // whitespace byte, then raw pixels. '#' starts a comment through eol.
  let off = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    if (off >= blob.length) throw new ImageError(`${path}: truncated PGM header`);
    const c = blob[off];
    if (c === 0x23) {
      while (off < blob.length && blob[off] !== 0x0a) off++;
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      off++;
    } else {
      let end = off;
      while (end < blob.length && blob[end] >= 0x30 && blob[end] <= 0x39) end++;
      if (end === off) throw new ImageError(`${path}: bad PGM header byte`);
      fields.push(parseInt(blob.toString("ascii", off, end), 10));
      off = end;
    }
  }
  off++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (width <= 0 || height <= 0) throw new ImageError(`${path}: bad PGM size`);
  if (maxval <= 0 || maxval > 255) {
    throw new ImageError(`${path}: unsupported PGM maxval ${maxval}`);
  }
  if (blob.length < off + width * height) {
    throw new ImageError(`${path}: PGM pixel data truncated`);
  }
  const pixels = new Float64Array(width * height);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = blob[off + i] / maxval;
  }
  return { width, height, pixels };
}

function decodePng(blob: Buffer, path: string): GrayImage {
  let png: PNG;
  try {
    png = PNG.sync.read(blob);
  } catch (err) {
    throw new ImageError(`${path}: ${(err as Error).message}`);
  }
  const { width, height, data } = png;
  const pixels = new Float64Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const r = data[4 * i];
    const g = data[4 * i + 1];
    const b = data[4 * i + 2];
    pixels[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255;
  }
  return { width, height, pixels };
}

export function decodeImage(path: string): GrayImage {
  let blob: Buffer;
  try {
    blob = readFileSync(path);
  } catch (err) {
    throw new ImageError(`cannot read image ${path}: ${(err as Error).message}`);
  }
  if (blob.length >= 2 && blob[0] === 0x50 && blob[1] === 0x35) {
    return decodePgm(blob, path);
  }
  if (blob.length >= 4 && blob[0] === 0x89 && blob[1] === 0x50) {
    return decodePng(blob, path);
  }
  throw new ImageError(`${path}: unsupported image format (PGM P5 or PNG)`);
}

export function resizeBilinear(img: GrayImage, side: number): Float64Array {
  const { width, height, pixels } = img;
  if (width === side && height === side) {
    return pixels.slice();
  }
  const out = new Float64Array(side * side);
  const sx = width / side;
  const sy = height / side;
  for (let y = 0; y < side; y++) {
    const fy = Math.min(Math.max((y + 0.5) * sy - 0.5, 0), height - 1);
    const y0 = Math.floor(fy);
    const y1 = Math.min(y0 + 1, height - 1);
    const wy = fy - y0;
    for (let x = 0; x < side; x++) {
      const fx = Math.min(Math.max((x + 0.5) * sx - 0.5, 0), width - 1);
      const x0 = Math.floor(fx);
      const x1 = Math.min(x0 + 1, width - 1);
      const wx = fx - x0;
      const top = pixels[y0 * width + x0] * (1 - wx) + pixels[y0 * width + x1] * wx;
      const bot = pixels[y1 * width + x0] * (1 - wx) + pixels[y1 * width + x1] * wx;
      out[y * side + x] = top * (1 - wy) + bot * wy;
    }
  }
  return out;
}

export function pixelFeatures(path: string, side: number): Float64Array {
  return resizeBilinear(decodeImage(path), side);
}
