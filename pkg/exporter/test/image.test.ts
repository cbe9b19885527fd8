import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { PNG } from "pngjs";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ImageError, decodeImage, pixelFeatures, resizeBilinear } from "../src/image";

let dir: string;
beforeEach(() => {
  dir = mkdtempSync(join(tmpdir(), "img-"));
});
afterEach(() => {
  rmSync(dir, { recursive: true, force: true });
});

function writePgm(name: string, width: number, height: number, bytes: number[]): string {
  const path = join(dir, name);
  writeFileSync(
    path,
    Buffer.concat([
      Buffer.from(`P5\n# comment\n${width} ${height}\n255\n`, "ascii"),
      Buffer.from(bytes),
    ])
  );
  return path;
}

describe("PGM decoding", () => {
  it("reads a 4x4 grayscale grid as direct pixel read-out", () => {
    const bytes = Array.from({ length: 16 }, (_, i) => i * 16);
    const path = writePgm("g.pgm", 4, 4, bytes);
    const img = decodeImage(path);
    expect(img.width).toBe(4);
    expect(img.height).toBe(4);
    for (let i = 0; i < 16; i++) {
      expect(img.pixels[i]).toBeCloseTo((i * 16) / 255, 12);
    }
    // no resize when the source already matches: D = 16 flat row
    const feats = pixelFeatures(path, 4);
    expect(feats.length).toBe(16);
    expect(Array.from(feats)).toEqual(Array.from(img.pixels));
  });

  it("rejects a 16-bit maxval", () => {
    const path = join(dir, "deep.pgm");
    writeFileSync(path, Buffer.from("P5\n2 2\n65535\n\0\0\0\0\0\0\0\0", "ascii"));
    expect(() => decodeImage(path)).toThrow(/maxval/);
  });

  it("rejects truncated pixel data", () => {
    const path = writePgm("short.pgm", 4, 4, [1, 2, 3]);
    expect(() => decodeImage(path)).toThrow(/truncated/);
  });
});

describe("PNG decoding", () => {
  it("converts RGBA to luminance in [0, 1]", () => {
    const png = new PNG({ width: 2, height: 1 });
    // pure red and pure white
    png.data = Buffer.from([255, 0, 0, 255, 255, 255, 255, 255]);
    const path = join(dir, "c.png");
    writeFileSync(path, PNG.sync.write(png));
    const img = decodeImage(path);
    expect(img.pixels[0]).toBeCloseTo(0.299, 6);
    expect(img.pixels[1]).toBeCloseTo(1.0, 6);
  });
});

describe("resizeBilinear", () => {
  it("averages a 2x2 block down to one pixel", () => {
    const out = resizeBilinear(
      { width: 2, height: 2, pixels: new Float64Array([0, 1, 1, 0]) },
      1
    );
    expect(out.length).toBe(1);
    expect(out[0]).toBeCloseTo(0.5, 12);
  });

  it("preserves a constant image at any size", () => {
    const out = resizeBilinear(
      { width: 3, height: 5, pixels: new Float64Array(15).fill(0.25) },
      7
    );
    for (const v of out) expect(v).toBeCloseTo(0.25, 12);
  });

  it("upscales within the source value range", () => {
    const out = resizeBilinear(
      { width: 2, height: 2, pixels: new Float64Array([0, 1, 0.5, 0.75]) },
      6
    );
    for (const v of out) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
    }
  });
});

describe("format dispatch", () => {
  it("rejects unknown formats", () => {
    const path = join(dir, "x.bin");
    writeFileSync(path, Buffer.from("JUNKJUNK"));
    expect(() => decodeImage(path)).toThrow(ImageError);
  });

  it("reports unreadable paths", () => {
    expect(() => decodeImage(join(dir, "missing.png"))).toThrow(/cannot read/);
  });
});
