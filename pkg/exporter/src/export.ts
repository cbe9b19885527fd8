/**
 * Orchestration: manifest in, `<prefix>.img.cfm` + `<prefix>.txt.cfm` out,
 * rows in manifest order with aligned id tables.
 */

import { pixelFeatures } from "./image";
import { readManifest } from "./manifest";
import { hashedTextFeatures } from "./text";
import { writeFeatureFile } from "./cfm";

export interface ExportOptions {
  manifestPath: string;
  outPrefix: string;
  /** square resize applied before flattening; D_img = size * size */
  imageSize?: number;
  /** hashed caption feature width */
  textDim?: number;
  log?: (msg: string) => void;
}

export interface ExportResult {
  imgPath: string;
  txtPath: string;
  count: number;
  imgDim: number;
  txtDim: number;
}

export function runExport(opts: ExportOptions): ExportResult {
  const size = opts.imageSize ?? 32;
  const textDim = opts.textDim ?? 64;
  if (size <= 0) throw new RangeError(`image size must be positive, got ${size}`);
  const log = opts.log ?? (() => {});

  const entries = readManifest(opts.manifestPath);
  const imgDim = size * size;
  const imgValues = new Float64Array(entries.length * imgDim);
  const txtValues = new Float64Array(entries.length * textDim);
  const ids: string[] = [];

  for (let row = 0; row < entries.length; row++) {
    const entry = entries[row];
    imgValues.set(pixelFeatures(entry.imagePath, size), row * imgDim);
    txtValues.set(hashedTextFeatures(entry.caption, textDim), row * textDim);
    ids.push(entry.id);
    if ((row + 1) % 500 === 0) log(`featurized ${row + 1}/${entries.length}`);
  }

  const imgPath = `${opts.outPrefix}.img.cfm`;
  const txtPath = `${opts.outPrefix}.txt.cfm`;
  writeFeatureFile(imgPath, { ids, dim: imgDim, values: imgValues });
  writeFeatureFile(txtPath, { ids, dim: textDim, values: txtValues });
  log(`wrote ${imgPath} and ${txtPath} (${entries.length} rows)`);
  return { imgPath, txtPath, count: entries.length, imgDim, txtDim: textDim };
}
