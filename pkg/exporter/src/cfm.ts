/**
 * CFM binary feature-matrix format, little-endian throughout:
 *
 *   magic   8 bytes  "CASTFEAT"
 *   version u32      1
 *   n       u64      sample count
 *   dim     u32      feature dimension
 *   id_len  u32      byte length of the id table
 *   ids     id_len bytes, UTF-8, ids joined by "\n" (no trailing newline)
 *   data    n * dim float32 values, row-major
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "CASTFEAT";
export const VERSION = 1;
const HEADER_SIZE = 4 + 8 + 4 + 4;

export interface FeatureMatrix {
  ids: string[];
  dim: number;
  /** row-major, ids.length * dim entries */
  values: Float64Array;
}

export class CfmError extends Error {}

export function encodeFeatureMatrix(matrix: FeatureMatrix): Buffer {
  const { ids, dim, values } = matrix;
  const n = ids.length;
  if (values.length !== n * dim) {
    throw new CfmError(`${values.length} values for n=${n} dim=${dim}`);
  }
  for (const id of ids) {
    if (id.includes("\n")) {
      throw new CfmError(`id ${JSON.stringify(id)} contains a newline`);
    }
  }
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new CfmError(`non-finite value at flat index ${i}`);
    }
  }

  const idBlob = Buffer.from(ids.join("\n"), "utf-8");
  const buf = Buffer.alloc(MAGIC.length + HEADER_SIZE + idBlob.length + n * dim * 4);
  let off = buf.write(MAGIC, 0, "ascii");
  off = buf.writeUInt32LE(VERSION, off);
  off = Number(buf.writeBigUInt64LE(BigInt(n), off));
  off = buf.writeUInt32LE(dim, off);
  off = buf.writeUInt32LE(idBlob.length, off);
  off += idBlob.copy(buf, off);
  for (let i = 0; i < values.length; i++) {
    off = buf.writeFloatLE(values[i], off);
  }
  return buf;
}

export function writeFeatureFile(path: string, matrix: FeatureMatrix): void {
  writeFileSync(path, encodeFeatureMatrix(matrix));
}

/** Inverse of the writer; used by the tests to validate round trips. */
export function readFeatureFile(path: string): FeatureMatrix {
  const blob = readFileSync(path);
  if (blob.length < MAGIC.length + HEADER_SIZE) {
    throw new CfmError(`${path}: truncated header`);
  }
  if (blob.toString("ascii", 0, MAGIC.length) !== MAGIC) {
    throw new CfmError(`${path}: bad magic`);
  }
  let off = MAGIC.length;
  const version = blob.readUInt32LE(off);
  off += 4;
  if (version !== VERSION) {
    throw new CfmError(`${path}: version ${version}, expected ${VERSION}`);
  }
  const n = Number(blob.readBigUInt64LE(off));
  off += 8;
  const dim = blob.readUInt32LE(off);
  off += 4;
  const idLen = blob.readUInt32LE(off);
  off += 4;
  if (blob.length < off + idLen) {
    throw new CfmError(`${path}: id table shorter than declared`);
  }
  const idBlob = blob.toString("utf-8", off, off + idLen);
  const ids = idLen > 0 ? idBlob.split("\n") : [];
  if (ids.length !== n) {
    throw new CfmError(`${path}: ${ids.length} ids, header declares ${n}`);
  }
  off += idLen;
  if (blob.length - off !== n * dim * 4) {
    throw new CfmError(`${path}: payload has ${blob.length - off} bytes, want ${n * dim * 4}`);
  }
  const values = new Float64Array(n * dim);
  for (let i = 0; i < values.length; i++) {
    values[i] = blob.readFloatLE(off + 4 * i);
  }
  return { ids, dim, values };
}
