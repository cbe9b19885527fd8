/** Manifest parsing: UTF-8 TSV, one `id<TAB>image_path<TAB>caption` per line. */

import { readFileSync } from "node:fs";

export interface ManifestEntry {
  id: string;
  imagePath: string;
  caption: string;
}

export class ManifestError extends Error {}

export function parseManifest(text: string): ManifestEntry[] {
  const entries: ManifestEntry[] = [];
  const seen = new Set<string>();
  const lines = text.split("\n");
  for (let lineNo = 0; lineNo < lines.length; lineNo++) {
    const line = lines[lineNo].replace(/\r$/, "");
    if (line.trim() === "") continue;
    const parts = line.split("\t");
    if (parts.length < 3) {
      throw new ManifestError(
        `line ${lineNo + 1}: expected id<TAB>image_path<TAB>caption, got ${parts.length} field(s)`
      );
    }
    const id = parts[0];
    const imagePath = parts[1];
    const caption = parts.slice(2).join("\t"); // captions may contain tabs
    if (id === "") throw new ManifestError(`line ${lineNo + 1}: empty id`);
    if (imagePath === "") throw new ManifestError(`line ${lineNo + 1}: empty image path`);
    if (seen.has(id)) throw new ManifestError(`line ${lineNo + 1}: duplicate id ${JSON.stringify(id)}`);
    seen.add(id);
    entries.push({ id, imagePath, caption });
  }
  if (entries.length === 0) {
    throw new ManifestError("manifest has no entries");
  }
  return entries;
}

export function readManifest(path: string): ManifestEntry[] {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new ManifestError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  return parseManifest(text);
}
