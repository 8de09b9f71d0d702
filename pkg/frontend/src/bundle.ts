/**
 * Session bundle: a zip of image/mask/sketch/result PNGs plus metadata.json
 * whose schema matches the evaluation protocol's sample records, so saved
 * sessions can be fed straight into the backend's protocol runner.
 *
 * PNG encode/decode is injected so the bundle logic stays testable in node.
 */

import JSZip from "jszip";

export interface ProtocolMetadata {
  image: string;
  mask: string;
  sketch: string;
  category: "face" | "scene";
}

export interface SessionBundle {
  imagePng: Uint8Array;
  maskPng: Uint8Array;
  sketchPng: Uint8Array;
  resultPng: Uint8Array | null;
  metadata: ProtocolMetadata;
}

export function validateMetadata(raw: unknown): ProtocolMetadata {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("metadata.json is not an object");
  }
  const obj = raw as Record<string, unknown>;
  for (const key of ["image", "mask", "sketch"] as const) {
    if (typeof obj[key] !== "string" || obj[key] === "") {
      throw new Error(`metadata.json missing string field "${key}"`);
    }
  }
  const category = obj.category ?? "scene";
  if (category !== "face" && category !== "scene") {
    throw new Error(`metadata.json category must be face|scene, got ${String(category)}`);
  }
  return {
    image: obj.image as string,
    mask: obj.mask as string,
    sketch: obj.sketch as string,
    category,
  };
}

export async function buildBundle(bundle: SessionBundle): Promise<Uint8Array> {
  const zip = new JSZip();
  zip.file(bundle.metadata.image, bundle.imagePng);
  zip.file(bundle.metadata.mask, bundle.maskPng);
  zip.file(bundle.metadata.sketch, bundle.sketchPng);
  if (bundle.resultPng) {
    zip.file("result.png", bundle.resultPng);
  }
  zip.file("metadata.json", JSON.stringify(bundle.metadata, null, 2));
  return zip.generateAsync({ type: "uint8array" });
}

export async function parseBundle(data: Uint8Array): Promise<SessionBundle> {
  const zip = await JSZip.loadAsync(data);
  const metaFile = zip.file("metadata.json");
  if (!metaFile) throw new Error("bundle has no metadata.json");
  const metadata = validateMetadata(JSON.parse(await metaFile.async("string")));
  const read = async (name: string): Promise<Uint8Array> => {
    const file = zip.file(name);
    if (!file) throw new Error(`bundle is missing ${name}`);
    return file.async("uint8array");
  };
  const resultFile = zip.file("result.png");
  return {
    imagePng: await read(metadata.image),
    maskPng: await read(metadata.mask),
    sketchPng: await read(metadata.sketch),
    resultPng: resultFile ? await resultFile.async("uint8array") : null,
    metadata,
  };
}
