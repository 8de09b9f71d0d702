/** Browser-side PNG codecs for binary layers, built on 2D canvas. */

import { layerToBinaryRgba, rgbaToLayer } from "./raster";

export async function layerToPng(
  layer: Uint8Array,
  width: number,
  height: number,
): Promise<Uint8Array> {
  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d")!;
  const image = ctx.createImageData(width, height);
  image.data.set(layerToBinaryRgba(layer));
  ctx.putImageData(image, 0, 0);
  const blob = await new Promise<Blob>((resolve, reject) =>
    canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("PNG encode failed"))), "image/png"),
  );
  return new Uint8Array(await blob.arrayBuffer());
}

export async function pngToImageBitmap(png: Uint8Array): Promise<ImageBitmap> {
  return createImageBitmap(new Blob([png as BlobPart], { type: "image/png" }));
}

export async function pngToLayer(png: Uint8Array): Promise<{
  layer: Uint8Array;
  width: number;
  height: number;
}> {
  const bitmap = await pngToImageBitmap(png);
  const canvas = document.createElement("canvas");
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  const data = ctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
  return {
    layer: rgbaToLayer(data, bitmap.width, bitmap.height),
    width: bitmap.width,
    height: bitmap.height,
  };
}

export async function imagePngBytes(bitmap: ImageBitmap, size: number): Promise<Uint8Array> {
  const canvas = document.createElement("canvas");
  canvas.width = size;
  canvas.height = size;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0, size, size);
  const blob = await new Promise<Blob>((resolve, reject) =>
    canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("PNG encode failed"))), "image/png"),
  );
  return new Uint8Array(await blob.arrayBuffer());
}
