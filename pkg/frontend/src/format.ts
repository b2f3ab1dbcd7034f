/**
 * Codecs for the .mmc cube and .mmp plane containers.
 *
 * Both formats are little-endian and fully specified by their fixed
 * headers; encode/decode round trips are bit-for-bit, and the encoder
 * output is byte-identical to the core library's writer for the same
 * content.
 *
 * Cube container (.mmc): 28-byte header (magic "MMC1", version=1,
 * height, width, n_wavelengths, dtype 0=f32/1=f64, flags), then
 * n_wavelengths f32 wavelengths (strictly increasing), an optional u16
 * element-mask word (flag bit 2), the L*H*W*16 matrix values in C order
 * (lam, row, col, i, j), and an optional trailing L*H*W m00 plane
 * (flag bit 1).  Flag bit 0 marks a normalized cube.
 *
 * Plane container (.mmp): 32-byte header (magic "MMP1", version=1,
 * height, width, kind, dtype 0=f32/1=f64/2=u8, wavelength f32,
 * reserved=0), then H*W values in row-major order.
 *
 * Files must contain exactly the bytes the header implies; anything
 * shorter or longer is Truncated.
 */

import {
  BadHeaderError,
  BadMagicError,
  DimensionMismatchError,
  TruncatedError,
} from "./errors.js";

export type CubeDtype = "f32" | "f64";
export type PlaneDtype = CubeDtype | "u8";
export type FloatArray = Float32Array | Float64Array;
export type PlaneArray = FloatArray | Uint8Array;

const MMC_MAGIC = 0x3143_4d4d; // "MMC1" read as LE u32
const MMP_MAGIC = 0x3150_4d4d; // "MMP1"
const FORMAT_VERSION = 1;
const MMC_HEADER_SIZE = 28;
const MMP_HEADER_SIZE = 32;
const MAX_DIM = 2 ** 31;

export const FLAG_NORMALIZED = 1;
export const FLAG_M00_PLANE = 2;
export const FLAG_MASK = 4;
const KNOWN_FLAGS = FLAG_NORMALIZED | FLAG_M00_PLANE | FLAG_MASK;

export enum PlaneKind {
  Depolarization = 0,
  Retardance = 1,
  Diattenuation = 2,
  Status = 3,
  M00 = 4,
  Label = 5,
}

/** File-name stems used by the decompose/validate map directories. */
export const PLANE_STEMS: Record<PlaneKind, string> = {
  [PlaneKind.Depolarization]: "delta",
  [PlaneKind.Retardance]: "ret",
  [PlaneKind.Diattenuation]: "diat",
  [PlaneKind.Status]: "status",
  [PlaneKind.M00]: "m00",
  [PlaneKind.Label]: "label",
};

const STEM_KINDS = new Map<string, PlaneKind>(
  (Object.entries(PLANE_STEMS) as unknown as [string, string][]).map(
    ([k, stem]) => [stem, Number(k) as PlaneKind],
  ),
);

export interface MuellerCube {
  height: number;
  width: number;
  /** f32-exact wavelengths in nm, strictly increasing. */
  wavelengths: number[];
  dtype: CubeDtype;
  normalized: boolean;
  /** 16-bit element-mask word, or null when no mask is recorded. */
  mask: number | null;
  /** L*H*W*16 values, C order (lam, row, col, i, j). */
  data: FloatArray;
  /** L*H*W pre-normalization gains, or null. */
  m00: FloatArray | null;
}

export interface Plane {
  height: number;
  width: number;
  kind: PlaneKind;
  dtype: PlaneDtype;
  wavelength: number;
  /** H*W values, row-major. */
  data: PlaneArray;
}

function floatCtor(dtype: CubeDtype) {
  return dtype === "f32" ? Float32Array : Float64Array;
}

/** Zero-copy typed view when the absolute offset is element-aligned;
 * otherwise a copy (Buffer pooling can hand us arbitrary offsets). */
function viewOrCopy<T extends PlaneArray>(
  bytes: Uint8Array,
  offset: number,
  count: number,
  ctor: new (b: ArrayBuffer, o?: number, n?: number) => T,
): T {
  const elem = (ctor as unknown as { BYTES_PER_ELEMENT: number })
    .BYTES_PER_ELEMENT;
  const abs = bytes.byteOffset + offset;
  if (abs % elem === 0 && bytes.buffer instanceof ArrayBuffer) {
    return new ctor(bytes.buffer, abs, count);
  }
  const copy = bytes.slice(offset, offset + count * elem);
  return new ctor(copy.buffer, 0, count);
}

function bytesOf(arr: PlaneArray): Uint8Array {
  return new Uint8Array(arr.buffer, arr.byteOffset, arr.byteLength);
}

function checkIncreasing(wavelengths: number[], where: string): void {
  for (let i = 1; i < wavelengths.length; i++) {
    const prev = Math.fround(wavelengths[i - 1]!);
    const cur = Math.fround(wavelengths[i]!);
    if (!(cur > prev)) {
      throw new BadHeaderError(
        `${where}: wavelengths must be strictly increasing as f32, ` +
          `got ${prev} then ${cur}`,
      );
    }
  }
}

// ---------------------------------------------------------------------------
// cube files
// ---------------------------------------------------------------------------

export function decodeCube(bytes: Uint8Array, where = "cube"): MuellerCube {
  if (
    bytes.length < 4 ||
    new DataView(bytes.buffer, bytes.byteOffset, 4).getUint32(0, true) !==
      MMC_MAGIC
  ) {
    throw new BadMagicError(`${where}: expected magic "MMC1"`);
  }
  if (bytes.length < MMC_HEADER_SIZE) {
    throw new TruncatedError(
      `${where}: header cut short at ${bytes.length} bytes`,
    );
  }
  const dv = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const version = dv.getUint32(4, true);
  const height = dv.getUint32(8, true);
  const width = dv.getUint32(12, true);
  const nLam = dv.getUint32(16, true);
  const dtypeCode = dv.getUint32(20, true);
  const flags = dv.getUint32(24, true);
  if (version !== FORMAT_VERSION) {
    throw new BadHeaderError(`${where}: unsupported format version ${version}`);
  }
  if (dtypeCode !== 0 && dtypeCode !== 1) {
    throw new BadHeaderError(`${where}: unknown cube dtype code ${dtypeCode}`);
  }
  if (
    Math.min(height, width, nLam) === 0 ||
    Math.max(height, width, nLam) > MAX_DIM
  ) {
    throw new BadHeaderError(
      `${where}: bad dimensions ${nLam}x${height}x${width}`,
    );
  }
  if (flags & ~KNOWN_FLAGS) {
    throw new BadHeaderError(
      `${where}: unknown flag bits 0x${flags.toString(16).toUpperCase()}`,
    );
  }
  const dtype: CubeDtype = dtypeCode === 0 ? "f32" : "f64";
  const itemSize = dtypeCode === 0 ? 4 : 8;
  const nPx = nLam * height * width;

  let expected = MMC_HEADER_SIZE + 4 * nLam;
  if (flags & FLAG_MASK) expected += 2;
  expected += nPx * 16 * itemSize;
  if (flags & FLAG_M00_PLANE) expected += nPx * itemSize;
  if (bytes.length !== expected) {
    throw new TruncatedError(
      `${where}: file is ${bytes.length} bytes, header implies ${expected}`,
    );
  }

  let off = MMC_HEADER_SIZE;
  const wavelengths: number[] = [];
  for (let i = 0; i < nLam; i++, off += 4) {
    wavelengths.push(dv.getFloat32(off, true));
  }
  checkIncreasing(wavelengths, where);
  let mask: number | null = null;
  if (flags & FLAG_MASK) {
    mask = dv.getUint16(off, true);
    off += 2;
  }
  const data: FloatArray =
    dtype === "f32"
      ? viewOrCopy(bytes, off, nPx * 16, Float32Array)
      : viewOrCopy(bytes, off, nPx * 16, Float64Array);
  off += nPx * 16 * itemSize;
  let m00: FloatArray | null = null;
  if (flags & FLAG_M00_PLANE) {
    m00 =
      dtype === "f32"
        ? viewOrCopy(bytes, off, nPx, Float32Array)
        : viewOrCopy(bytes, off, nPx, Float64Array);
  }
  return {
    height,
    width,
    wavelengths,
    dtype,
    normalized: Boolean(flags & FLAG_NORMALIZED),
    mask,
    data,
    m00,
  };
}

export function encodeCube(cube: MuellerCube): Uint8Array {
  const { height, width } = cube;
  const nLam = cube.wavelengths.length;
  if (Math.min(height, width, nLam) <= 0) {
    throw new BadHeaderError(`cube: bad dimensions ${nLam}x${height}x${width}`);
  }
  checkIncreasing(cube.wavelengths, "cube");
  const nPx = nLam * height * width;
  if (cube.data.length !== nPx * 16) {
    throw new DimensionMismatchError(
      `cube: data has ${cube.data.length} values, ` +
        `shape implies ${nPx * 16}`,
    );
  }
  const wantCtor = floatCtor(cube.dtype);
  if (!(cube.data instanceof wantCtor) || (cube.m00 && !(cube.m00 instanceof wantCtor))) {
    throw new BadHeaderError(`cube: arrays do not match dtype ${cube.dtype}`);
  }
  if (cube.m00 && cube.m00.length !== nPx) {
    throw new DimensionMismatchError(
      `cube: m00 has ${cube.m00.length} values, shape implies ${nPx}`,
    );
  }
  if (cube.mask !== null && (cube.mask < 0 || cube.mask > 0xffff)) {
    throw new BadHeaderError(`cube: mask word 0x${cube.mask.toString(16)} out of range`);
  }

  const itemSize = cube.dtype === "f32" ? 4 : 8;
  let flags = 0;
  if (cube.normalized) flags |= FLAG_NORMALIZED;
  if (cube.m00) flags |= FLAG_M00_PLANE;
  if (cube.mask !== null) flags |= FLAG_MASK;
  let size = MMC_HEADER_SIZE + 4 * nLam;
  if (cube.mask !== null) size += 2;
  size += nPx * 16 * itemSize;
  if (cube.m00) size += nPx * itemSize;

  const out = new Uint8Array(size);
  const dv = new DataView(out.buffer);
  dv.setUint32(0, MMC_MAGIC, true);
  dv.setUint32(4, FORMAT_VERSION, true);
  dv.setUint32(8, height, true);
  dv.setUint32(12, width, true);
  dv.setUint32(16, nLam, true);
  dv.setUint32(20, cube.dtype === "f32" ? 0 : 1, true);
  dv.setUint32(24, flags, true);
  let off = MMC_HEADER_SIZE;
  for (const lam of cube.wavelengths) {
    dv.setFloat32(off, lam, true);
    off += 4;
  }
  if (cube.mask !== null) {
    dv.setUint16(off, cube.mask, true);
    off += 2;
  }
  out.set(bytesOf(cube.data), off);
  off += cube.data.byteLength;
  if (cube.m00) out.set(bytesOf(cube.m00), off);
  return out;
}

/** Wrap an existing typed array as a cube without copying.
 *
 * The array must cover shape [L,H,W,4,4] exactly; anything else (a
 * strided or partial view, trailing garbage) is rejected before any
 * kernel sees it.
 */
export function cubeFromArray(
  data: FloatArray,
  shape: readonly [number, number, number, number, number],
  wavelengths: number[],
  opts: { normalized?: boolean; mask?: number | null; m00?: FloatArray | null } = {},
): MuellerCube {
  const [L, H, W, a, b] = shape;
  if (a !== 4 || b !== 4) {
    throw new DimensionMismatchError(
      `cube shape must end in 4x4, got ${a}x${b}`,
    );
  }
  if (wavelengths.length !== L) {
    throw new DimensionMismatchError(
      `${wavelengths.length} wavelengths for ${L} planes`,
    );
  }
  if (data.length !== L * H * W * 16) {
    throw new DimensionMismatchError(
      `array is not a contiguous [${L},${H},${W},4,4] block: ` +
        `${data.length} values, shape implies ${L * H * W * 16}`,
    );
  }
  return {
    height: H,
    width: W,
    wavelengths,
    dtype: data instanceof Float32Array ? "f32" : "f64",
    normalized: opts.normalized ?? false,
    mask: opts.mask ?? null,
    data,
    m00: opts.m00 ?? null,
  };
}

// ---------------------------------------------------------------------------
// plane files
// ---------------------------------------------------------------------------

export function decodePlane(bytes: Uint8Array, where = "plane"): Plane {
  if (
    bytes.length < 4 ||
    new DataView(bytes.buffer, bytes.byteOffset, 4).getUint32(0, true) !==
      MMP_MAGIC
  ) {
    throw new BadMagicError(`${where}: expected magic "MMP1"`);
  }
  if (bytes.length < MMP_HEADER_SIZE) {
    throw new TruncatedError(
      `${where}: header cut short at ${bytes.length} bytes`,
    );
  }
  const dv = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const version = dv.getUint32(4, true);
  const height = dv.getUint32(8, true);
  const width = dv.getUint32(12, true);
  const kindCode = dv.getUint32(16, true);
  const dtypeCode = dv.getUint32(20, true);
  const wavelength = dv.getFloat32(24, true);
  const reserved = dv.getUint32(28, true);
  if (version !== FORMAT_VERSION) {
    throw new BadHeaderError(`${where}: unsupported format version ${version}`);
  }
  if (dtypeCode !== 0 && dtypeCode !== 1 && dtypeCode !== 2) {
    throw new BadHeaderError(`${where}: unknown dtype code ${dtypeCode}`);
  }
  if (!(kindCode in PlaneKind)) {
    throw new BadHeaderError(`${where}: unknown plane kind ${kindCode}`);
  }
  if (reserved !== 0) {
    throw new BadHeaderError(
      `${where}: reserved field must be 0, got ${reserved}`,
    );
  }
  if (Math.min(height, width) === 0 || Math.max(height, width) > MAX_DIM) {
    throw new BadHeaderError(`${where}: bad dimensions ${height}x${width}`);
  }
  const itemSize = dtypeCode === 0 ? 4 : dtypeCode === 1 ? 8 : 1;
  const expected = MMP_HEADER_SIZE + height * width * itemSize;
  if (bytes.length !== expected) {
    throw new TruncatedError(
      `${where}: file is ${bytes.length} bytes, header implies ${expected}`,
    );
  }
  const count = height * width;
  const data: PlaneArray =
    dtypeCode === 0
      ? viewOrCopy(bytes, MMP_HEADER_SIZE, count, Float32Array)
      : dtypeCode === 1
        ? viewOrCopy(bytes, MMP_HEADER_SIZE, count, Float64Array)
        : viewOrCopy(bytes, MMP_HEADER_SIZE, count, Uint8Array);
  return {
    height,
    width,
    kind: kindCode as PlaneKind,
    dtype: dtypeCode === 0 ? "f32" : dtypeCode === 1 ? "f64" : "u8",
    wavelength,
    data,
  };
}

export function encodePlane(plane: Plane): Uint8Array {
  if (Math.min(plane.height, plane.width) <= 0) {
    throw new BadHeaderError(
      `plane: bad dimensions ${plane.height}x${plane.width}`,
    );
  }
  if (plane.data.length !== plane.height * plane.width) {
    throw new DimensionMismatchError(
      `plane: data has ${plane.data.length} values, ` +
        `shape implies ${plane.height * plane.width}`,
    );
  }
  const dtypeCode =
    plane.data instanceof Float32Array
      ? 0
      : plane.data instanceof Float64Array
        ? 1
        : 2;
  const out = new Uint8Array(MMP_HEADER_SIZE + plane.data.byteLength);
  const dv = new DataView(out.buffer);
  dv.setUint32(0, MMP_MAGIC, true);
  dv.setUint32(4, FORMAT_VERSION, true);
  dv.setUint32(8, plane.height, true);
  dv.setUint32(12, plane.width, true);
  dv.setUint32(16, plane.kind, true);
  dv.setUint32(20, dtypeCode, true);
  dv.setFloat32(24, plane.wavelength, true);
  dv.setUint32(28, 0, true);
  out.set(bytesOf(plane.data), MMP_HEADER_SIZE);
  return out;
}

// ---------------------------------------------------------------------------
// map-directory naming
// ---------------------------------------------------------------------------

/** Wavelength rendered the way the core writes file names (C "%g"). */
export function formatWavelength(lam: number): string {
  if (lam === 0) return "0";
  if (!Number.isFinite(lam)) return String(lam);
  let s = lam.toPrecision(6);
  if (s.includes("e")) {
    // normalize to %g exponent form: at least two exponent digits
    let [mant, exp] = s.split("e") as [string, string];
    if (mant.includes(".")) mant = mant.replace(/0+$/, "").replace(/\.$/, "");
    const sign = exp.startsWith("-") ? "-" : "+";
    const digits = exp.replace(/^[+-]/, "").padStart(2, "0");
    return `${mant}e${sign}${digits}`;
  }
  if (s.includes(".")) s = s.replace(/0+$/, "").replace(/\.$/, "");
  return s;
}

export function planeFileName(kind: PlaneKind, wavelength: number): string {
  return `${PLANE_STEMS[kind]}_${formatWavelength(wavelength)}.mmp`;
}

/** Inverse of planeFileName; null for names that are not map planes. */
export function parsePlaneFileName(
  name: string,
): { kind: PlaneKind; wavelength: number } | null {
  const m = /^([a-z0-9]+)_(.+)\.mmp$/.exec(name);
  if (!m) return null;
  const kind = STEM_KINDS.get(m[1]!);
  const wavelength = Number(m[2]!);
  if (kind === undefined || Number.isNaN(wavelength)) return null;
  return { kind, wavelength };
}
