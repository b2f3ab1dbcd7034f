import { describe, expect, it } from "vitest";

import {
  BadHeaderError,
  BadMagicError,
  cubeFromArray,
  decodeCube,
  decodePlane,
  DimensionMismatchError,
  encodeCube,
  encodePlane,
  formatWavelength,
  MuellerCube,
  parsePlaneFileName,
  Plane,
  planeFileName,
  PlaneKind,
  TruncatedError,
} from "../src/index.js";

function fromHex(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

function toHex(bytes: Uint8Array): string {
  return [...bytes].map((b) => b.toString(16).padStart(2, "0")).join("");
}

// Reference files produced by the core library's writer; the encoder
// must reproduce them byte for byte.
const GOLD_CUBE_F32 =
  "4d4d4331010000000100000001000000010000000000000000000000008009440000803f000000000000000000000000000000000000803f000000000000000000000000000000000000803f000000000000000000000000000000000000803f";
const GOLD_CUBE_F64 =
  "4d4d43310100000001000000010000000200000001000000070000000000fa43000016447707000000000000f03f0000000000000000000000000000000000000000000000000000000000000000000000000000f03f0000000000000000000000000000000000000000000000000000000000000000000000000000f03f00000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000f03f0000000000000000000000000000000000000000000000000000000000000000000000000000f03f0000000000000000000000000000000000000000000000000000000000000000000000000000f03f0000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000400000000000001040";
const GOLD_PLANE_U8 =
  "4d4d5031010000000200000003000000050000000200000033331e4400000000000102030405";
const GOLD_PLANE_F64 =
  "4d4d503101000000010000000200000001000000010000000080094400000000000000000000e03f000000000000f4bf";

/** 1x1 f64 cube, two wavelengths, normalized, masked ul3x3, m00 kept. */
function fancyCube(): MuellerCube {
  const matrix = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0];
  return {
    height: 1,
    width: 1,
    wavelengths: [500, 600],
    dtype: "f64",
    normalized: true,
    mask: 0x0777,
    data: new Float64Array([...matrix, ...matrix]),
    m00: new Float64Array([2, 4]),
  };
}

describe("cube codec", () => {
  it("encodes a plain f32 identity cube to the reference bytes", () => {
    const eye = new Float32Array(16);
    eye[0] = eye[5] = eye[10] = eye[15] = 1;
    const cube = cubeFromArray(eye, [1, 1, 1, 4, 4], [550]);
    expect(toHex(encodeCube(cube))).toBe(GOLD_CUBE_F32);
  });

  it("encodes mask, m00 plane and normalized flag to the reference bytes", () => {
    expect(toHex(encodeCube(fancyCube()))).toBe(GOLD_CUBE_F64);
  });

  it("decodes the reference bytes back to the same content", () => {
    const cube = decodeCube(fromHex(GOLD_CUBE_F64));
    expect(cube.height).toBe(1);
    expect(cube.width).toBe(1);
    expect(cube.wavelengths).toEqual([500, 600]);
    expect(cube.dtype).toBe("f64");
    expect(cube.normalized).toBe(true);
    expect(cube.mask).toBe(0x0777);
    expect([...cube.data]).toEqual([...fancyCube().data]);
    expect([...(cube.m00 ?? [])]).toEqual([2, 4]);
  });

  it("round trips bit for bit", () => {
    for (const hex of [GOLD_CUBE_F32, GOLD_CUBE_F64]) {
      expect(toHex(encodeCube(decodeCube(fromHex(hex))))).toBe(hex);
    }
  });

  it("decodes correctly from an unaligned view (copy path)", () => {
    const gold = fromHex(GOLD_CUBE_F64);
    const padded = new Uint8Array(gold.length + 1);
    padded.set(gold, 1);
    const cube = decodeCube(padded.subarray(1));
    expect(cube.data[0]).toBe(1);
    expect(cube.m00?.[1]).toBe(4);
  });

  it("rejects a wrong magic with the core error code", () => {
    const bad = fromHex(GOLD_CUBE_F32);
    bad[0] = 0x58;
    try {
      decodeCube(bad);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(BadMagicError);
      expect((err as BadMagicError).code).toBe("BadMagic");
    }
  });

  it("rejects short headers and size mismatches as Truncated", () => {
    const gold = fromHex(GOLD_CUBE_F32);
    expect(() => decodeCube(gold.slice(0, 17))).toThrow(TruncatedError);
    expect(() => decodeCube(gold.slice(0, gold.length - 1))).toThrow(
      TruncatedError,
    );
    const long = new Uint8Array(gold.length + 1);
    long.set(gold);
    expect(() => decodeCube(long)).toThrow(TruncatedError);
  });

  it("rejects header corruption as BadHeader", () => {
    const version = fromHex(GOLD_CUBE_F32);
    version[4] = 9;
    expect(() => decodeCube(version)).toThrow(BadHeaderError);

    const dtype = fromHex(GOLD_CUBE_F32);
    dtype[20] = 7;
    expect(() => decodeCube(dtype)).toThrow(BadHeaderError);

    const zeroDim = fromHex(GOLD_CUBE_F32);
    zeroDim[8] = 0;
    expect(() => decodeCube(zeroDim)).toThrow(BadHeaderError);

    const flags = fromHex(GOLD_CUBE_F32);
    flags[24] |= 0x80;
    expect(() => decodeCube(flags)).toThrow(BadHeaderError);
  });

  it("rejects non-increasing wavelengths", () => {
    const cube = fancyCube();
    cube.wavelengths = [600, 500];
    expect(() => encodeCube(cube)).toThrow(BadHeaderError);
  });

  it("validates contiguity before anything touches the data", () => {
    const data = new Float64Array(2 * 16 - 3);
    expect(() => cubeFromArray(data, [1, 1, 2, 4, 4], [550])).toThrow(
      DimensionMismatchError,
    );
    expect(() =>
      cubeFromArray(new Float64Array(18), [1, 1, 1, 3, 6] as never, [550]),
    ).toThrow(DimensionMismatchError);
  });

  it("wraps arrays without copying", () => {
    const data = new Float64Array(16);
    const cube = cubeFromArray(data, [1, 1, 1, 4, 4], [550]);
    expect(cube.data.buffer).toBe(data.buffer);
  });
});

describe("plane codec", () => {
  it("matches the reference bytes for u8 and f64 planes", () => {
    const label: Plane = {
      height: 2,
      width: 3,
      kind: PlaneKind.Label,
      dtype: "u8",
      wavelength: 632.8,
      data: new Uint8Array([0, 1, 2, 3, 4, 5]),
    };
    expect(toHex(encodePlane(label))).toBe(GOLD_PLANE_U8);

    const ret: Plane = {
      height: 1,
      width: 2,
      kind: PlaneKind.Retardance,
      dtype: "f64",
      wavelength: 550,
      data: new Float64Array([0.5, -1.25]),
    };
    expect(toHex(encodePlane(ret))).toBe(GOLD_PLANE_F64);
  });

  it("round trips and reports header fields", () => {
    const plane = decodePlane(fromHex(GOLD_PLANE_U8));
    expect(plane.kind).toBe(PlaneKind.Label);
    expect(plane.dtype).toBe("u8");
    expect(plane.height).toBe(2);
    expect(plane.width).toBe(3);
    expect(Math.abs(plane.wavelength - 632.8)).toBeLessThan(1e-4);
    expect([...plane.data]).toEqual([0, 1, 2, 3, 4, 5]);
    expect(toHex(encodePlane(plane))).toBe(GOLD_PLANE_U8);
  });

  it("rejects nonzero reserved field, bad kind, and size drift", () => {
    const reserved = fromHex(GOLD_PLANE_F64);
    reserved[28] = 1;
    expect(() => decodePlane(reserved)).toThrow(BadHeaderError);

    const kind = fromHex(GOLD_PLANE_F64);
    kind[16] = 42;
    expect(() => decodePlane(kind)).toThrow(BadHeaderError);

    const magic = fromHex(GOLD_PLANE_F64);
    magic[3] = 0x32;
    expect(() => decodePlane(magic)).toThrow(BadMagicError);

    expect(() => decodePlane(fromHex(GOLD_PLANE_F64).slice(0, 35))).toThrow(
      TruncatedError,
    );
  });
});

describe("map file names", () => {
  it("formats wavelengths the way the core names files", () => {
    expect(formatWavelength(550)).toBe("550");
    expect(formatWavelength(550.5)).toBe("550.5");
    expect(formatWavelength(Math.fround(632.8))).toBe("632.8");
    expect(formatWavelength(0.0000005)).toBe("5e-07");
    expect(formatWavelength(1234567)).toBe("1.23457e+06");
  });

  it("builds and parses plane file names", () => {
    expect(planeFileName(PlaneKind.Depolarization, 550)).toBe("delta_550.mmp");
    expect(parsePlaneFileName("ret_600.mmp")).toEqual({
      kind: PlaneKind.Retardance,
      wavelength: 600,
    });
    expect(parsePlaneFileName("status_550.5.mmp")).toEqual({
      kind: PlaneKind.Status,
      wavelength: 550.5,
    });
    expect(parsePlaneFileName("readme.txt")).toBeNull();
    expect(parsePlaneFileName("bogus_550.mmp")).toBeNull();
  });
});
