/**
 * Kernel entry points, backed by the core CLI.
 *
 * Each call round-trips through the container formats: the input cube
 * is serialized to a scratch .mmc file, the CLI runs on it, and the
 * output files are decoded back into typed arrays.  Outputs are always
 * freshly allocated; inputs are never modified.  Because the kernels
 * are separate processes, concurrent calls from multiple threads or a
 * worker pool are safe.
 */

import { mkdtempSync, readdirSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { BadHeaderError, MissingPlaneError } from "./errors.js";
import {
  decodeCube,
  decodePlane,
  encodeCube,
  MuellerCube,
  parsePlaneFileName,
  PlaneKind,
} from "./format.js";
import { runCli } from "./run.js";

export type CubeInput = MuellerCube | Uint8Array;

function materialize(cube: CubeInput): Uint8Array {
  if (cube instanceof Uint8Array) {
    decodeCube(cube); // reject malformed bytes before the CLI sees them
    return cube;
  }
  return encodeCube(cube);
}

function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "muellerkit-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function workerArgs(workers?: number): string[] {
  return workers === undefined ? [] : ["--workers", String(workers)];
}

export interface DecomposeOptions {
  /** Skip the repair projection for already-clean data. */
  noProject?: boolean;
  clip?: number;
  /** Wavelength indices to decompose (default: all). */
  wavelengthIndices?: number[];
  writeM00?: boolean;
  workers?: number;
}

export interface DecomposeResult {
  height: number;
  width: number;
  /** Wavelengths actually decomposed, ascending. */
  wavelengths: number[];
  /** One plane per wavelength, row-major H*W. */
  depolarization: Float64Array[];
  retardance: Float64Array[];
  diattenuation: Float64Array[];
  status: Uint8Array[];
  m00: Float64Array[] | null;
  statusCounts: Record<string, number>;
  /** Raw bytes of every plane file the CLI wrote, by file name. */
  files: Record<string, Uint8Array>;
}

export function bindDecompose(
  cube: CubeInput,
  options: DecomposeOptions = {},
): DecomposeResult {
  const bytes = materialize(cube);
  return withScratchDir((dir) => {
    const input = join(dir, "in.mmc");
    const outdir = join(dir, "maps");
    writeFileSync(input, bytes);
    const args = ["decompose", input, outdir];
    if (options.noProject) args.push("--no-project");
    if (options.clip !== undefined) args.push("--clip", String(options.clip));
    if (options.wavelengthIndices !== undefined) {
      args.push("--wavelength", options.wavelengthIndices.join(","));
    }
    if (options.writeM00) args.push("--write-m00");
    args.push(...workerArgs(options.workers));
    const res = runCli(args);

    const files: Record<string, Uint8Array> = {};
    const byKind = new Map<PlaneKind, Map<number, Uint8Array | Float64Array>>();
    let height = 0;
    let width = 0;
    for (const name of readdirSync(outdir).sort()) {
      const parsed = parsePlaneFileName(name);
      if (!parsed) continue;
      const raw = new Uint8Array(readFileSync(join(outdir, name)));
      files[name] = raw;
      const plane = decodePlane(raw, name);
      height = plane.height;
      width = plane.width;
      let slot = byKind.get(plane.kind);
      if (!slot) byKind.set(plane.kind, (slot = new Map()));
      slot.set(plane.wavelength, plane.data as Uint8Array | Float64Array);
    }

    const lams = [...(byKind.get(PlaneKind.Status) ?? new Map()).keys()].sort(
      (a, b) => a - b,
    );
    const planesOf = <T>(kind: PlaneKind, required = true): T[] => {
      const slot = byKind.get(kind);
      return lams.map((lam) => {
        const got = slot?.get(lam);
        if (got === undefined && required) {
          throw new MissingPlaneError(`no ${PlaneKind[kind]} plane at ${lam}`);
        }
        return got as T;
      });
    };
    return {
      height,
      width,
      wavelengths: lams,
      depolarization: planesOf<Float64Array>(PlaneKind.Depolarization),
      retardance: planesOf<Float64Array>(PlaneKind.Retardance),
      diattenuation: planesOf<Float64Array>(PlaneKind.Diattenuation),
      status: planesOf<Uint8Array>(PlaneKind.Status),
      m00: options.writeM00 ? planesOf<Float64Array>(PlaneKind.M00) : null,
      statusCounts: res.payload["status_counts"] as Record<string, number>,
      files,
    };
  });
}

export interface ProjectResult {
  cube: MuellerCube;
  /** Exact bytes of the output container. */
  bytes: Uint8Array;
  nPixels: number;
  nClipped: number;
  fractionClipped: number;
}

export function bindProject(
  cube: CubeInput,
  options: { clip?: number; workers?: number } = {},
): ProjectResult {
  const bytes = materialize(cube);
  return withScratchDir((dir) => {
    const input = join(dir, "in.mmc");
    const output = join(dir, "out.mmc");
    writeFileSync(input, bytes);
    const args = ["project", input, output];
    if (options.clip !== undefined) args.push("--clip", String(options.clip));
    args.push(...workerArgs(options.workers));
    const res = runCli(args);
    const raw = new Uint8Array(readFileSync(output));
    return {
      cube: decodeCube(raw),
      bytes: raw,
      nPixels: res.payload["n_pixels"] as number,
      nClipped: res.payload["n_clipped"] as number,
      fractionClipped: res.payload["fraction_clipped"] as number,
    };
  });
}

export interface IsPhysicalResult {
  /** Per wavelength, H*W bytes: 1 where the pixel passes, 0 where not. */
  physical: Uint8Array[];
  wavelengths: number[];
  /** True when the whole container validated clean. */
  clean: boolean;
  report: Record<string, unknown>;
}

export function bindIsPhysical(
  cube: CubeInput,
  options: { tolPhys?: number; workers?: number } = {},
): IsPhysicalResult {
  const bytes = materialize(cube);
  return withScratchDir((dir) => {
    const input = join(dir, "in.mmc");
    const outdir = join(dir, "phys");
    writeFileSync(input, bytes);
    const args = ["validate", input, "--physical-out", outdir];
    if (options.tolPhys !== undefined) {
      args.push("--tol-phys", String(options.tolPhys));
    }
    args.push(...workerArgs(options.workers));
    // exit 2 means findings, which is an answer here, not a failure
    const res = runCli(args, { okExitCodes: [2] });

    const planes: { lam: number; data: Uint8Array }[] = [];
    for (const name of readdirSync(outdir).sort()) {
      if (!/^physical_.+\.mmp$/.test(name)) continue;
      const plane = decodePlane(
        new Uint8Array(readFileSync(join(outdir, name))),
        name,
      );
      if (plane.kind !== PlaneKind.Label) continue;
      if (!(plane.data instanceof Uint8Array)) {
        throw new BadHeaderError(`${name}: physicality plane must be u8`);
      }
      planes.push({ lam: plane.wavelength, data: plane.data });
    }
    planes.sort((a, b) => a.lam - b.lam);
    return {
      physical: planes.map((p) => p.data),
      wavelengths: planes.map((p) => p.lam),
      clean: res.exitCode === 0,
      report: res.payload,
    };
  });
}

export interface CubeOpResult {
  cube: MuellerCube;
  bytes: Uint8Array;
  report: Record<string, unknown>;
}

/** Rotate the polarization reference frame by `thetaRad` (radians),
 * leaving the pixel grid alone. */
export function bindRotateFrame(cube: CubeInput, thetaRad: number): CubeOpResult {
  const bytes = materialize(cube);
  return withScratchDir((dir) => {
    const input = join(dir, "in.mmc");
    const output = join(dir, "out.mmc");
    writeFileSync(input, bytes);
    const res = runCli(["rotate", input, output, "--frame-rad", String(thetaRad)]);
    const raw = new Uint8Array(readFileSync(output));
    return { cube: decodeCube(raw), bytes: raw, report: res.payload };
  });
}

/** Zero out the Mueller elements a reduced polarimeter would not
 * measure.  `mask` is a preset name ("full", "ul3x3", "first_row_col",
 * "linear_only") or a 16-bit word (number or "0x..." string). */
export function bindApplyMask(
  cube: CubeInput,
  mask: string | number,
  fill?: number,
): CubeOpResult {
  const bytes = materialize(cube);
  return withScratchDir((dir) => {
    const input = join(dir, "in.mmc");
    const output = join(dir, "out.mmc");
    writeFileSync(input, bytes);
    const args = ["mask", input, output];
    if (typeof mask === "number") args.push("--bits", `0x${mask.toString(16)}`);
    else if (/^(0x)?[0-9a-fA-F]+$/.test(mask) && !/^[a-z_]+$/.test(mask)) {
      args.push("--bits", mask);
    } else args.push("--preset", mask);
    if (fill !== undefined) args.push("--fill", String(fill));
    const res = runCli(args);
    const raw = new Uint8Array(readFileSync(output));
    return { cube: decodeCube(raw), bytes: raw, report: res.payload };
  });
}
