export {
  BadHeaderError,
  BadMagicError,
  BadPathError,
  CliError,
  DimensionMismatchError,
  DOutOfRangeError,
  errorFromCode,
  M00NonPositiveError,
  MaskedInputError,
  MissingPlaneError,
  MuellerKitError,
  NotHermitianError,
  TooFewSpecimensError,
  TruncatedError,
} from "./errors.js";
export {
  cubeFromArray,
  decodeCube,
  decodePlane,
  encodeCube,
  encodePlane,
  FLAG_M00_PLANE,
  FLAG_MASK,
  FLAG_NORMALIZED,
  formatWavelength,
  parsePlaneFileName,
  planeFileName,
  PLANE_STEMS,
  PlaneKind,
} from "./format.js";
export type {
  CubeDtype,
  FloatArray,
  MuellerCube,
  Plane,
  PlaneArray,
  PlaneDtype,
} from "./format.js";
export {
  bindApplyMask,
  bindDecompose,
  bindIsPhysical,
  bindProject,
  bindRotateFrame,
} from "./bindings.js";
export type {
  CubeInput,
  CubeOpResult,
  DecomposeOptions,
  DecomposeResult,
  IsPhysicalResult,
  ProjectResult,
} from "./bindings.js";
export { pythonExecutable, runCli } from "./run.js";
export type { CliResult, RunOptions } from "./run.js";
