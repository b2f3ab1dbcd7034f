/**
 * Typed errors mirroring the core library's exception hierarchy.
 *
 * Every error carries a stable `code` string equal to the name the CLI
 * prints on its JSON error line, so failures surface here as the same
 * identifiers regardless of which side raised them.
 */

export class MuellerKitError extends Error {
  readonly code: string = "MuellerKit";

  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class BadMagicError extends MuellerKitError {
  override readonly code = "BadMagic";
}

export class BadHeaderError extends MuellerKitError {
  override readonly code = "BadHeader";
}

export class TruncatedError extends MuellerKitError {
  override readonly code = "Truncated";
}

export class MissingPlaneError extends MuellerKitError {
  override readonly code = "MissingPlane";
}

export class DimensionMismatchError extends MuellerKitError {
  override readonly code = "DimensionMismatch";
}

export class MaskedInputError extends MuellerKitError {
  override readonly code = "MaskedInput";
}

export class M00NonPositiveError extends MuellerKitError {
  override readonly code = "M00NonPositive";
}

export class DOutOfRangeError extends MuellerKitError {
  override readonly code = "DOutOfRange";
}

export class NotHermitianError extends MuellerKitError {
  override readonly code = "NotHermitian";
}

export class TooFewSpecimensError extends MuellerKitError {
  override readonly code = "TooFewSpecimens";
}

export class BadPathError extends MuellerKitError {
  override readonly code = "BadPath";
}

/** CLI failure whose stdout carried no structured error payload. */
export class CliError extends MuellerKitError {
  override readonly code: string = "Cli";
  readonly exitCode: number;
  readonly stderr: string;

  constructor(message: string, exitCode: number, stderr: string) {
    super(message);
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

const BY_CODE: Record<string, new (message: string) => MuellerKitError> = {
  BadMagic: BadMagicError,
  BadHeader: BadHeaderError,
  Truncated: TruncatedError,
  MissingPlane: MissingPlaneError,
  DimensionMismatch: DimensionMismatchError,
  MaskedInput: MaskedInputError,
  M00NonPositive: M00NonPositiveError,
  DOutOfRange: DOutOfRangeError,
  NotHermitian: NotHermitianError,
  TooFewSpecimens: TooFewSpecimensError,
  BadPath: BadPathError,
};

/** Rehydrate a core error from its wire code; unknown codes degrade to
 * a plain MuellerKitError whose `code` is preserved. */
export function errorFromCode(code: string, detail: string): MuellerKitError {
  const ctor = BY_CODE[code];
  if (ctor) return new ctor(detail);
  const err = new MuellerKitError(detail);
  (err as { code: string }).code = code;
  return err;
}
