"""HTTP service wrapping the core pipeline.

JSON-in/JSON-out endpoints over the same operations the CLI exposes;
file-based endpoints take paths on the server's filesystem (the service
is a local batch companion, not a public API).  Error responses carry
the same machine-readable ``error`` codes as the CLI.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from . import __version__
from . import dataio, evalkit, luchipman, realizability
from .errors import MuellerKitError
from .polcore import PixelStatus


class MatrixPayload(BaseModel):
    matrix: list[list[float]]

    @field_validator("matrix")
    @classmethod
    def _check_shape(cls, v: list[list[float]]) -> list[list[float]]:
        if len(v) != 4 or any(len(row) != 4 for row in v):
            raise ValueError("matrix must be 4x4")
        return v

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=np.float64)


class IsPhysicalRequest(MatrixPayload):
    tol_phys: float = realizability.TOL_PHYS


class ProjectMatrixRequest(MatrixPayload):
    clip: float = Field(default=realizability.CLIP_EIGENVALUE, ge=0.0)


class RealizabilityResponse(BaseModel):
    physical: bool
    min_eigenvalue: float
    eigenvalues: list[float]


class ProjectMatrixResponse(BaseModel):
    matrix: list[list[float]]
    was_clipped: bool
    report: RealizabilityResponse


class DecomposeMatrixRequest(MatrixPayload):
    project_unphysical: bool = True
    clip: float = Field(default=realizability.CLIP_EIGENVALUE, ge=0.0)


class DecomposeMatrixResponse(BaseModel):
    depolarization: float
    retardance: float
    diattenuation: float
    status: str
    diattenuation_clamped: bool
    m_diattenuator: list[list[float]]
    m_retarder: list[list[float]]
    m_depolarizer: list[list[float]]


class ValidateFileRequest(BaseModel):
    path: str
    tol_phys: float = realizability.TOL_PHYS
    workers: int | None = Field(default=None, ge=1)


class ProjectFileRequest(BaseModel):
    input_path: str
    output_path: str
    clip: float = Field(default=realizability.CLIP_EIGENVALUE, ge=0.0)
    workers: int | None = Field(default=None, ge=1)


class ProjectFileResponse(BaseModel):
    output_path: str
    n_pixels: int
    n_clipped: int


class DecomposeFileRequest(BaseModel):
    input_path: str
    outdir: str
    project_unphysical: bool = True
    clip: float = Field(default=realizability.CLIP_EIGENVALUE, ge=0.0)
    wavelength_selection: list[int] | None = None
    workers: int | None = Field(default=None, ge=1)


class DecomposeFileResponse(BaseModel):
    outdir: str
    files: list[str]
    status_counts: dict[str, int]


class SplitRequest(BaseModel):
    scheme: Literal["few-shot", "nested-cv", "train-val-test"]
    n: int = Field(ge=1)
    fraction: float = 1.0
    seed: int = 0


class MetricsRequest(BaseModel):
    metric: Literal["dice", "cls"]
    pred_path: str
    gt_path: str
    classes: list[int] = [1]
    positive_class: int = 1
    ignore_label: int = evalkit.IGNORE_LABEL


def _report_response(r: realizability.RealizabilityReport) -> RealizabilityResponse:
    return RealizabilityResponse(
        physical=r.physical,
        min_eigenvalue=r.min_eigenvalue,
        eigenvalues=[float(w) for w in r.eigenvalues],
    )


def _nan_to_none(value: float | None) -> float | None:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return None
    return value


def create_app() -> FastAPI:
    app = FastAPI(title="muellerkit", version=__version__)

    @app.exception_handler(MuellerKitError)
    async def _domain_error(request: Request, exc: MuellerKitError):
        return JSONResponse(
            status_code=400, content={"error": exc.code, "detail": str(exc)}
        )

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=404, content={"error": "BadPath", "detail": str(exc)}
        )

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400, content={"error": "BadParameter", "detail": str(exc)}
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/matrix/is-physical", response_model=RealizabilityResponse)
    def matrix_is_physical(req: IsPhysicalRequest) -> RealizabilityResponse:
        return _report_response(
            realizability.is_physical(req.as_array(), tol_phys=req.tol_phys)
        )

    @app.post("/matrix/project", response_model=ProjectMatrixResponse)
    def matrix_project(req: ProjectMatrixRequest) -> ProjectMatrixResponse:
        projected, report = realizability.project_physical(
            req.as_array(), clip=req.clip
        )
        return ProjectMatrixResponse(
            matrix=projected.tolist(),
            was_clipped=not report.physical,
            report=_report_response(report),
        )

    @app.post("/matrix/decompose", response_model=DecomposeMatrixResponse)
    def matrix_decompose(req: DecomposeMatrixRequest) -> DecomposeMatrixResponse:
        px = luchipman.decompose_pixel(
            req.as_array(),
            luchipman.DecomposeOptions(
                project_unphysical=req.project_unphysical, clip=req.clip
            ),
        )
        return DecomposeMatrixResponse(
            depolarization=px.depolarization,
            retardance=px.retardance,
            diattenuation=px.diattenuation,
            status=PixelStatus(px.status).name,
            diattenuation_clamped=px.diattenuation_clamped,
            m_diattenuator=px.m_diattenuator.tolist(),
            m_retarder=px.m_retarder.tolist(),
            m_depolarizer=px.m_depolarizer.tolist(),
        )

    @app.post("/files/validate")
    def files_validate(req: ValidateFileRequest) -> dict:
        report = dataio.validate_file(
            req.path, tol_phys=req.tol_phys, workers=req.workers
        )
        payload = dataclasses.asdict(report)
        payload["min_eigenvalue"] = _nan_to_none(payload["min_eigenvalue"])
        return payload

    @app.post("/files/project", response_model=ProjectFileResponse)
    def files_project(req: ProjectFileRequest) -> ProjectFileResponse:
        cube = dataio.read_cube(req.input_path)
        projected, n_clipped = realizability.project_cube(
            cube, clip=req.clip, workers=req.workers
        )
        dataio.write_cube(projected, req.output_path)
        return ProjectFileResponse(
            output_path=req.output_path,
            n_pixels=cube.n_pixels,
            n_clipped=n_clipped,
        )

    @app.post("/files/decompose", response_model=DecomposeFileResponse)
    def files_decompose(req: DecomposeFileRequest) -> DecomposeFileResponse:
        cube = dataio.read_cube(req.input_path)
        maps = luchipman.decompose_cube(
            cube,
            luchipman.DecomposeOptions(
                project_unphysical=req.project_unphysical,
                clip=req.clip,
                wavelength_selection=req.wavelength_selection,
            ),
            workers=req.workers,
        )
        files = [str(p) for p in dataio.write_maps(maps, req.outdir)]
        counts = {
            s.name.lower(): int(np.count_nonzero(maps.status == s))
            for s in PixelStatus
        }
        return DecomposeFileResponse(
            outdir=req.outdir, files=files, status_counts=counts
        )

    @app.post("/splits")
    def splits(req: SplitRequest) -> dict:
        if req.scheme == "few-shot":
            spec = evalkit.SplitSpec(
                n_items=req.n, fraction=req.fraction, seed=req.seed
            )
            return {"indices": evalkit.fewshot_indices(spec)}
        if req.scheme == "nested-cv":
            return {
                "splits": [
                    {"test": s.test, "val": s.val, "train": list(s.train)}
                    for s in evalkit.nested_cv_splits(req.n)
                ]
            }
        train, val, test = evalkit.train_val_test_split(req.n, req.seed)
        return {"train": train, "val": val, "test": test}

    @app.post("/metrics")
    def metrics(req: MetricsRequest) -> dict:
        pred, _, _ = dataio.read_plane(req.pred_path)
        gt, _, _ = dataio.read_plane(req.gt_path)
        if req.metric == "dice":
            per_class = {
                str(c): _nan_to_none(evalkit.dice(pred, gt, c, req.ignore_label))
                for c in req.classes
            }
            return {
                "dice": per_class,
                "macro_dice": _nan_to_none(
                    evalkit.macro_dice(pred, gt, req.classes, req.ignore_label)
                ),
            }
        conf = evalkit.BinaryConfusion.from_planes(
            pred, gt, positive_class=req.positive_class,
            ignore_label=req.ignore_label,
        )
        m = evalkit.classify_metrics(conf)
        return {
            "accuracy": _nan_to_none(m.accuracy),
            "sensitivity": _nan_to_none(m.sensitivity),
            "specificity": _nan_to_none(m.specificity),
            "confusion": dataclasses.asdict(conf),
        }

    return app


app = create_app()
