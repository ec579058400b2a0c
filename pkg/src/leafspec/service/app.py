"""HTTP diagnosis service: upload, preview, spectrum, classify, report.

Uploads are normalized to the canonical 125x100x101 trimmed reflectance
cube: 348-band raw frames (with bundled white/dark references) run the
full calibration chain, 116-band cubes are trimmed, 101-band cubes pass
through; anything else is rejected. Every error response carries a JSON
body {code, message}, and each request emits one JSON log line.
"""
from __future__ import annotations

import io
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, Response
from PIL import Image
from pydantic import BaseModel

from .. import cnn
from ..cube import CubeError, HyperCube, Stage
from ..hsio import HsioError, parse_auto, parse_envi_bil
from ..preprocess import (DEFAULT_RGB_TRIPLET, BINNED_BANDS, SENSOR_BANDS,
                          TRIMMED_BANDS, CalibrationPair, TrimSpec, flat_field,
                          rgb_composite, spatial_resize, spectral_bin,
                          central_spectrum, trim_bands, trimmed_wavelengths,
                          wavelength_of_band)
from .registry import HashMismatch, ModelRegistry
from .report import build_report
from .store import CubeHandle, CubeStore

log = logging.getLogger(__name__)
access_log = logging.getLogger("leafspec.service.access")

TOOL_VERSION = "leafspec 0.1.0"
TARGET_DIMS = (125, 100)
LABEL_TEXT = ("Healthy", "Infected (SDS)")


@dataclass
class ServiceConfig:
    models_dir: str = "models"
    max_upload_mb: int = 256
    cube_cap: int = 64
    spill_dir: Optional[str] = None
    rgb_triplet: tuple[int, int, int] = DEFAULT_RGB_TRIPLET
    trim: TrimSpec = field(default_factory=TrimSpec)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class ClassifyRequest(BaseModel):
    cube_id: str
    model_id: str


class ReportRequest(BaseModel):
    cube_ids: list[str]
    model_id: str


def _ingest(body: bytes, filename: str, white: Optional[bytes],
            dark: Optional[bytes], envi_header: Optional[str],
            cfg: ServiceConfig) -> HyperCube:
    """Parse + normalize an upload to the 125x100x101 trimmed cube."""
    if not body:
        raise ApiError(400, "ParseError", "empty upload body")
    try:
        cube = parse_auto(body, stage=Stage.RAW if white and dark else Stage.REFLECTANCE,
                          envi_header=envi_header)
    except (HsioError, CubeError) as exc:
        raise ApiError(400, "ParseError", f"{type(exc).__name__}: {exc}") from exc

    try:
        if cube.bands == SENSOR_BANDS:
            if not (white and dark):
                raise ApiError(400, "ParseError",
                               f"{SENSOR_BANDS}-band raw cube needs bundled "
                               f"'white' and 'dark' reference parts")
            w = parse_auto(white, stage=Stage.RAW, envi_header=envi_header)
            d = parse_auto(dark, stage=Stage.RAW, envi_header=envi_header)
            cube = flat_field(cube, CalibrationPair(white=w, dark=d))
            cube = spectral_bin(cube, 3)
            cube = spatial_resize(cube, TARGET_DIMS)
            cube = trim_bands(cube, cfg.trim)
        elif cube.bands == BINNED_BANDS:
            cube = spatial_resize(cube, TARGET_DIMS)
            cube = trim_bands(cube, cfg.trim)
        elif cube.bands == TRIMMED_BANDS:
            if (cube.rows, cube.cols) != TARGET_DIMS:
                cube = spatial_resize(cube, TARGET_DIMS)
        else:
            raise ApiError(400, "ParseError",
                           f"unsupported band count {cube.bands}; expected "
                           f"{SENSOR_BANDS} (raw), {BINNED_BANDS} (binned) or "
                           f"{TRIMMED_BANDS} (trimmed)")
    except (HsioError, CubeError) as exc:
        raise ApiError(400, "ParseError", f"{type(exc).__name__}: {exc}") from exc
    return cube


def create_app(config: ServiceConfig | None = None,
               registry: ModelRegistry | None = None) -> FastAPI:
    cfg = config or ServiceConfig()
    reg = registry or ModelRegistry(cfg.models_dir)
    store = CubeStore(cap=cfg.cube_cap, spill_dir=cfg.spill_dir)
    app = FastAPI(title="leafspec diagnosis service", version=TOOL_VERSION)
    app.state.registry = reg
    app.state.store = store

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "ValidationError", "message": str(exc)})

    @app.exception_handler(404)
    async def handle_404(request: Request, exc):
        return JSONResponse(status_code=404,
                            content={"code": "NotFound",
                                     "message": f"no route {request.url.path}"})

    @app.middleware("http")
    async def access_logging(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        access_log.info(json.dumps({
            "method": request.method,
            "path": request.url.path,
            "status": response.status_code,
            "elapsed_ms": round((time.perf_counter() - started) * 1000, 2),
        }))
        return response

    def _get_handle(cube_id: str) -> CubeHandle:
        handle = store.get(cube_id)
        if handle is None:
            raise ApiError(404, "UnknownCube", f"no cube with id {cube_id}")
        return handle

    def _classify_handle(handle: CubeHandle, model_id: str) -> dict:
        entry = reg.get_entry(model_id)
        if entry is None:
            raise ApiError(404, "UnknownModel", f"no model with id {model_id}")
        try:
            loaded = reg.load(model_id)
        except HashMismatch as exc:
            raise ApiError(409, "HashMismatch", str(exc)) from exc
        except OSError as exc:
            raise ApiError(409, "HashMismatch",
                           f"artifact unavailable: {exc}") from exc
        cube = handle.cube
        if cube.bands != TRIMMED_BANDS:
            raise ApiError(422, "DimsIncompatible",
                           f"cube has {cube.bands} bands, expected {TRIMMED_BANDS}")
        started = time.perf_counter()
        genes = sorted(loaded.entry.bands)
        offsets = [g - 1 - cfg.trim.drop_front for g in genes]
        if any(o < 0 or o >= cube.bands for o in offsets):
            raise ApiError(422, "DimsIncompatible",
                           f"model bands {genes} fall outside the trimmed cube")
        sample = np.ascontiguousarray(cube.data[offsets])
        if sample.shape != loaded.extractor.input_shape:
            raise ApiError(422, "DimsIncompatible",
                           f"cube slice {sample.shape} != model input "
                           f"{loaded.extractor.input_shape}")
        from .. import classifiers as clf
        _, features = cnn.forward(loaded.extractor, sample)
        probs = clf.predict_proba(loaded.classifier, features[None])[0]
        label = LABEL_TEXT[int(np.argmax(probs))]
        return {
            "cube_id": handle.cube_id,
            "model_id": model_id,
            "label": label,
            "probabilities": {"H": float(probs[0]), "I": float(probs[1])},
            "selected_band_wavelengths_nm": [wavelength_of_band(g) for g in genes],
            "elapsed_ms": round((time.perf_counter() - started) * 1000, 2),
        }

    def _spectrum_payload(handle: CubeHandle) -> dict:
        cube = handle.cube
        values = central_spectrum(cube)
        if cube.wavelengths_nm is not None:
            wavelengths = cube.wavelengths_nm
        elif cube.bands == TRIMMED_BANDS:
            wavelengths = trimmed_wavelengths(cfg.trim)
        else:
            wavelengths = np.arange(1, cube.bands + 1, dtype=float)
        return {"wavelengths_nm": [float(v) for v in wavelengths],
                "reflectance": [float(v) for v in values]}

    @app.post("/api/cubes", status_code=201)
    async def upload_cube(request: Request, file: UploadFile,
                          white: Optional[UploadFile] = None,
                          dark: Optional[UploadFile] = None,
                          header: Optional[UploadFile] = None):
        length = request.headers.get("content-length")
        if length and int(length) > cfg.max_upload_mb * 1024 * 1024:
            raise ApiError(413, "PayloadTooLarge",
                           f"upload exceeds {cfg.max_upload_mb} MB limit")
        body = await file.read()
        if len(body) > cfg.max_upload_mb * 1024 * 1024:
            raise ApiError(413, "PayloadTooLarge",
                           f"upload exceeds {cfg.max_upload_mb} MB limit")
        white_bytes = await white.read() if white else None
        dark_bytes = await dark.read() if dark else None
        header_text = (await header.read()).decode("utf-8", "replace") if header else None
        cube = _ingest(body, file.filename or "", white_bytes, dark_bytes,
                       header_text, cfg)
        handle = store.put(cube, file.filename or "")
        return {"cube_id": handle.cube_id,
                "dims": {"rows": cube.rows, "cols": cube.cols, "bands": cube.bands},
                "stage": cube.stage.name.lower()}

    @app.get("/api/cubes/{cube_id}/preview")
    def preview(cube_id: str):
        handle = _get_handle(cube_id)
        rgb = rgb_composite(handle.cube, cfg.rgb_triplet)
        image = Image.fromarray(rgb, mode="RGB")
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/cubes/{cube_id}/spectrum")
    def spectrum(cube_id: str):
        return _spectrum_payload(_get_handle(cube_id))

    @app.post("/api/classify")
    def classify(body: ClassifyRequest):
        handle = _get_handle(body.cube_id)
        return _classify_handle(handle, body.model_id)

    @app.get("/api/models")
    def list_models():
        return reg.list_models()

    @app.post("/api/report")
    def report(body: ReportRequest):
        entry = reg.get_entry(body.model_id)
        if entry is None:
            raise ApiError(404, "UnknownModel", f"no model with id {body.model_id}")
        results = []
        for cube_id in body.cube_ids:
            handle = _get_handle(cube_id)
            diagnosis = _classify_handle(handle, body.model_id)
            spec_payload = _spectrum_payload(handle)
            results.append({
                "filename": handle.filename,
                "cube_id": handle.cube_id,
                "uploaded_at": handle.uploaded_at,
                "dims": (handle.cube.rows, handle.cube.cols, handle.cube.bands),
                "label": diagnosis["label"],
                "probabilities": (diagnosis["probabilities"]["H"],
                                  diagnosis["probabilities"]["I"]),
                "wavelengths": np.array(spec_payload["wavelengths_nm"]),
                "reflectance": np.array(spec_payload["reflectance"]),
            })
        html_doc = build_report(results, body.model_id, entry.kind,
                                list(entry.bands), TOOL_VERSION)
        return HTMLResponse(content=html_doc)

    return app
