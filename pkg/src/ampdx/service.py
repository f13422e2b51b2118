"""HTTP facade over the inference engine for the web UI and programmatic clients.

The model (catalog, matrix, cached factorization) is loaded once and shared
read-only; request handling is stateless, so concurrent identical requests
return identical bodies.  Scores are the raw estimate entries, not
renormalized probabilities.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import __version__
from .evaluation import solve_case
from .gvamp import LmmseFactorization
from .model import (
    MISSING,
    Catalog,
    DataError,
    KnowledgeMatrix,
    NumericalError,
    SymptomObservation,
    default_signal_energy,
    snr_to_noise_precision,
)


class InferRequest(BaseModel):
    present: list[int] = Field(default_factory=list)
    absent: list[int] = Field(default_factory=list)
    algorithm: Literal["gvamp", "uls", "admm", "scan"] = "gvamp"
    top_k: int = 3
    absence_mode: Literal["assume-absent", "treat-missing"] = "assume-absent"


class RankingEntry(BaseModel):
    disease_id: int
    disease_name: str
    score: float


class Diagnostics(BaseModel):
    iterations: int
    converged: bool
    algorithm: str


class InferResponse(BaseModel):
    ranking: list[RankingEntry]
    diagnostics: Diagnostics
    request_echo: InferRequest


class _ModelState:
    """Immutable shared state; built once at startup."""

    def __init__(self, catalog: Catalog, matrix: KnowledgeMatrix, snr_db: float):
        self.catalog = catalog
        self.matrix = matrix
        self.snr_db = snr_db
        self.noise = snr_to_noise_precision(snr_db, default_signal_energy(matrix), matrix.m)
        self.factorization = LmmseFactorization.from_matrix(matrix)


def _observation_from_request(req: InferRequest, catalog: Catalog) -> SymptomObservation:
    m = catalog.m
    for sid in (*req.present, *req.absent):
        if not 0 <= sid < m:
            raise HTTPException(status_code=400, detail=f"invalid symptom id {sid}")
    overlap = set(req.present) & set(req.absent)
    if overlap:
        raise HTTPException(status_code=400, detail=f"symptom id(s) listed both present and absent: {sorted(overlap)}")
    fill = -1 if req.absence_mode == "assume-absent" else MISSING
    values = np.full(m, fill, dtype=np.int8)
    values[sorted(set(req.absent))] = -1
    values[sorted(set(req.present))] = 1
    return SymptomObservation(values)


def create_app(
    catalog: Catalog | None = None,
    matrix: KnowledgeMatrix | None = None,
    snr_db: float = 25.0,
    static_dir: Path | None = None,
) -> FastAPI:
    """Build the API application; without a catalog/matrix every data endpoint is 503."""
    state = _ModelState(catalog, matrix, snr_db) if catalog is not None and matrix is not None else None

    app = FastAPI(title="ampdx symptom-checker API", version=__version__, openapi_url="/api/spec")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_state() -> _ModelState:
        if state is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return state

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "catalog_loaded": state is not None, "version": __version__}

    @app.get("/api/catalog")
    def get_catalog() -> dict:
        st = require_state()
        return {
            "symptoms": [{"id": i, "name": n} for i, n in enumerate(st.catalog.symptoms)],
            "diseases": [{"id": j, "name": n} for j, n in enumerate(st.catalog.diseases)],
        }

    @app.post("/api/infer", response_model=InferResponse)
    def infer(req: InferRequest) -> InferResponse:
        st = require_state()
        if not 1 <= req.top_k <= st.catalog.n:
            raise HTTPException(status_code=400, detail=f"top_k must lie in [1, {st.catalog.n}]")
        obs = _observation_from_request(req, st.catalog)
        try:
            estimate, diag = solve_case(
                st.matrix, obs, req.algorithm, noise=st.noise, factorization=st.factorization
            )
        except NumericalError as exc:
            raise HTTPException(status_code=500, detail=f"numerical failure: {exc}") from exc
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        order = np.argsort(-estimate, kind="stable")[: req.top_k]
        ranking = [
            RankingEntry(disease_id=int(j), disease_name=st.catalog.diseases[int(j)], score=float(estimate[j]))
            for j in order
        ]
        return InferResponse(ranking=ranking, diagnostics=Diagnostics(**diag), request_echo=req)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
