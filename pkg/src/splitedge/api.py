"""HTTP front end. Serve with ``uvicorn splitedge.api:app`` or ``python3 -m splitedge.api``."""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, formats, service
from .errors import SplitEdgeError, TransportError
from .schemas import FitRequest, MaskRequest, RunRequest, SolveRequest, SweepRequest

app = FastAPI(title="splitedge", version=__version__)


@app.exception_handler(SplitEdgeError)
async def _domain_error(request: Request, exc: SplitEdgeError):
    status = 503 if isinstance(exc, TransportError) else 400
    return JSONResponse(status_code=status, content={"code": exc.code, "detail": str(exc)})


def _json(body: dict) -> JSONResponse:
    # Infinite caps are valid and JSON has no literal for them.
    return JSONResponse(content=formats.encode_floats(body))


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/fit")
def fit(req: FitRequest):
    return _json(service.fit(req))


@app.post("/solve")
def solve(req: SolveRequest):
    return _json(service.solve(req))


@app.post("/run")
def run(req: RunRequest):
    return _json(service.run(req))


@app.post("/sweep")
def sweep(req: SweepRequest):
    return _json(service.sweep(req))


@app.post("/mask")
def mask(req: MaskRequest):
    return _json(service.mask(req))


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host=os.environ.get("SPLITEDGE_HOST", "127.0.0.1"), port=int(os.environ.get("SPLITEDGE_PORT", "8000")))
