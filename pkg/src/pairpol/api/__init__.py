"""FastAPI service wrapping the toolkit; run with `pairpol serve`."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ConvergenceError, InputError
from .routes import router


def create_app() -> FastAPI:
    app = FastAPI(
        title="pairpol",
        description="Photon-pair polarization tomography and spectroscopy service",
        version="0.1.0",
    )
    app.include_router(router)

    @app.exception_handler(InputError)
    async def _input_error(_: Request, exc: InputError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ConvergenceError)
    async def _convergence_error(_: Request, exc: ConvergenceError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app


__all__ = ["create_app"]
