"""HTTP service wrapping the problem-document runner.

POST /v1/run executes one document and returns the report (optionally with
plot data); POST /v1/validate only checks the document.  The CLI uses the
same execute() entry point in process, or talks to a running instance.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .errors import SchemaViolation, VakError
from .problem import (DOCUMENT_SCHEMA, emit_plot_data, finalize_report,
                      parse_problem, run_command)


class RunRequest(BaseModel):
    document: dict
    plot_format: str | None = Field(default=None, pattern="^(csv|json)$")


class RunResponse(BaseModel):
    report: dict
    plot: str | None = None


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str] = []


def execute(document: dict, plot_format: str | None = None) -> RunResponse:
    """Parse, run, and package one document (shared by HTTP and CLI)."""
    doc = parse_problem(document)
    report, plot = run_command(doc)
    payload = finalize_report(report)
    plot_text = None
    if plot_format is not None:
        plot_text = emit_plot_data(plot, fmt=plot_format)
    return RunResponse(report=payload, plot=plot_text)


def create_app() -> FastAPI:
    app = FastAPI(title="vak", version=__version__,
                  description="tangent cones, coderivatives, and relative "
                              "Lipschitz stability for set-valued mappings")

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/v1/schema")
    def schema():
        return DOCUMENT_SCHEMA

    @app.post("/v1/validate", response_model=ValidateResponse)
    def validate(req: RunRequest):
        try:
            parse_problem(req.document)
        except SchemaViolation as exc:
            return ValidateResponse(valid=False, errors=[str(e) for e in exc.errors])
        return ValidateResponse(valid=True)

    @app.post("/v1/run", response_model=RunResponse)
    def run(req: RunRequest):
        try:
            return execute(req.document, req.plot_format)
        except SchemaViolation as exc:
            return JSONResponse(status_code=422, content={
                "code": exc.code, "errors": [str(e) for e in exc.errors]})
        except VakError as exc:
            return JSONResponse(status_code=409, content={
                "code": exc.code, "error": str(exc)})

    return app


app = create_app()
