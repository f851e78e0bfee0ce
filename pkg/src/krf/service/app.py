"""HTTP service exposing the benchmark workflows.

The service runs the same pipeline functions the CLI uses. Configs arrive
as JSON request bodies; point clouds and reports stay on the server's
filesystem (requests name input/output paths), so heavy data never crosses
the wire. Domain errors map onto an {"error": {"kind", "message"}} envelope:
config problems are 400, data problems 422, numerical failures 500.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..errors import KrfError, error_kind
from ..pipeline import (
    parse_ablate_config,
    parse_run_config,
    parse_synth_config,
    run_ablate,
    run_evaluate,
    run_refine,
    run_synth,
)
from .schemas import (
    AblateReportModel,
    AblateRequest,
    EvaluateReportModel,
    EvaluateRequest,
    HealthResponse,
    RefineReportModel,
    RefineRequest,
    SynthReportModel,
    SynthRequest,
)

_STATUS = {"config": 400, "data": 422, "numerical": 500}


def create_app() -> FastAPI:
    from .. import __version__

    app = FastAPI(title="krf", version=__version__)

    @app.exception_handler(KrfError)
    async def krf_error_handler(request: Request, exc: KrfError):
        kind = error_kind(exc)
        return JSONResponse(status_code=_STATUS[kind],
                            content={"error": {"kind": kind, "message": str(exc)}})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": {"kind": "config", "message": str(exc)}})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/synth", response_model=SynthReportModel)
    def synth(req: SynthRequest):
        config = parse_synth_config(req.config.config_dict())
        return run_synth(config, req.seed, req.output)

    @app.post("/v1/refine", response_model=RefineReportModel)
    def refine(req: RefineRequest):
        config = parse_run_config(req.config.config_dict())
        return run_refine(config, req.seed, req.jobs, req.output)

    @app.post("/v1/evaluate", response_model=EvaluateReportModel)
    def evaluate(req: EvaluateRequest):
        return run_evaluate(req.reports, req.output)

    @app.post("/v1/ablate", response_model=AblateReportModel)
    def ablate(req: AblateRequest):
        config = parse_ablate_config(req.config.config_dict())
        return run_ablate(config, req.seed, req.jobs, req.output)

    return app
