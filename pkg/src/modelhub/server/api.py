"""REST API over the service layer.

All endpoints live under /api, exchange JSON bodies, and authenticate with
an ``Authorization: Token <hex>`` header. Errors always render as
``{"error": {"code", "message", "detail?"}}``.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Optional

from fastapi import Depends, FastAPI, File, Form, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .. import __version__
from .embedded import EmbeddedNativeWorker, ReaperThread
from .service import ApiError, ModelHubService


def _token_from_header(request: Request) -> Optional[str]:
    header = request.headers.get("Authorization", "")
    scheme, _, value = header.partition(" ")
    if scheme != "Token" or not value:
        return None
    return value.strip()


class InterfaceValueBody(BaseModel):
    value: object = None


class RegisterWorkerBody(BaseModel):
    kernel_tags: list[str]


class LogBody(BaseModel):
    lines: list[str]


class ResultBody(BaseModel):
    status: str
    results: Optional[dict] = None


def create_app(
    service: ModelHubService,
    *,
    embedded_worker: bool = True,
    reap_interval: float = 5.0,
    long_poll_max: float = 30.0,
) -> FastAPI:
    background: list = []

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if embedded_worker:
            worker = EmbeddedNativeWorker(service)
            worker.start()
            background.append(worker)
        reaper = ReaperThread(service, interval=reap_interval)
        reaper.start()
        background.append(reaper)
        yield
        for thread in background:
            thread.stop()
        for thread in background:
            thread.join(timeout=5.0)

    app = FastAPI(title="modelhub", version=__version__, lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_user(request: Request) -> str:
        return service.authenticate(_token_from_header(request), "user")

    def require_worker_auth(request: Request) -> str:
        return service.authenticate(_token_from_header(request), "worker")

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.code, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "error": {"code": 422, "message": "invalid request body", "detail": exc.errors()}
            },
        )

    # -- models ---------------------------------------------------------------

    @app.get("/api/models/")
    def list_models(name: Optional[str] = None, user: str = Depends(require_user)):
        return service.list_models(user, name)

    @app.post("/api/models/", status_code=201)
    def create_model(
        file: UploadFile = File(...),
        name: str = Form(...),
        kernel_tag: str = Form(...),
        comment_tag: Optional[str] = Form(None),
        user: str = Depends(require_user),
    ):
        data = file.file.read()
        return service.create_model(
            user,
            filename=file.filename or "",
            data=data,
            name=name,
            kernel_tag=kernel_tag,
            comment_tag=comment_tag,
        )

    @app.get("/api/models/{model_id}/")
    def get_model(model_id: str, user: str = Depends(require_user)):
        return service.model_record(user, model_id)

    @app.delete("/api/models/{model_id}/", status_code=204)
    def delete_model(model_id: str, user: str = Depends(require_user)):
        service.delete_model(user, model_id)
        return Response(status_code=204)

    @app.get("/api/models/{model_id}/components/")
    def get_components(model_id: str, user: str = Depends(require_user)):
        return {"components": service.components(user, model_id)}

    @app.get("/api/models/{model_id}/recipe/")
    def get_recipe(model_id: str, user: str = Depends(require_user)):
        return service.recipe(user, model_id)

    @app.put("/api/models/{model_id}/interface/objects/{name}/")
    def put_interface_object(
        model_id: str,
        name: str,
        body: InterfaceValueBody,
        user: str = Depends(require_user),
    ):
        return service.set_interface_object(user, model_id, name, body.value)

    @app.put("/api/models/{model_id}/interface/files/{name}/")
    def put_interface_file(
        model_id: str,
        name: str,
        file: UploadFile = File(...),
        user: str = Depends(require_user),
    ):
        data = file.file.read()
        return service.set_interface_file(
            user, model_id, name, file.filename or name, data
        )

    @app.post("/api/models/{model_id}/run/", status_code=201)
    def run_model(model_id: str, user: str = Depends(require_user)):
        return service.run(user, model_id)

    @app.get("/api/models/{model_id}/status/")
    def model_status(model_id: str, user: str = Depends(require_user)):
        return service.get_status(user, model_id)

    # -- executions -------------------------------------------------------------

    @app.get("/api/executions/{execution_id}/")
    def get_execution(execution_id: str, user: str = Depends(require_user)):
        return service.execution_record(user, execution_id)

    @app.get("/api/executions/{execution_id}/log/")
    def get_execution_log(execution_id: str, user: str = Depends(require_user)):
        return {"execution_id": execution_id, "log": service.execution_log(user, execution_id)}

    @app.get("/api/executions/{execution_id}/results/")
    def get_execution_results(execution_id: str, user: str = Depends(require_user)):
        return service.execution_results(user, execution_id)

    # -- worker protocol ----------------------------------------------------------

    @app.post("/api/workers/register/", status_code=201)
    def register_worker(body: RegisterWorkerBody, _: str = Depends(require_worker_auth)):
        return service.register_worker(body.kernel_tags)

    @app.get("/api/workers/{worker_id}/jobs/next/")
    def next_job(
        worker_id: str,
        timeout: float = 30.0,
        _: str = Depends(require_worker_auth),
    ):
        payload = service.next_job(worker_id, min(max(timeout, 0.0), long_poll_max))
        if payload is None:
            return Response(status_code=204)
        return payload

    @app.post("/api/workers/{worker_id}/heartbeat/")
    def worker_heartbeat(worker_id: str, _: str = Depends(require_worker_auth)):
        service.heartbeat(worker_id)
        return {"ok": True}

    @app.post("/api/executions/{execution_id}/log/")
    def post_execution_log(
        execution_id: str, body: LogBody, _: str = Depends(require_worker_auth)
    ):
        count = service.post_log(execution_id, body.lines)
        return {"ok": True, "count": count}

    @app.post("/api/executions/{execution_id}/result/")
    def post_execution_result(
        execution_id: str, body: ResultBody, _: str = Depends(require_worker_auth)
    ):
        return service.post_result(execution_id, body.status, body.results)

    return app
