from fastapi import APIRouter, HTTPException, status
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import StreamingResponse
from typing import List, Literal
import asyncio
import json
import logging
from pydantic import BaseModel, Field
from app.core.config import settings
from app.schemas.experiment import BerRecord, CalibrationResult, ExperimentConfig
from app.services.colorspace import DegenerateChromaticityError
from app.services.constellation import ConstellationError
from app.services.experiment_service import (
    ExperimentConfigError, ExperimentService, apply_overrides, calibrate_sigma, calibrate_transition_sigma,
    uncoded_tasks,
)
from app.services.ingest import RawFrameError
from app.services.ldpc import LdpcCodeError
from app.services.progress_events import progress_stream
from app.utils.id_utils import generate_run_id, is_valid_run_id
from app.utils.storage_utils import ResultStorage

logger = logging.getLogger(__name__)

router = APIRouter()

# request-level problems, reported as 422
DOMAIN_ERRORS = (ExperimentConfigError, LdpcCodeError, ConstellationError, DegenerateChromaticityError, RawFrameError)


class SweepResponse(BaseModel):
    run_id: str
    records: List[BerRecord]
    files: List[str]


class CalibrateRequest(BaseModel):
    config: ExperimentConfig = Field(default_factory=ExperimentConfig)
    mode: Literal["hard", "transition"] = "hard"
    target_ber: float = Field(default=1e-2, gt=0.0, lt=0.5)
    led_count: int = Field(default=25, ge=1, le=64)
    rate: str = "9/10"


def _server_config(config: ExperimentConfig) -> ExperimentConfig:
    """Results from HTTP runs always land in RESULTS_DIR"""
    return apply_overrides(config, out=settings.RESULTS_DIR)


def _check_grid(points: int):
    if points > settings.MAX_SWEEP_POINTS:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"sweep has {points} grid points; the server accepts at most {settings.MAX_SWEEP_POINTS}",
        )


async def _run_sweep(kind: str, config: ExperimentConfig) -> SweepResponse:
    config = _server_config(config)
    try:
        run_id, records, paths = await run_in_threadpool(ExperimentService(config).run, kind)
    except DOMAIN_ERRORS as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except Exception as e:
        logger.error(f"{kind} sweep failed: {e}")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"{kind} sweep failed: {str(e)}",
        )
    return SweepResponse(run_id=run_id, records=records, files=[str(p) for p in paths])


@router.post("/uncoded", response_model=SweepResponse)
async def run_uncoded(config: ExperimentConfig):
    _check_grid(len(uncoded_tasks(config)))
    return await _run_sweep("uncoded", config)


@router.post("/coded", response_model=SweepResponse)
async def run_coded(config: ExperimentConfig):
    rates = 1 if config.coded.small_code_path else len(config.coded.rates)
    _check_grid(len(config.led_counts) * rates)
    return await _run_sweep("coded", config)


@router.post("/uncoded/stream")
async def run_uncoded_stream(config: ExperimentConfig):
    """Stream per-grid-point progress while the uncoded sweep runs"""
    total_points = len(uncoded_tasks(config))
    _check_grid(total_points)
    config = _server_config(config)
    run_id = generate_run_id()

    async def event_stream():
        emitter = progress_stream.create_session(run_id, total_points, "uncoded sweep",
                                                 loop=asyncio.get_running_loop())
        queue = progress_stream.open_queue(run_id)
        sweep = asyncio.create_task(run_in_threadpool(ExperimentService(config).run, "uncoded", emitter, run_id))
        try:
            async for event in progress_stream.subscribe_to_session(run_id, queue):
                yield event.to_sse_format()

            try:
                _, records, paths = await sweep
                final_event = {
                    "event": "result",
                    "data": {
                        "run_id": run_id,
                        "records": [r.model_dump() for r in records],
                        "files": [str(p) for p in paths],
                    },
                }
            except Exception as e:
                final_event = {"event": "error", "data": {"error_type": "sweep_failed", "message": str(e)}}
            yield f"data: {json.dumps(final_event)}\n\n"
        except asyncio.CancelledError:
            pass
        finally:
            progress_stream.cleanup_session(run_id)

    return StreamingResponse(
        event_stream(),
        media_type="text/event-stream",
        headers={
            "Cache-Control": "no-cache",
            "Connection": "keep-alive",
            "X-Run-ID": run_id,
        },
    )


@router.post("/calibrate", response_model=CalibrationResult)
async def calibrate(request: CalibrateRequest):
    try:
        if request.mode == "hard":
            return await run_in_threadpool(calibrate_sigma, request.config, request.target_ber, request.led_count)
        return await run_in_threadpool(calibrate_transition_sigma, request.config, request.rate, request.led_count)
    except DOMAIN_ERRORS as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except Exception as e:
        logger.error(f"{request.mode} calibration failed: {e}")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"{request.mode} calibration failed: {str(e)}",
        )


@router.get("/runs", response_model=List[str])
async def list_runs():
    return ResultStorage(settings.RESULTS_DIR).list_runs()


@router.get("/runs/{run_id}")
async def get_run(run_id: str):
    if not is_valid_run_id(run_id):
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="Malformed run id")
    metadata = ResultStorage(settings.RESULTS_DIR).get_run_metadata(run_id)
    if metadata is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Run not found")
    return metadata
