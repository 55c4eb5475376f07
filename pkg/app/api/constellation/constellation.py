from fastapi import APIRouter, HTTPException, Query, status
from fastapi.responses import PlainTextResponse
import logging
from app.schemas.constellation import ConstellationTable
from app.services.constellation import (
    CONSTELLATION_HEADER, ConstellationError, cached_constellation, constellation_rows,
)
from app.utils.storage_utils import rows_to_csv

logger = logging.getLogger(__name__)

router = APIRouter()


def _constellation(order: int, steps: int):
    try:
        return cached_constellation(order, steps)
    except ConstellationError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))


@router.get("/", response_model=ConstellationTable)
async def get_constellation(
    order: int = Query(512, ge=4, le=4096),
    steps: int = Query(100, ge=2, le=4096),
):
    """Symbol table with drives, chromaticity points and minimum distance"""
    return _constellation(order, steps).to_table()


@router.get("/csv", response_class=PlainTextResponse)
async def get_constellation_csv(
    order: int = Query(512, ge=4, le=4096),
    steps: int = Query(100, ge=2, le=4096),
):
    c = _constellation(order, steps)
    return PlainTextResponse(rows_to_csv(CONSTELLATION_HEADER, constellation_rows(c)), media_type="text/csv")
