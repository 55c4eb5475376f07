import logging
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from app.core.config import settings
from app.core.startup import startup_event
from app.api.constellation import constellation_router
from app.api.experiments import experiments_router
from app.services.progress_events import progress_stream

logging.basicConfig(level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO))

app = FastAPI(
    title="CSK Link Simulator API",
    description="512-CSK optical camera link simulation: constellation, equalizer and LDPC sweeps",
    version="1.0.0"
)

# Add startup event handler
app.add_event_handler("startup", startup_event)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["Content-Type", "Accept"],
)

app.include_router(constellation_router, prefix="/api/constellation", tags=["constellation"])
app.include_router(experiments_router, prefix="/api/experiments", tags=["experiments"])

@app.get("/")
async def root():
    return {"message": "CSK Link Simulator API"}

@app.get("/health")
async def health_check():
    return {"status": "healthy", "active_sweeps": len(progress_stream.get_active_sessions())}
