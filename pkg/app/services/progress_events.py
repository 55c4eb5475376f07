"""
Sweep progress events, streamed to HTTP clients as Server-Sent Events.

A sweep worker owns one ProgressEventEmitter per run; subscribers receive every
event through asyncio queues registered with the global progress_stream.
"""
import asyncio
import logging
import time
from enum import Enum
from typing import Any, AsyncGenerator, Callable, Dict, List, Optional

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

TERMINAL_WAIT_S = 30.0


class ProgressPhase(str, Enum):
    INITIALIZING = "initializing"
    TRAINING = "training"
    EVALUATING = "evaluating"
    DECODING = "decoding"
    WRITING_RESULTS = "writing_results"
    COMPLETED = "completed"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (ProgressPhase.COMPLETED, ProgressPhase.FAILED)


class ProgressStatus(str, Enum):
    IN_PROGRESS = "in_progress"
    SUCCESS = "success"
    FAILED = "failed"


class ProgressEvent(BaseModel):
    """One step of a sweep run"""
    event_id: str
    phase: ProgressPhase
    status: ProgressStatus
    message: str
    elapsed_ms: int
    point_index: Optional[int] = None  # grid point that just finished
    points_done: int = 0
    total_points: int
    progress_percent: int = Field(ge=0, le=100)
    estimated_remaining_ms: Optional[int] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)
    error_details: Optional[str] = None

    def to_sse_format(self) -> str:
        return f"data: {self.model_dump_json()}\n\n"


class ProgressEventEmitter:
    """Counts finished grid points of one run and notifies listeners"""

    def __init__(self, run_id: str, total_points: int, label: str = "sweep"):
        self.run_id = run_id
        self.label = label
        self.total_points = max(1, total_points)
        self.points_done = 0
        self.phase = ProgressPhase.INITIALIZING
        self.history: List[ProgressEvent] = []
        self._listeners: List[Callable[[ProgressEvent], None]] = []
        self._started = time.monotonic()

    def add_listener(self, listener: Callable[[ProgressEvent], None]) -> None:
        self._listeners.append(listener)

    def _elapsed_s(self) -> float:
        return time.monotonic() - self._started

    def _percent(self) -> int:
        if self.phase is ProgressPhase.COMPLETED:
            return 100
        return min(99, 100 * self.points_done // self.total_points)

    def _remaining_ms(self) -> Optional[int]:
        if self.phase.terminal:
            return 0
        if not self.points_done:
            return None
        per_point = self._elapsed_s() / self.points_done
        return int(1000 * per_point * (self.total_points - self.points_done))

    def emit_event(self, phase: ProgressPhase, status: ProgressStatus, message: str,
                   point_index: Optional[int] = None, metadata: Optional[Dict[str, Any]] = None,
                   error_details: Optional[str] = None) -> ProgressEvent:
        self.phase = phase
        event = ProgressEvent(
            event_id=f"{self.run_id}-{len(self.history) + 1}",
            phase=phase,
            status=status,
            message=message,
            elapsed_ms=int(1000 * self._elapsed_s()),
            point_index=point_index,
            points_done=self.points_done,
            total_points=self.total_points,
            progress_percent=0 if phase is ProgressPhase.FAILED else self._percent(),
            estimated_remaining_ms=self._remaining_ms(),
            metadata=metadata or {},
            error_details=error_details,
        )
        self.history.append(event)
        logger.debug(f"{self.run_id} {phase.value}: {message}")

        for listener in self._listeners:
            try:
                listener(event)
            except Exception as e:
                logger.error(f"Progress listener failed for run {self.run_id}: {e}")
        return event

    def point_finished(self, point_index: int, metadata: Optional[Dict[str, Any]] = None) -> ProgressEvent:
        self.points_done += 1
        return self.emit_event(
            ProgressPhase.EVALUATING, ProgressStatus.SUCCESS,
            f"Point {point_index + 1}/{self.total_points} finished",
            point_index=point_index, metadata=metadata,
        )

    def completed(self, metadata: Optional[Dict[str, Any]] = None) -> ProgressEvent:
        self.points_done = self.total_points
        return self.emit_event(ProgressPhase.COMPLETED, ProgressStatus.SUCCESS,
                               f"{self.label} finished", metadata=metadata)

    def failed(self, error: str) -> ProgressEvent:
        return self.emit_event(ProgressPhase.FAILED, ProgressStatus.FAILED,
                               f"{self.label} failed", error_details=error)

    def summary(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "label": self.label,
            "phase": self.phase.value,
            "points_done": self.points_done,
            "total_points": self.total_points,
            "elapsed_ms": int(1000 * self._elapsed_s()),
            "progress_percent": self._percent(),
        }


class ProgressEventStream:
    """Registry of running sweeps and the queues listening to them"""

    def __init__(self):
        self.sessions: Dict[str, ProgressEventEmitter] = {}
        self.queues: Dict[str, List[asyncio.Queue]] = {}

    def create_session(self, run_id: str, total_points: int, label: str = "sweep",
                       loop: Optional[asyncio.AbstractEventLoop] = None) -> ProgressEventEmitter:
        """
        Register a run and return its emitter.

        Sweeps run in worker threads; when ``loop`` is given, events are handed
        to the subscriber queues through that loop.
        """
        emitter = ProgressEventEmitter(run_id, total_points, label)
        self.sessions[run_id] = emitter
        self.queues[run_id] = []

        def put(queue: asyncio.Queue, event: ProgressEvent):
            try:
                queue.put_nowait(event)
            except asyncio.QueueFull:
                logger.warning(f"Dropping progress event for run {run_id}: queue full")

        def fan_out(event: ProgressEvent):
            for queue in self.queues.get(run_id, []):
                if loop is not None:
                    loop.call_soon_threadsafe(put, queue, event)
                else:
                    put(queue, event)

        emitter.add_listener(fan_out)
        return emitter

    def open_queue(self, run_id: str) -> Optional[asyncio.Queue]:
        if run_id not in self.queues:
            return None
        queue = asyncio.Queue(maxsize=1000)
        self.queues[run_id].append(queue)
        return queue

    async def subscribe_to_session(self, run_id: str,
                                   queue: Optional[asyncio.Queue] = None) -> AsyncGenerator[ProgressEvent, None]:
        """Yield a run's events until it completes or fails"""
        queue = queue or self.open_queue(run_id)
        if queue is None:
            return
        try:
            while True:
                try:
                    event = await asyncio.wait_for(queue.get(), timeout=TERMINAL_WAIT_S)
                except asyncio.TimeoutError:
                    continue
                yield event
                if event.phase.terminal:
                    return
        finally:
            listeners = self.queues.get(run_id, [])
            if queue in listeners:
                listeners.remove(queue)

    def cleanup_session(self, run_id: str):
        self.sessions.pop(run_id, None)
        self.queues.pop(run_id, None)

    def get_active_sessions(self) -> Dict[str, Dict[str, Any]]:
        return {run_id: emitter.summary() for run_id, emitter in self.sessions.items()}


progress_stream = ProgressEventStream()
