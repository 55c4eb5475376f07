"""
Experiment event logging.
Provides structured JSON logging for sweep runs, training divergence and decoder statistics.
"""

import logging
import json
import time
from typing import Dict, Any, Optional
from datetime import datetime, timezone
from pathlib import Path
from app.core.config import settings

EVENT_LOG_NAME = "experiment_events.log"


class ExperimentLogger:
    """Structured experiment event log, one JSON object per line"""

    def __init__(self, log_dir: Optional[str] = None):
        self.log_dir = Path(log_dir or settings.EXPERIMENT_LOG_DIR)
        self.event_logger = logging.getLogger('experiments')
        self.event_logger.setLevel(getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO))
        self.event_logger.propagate = False
        self._handler: Optional[logging.Handler] = None

    @property
    def log_file(self) -> Path:
        return self.log_dir / EVENT_LOG_NAME

    def _ensure_handler(self):
        """Open the event file on first use"""
        if self._handler is not None:
            return
        self.log_dir.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(self.log_file)
        # message is already a JSON object
        handler.setFormatter(logging.Formatter(
            '{"timestamp": "%(asctime)s", "level": "%(levelname)s", "message": %(message)s}',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        self.event_logger.addHandler(handler)
        self._handler = handler

    def close(self):
        if self._handler is not None:
            self.event_logger.removeHandler(self._handler)
            self._handler.close()
            self._handler = None

    def log_event(self, event_type: str, run_id: Optional[str], details: Dict[str, Any], severity: str = "INFO"):
        """
        Log an experiment event with structured data

        Args:
            event_type: Type of event (e.g., 'sweep_started', 'training_diverged')
            run_id: Sweep run the event belongs to
            details: Additional event details
            severity: Log severity level
        """
        if not settings.LOG_EXPERIMENT_EVENTS:
            return
        self._ensure_handler()

        event_data = {
            "event_type": event_type,
            "run_id": run_id,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "severity": severity,
            "details": details,
        }
        log_message = json.dumps(event_data, default=str)

        if severity == "ERROR":
            self.event_logger.error(log_message)
        elif severity == "WARNING":
            self.event_logger.warning(log_message)
        else:
            self.event_logger.info(log_message)

    def log_sweep_started(self, run_id: str, kind: str, total_points: int, seed: int, profile: str):
        self.log_event("sweep_started", run_id, {
            "kind": kind,
            "total_points": total_points,
            "seed": seed,
            "profile": profile,
        })

    def log_point_finished(self, run_id: str, record: Dict[str, Any]):
        self.log_event("point_finished", run_id, record)

    def log_training_diverged(self, run_id: str, led_count: int, n_units: int, n_hidden: int, epoch: int):
        self.log_event("training_diverged", run_id, {
            "led_count": led_count,
            "N_u": n_units,
            "N_h": n_hidden,
            "epoch": epoch,
            "action": "point_recorded_as_diverged",
        }, severity="WARNING")

    def log_decoder_statistics(self, run_id: str, rate: str, led_count: int,
                               blocks: int, converged: int, mean_iterations: float):
        self.log_event("decoder_statistics", run_id, {
            "rate": rate,
            "led_count": led_count,
            "blocks": blocks,
            "blocks_converged": converged,
            "mean_iterations": mean_iterations,
        }, severity="INFO" if converged == blocks else "WARNING")

    def log_sweep_finished(self, run_id: str, kind: str, records: int, wall_time_s: float):
        self.log_event("sweep_finished", run_id, {
            "kind": kind,
            "records": records,
            "wall_time_s": wall_time_s,
        })

    def log_sweep_failed(self, run_id: str, kind: str, error: str):
        self.log_event("sweep_failed", run_id, {"kind": kind, "error": error}, severity="ERROR")

    def generate_run_report(self, hours: int = 24) -> Dict[str, Any]:
        """Summarize logged events from the last ``hours`` hours"""
        if self._handler is not None:
            self._handler.flush()
        if not self.log_file.exists():
            return {"error": "No experiment log file found"}

        cutoff_time = time.time() - (hours * 3600)
        events = []
        with open(self.log_file, 'r') as f:
            for line in f:
                try:
                    event = json.loads(line.strip())['message']
                    if datetime.fromisoformat(event['timestamp']).timestamp() > cutoff_time:
                        events.append(event)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    continue

        event_types: Dict[str, int] = {}
        runs: Dict[str, int] = {}
        for event in events:
            event_type = event.get('event_type', 'unknown')
            event_types[event_type] = event_types.get(event_type, 0) + 1
            run_id = event.get('run_id') or 'unknown'
            runs[run_id] = runs.get(run_id, 0) + 1

        return {
            "report_period_hours": hours,
            "total_events": len(events),
            "event_types": event_types,
            "runs": sorted(runs.items(), key=lambda x: x[1], reverse=True)[:10],
            "recent_problems": [
                event for event in events[-50:]
                if event.get('severity') in ('WARNING', 'ERROR')
            ],
        }


# Global experiment logger instance
experiment_logger = ExperimentLogger()
