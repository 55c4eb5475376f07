from typing import Dict, Any, Optional, List, Sequence
import csv
import io
import json
from pathlib import Path
from datetime import datetime, timezone

from app.schemas.experiment import BerRecord, RECORD_FIELDS


def format_csv_value(value: Any) -> str:
    """Lossless text for one CSV cell"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def rows_to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """CSV text with a header line and "\n" line endings"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_csv_value(v) for v in row])
    return buffer.getvalue()


def parse_csv_value(field: str, text: str) -> Any:
    if text == "":
        return None
    if field in ("coded", "diverged"):
        return text == "true"
    if field in ("rate", "detector"):
        return text
    if field in ("led_count", "N_u", "N_h", "bit_errors", "bits_total", "blocks_converged"):
        return int(text)
    return float(text)


class ResultStorage:
    """Writes sweep results and per-run metadata under one results directory"""

    def __init__(self, base_dir: str = "results"):
        self.base_dir = Path(base_dir)
        self.metadata_dir = self.base_dir / "metadata"

    def _prepare(self):
        self.base_dir.mkdir(parents=True, exist_ok=True)
        self.metadata_dir.mkdir(exist_ok=True)

    def write_csv(self, records: Sequence[BerRecord], path: Path) -> Path:
        """One row per record, columns in RECORD_FIELDS order"""
        rows = []
        for record in records:
            row = record.model_dump()
            rows.append([row[name] for name in RECORD_FIELDS])
        return self.write_rows(RECORD_FIELDS, rows, path)

    def write_json(self, records: Sequence[BerRecord], path: Path) -> Path:
        """Array of records with the CSV field names, in the same key order"""
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = [{name: record.model_dump()[name] for name in RECORD_FIELDS} for record in records]
        path.write_text(json.dumps(payload, indent=2) + "\n")
        return path

    def write_rows(self, header: Sequence[str], rows: Sequence[Sequence[Any]], path: Path) -> Path:
        """Plain CSV table (constellation exports and received-point dumps)"""
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            f.write(rows_to_csv(header, rows))
        return path

    def save_run_metadata(self, run_id: str, metadata: Dict[str, Any]) -> Path:
        self._prepare()
        data = {"run_id": run_id, "created_at": datetime.now(timezone.utc).isoformat(), **metadata}
        path = self.metadata_dir / f"{run_id}.json"
        path.write_text(json.dumps(data, indent=2, default=str))
        return path

    def get_run_metadata(self, run_id: str) -> Optional[Dict[str, Any]]:
        path = self.metadata_dir / f"{run_id}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def list_runs(self) -> List[str]:
        if not self.metadata_dir.exists():
            return []
        return sorted(p.stem for p in self.metadata_dir.glob("*.json"))


def read_csv_records(path: Path) -> List[BerRecord]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        return [BerRecord(**{k: parse_csv_value(k, v) for k, v in row.items()}) for row in reader]


def read_json_records(path: Path) -> List[BerRecord]:
    return [BerRecord(**row) for row in json.loads(Path(path).read_text())]
