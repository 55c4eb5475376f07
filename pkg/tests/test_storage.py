import json

import pytest

from app.schemas.experiment import RECORD_FIELDS, BerRecord
from app.utils.experiment_logger import ExperimentLogger
from app.utils.id_utils import generate_run_id, is_valid_run_id
from app.utils.storage_utils import (
    ResultStorage, format_csv_value, read_csv_records, read_json_records, rows_to_csv,
)


@pytest.fixture
def records():
    return [
        BerRecord(led_count=4, N_u=0, N_h=0, detector="hard", bit_errors=3, bits_total=7, ber=3 / 7,
                  ber_upper_95=0.81234567890123456, wall_time_s=0.1 + 0.2),
        BerRecord(led_count=16, N_u=64, N_h=2, rate="9/10", coded=True, bit_errors=0, bits_total=58320, ber=0.0,
                  blocks_converged=3, mean_iterations=4.0 / 3.0, diverged=True),
    ]


class TestCsv:

    def test_single_record_has_header_and_one_row(self, tmp_path, records):
        path = ResultStorage(str(tmp_path)).write_csv(records[:1], tmp_path / "r.csv")
        lines = path.read_text().split("\n")
        assert lines[0] == ",".join(RECORD_FIELDS)
        assert len(lines) == 3 and lines[2] == ""

    def test_round_trip_is_exact(self, tmp_path, records):
        storage = ResultStorage(str(tmp_path))
        assert read_csv_records(storage.write_csv(records, tmp_path / "r.csv")) == records

    def test_csv_and_json_agree(self, tmp_path, records):
        storage = ResultStorage(str(tmp_path))
        from_csv = read_csv_records(storage.write_csv(records, tmp_path / "r.csv"))
        from_json = read_json_records(storage.write_json(records, tmp_path / "r.json"))
        assert from_csv == from_json
        assert list(json.loads((tmp_path / "r.json").read_text())[0]) == RECORD_FIELDS

    def test_cell_formatting(self):
        assert format_csv_value(None) == ""
        assert format_csv_value(True) == "true"
        assert float(format_csv_value(0.1 + 0.2)) == 0.1 + 0.2
        assert rows_to_csv(["a", "b"], [[1, "x,y"]]) == 'a,b\n1,"x,y"\n'


class TestRunMetadata:

    def test_save_and_list(self, tmp_path):
        storage = ResultStorage(str(tmp_path))
        run_id = generate_run_id()
        storage.save_run_metadata(run_id, {"kind": "coded"})
        assert storage.list_runs() == [run_id]
        metadata = storage.get_run_metadata(run_id)
        assert metadata["kind"] == "coded" and "created_at" in metadata

    def test_missing_run(self, tmp_path):
        assert ResultStorage(str(tmp_path)).get_run_metadata("abc") is None
        assert ResultStorage(str(tmp_path / "none")).list_runs() == []


class TestRunIds:

    def test_generated_ids_validate(self):
        assert is_valid_run_id(generate_run_id())

    @pytest.mark.parametrize("value", ["", "ABCDEFGHIJKL", "abc", "abcdefghijk/", None])
    def test_rejects(self, value):
        assert not is_valid_run_id(value)


class TestEventLog:

    def test_events_are_json_lines(self, tmp_path):
        log = ExperimentLogger(str(tmp_path))
        try:
            log.log_event("sweep_started", "run1", {"points": 4})
            log.log_event("training_diverged", "run1", {"epoch": 3}, severity="WARNING")
        finally:
            log.close()
        lines = log.log_file.read_text().splitlines()
        assert len(lines) == 2
        entry = json.loads(lines[1])
        assert entry["level"] == "WARNING"
        assert entry["message"]["event_type"] == "training_diverged"
        assert entry["message"]["details"] == {"epoch": 3}

    def test_report_counts_events(self, tmp_path):
        log = ExperimentLogger(str(tmp_path))
        try:
            log.log_sweep_started("run1", "uncoded", 4, 7, "desk")
            log.log_training_diverged("run1", 4, 16, 2, 12)
            log.log_sweep_failed("run2", "coded", "missing table")
            report = log.generate_run_report()
        finally:
            log.close()
        assert report["total_events"] == 3
        assert report["event_types"]["training_diverged"] == 1
        assert report["runs"][0] == ("run1", 2)
        assert [e["event_type"] for e in report["recent_problems"]] == ["training_diverged", "sweep_failed"]

    def test_report_without_log(self, tmp_path):
        assert "error" in ExperimentLogger(str(tmp_path / "none")).generate_run_report()
