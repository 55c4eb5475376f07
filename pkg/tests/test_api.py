import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from app.core.config import settings
from app.main import app


@pytest.fixture
def client():
    return TestClient(app)


@pytest.fixture
def small_sweep(make_config, clean_channel):
    config = make_config(channel=clean_channel, led_counts=[4], equalizer={"n_units": [8], "n_hidden": [1]})
    return config.model_dump(mode="json")


class TestMeta:

    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"


class TestConstellation:

    def test_table(self, client):
        body = client.get("/api/constellation/", params={"order": 16}).json()
        assert body["bits_per_symbol"] == 4
        assert [e["symbol_index"] for e in body["entries"]] == list(range(16))
        assert body["min_distance"] > 0

    def test_csv(self, client):
        response = client.get("/api/constellation/csv", params={"order": 16})
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/csv")
        lines = response.text.strip().split("\n")
        assert lines[0] == "symbol_index,bits,r,g,b,x,y"
        assert len(lines) == 17
        assert lines[1].startswith("0,0000,")

    def test_bad_order(self, client):
        assert client.get("/api/constellation/", params={"order": 100}).status_code == 422


class TestExperiments:

    def test_uncoded_run(self, client, small_sweep):
        response = client.post("/api/experiments/uncoded", json=small_sweep)
        assert response.status_code == 200
        body = response.json()
        assert [r["detector"] for r in body["records"]] == ["hard", "nn"]
        assert all(Path(f).parent == Path(settings.RESULTS_DIR) for f in body["files"])

        assert client.get("/api/experiments/runs").json() == [body["run_id"]]
        metadata = client.get(f"/api/experiments/runs/{body['run_id']}").json()
        assert metadata["kind"] == "uncoded"

    def test_grid_too_large(self, client):
        config = {"led_counts": list(range(1, 65)), "equalizer": {"n_units": [8, 16], "n_hidden": [1, 2]}}
        assert client.post("/api/experiments/uncoded", json=config).status_code == 413

    def test_invalid_config(self, client):
        assert client.post("/api/experiments/uncoded", json={"led_counts": [65]}).status_code == 422

    def test_missing_small_code(self, client, small_sweep):
        small_sweep["coded"]["small_code_path"] = "absent.txt"
        assert client.post("/api/experiments/coded", json=small_sweep).status_code == 422

    def test_stream_ends_with_result(self, client, small_sweep):
        with client.stream("POST", "/api/experiments/uncoded/stream", json=small_sweep) as response:
            assert response.status_code == 200
            run_id = response.headers["x-run-id"]
            events = [json.loads(line[len("data: "):]) for line in response.iter_lines() if line.startswith("data: ")]
        assert events[-1]["event"] == "result"
        assert events[-1]["data"]["run_id"] == run_id
        assert len(events[-1]["data"]["records"]) == 2

    def test_calibrate(self, client, small_sweep):
        response = client.post("/api/experiments/calibrate",
                               json={"config": small_sweep, "mode": "hard", "led_count": 1})
        assert response.status_code == 200
        assert response.json()["noise_sigma0"] > 0.0

    def test_calibrate_unbuildable_constellation(self, client, small_sweep):
        config = {**small_sweep, "constellation": {"order": 512, "steps": 10}}
        response = client.post("/api/experiments/calibrate", json={"config": config, "mode": "hard", "led_count": 1})
        assert response.status_code == 422
        assert "steps" in response.json()["detail"]

    def test_run_lookup_errors(self, client):
        assert client.get("/api/experiments/runs/NOT-AN-ID").status_code == 400
        assert client.get("/api/experiments/runs/abcdefghijkl").status_code == 404
