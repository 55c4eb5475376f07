import json

import pytest

from app.cli import build_parser, main, parse_roi
from app.services.ingest import list_frames, read_manifest


@pytest.fixture
def config_file(make_config, clean_channel, tmp_path):
    config = make_config(channel=clean_channel, led_counts=[4], equalizer={"n_units": [8], "n_hidden": [1]})
    path = tmp_path / "sweep.json"
    path.write_text(config.model_dump_json())
    return path


class TestParser:

    def test_roi(self):
        assert parse_roi("1,2,30,40") == [1, 2, 30, 40]

    def test_common_flags_after_command(self):
        args = build_parser().parse_args(["uncoded", "--seed", "5", "--workers", "2", "--profile", "paper"])
        assert (args.command, args.seed, args.workers, args.profile) == ("uncoded", 5, 2, "paper")

    def test_bad_roi_exits(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["replay", "--frames", "x", "--roi", "1,2,3"])


class TestCommands:

    def test_constellation(self, config_file, tmp_path, capsys):
        out = tmp_path / "cst"
        assert main(["constellation", "--config", str(config_file), "--out", str(out)]) == 0
        lines = (out / "constellation.csv").read_text().splitlines()
        assert lines[0] == "symbol_index,bits,r,g,b,x,y"
        assert len(lines) == 17

    def test_received_points(self, config_file, tmp_path):
        out = tmp_path / "rx"
        assert main(["constellation", "--config", str(config_file), "--out", str(out),
                     "--received", "--led-count", "4", "--repeats", "2"]) == 0
        assert len((out / "received_led4.csv").read_text().splitlines()) == 1 + 16 * 2

    @pytest.mark.parametrize("led_count", ["16", "7"])
    def test_synthesize_then_replay(self, config_file, tmp_path, led_count):
        frames = tmp_path / "frames"
        assert main(["synthesize", "--config", str(config_file), "--out", str(frames),
                     "--frames", "12", "--led-count", led_count]) == 0
        assert len(list_frames(frames)) == 12
        roi = ",".join(str(v) for v in read_manifest(frames)["roi"])

        out = tmp_path / "replay"
        assert main(["replay", "--config", str(config_file), "--out", str(out),
                     "--frames", str(frames), "--roi", roi]) == 0
        report = json.loads((out / "replay.json").read_text())
        assert report["frames"] == 12
        assert report["hard_symbols"] == report["reference_symbols"]
        assert report["hard_bit_errors"] == 0

    def test_uncoded_sweep(self, config_file, tmp_path, capsys):
        out = tmp_path / "sweep"
        assert main(["uncoded", "--config", str(config_file), "--out", str(out)]) == 0
        printed = capsys.readouterr().out.split()
        assert sorted(printed) == sorted([str(out / "uncoded.csv"), str(out / "uncoded.json")])

    def test_train_writes_model(self, config_file, tmp_path):
        model = tmp_path / "eq.occm"
        assert main(["train", "--config", str(config_file), "--led-count", "4", "--units", "8",
                     "--hidden", "1", "--model-out", str(model)]) == 0
        assert model.stat().st_size > 0

    def test_missing_config_fails(self, tmp_path, capsys):
        assert main(["uncoded", "--config", str(tmp_path / "absent.json")]) == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_frames_fails(self, config_file, tmp_path):
        assert main(["replay", "--config", str(config_file), "--frames", str(tmp_path / "empty"),
                     "--roi", "0,0,8,8"]) == 1
