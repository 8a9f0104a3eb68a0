import json
import wave

import numpy as np
import pytest

from drumfusion.cli import main
from drumfusion.record import load_record

EIGHT_BEAT_TAB = "tempo: 120\ndiv: 2\noffset: 0.3\nHH|x-x-x-x-x-x-x-x-|\n"
MULTI_TAB = "tempo: 120\ndiv: 2\noffset: 0.3\nHH|x-x-x-x-|\nSN|--x---x-|\nTM|x-------|\n"


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def tab_path(work):
    path = work / "eight.tab"
    path.write_text(EIGHT_BEAT_TAB)
    return path


@pytest.fixture(scope="module")
def record_path(work, tab_path):
    path = work / "eight.mmr"
    rc = main(["gen", "--tab", str(tab_path), "--out", str(path), "--seed", "3", "--noise-sigma", "0.02"])
    assert rc == 0
    return path


@pytest.fixture(scope="module")
def dataset_dir(work):
    path = work / "ds"
    rc = main([
        "dataset", "--count", "3", "--duration", "1.96", "--density", "0.25",
        "--out", str(path), "--seed", "11", "--noise-sigma", "0.02",
    ])
    assert rc == 0
    return path


@pytest.fixture(scope="module")
def model_path(work, dataset_dir):
    path = work / "model.mmf"
    rc = main([
        "train", "--data", str(dataset_dir), "--out", str(path),
        "--epochs", "2", "--seed", "0",
    ])
    assert rc == 0
    return path


class TestGen:
    def test_eight_beats(self, record_path, capsys):
        rc = main(["gen", "--tab", str(record_path.parent / "eight.tab"),
                   "--out", str(record_path.parent / "again.mmr"), "--seed", "3",
                   "--noise-sigma", "0.02"])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["contacts"] == 8
        assert summary["frames"] > 0
        rec = load_record(record_path)
        assert len(rec.frames) == summary["frames"]

    def test_same_seed_byte_identical(self, work, tab_path):
        a, b = work / "rep_a.mmr", work / "rep_b.mmr"
        for path in (a, b):
            assert main(["gen", "--tab", str(tab_path), "--out", str(path), "--seed", "9"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_drum_exits_2(self, work, capsys):
        bad = work / "bad.tab"
        bad.write_text("tempo: 120\ndiv: 2\noffset: 0.3\nXX|x---|\n")
        rc = main(["gen", "--tab", str(bad), "--out", str(work / "bad.mmr")])
        assert rc == 2
        assert (work / "bad.mmr").exists() is False

    def test_infeasible_tab_exits_3(self, work):
        early = work / "early.tab"
        early.write_text("tempo: 120\ndiv: 2\nHH|x---|\n")
        assert main(["gen", "--tab", str(early), "--out", str(work / "early.mmr")]) == 3

    def test_missing_tab_exits_4(self, work):
        assert main(["gen", "--tab", str(work / "nope.tab"), "--out", str(work / "x.mmr")]) == 4

    def test_scene_flag_round_trips(self, work, tab_path):
        out = work / "scened.mmr"
        rc = main(["gen", "--tab", str(tab_path), "--scene", "scenes/default.json",
                   "--out", str(out), "--seed", "9"])
        assert rc == 0
        assert out.read_bytes() == (work / "rep_a.mmr").read_bytes()


class TestDataset:
    def test_count_zero_empty_dir(self, work, capsys):
        out = work / "ds0"
        assert main(["dataset", "--count", "0", "--out", str(out)]) == 0
        assert list(out.glob("*.mmr")) == []
        assert json.loads(capsys.readouterr().out)["written"] == 0

    def test_writes_count_records(self, dataset_dir):
        files = sorted(dataset_dir.glob("*.mmr"))
        assert len(files) == 3
        for path in files:
            assert len(load_record(path).frames) == 50

    def test_deterministic(self, work, dataset_dir):
        again = work / "ds_again"
        rc = main([
            "dataset", "--count", "3", "--duration", "1.96", "--density", "0.25",
            "--out", str(again), "--seed", "11", "--noise-sigma", "0.02",
        ])
        assert rc == 0
        for a, b in zip(sorted(dataset_dir.glob("*.mmr")), sorted(again.glob("*.mmr"))):
            assert a.read_bytes() == b.read_bytes()


class TestInspect:
    def test_meta_json(self, record_path, capsys):
        assert main(["inspect", "--record", str(record_path)]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["image_w"] == 64 and info["image_h"] == 64
        assert info["drum_ids"] == ["HH", "SN", "TM"]
        assert "HH|" in info["tab_text"]

    def test_pgm_dimensions(self, work, record_path):
        out = work / "frame.pgm"
        assert main(["inspect", "--record", str(record_path), "--frame", "7",
                     "--dump-image", str(out)]) == 0
        header, dims, maxval = out.read_bytes().split(b"\n", 3)[:3]
        assert header == b"P5"
        assert dims == b"64 64"
        assert maxval == b"255"
        assert len(out.read_bytes().split(b"\n", 3)[3]) == 64 * 64

    def test_wav_export(self, work, record_path):
        out = work / "audio.wav"
        assert main(["inspect", "--record", str(record_path), "--dump-audio", str(out)]) == 0
        with wave.open(str(out)) as f:
            assert f.getnchannels() == 1
            assert f.getsampwidth() == 2
            assert f.getframerate() == 8000
            frames = len(load_record(record_path).frames)
            assert f.getnframes() == frames * 320

    def test_motion_csv(self, work, record_path):
        out = work / "motion.csv"
        assert main(["inspect", "--record", str(record_path), "--dump-motion", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,q1,q2,q3,q4,q5,q6"
        assert len(lines) == 1 + len(load_record(record_path).frames)

    def test_frame_out_of_range_exits_2(self, work, record_path):
        rc = main(["inspect", "--record", str(record_path), "--frame", "10000",
                   "--dump-image", str(work / "no.pgm")])
        assert rc == 2

    def test_corrupt_record_exits_4(self, work, record_path, capsys):
        broken = work / "broken.mmr"
        data = bytearray(record_path.read_bytes())
        data[-100] ^= 0xFF
        broken.write_bytes(bytes(data))
        assert main(["inspect", "--record", str(broken)]) == 4
        assert "crc" in capsys.readouterr().err.lower()


class TestTrain:
    def test_empty_dir_exits_2(self, work):
        empty = work / "nodata"
        empty.mkdir()
        assert main(["train", "--data", str(empty), "--out", str(work / "m.mmf")]) == 2

    def test_loss_csv_rows_equal_epochs(self, model_path):
        rows = (model_path.parent / (model_path.name + ".loss.csv")).read_text().strip().splitlines()
        assert len(rows) == 2
        losses = [float(r.split(",")[1]) for r in rows]
        assert all(np.isfinite(losses))

    def test_final_loss_json(self, work, dataset_dir, capsys):
        out = work / "model_b.mmf"
        rc = main(["train", "--data", str(dataset_dir), "--out", str(out),
                   "--epochs", "2", "--seed", "0"])
        assert rc == 0
        info = json.loads(capsys.readouterr().out)
        assert info["epochs"] == 2
        assert np.isfinite(info["final_loss"])

    def test_same_seed_identical_checkpoint(self, work, model_path):
        assert model_path.read_bytes() == (work / "model_b.mmf").read_bytes()


class TestReconstruct:
    def test_all_three_dropped_exits_2(self, work, model_path, record_path):
        rc = main(["reconstruct", "--model", str(model_path), "--record", str(record_path),
                   "--mask", "image,audio,motion", "--out", str(work / "r_bad")])
        assert rc == 2

    def test_unknown_modality_exits_2(self, work, model_path, record_path):
        rc = main(["reconstruct", "--model", str(model_path), "--record", str(record_path),
                   "--mask", "smell", "--out", str(work / "r_bad2")])
        assert rc == 2

    def test_audio_mask_exports(self, work, model_path, record_path, capsys):
        out = work / "recon"
        rc = main(["reconstruct", "--model", str(model_path), "--record", str(record_path),
                   "--mask", "audio", "--out", str(out)])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["dropped"] == ["audio"]
        frames = len(load_record(record_path).frames)
        assert len(list(out.glob("frame_*.pgm"))) == frames
        spec_lines = (out / "spec.csv").read_text().strip().splitlines()
        assert len(spec_lines) == 1 + frames
        assert spec_lines[0].startswith("t,b0,")
        motion_lines = (out / "motion.csv").read_text().strip().splitlines()
        assert len(motion_lines) == 1 + frames


class TestEval:
    def test_report_written(self, work, model_path, dataset_dir, capsys):
        report_path = work / "report.json"
        rc = main(["eval", "--model", str(model_path), "--data", str(dataset_dir),
                   "--report", str(report_path)])
        assert rc == 0
        on_disk = json.loads(report_path.read_text())
        assert len(on_disk["mask_mse"]) == 6
        assert json.loads(capsys.readouterr().out) == on_disk

    def test_empty_dir_exits_2(self, work, model_path):
        empty = work / "noeval"
        empty.mkdir()
        rc = main(["eval", "--model", str(model_path), "--data", str(empty),
                   "--report", str(work / "r.json")])
        assert rc == 2


class TestGradcheck:
    def test_fresh_init_passes(self, capsys):
        assert main(["gradcheck", "--seed", "1"]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["passed"] is True
        assert info["worst_tensor"]
        assert info["max_rel_err"] <= 1e-4
