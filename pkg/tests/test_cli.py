"""
Тесты командной строки: коды выхода и артефакты подкоманд
"""
import csv
import json
import os
import sys

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.cli.commands import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, run
from src.errors import InvalidInputError
from src.metrics.robustness import run_robustness
from src.model import build_model, toy_model_config
from src.model.checkpoint import write_checkpoint
from src.synthdata.dataset_store import read_manifest


@pytest.fixture(scope="module")
def toy_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    assert run(["gen-data", "--out", str(root), "--count", "8", "--seed", "7"]) == EXIT_OK
    return root


@pytest.fixture(scope="module")
def toy_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "random"
    write_checkpoint(path, build_model(toy_model_config(), seed=0))
    return path


class TestExitCodes:
    """Тесты кодов выхода"""

    def test_no_command(self):
        assert run([]) == EXIT_USAGE

    def test_help(self):
        assert run(["--help"]) == EXIT_OK

    def test_count_too_small(self, tmp_path):
        assert run(["gen-data", "--out", str(tmp_path / "d"), "--count", "2"]) == EXIT_USAGE

    def test_missing_data(self, tmp_path):
        assert run(["train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "run")]) == EXIT_USAGE
        assert run(["train", "--out", str(tmp_path / "run")]) == EXIT_USAGE

    def test_missing_checkpoint(self, tmp_path, toy_data):
        code = run(["evaluate", "--checkpoint", str(tmp_path / "none"), "--data", str(toy_data),
                    "--out", str(tmp_path / "eval")])
        assert code == EXIT_USAGE

    def test_bad_override_is_failure(self, tmp_path):
        code = run(["flops", "--set", "prune.epsilon=7", "--out", str(tmp_path / "f")])
        assert code == EXIT_FAILURE

    def test_unknown_ablation_variant(self, tmp_path, toy_data):
        code = run(["ablation", "--data", str(toy_data), "--variants", "frequency", "--out", str(tmp_path / "a")])
        assert code == EXIT_USAGE

    def test_invalid_ablation_config_is_failure(self, tmp_path, toy_data):
        weights = json.dumps([0.125] * 8)
        code = run(["ablation", "--data", str(toy_data), "--variants", "local",
                    "--set", f"model.frozen_branch_weights={weights}", "--out", str(tmp_path / "a")])
        assert code == EXIT_FAILURE

    def test_robustness_empty_split(self, tmp_path, toy_checkpoint):
        data = tmp_path / "no_test"
        code = run(["gen-data", "--out", str(data), "--count", "8", "--split-fractions", "0.8", "0.1", "0", "0.1"])
        assert code == EXIT_OK
        assert read_manifest(data).counts()["test"] == 0
        with pytest.raises(InvalidInputError):
            run_robustness(build_model(toy_model_config(), seed=0), data, input_size=(64, 64))
        code = run(["robustness", "--checkpoint", str(toy_checkpoint), "--data", str(data),
                    "--out", str(tmp_path / "robust")])
        assert code == EXIT_FAILURE


class TestGenData:
    """Тесты gen-data"""

    def test_split_counts_and_echo(self, toy_data):
        manifest = read_manifest(toy_data)
        assert manifest.counts() == {"train": 5, "val": 1, "test": 1, "calibration": 1}
        assert manifest.image_size == (64, 64)
        assert (toy_data / "resolved_config.json").exists()
        assert (toy_data / "version.json").exists()

    def test_same_seed_same_tree(self, tmp_path, toy_data):
        again = tmp_path / "again"
        assert run(["gen-data", "--out", str(again), "--count", "8", "--seed", "7"]) == EXIT_OK
        for record in read_manifest(toy_data).records:
            for rel in (record.image, record.mask):
                assert (toy_data / rel).read_bytes() == (again / rel).read_bytes(), f"{rel} отличается"


class TestCommands:
    """Тесты подкоманд на случайной модели"""

    def test_flops(self, tmp_path):
        out = tmp_path / "flops"
        assert run(["flops", "--preset", "toy", "--out", str(out)]) == EXIT_OK
        with open(out / "cost.json", encoding="utf-8") as f:
            first = json.load(f)
        assert run(["flops", "--preset", "toy", "--out", str(out)]) == EXIT_OK
        with open(out / "cost.json", encoding="utf-8") as f:
            assert json.load(f) == first, "Подсчёт детерминирован"
        assert (out / "resolved_config.json").exists()

    def test_flops_from_checkpoint(self, tmp_path, toy_checkpoint):
        out = tmp_path / "flops"
        assert run(["flops", "--checkpoint", str(toy_checkpoint), "--size", "128", "--out", str(out)]) == EXIT_OK
        with open(out / "cost.json", encoding="utf-8") as f:
            assert json.load(f)["input_size"] == [128, 128]
        with open(out / "resolved_config.json", encoding="utf-8") as f:
            resolved = json.load(f)
        assert resolved["command"] == "flops"
        assert resolved["model"] == toy_model_config().model_dump(mode="json"), "Модель взята из чекпоинта"
        assert (out / "version.json").exists()

    def test_evaluate(self, tmp_path, toy_data, toy_checkpoint):
        out = tmp_path / "eval"
        code = run(["evaluate", "--checkpoint", str(toy_checkpoint), "--data", str(toy_data),
                    "--split", "val", "--perturb", "jpeg:70", "--out", str(out)])
        assert code == EXIT_OK
        with open(out / "metrics.json", encoding="utf-8") as f:
            assert json.load(f)["sample_count"] == 1
        with open(out / "metrics.csv", newline="", encoding="utf-8") as f:
            assert len(list(csv.reader(f))) == 3

    def test_predict(self, tmp_path, toy_checkpoint):
        image_path = tmp_path / "photo.png"
        Image.fromarray(np.full((80, 100, 3), 128, dtype=np.uint8)).save(image_path)
        out = tmp_path / "pred"
        args = ["predict", "--checkpoint", str(toy_checkpoint), "--image", str(image_path), "--out", str(out)]
        assert run(args) == EXIT_OK
        first = (out / "photo_mask.png").read_bytes()
        with Image.open(out / "photo_prob.png") as prob:
            assert prob.size == (100, 80), "Маска в исходном разрешении"
        assert run(args) == EXIT_OK
        assert (out / "photo_mask.png").read_bytes() == first

    def test_predict_missing_image(self, tmp_path, toy_checkpoint):
        code = run(["predict", "--checkpoint", str(toy_checkpoint), "--image", str(tmp_path / "x.png"),
                    "--out", str(tmp_path / "pred")])
        assert code == EXIT_USAGE
        print("✅ Тесты CLI пройдены")


@pytest.mark.slow
class TestPipeline:
    """Сквозной прогон toy: обучение, прунинг, оценка, устойчивость"""

    def test_full_pipeline(self, tmp_path):
        data = tmp_path / "data"
        assert run(["gen-data", "--out", str(data), "--count", "200", "--seed", "7"]) == EXIT_OK
        train_dir = tmp_path / "train"
        assert run(["train", "--data", str(data), "--out", str(train_dir), "--seed", "7"]) == EXIT_OK

        with open(train_dir / "loss_trace.csv", newline="", encoding="utf-8") as f:
            losses = [float(row["loss"]) for row in csv.DictReader(f)]
        assert losses[-1] < 0.5 * losses[0], "Лосс должен упасть минимум вдвое"

        checkpoint = train_dir / "checkpoints" / "epoch_030"
        prune_dir = tmp_path / "prune"
        assert run(["prune", "--checkpoint", str(checkpoint), "--calibration", str(data),
                    "--out", str(prune_dir)]) == EXIT_OK
        with open(prune_dir / "prune_report.json", encoding="utf-8") as f:
            report = json.load(f)
        assert len(report["surviving_branches"]) < 8
        assert report["flop_delta"] > 0

        eval_dir = tmp_path / "eval"
        assert run(["evaluate", "--checkpoint", str(prune_dir / "checkpoint"), "--data", str(data),
                    "--out", str(eval_dir)]) == EXIT_OK

        robust_dir = tmp_path / "robust"
        assert run(["robustness", "--checkpoint", str(checkpoint), "--data", str(data),
                    "--out", str(robust_dir)]) == EXIT_OK
        with open(robust_dir / "robustness.csv", newline="", encoding="utf-8") as f:
            assert len(list(csv.reader(f))) == 4
