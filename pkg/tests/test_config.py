"""
Тесты слоистой конфигурации запуска
"""
import io
import json
import os
import sys
from unittest.mock import patch

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.config.settings import (
    configure_threads,
    deep_merge,
    derive_model_config,
    load_run_config,
    parse_override,
    preset_values,
    with_model_config,
    write_run_echo,
)
from src.errors import ConfigError
from src.model import toy_model_config
from utils.logger import progress


class TestPresets:
    """Тесты встроенных пресетов"""

    def test_toy_defaults(self):
        config = load_run_config("toy")
        assert config.model.input_size == (64, 64)
        assert config.train.epochs == 30
        assert config.train.lr_max == 1e-3
        assert config.data.count == 200
        assert config.prune.epsilon is None

    def test_paper_preset(self):
        config = load_run_config("paper")
        assert config.model.input_size == (512, 512)
        assert config.model.global_channels == [64, 128, 320, 512]
        assert config.train.epochs == 150
        assert config.train.batch_size == 12
        assert config.train.lr_max == 1e-4
        assert config.train.lr_min == 5e-7

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_values("huge")


class TestLayers:
    """Тесты слоёв: файл и переопределения"""

    def test_parse_override(self):
        assert parse_override("train.epochs=5") == {"train": {"epochs": 5}}
        assert parse_override("model.fusion_mode=uniform") == {"model": {"fusion_mode": "uniform"}}
        assert parse_override("model.input_size=[96, 96]") == {"model": {"input_size": [96, 96]}}
        with pytest.raises(ConfigError):
            parse_override("train.epochs")

    def test_deep_merge(self):
        merged = deep_merge({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"c": 5}})
        assert merged == {"a": {"b": 1, "c": 5}, "d": 3}

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"epochs": 7, "batch_size": 4}}), encoding="utf-8")
        config = load_run_config("toy", config_file=str(path), overrides=["train.epochs=3"])
        assert config.train.epochs == 3, "Переопределение сильнее файла"
        assert config.train.batch_size == 4

    def test_seed_propagates(self):
        config = load_run_config("toy", overrides=["train.seed=99"], seed=5)
        assert config.seed == 5
        assert config.train.seed == 5, "Зерно верхнего уровня единственное"

    def test_size_mismatch(self):
        with pytest.raises(ConfigError):
            load_run_config("toy", overrides=["model.input_size=[96, 96]"])
        config = load_run_config("toy", overrides=["model.input_size=[96, 96]", "train.input_size=[96, 96]"])
        assert config.model.input_size == (96, 96)

    def test_invalid_values(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config("toy", overrides=["prune.epsilon=1.5"])
        with pytest.raises(ConfigError):
            load_run_config("toy", overrides=["train.unknown=1"])
        with pytest.raises(ConfigError):
            load_run_config("toy", config_file=str(tmp_path / "missing.json"))
        broken = tmp_path / "broken.json"
        broken.write_text("{", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_run_config("toy", config_file=str(broken))


class TestEcho:
    """Тесты записи итоговой конфигурации"""

    def test_write_run_echo(self, tmp_path):
        config = load_run_config("toy", seed=4)
        paths = write_run_echo(tmp_path / "out", config, "train", {"data": "data/toy"})
        assert [p.name for p in paths] == ["resolved_config.json", "version.json"]
        with open(paths[0], encoding="utf-8") as f:
            resolved = json.load(f)
        assert resolved["command"] == "train"
        assert resolved["seed"] == 4
        assert resolved["arguments"] == {"data": "data/toy"}
        with open(paths[1], encoding="utf-8") as f:
            assert "torch" in json.load(f)

    def test_threads_from_env(self):
        with patch.dict(os.environ, {"MESORCH_NUM_THREADS": "2"}), \
                patch("src.config.settings.torch.set_num_threads") as set_threads:
            configure_threads()
        set_threads.assert_called_once_with(2)

    def test_threads_invalid_env(self):
        with patch.dict(os.environ, {"MESORCH_NUM_THREADS": "many"}), \
                patch("src.config.settings.torch.set_num_threads") as set_threads:
            configure_threads()
        set_threads.assert_not_called()


class TestDerivedConfigs:
    """Тесты пересборки конфигурации модели"""

    def test_derive_model_config(self):
        config = derive_model_config(toy_model_config(), active_branches=[1, 5])
        assert config.active_branches == [1, 5]
        weighted = toy_model_config(frozen_branch_weights=[0.125] * 8)
        with pytest.raises(ConfigError):
            derive_model_config(weighted, active_branches=[1, 2])

    def test_with_model_config(self):
        run_config = load_run_config("toy", seed=3)
        resized = with_model_config(run_config, toy_model_config(input_size=(96, 96)))
        assert resized.model.input_size == (96, 96)
        assert resized.train.input_size == (96, 96)
        assert resized.seed == 3


class TestProgress:
    """Тесты прогресс-бара: виден в терминале или при DEBUG"""

    def test_hidden_without_tty(self):
        with patch.dict(os.environ, {"DEBUG": "False"}), patch("sys.stderr", **{"isatty.return_value": False}):
            bar = progress(range(3))
        assert bar.disable
        assert list(bar) == [0, 1, 2]

    def test_shown_in_terminal(self):
        with patch.dict(os.environ, {"DEBUG": "False"}), patch("sys.stderr", **{"isatty.return_value": True}):
            bar = progress(range(3), file=io.StringIO())
        assert not bar.disable
        bar.close()

    def test_shown_with_debug(self):
        with patch.dict(os.environ, {"DEBUG": "true"}), patch("sys.stderr", **{"isatty.return_value": False}):
            bar = progress(range(3), file=io.StringIO())
        assert not bar.disable
        bar.close()
        print("✅ Тесты конфигурации пройдены")
