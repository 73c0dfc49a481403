import json
from pathlib import Path

import pytest

from cross_model_control.compose import CompositionMode
from cross_model_control.run_config import (
    MANIFEST_NAME,
    Manifest,
    RunConfig,
    coerce,
    load_run_config,
    read_config_file,
)
from cross_model_control.synthetic import TaskKind
from cross_model_control.tokenmap import MappingStrategy
from cross_model_control.util.custom_types import ConfigError, UnknownConfigKeyError


class TestCoerce:
    """Test conversion of raw config values."""

    def test_numbers(self):
        assert coerce('epochs', "3") == 3
        assert coerce('alpha', 2) == 2.0
        assert coerce('alpha_grid', [0.5, 1]) == (0.5, 1.0)
        assert coerce('save_epochs', "2,4") == (2, 4)

    def test_paths_and_optionals(self):
        assert coerce('delta', ["a.ckpt", "b.ckpt"]) == (Path("a.ckpt"), Path("b.ckpt"))
        assert coerce('top_k', None) is None
        assert coerce('splits', "forget, retain") == ("forget", "retain")

    def test_enum(self):
        assert coerce('mode', 'proxy') is CompositionMode.PROXY
        assert coerce('strategy', MappingStrategy.EXACT) is MappingStrategy.EXACT

    def test_enum_choices(self):
        with pytest.raises(ConfigError) as exc_info:
            coerce('strategy', 'nearest')
        assert "is not one of exact, mined, pm-mined" in str(exc_info.value)

    def test_not_an_integer(self):
        with pytest.raises(ConfigError) as exc_info:
            coerce('epochs', 2.5)
        assert "expected an integer" in str(exc_info.value)

    def test_not_a_number(self):
        with pytest.raises(ConfigError) as exc_info:
            coerce('alpha', "strong")
        assert "expected a number" in str(exc_info.value)

    def test_bad_number_list(self):
        with pytest.raises(ConfigError) as exc_info:
            coerce('alpha_grid', "0.5,lots")
        assert "alpha_grid" in str(exc_info.value)

    def test_bool_is_strict(self):
        with pytest.raises(ConfigError) as exc_info:
            coerce('plain', "yes")
        assert "true or false" in str(exc_info.value)

    def test_unknown_key(self):
        with pytest.raises(UnknownConfigKeyError) as exc_info:
            coerce('lr', 0.1)
        assert exc_info.value.key == 'lr'
        assert "Unknown config key: lr" in str(exc_info.value)


class TestConfigFiles:
    """Test reading TOML configs and manifests."""

    def test_flat_toml(self, write_text):
        path = write_text("run.toml", 'alpha = 0.5\nstrategy = "exact"\ndelta = ["d.ckpt"]\n')
        assert read_config_file(path) == {'alpha': 0.5, 'strategy': 'exact', 'delta': ['d.ckpt']}

    def test_nested_table(self, write_text):
        with pytest.raises(ConfigError) as exc_info:
            read_config_file(write_text("run.toml", "[train]\nepochs = 2\n"))
        assert "config is flat" in str(exc_info.value)

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigError) as exc_info:
            read_config_file(tmp_path / "absent.toml")
        assert "Config file not found" in str(exc_info.value)

    def test_unreadable(self, write_text):
        with pytest.raises(ConfigError) as exc_info:
            read_config_file(write_text("run.toml", "alpha = = 1\n"))
        assert "unreadable config" in str(exc_info.value)

    def test_manifest_without_config(self, write_text):
        with pytest.raises(ConfigError):
            read_config_file(write_text("manifest.json", '{"artifacts": {}}'))


class TestLoadRunConfig:
    """Test layering of defaults, config file and flags."""

    def test_defaults(self):
        cfg = load_run_config('gen-data')
        assert cfg == RunConfig('gen-data')

    def test_flag_overrides_file(self, write_text):
        path = write_text("run.toml", 'size = 10\nkind = "forget-retain-facts"\n')
        cfg = load_run_config('gen-data', path, {'size': 4})
        assert cfg.size == 4
        assert cfg.kind is TaskKind.FORGET_RETAIN_FACTS

    def test_unknown_key_in_file(self, write_text):
        with pytest.raises(UnknownConfigKeyError) as exc_info:
            load_run_config('gen-data', write_text("run.toml", "sizes = 3\n"))
        assert "sizes" in str(exc_info.value)

    def test_missing_input(self, tmp_path: Path):
        with pytest.raises(ConfigError) as exc_info:
            load_run_config('pretrain', overrides={'data': tmp_path / "absent.jsonl"})
        assert "data: file not found" in str(exc_info.value)

    def test_out_dir_may_not_exist(self, tmp_path: Path):
        cfg = load_run_config('gen-data', overrides={'out_dir': tmp_path / "new"})
        assert cfg.out_dir == tmp_path / "new"

    def test_task_mismatch(self, write_text):
        with pytest.raises(ConfigError) as exc_info:
            load_run_config('gen-data', write_text("run.toml", 'task = "eval"\n'))
        assert "Config is for task 'eval'" in str(exc_info.value)

    def test_unknown_task(self):
        with pytest.raises(ConfigError):
            load_run_config('sing')

    def test_require(self):
        with pytest.raises(ConfigError) as exc_info:
            RunConfig('map-vocab').require('vocab', 'delta_vocab')
        assert "map-vocab needs --vocab, --delta-vocab" in str(exc_info.value)


class TestManifest:
    """Test run manifests and replay."""

    def test_write_and_replay(self, tmp_path: Path, write_text):
        artifact = write_text("data.jsonl", '{"prompt": "Q: a", "response": " b"}\n')
        cfg = load_run_config('gen-data', overrides={
            'out_dir': tmp_path / "run", 'size': 5, 'alpha_grid': "0.5,1.0", 'data': artifact,
        })
        manifest = Manifest(cfg)
        manifest.add(artifact)
        path = manifest.write()
        assert path == tmp_path / "run" / MANIFEST_NAME

        written = json.loads(path.read_text(encoding='utf-8'))
        assert written['config']['size'] == 5
        assert written['config']['kind'] == 'instruction-format'
        assert written['seeds'] == {'run': 0}
        assert list(written['artifacts']) == [str(artifact)]
        assert len(written['artifacts'][str(artifact)]) == 64
        assert 'torch' in written['versions']

        assert load_run_config('gen-data', path) == cfg
