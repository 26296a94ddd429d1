from pathlib import Path

import pytest

from blv.balancing.histogram import FrequencySource
from blv.balancing.loss import LossMode
from blv.config import SEED_ENV, apply_overrides, config_hash, load_experiment, resolve
from blv.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


class TestResolve:
    def test_defaults_filled(self, small_config):
        resolved = resolve(small_config)
        assert resolved["noise"]["clamp_rule"] == "clamp-raw"
        assert resolved["schedule"]["sigma0"] == resolved["noise"]["sigma"]
        assert resolved["train"]["learning_rate"] == 0.05
        assert resolved["split"]["labeled_fraction"] == 1.0

    def test_missing_epochs(self, small_config):
        del small_config["train"]["epochs"]
        with pytest.raises(ConfigError) as err:
            resolve(small_config)
        assert "train.epochs" in str(err.value)

    def test_unknown_key(self, small_config):
        small_config["noise"]["variance"] = 3
        with pytest.raises(ConfigError) as err:
            resolve(small_config)
        assert err.value.key == "noise.variance"

    def test_unknown_section(self, small_config):
        small_config["optimizer"] = {}
        with pytest.raises(ConfigError) as err:
            resolve(small_config)
        assert err.value.key == "optimizer"

    def test_wrong_type(self, small_config):
        small_config["train"]["epochs"] = "diez"
        with pytest.raises(ConfigError) as err:
            resolve(small_config)
        assert err.value.key == "train.epochs"

    def test_module_invariants_revalidated(self, small_config):
        small_config["schedule"] = {"schedule_mode": "temporal", "t_mid": 10, "t_end": 5}
        with pytest.raises(ConfigError) as err:
            resolve(small_config)
        assert err.value.key == "schedule"

    def test_bad_enum(self, small_config):
        small_config["train"]["mode"] = "focal"
        with pytest.raises(ConfigError):
            resolve(small_config)

    def test_tail_defaults_to_rarest(self, small_config):
        del small_config["metrics"]
        assert resolve(small_config)["metrics"]["tail_classes"] == [2]

    def test_tail_out_of_range(self, small_config):
        small_config["metrics"]["tail_classes"] = [3]
        with pytest.raises(ConfigError) as err:
            resolve(small_config)
        assert err.value.key == "metrics.tail_classes"

    def test_echo_reproduces(self, small_config):
        resolved = resolve(small_config)
        assert resolve(resolved) == resolved
        assert config_hash(resolve(resolved)) == config_hash(resolved)


class TestSeed:
    def test_config_seed(self, small_config, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "9")
        assert resolve(small_config)["train"]["seed"] == 0

    def test_env_seed(self, small_config, monkeypatch):
        del small_config["train"]["seed"]
        monkeypatch.setenv(SEED_ENV, "9")
        assert resolve(small_config)["train"]["seed"] == 9

    def test_argument_wins(self, small_config, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "9")
        assert resolve(small_config, seed=7)["train"]["seed"] == 7

    def test_fallback_zero(self, small_config, monkeypatch):
        del small_config["train"]["seed"]
        monkeypatch.delenv(SEED_ENV, raising=False)
        assert resolve(small_config)["train"]["seed"] == 0

    def test_bad_env_seed(self, small_config, monkeypatch):
        del small_config["train"]["seed"]
        monkeypatch.setenv(SEED_ENV, "siete")
        with pytest.raises(ConfigError):
            resolve(small_config)


class TestOverrides:
    def test_yaml_values(self, small_config):
        out = apply_overrides(small_config, ["train.epochs=9", "noise.family=uniform", "metrics.tail_classes=[1, 2]"])
        assert out["train"]["epochs"] == 9
        assert out["noise"]["family"] == "uniform"
        assert out["metrics"]["tail_classes"] == [1, 2]
        assert small_config["train"]["epochs"] == 4

    def test_new_section(self, small_config):
        out = apply_overrides(small_config, ["split.labeled_fraction=0.5"])
        assert out["split"] == {"labeled_fraction": 0.5}

    @pytest.mark.parametrize("item", ["train.epochs", "epochs=3", "a.b.c=1"])
    def test_malformed(self, small_config, item):
        with pytest.raises(ConfigError):
            apply_overrides(small_config, [item])


class TestLoadExperiment:
    def test_builds_typed_config(self, small_config, write_config):
        exp = load_experiment(write_config(small_config), ["train.frequency_source=pseudo-epoch", "split.labeled_fraction=0.5"])
        assert exp.train.mode is LossMode.BLV
        assert exp.train.frequency_source is FrequencySource.PSEUDO_EPOCH
        assert exp.seeds == (0, 1)
        assert exp.num_classes == 3
        assert exp.eval_counts == (120, 30, 8)

    def test_error_names_file_and_key(self, small_config, write_config):
        del small_config["train"]["epochs"]
        path = write_config(small_config)
        with pytest.raises(ConfigError) as err:
            load_experiment(path)
        assert str(path) in str(err.value)
        assert "train.epochs" in str(err.value)

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("dataset:\n  counts: [50, 5]\ntrain:\n  epochs: 2\n", encoding="utf-8")
        exp = load_experiment(path)
        assert exp.blobs.counts == (50, 5)
        assert exp.train.tail_classes == (1,)

    def test_shipped_configs_load(self):
        for name in ("longtail_toy.json", "semi_supervised.json", "uda_proxy.json"):
            exp = load_experiment(CONFIGS / name)
            assert exp.blobs.counts == (2000, 200, 20)
