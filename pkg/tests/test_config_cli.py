"""Config parsing, resolved snapshots, trainer outputs, CLI contracts."""

import csv
import json

import numpy as np
import pytest

from hetmarl.cli import main, parse_levels
from hetmarl.experiment import (
    ConfigParseError,
    parse_config,
    write_resolved_config,
)
from hetmarl.training.trainer import Trainer

BASE_CFG = """\
seed = 3

[scenario]
scenario_id = A
horizon = 8

[model]
sharing_mode = hetgppo
hidden = 8
embed = 8

[train]
batch_size = 64
minibatch_size = 32
sgd_iters = 2
n_env_workers = 1
envs_per_worker = 4
iterations = 2

[io]
output_dir = {out}
checkpoint_every = 10
"""


def write_cfg(tmp_path, text=None, name="exp.cfg", out=None):
    p = tmp_path / name
    out = out or str(tmp_path / "run")
    p.write_text((text or BASE_CFG).format(out=out))
    return p


class TestParser:
    def test_full_parse(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path))
        assert cfg.seed == 3
        assert cfg.spec.scenario_id == "A"
        assert cfg.spec.horizon == 8
        assert cfg.model.sharing_mode == "per_agent"
        assert cfg.train.batch_size == 64
        assert cfg.train.seed == 3

    def test_sharing_aliases(self, tmp_path):
        text = BASE_CFG.replace("hetgppo", "gppo")
        cfg = parse_config(write_cfg(tmp_path, text))
        assert cfg.model.sharing_mode == "shared"
        assert cfg.train.sharing_mode == "shared"

    def test_misspelled_key_rejected_with_location(self, tmp_path):
        text = BASE_CFG.replace("batch_size = 64", "bath_size = 64")
        p = write_cfg(tmp_path, text)
        with pytest.raises(ConfigParseError) as e:
            parse_config(p)
        assert "bath_size" in str(e.value)
        assert f"{p}:" in str(e.value)

    def test_unknown_section_rejected(self, tmp_path):
        p = write_cfg(tmp_path, BASE_CFG + "\n[turbo]\nboost = 1\n")
        with pytest.raises(ConfigParseError):
            parse_config(p)

    def test_bad_value_reports_line(self, tmp_path):
        text = BASE_CFG.replace("seed = 3", "seed = three")
        with pytest.raises(ConfigParseError) as e:
            parse_config(write_cfg(tmp_path, text))
        assert ":1" in str(e.value)

    def test_duplicate_key_rejected(self, tmp_path):
        text = BASE_CFG.replace("hidden = 8", "hidden = 8\nhidden = 16")
        with pytest.raises(ConfigParseError):
            parse_config(write_cfg(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigParseError):
            parse_config(tmp_path / "nope.cfg")

    def test_scenario_id_required(self, tmp_path):
        text = BASE_CFG.replace("scenario_id = A\n", "")
        with pytest.raises(ConfigParseError):
            parse_config(write_cfg(tmp_path, text))

    def test_paper_profile_then_override(self, tmp_path):
        text = BASE_CFG.replace(
            "batch_size = 64",
            "profile = paper\nbatch_size = 64")
        cfg = parse_config(write_cfg(tmp_path, text))
        # explicit keys win over the profile
        assert cfg.train.batch_size == 64
        # untouched profile values survive
        assert cfg.train.lr == 5e-5
        assert cfg.train.sgd_iters == 2   # explicit below the profile line

    def test_physics_section(self, tmp_path):
        text = BASE_CFG + "\n[physics]\ndt = 0.05\nlinear_friction = 0.5\n"
        cfg = parse_config(write_cfg(tmp_path, text))
        assert cfg.physics.dt == 0.05
        assert cfg.physics.linear_friction == 0.5

    def test_tuple_field(self, tmp_path):
        text = BASE_CFG.replace("horizon = 8", "horizon = 8\nmasses = 2.0, 1.0")
        cfg = parse_config(write_cfg(tmp_path, text))
        assert cfg.spec.masses == (2.0, 1.0)

    def test_invalid_scenario_combo_rejected(self, tmp_path):
        text = BASE_CFG.replace("scenario_id = A",
                                "scenario_id = B\ncorridor_width = 0.9")
        with pytest.raises(ConfigParseError):
            parse_config(write_cfg(tmp_path, text))


class TestResolvedSnapshot:
    def test_round_trip_equality(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path))
        snap = tmp_path / "resolved.cfg"
        write_resolved_config(cfg, snap)
        cfg2 = parse_config(snap)
        assert cfg2.seed == cfg.seed
        assert cfg2.spec == cfg.spec
        assert cfg2.model == cfg.model
        assert cfg2.train == cfg.train
        assert cfg2.eval == cfg.eval
        assert cfg2.physics == cfg.physics

    def test_snapshot_reproduces_training(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path))
        snap = tmp_path / "resolved.cfg"
        write_resolved_config(cfg, snap)
        cfg2 = parse_config(snap)
        t1 = Trainer(cfg.spec, cfg.train, tmp_path / "r1", model_cfg=cfg.model)
        t1.run(iterations=1)
        t2 = Trainer(cfg2.spec, cfg2.train, tmp_path / "r2", model_cfg=cfg2.model)
        t2.run(iterations=1)
        for k, t in t1.model.named_parameters().items():
            assert np.array_equal(t.data, t2.model.named_parameters()[k].data)


class TestTrainerOutputs:
    def test_metrics_csv_and_checkpoints(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path))
        out = tmp_path / "run"
        trainer = Trainer(cfg.spec, cfg.train, out, model_cfg=cfg.model)
        trainer.run(iterations=2)
        with open(out / "metrics.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2
        assert rows[0]["iteration"] == "1"
        assert set(rows[0]) == {
            "iteration", "episodes", "mean_episode_reward", "success_rate",
            "policy_loss", "value_loss", "mean_kl", "entropy", "grad_norm",
            "wall_time_s"}
        assert (out / "ck_000000.bin").exists()
        assert (out / "ck_000002.bin").exists()
        latest = (out / "latest").read_text().strip()
        assert latest == "ck_000002.bin"

    def test_stop_fn_ends_early(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path))
        trainer = Trainer(cfg.spec, cfg.train, tmp_path / "run",
                          model_cfg=cfg.model)
        trainer.run(iterations=5, stop_fn=lambda m: m.iteration >= 1)
        assert len(trainer.history) == 1


class TestLevels:
    def test_parse_levels(self):
        assert parse_levels("0:1:3") == [0.0, 0.5, 1.0]
        assert parse_levels("0.5:0.5:1") == [0.5]

    def test_bad_levels(self):
        with pytest.raises(ValueError):
            parse_levels("0:1")
        with pytest.raises(ValueError):
            parse_levels("0:1:0")


class TestCli:
    @pytest.fixture()
    def trained(self, tmp_path):
        cfg_path = write_cfg(tmp_path, out=str(tmp_path / "run"))
        assert main(["train", "--config", str(cfg_path)]) == 0
        return tmp_path, tmp_path / "run"

    def test_train_outputs(self, trained):
        tmp_path, out = trained
        assert (out / "metrics.csv").exists()
        assert (out / "training.png").exists()
        assert (out / "config.resolved.cfg").exists()
        assert (out / "latest").exists()

    def test_evaluate(self, trained, capsys):
        tmp_path, out = trained
        ck = out / (out / "latest").read_text().strip()
        rc = main(["evaluate", "--checkpoint", str(ck), "--runs", "2",
                   "--out", str(tmp_path / "ev")])
        assert rc == 0
        data = json.loads((tmp_path / "ev" / "evaluation.json").read_text())
        assert data["n_runs"] == 2
        assert np.isfinite(data["mean_reward"])

    def test_sweep_writes_csv_and_png(self, trained):
        tmp_path, out = trained
        ck = out / (out / "latest").read_text().strip()
        rc = main(["sweep", "--checkpoint", str(ck), "--levels", "0:0.4:3",
                   "--runs", "2", "--anchor", "5.0",
                   "--out", str(tmp_path / "sw")])
        assert rc == 0
        lines = (tmp_path / "sw" / "noise_sweep.csv").read_text().splitlines()
        assert lines[0] == "noise,mean,std"
        assert len(lines) == 4
        assert (tmp_path / "sw" / "noise_sweep.png").exists()

    def test_vector_field(self, trained):
        tmp_path, out = trained
        ck = out / (out / "latest").read_text().strip()
        rc = main(["vector-field", "--checkpoint", str(ck),
                   "--out", str(tmp_path / "vf")])
        assert rc == 0
        assert (tmp_path / "vf" / "vector_field.csv").exists()
        assert (tmp_path / "vf" / "vector_field.png").exists()

    def test_rollout(self, trained):
        tmp_path, out = trained
        ck = out / (out / "latest").read_text().strip()
        rc = main(["rollout", "--checkpoint", str(ck),
                   "--out", str(tmp_path / "ro")])
        assert rc == 0
        lines = (tmp_path / "ro" / "rollout.jsonl").read_text().splitlines()
        assert json.loads(lines[-1])["terminal"] is True
        assert (tmp_path / "ro" / "rollout.png").exists()

    def test_inspect_checkpoint(self, trained, capsys):
        tmp_path, out = trained
        ck = out / (out / "latest").read_text().strip()
        assert main(["inspect-checkpoint", "--checkpoint", str(ck)]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["scenario_id"] == "A"
        assert data["n_parameters"] > 0

    def test_no_subcommand_exits_2(self, capsys):
        assert main([]) == 2

    def test_bad_config_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[scenario]\nscenario_id = A\nwhat = 1\n")
        assert main(["train", "--config", str(bad)]) == 1
        assert "what" in capsys.readouterr().err

    def test_missing_checkpoint_exits_1(self, tmp_path, capsys):
        missing = tmp_path / "none.bin"
        missing.write_bytes(b"garbage!")
        assert main(["evaluate", "--checkpoint", str(missing)]) == 1

    def test_vector_field_on_b_checkpoint_exits_1(self, tmp_path, capsys):
        text = BASE_CFG.replace("scenario_id = A", "scenario_id = B")
        cfg_path = write_cfg(tmp_path, text, name="b.cfg",
                             out=str(tmp_path / "runb"))
        assert main(["train", "--config", str(cfg_path)]) == 0
        out = tmp_path / "runb"
        ck = out / (out / "latest").read_text().strip()
        rc = main(["vector-field", "--checkpoint", str(ck),
                   "--out", str(tmp_path / "vfb")])
        assert rc == 1
        assert "Scenario A" in capsys.readouterr().err
