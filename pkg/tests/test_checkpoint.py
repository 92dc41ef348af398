"""Checkpoint serialization: round trips, manifest, corruption handling."""

import numpy as np
import pytest

from hetmarl.nn.checkpoint import (
    MAGIC,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from hetmarl.nn.model import ModelConfig, ObsLayout, init_model

LAYOUT = ObsLayout(obs_dim=6, pos=slice(0, 2), vel=slice(2, 4), act_dim=2)


def fresh(mode="per_agent", seed=0):
    return init_model(np.random.default_rng(seed), LAYOUT,
                      ModelConfig(sharing_mode=mode, hidden=8, embed=8))


@pytest.mark.parametrize("mode", ["shared", "per_agent"])
def test_round_trip_matches_f32_cast(tmp_path, mode):
    model = fresh(mode)
    path = tmp_path / "ck.bin"
    save_checkpoint(path, model, "B", iteration=7)
    loaded, manifest = load_checkpoint(path)
    assert manifest["scenario_id"] == "B"
    assert manifest["iteration"] == 7
    assert manifest["sharing_mode"] == mode
    orig = model.named_parameters()
    got = loaded.named_parameters()
    assert set(orig) == set(got)
    for k in orig:
        assert np.array_equal(got[k].data, orig[k].data.astype("<f4").astype(np.float64))


def test_save_load_save_byte_identical(tmp_path):
    model = fresh()
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_checkpoint(p1, model, "A")
    loaded, _ = load_checkpoint(p1)
    save_checkpoint(p2, loaded, "A")
    assert p1.read_bytes() == p2.read_bytes()


def test_shared_aliasing_survives_round_trip(tmp_path):
    model = fresh("shared")
    path = tmp_path / "ck.bin"
    save_checkpoint(path, model, "A")
    loaded, _ = load_checkpoint(path)
    assert loaded.agent(0) is loaded.agent(1)


def test_layout_and_config_round_trip(tmp_path):
    model = fresh()
    path = tmp_path / "ck.bin"
    save_checkpoint(path, model, "passage_asym", typing_mode="explicit_index")
    loaded, manifest = load_checkpoint(path)
    assert loaded.layout == LAYOUT
    assert loaded.config == model.config
    assert manifest["typing_mode"] == "explicit_index"


def test_rng_state_persisted(tmp_path):
    model = fresh()
    state = np.random.default_rng(3).bit_generator.state
    path = tmp_path / "ck.bin"
    save_checkpoint(path, model, "A", rng_state=state)
    _, manifest = load_checkpoint(path)
    r = np.random.default_rng()
    r.bit_generator.state = manifest["rng_state"]
    ref = np.random.default_rng(3)
    assert r.integers(2**31) == ref.integers(2**31)


def test_magic_checked(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_version_checked(tmp_path):
    model = fresh()
    path = tmp_path / "ck.bin"
    save_checkpoint(path, model, "A")
    raw = bytearray(path.read_bytes())
    # bump the version field inside the manifest
    broken = raw.replace(b'"format_version": 1', b'"format_version": 9')
    path.write_bytes(bytes(broken))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_file_starts_with_magic(tmp_path):
    model = fresh()
    path = tmp_path / "ck.bin"
    save_checkpoint(path, model, "A")
    assert path.read_bytes()[:8] == MAGIC
