"""Checkpoint format: JSON manifest + flat little-endian float32 tensors.

Layout of the .bin file:

    magic "HMRLCKPT" | u32 manifest length | manifest JSON (utf-8) | data

where data is the concatenation of each named tensor as float32 little
endian, in the manifest's ``tensors`` order.  Weights are stored as float32,
so load(save(params)) equals the float32 cast of the originals and
save(load(save(params))) is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .model import ModelConfig, ModelParams, ObsLayout

MAGIC = b"HMRLCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: ModelParams, scenario_id: str,
                    typing_mode: str = "none", iteration: int = 0,
                    rng_state: dict | None = None) -> None:
    named = model.named_parameters()
    tensors = [{"name": k, "shape": list(v.data.shape)} for k, v in named.items()]
    manifest = {
        "format_version": FORMAT_VERSION,
        "scenario_id": scenario_id,
        "typing_mode": typing_mode,
        "iteration": iteration,
        "sharing_mode": model.sharing_mode,
        "n_agents": model.n_agents,
        "layout": {
            "obs_dim": model.layout.obs_dim,
            "pos": [model.layout.pos.start, model.layout.pos.stop],
            "vel": [model.layout.vel.start, model.layout.vel.stop],
            "act_dim": model.layout.act_dim,
        },
        "model": {
            "hidden": model.config.hidden,
            "embed": model.config.embed,
            "aggregation": model.config.aggregation,
        },
        "rng_state": rng_state,
        "tensors": tensors,
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.uint32(len(blob)).astype("<u4").tobytes())
        f.write(blob)
        for k, _ in ((t["name"], t) for t in tensors):
            f.write(named[k].data.astype("<f4").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    """Returns the reconstructed model and the manifest."""
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    off = len(MAGIC)
    (mlen,) = np.frombuffer(raw[off:off + 4], dtype="<u4")
    off += 4
    manifest = json.loads(raw[off:off + int(mlen)].decode("utf-8"))
    off += int(mlen)
    if manifest["format_version"] != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {manifest['format_version']}")

    layout = ObsLayout(
        obs_dim=manifest["layout"]["obs_dim"],
        pos=slice(*manifest["layout"]["pos"]),
        vel=slice(*manifest["layout"]["vel"]),
        act_dim=manifest["layout"]["act_dim"],
    )
    cfg = ModelConfig(sharing_mode=manifest["sharing_mode"],
                      hidden=manifest["model"]["hidden"],
                      embed=manifest["model"]["embed"],
                      aggregation=manifest["model"]["aggregation"])
    values: dict[str, np.ndarray] = {}
    for t in manifest["tensors"]:
        shape = tuple(t["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw[off:off + 4 * count], dtype="<f4").reshape(shape)
        values[t["name"]] = arr.astype(np.float64)
        off += 4 * count

    n = manifest["n_agents"]
    if cfg.sharing_mode == "shared":
        one = {k.removeprefix("shared/"): Tensor(v, requires_grad=True, name=k)
               for k, v in values.items()}
        sets = [one] * n
    else:
        sets = []
        for i in range(n):
            prefix = f"agent{i}/"
            sets.append({k.removeprefix(prefix): Tensor(v, requires_grad=True, name=k)
                         for k, v in values.items() if k.startswith(prefix)})
    model = ModelParams(layout=layout, config=cfg, agent_sets=sets)
    return model, manifest
