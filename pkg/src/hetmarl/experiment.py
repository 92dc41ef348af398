"""Experiment config files: strict flat-table key/value format.

Syntax::

    # comment
    seed = 7
    [scenario]
    scenario_id = A
    masses = 4.0, 1.0
    [model]
    sharing_mode = hetgppo
    [train]
    profile = desk
    lr = 3e-4

Unknown sections or keys are rejected with the file path and line number.
``profile = paper`` loads the published training parameters verbatim before
any explicit key overrides them.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

from .envs.spec import ScenarioSpec, default_spec
from .nn.model import AGGREGATIONS, ModelConfig
from .physics import PhysicsParams
from .training.config import TrainConfig, apply_profile

SHARING_ALIASES = {"gppo": "shared", "hetgppo": "per_agent",
                   "shared": "shared", "per_agent": "per_agent"}
SHARING_NAMES = {"shared": "gppo", "per_agent": "hetgppo"}


class ConfigParseError(ValueError):
    pass


@dataclass
class EvalConfig:
    noise_levels: tuple[float, ...] = (0.0,)
    runs: int = 10
    grid_min: float = -1.0
    grid_max: float = 1.0
    grid_resolution: int = 21
    use_mean: bool = True


@dataclass
class IoConfig:
    output_dir: str = "runs/exp"
    checkpoint_every: int = 50


@dataclass
class ExperimentConfig:
    seed: int
    spec: ScenarioSpec
    model: ModelConfig
    train: TrainConfig
    eval: EvalConfig
    io: IoConfig
    physics: PhysicsParams


def _parse_value(raw: str, ftype, where: str):
    raw = raw.strip()
    try:
        if ftype is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        if ftype is str:
            return raw
        # tuples of numbers, comma separated
        if ftype is tuple or getattr(ftype, "__origin__", None) is tuple:
            return tuple(float(x) for x in raw.split(","))
        raise TypeError(f"unsupported field type {ftype}")
    except ValueError as e:
        raise ConfigParseError(f"{where}: cannot parse {raw!r} as {ftype}") from e


def _field_types(cls) -> dict:
    out = {}
    for f in dataclasses.fields(cls):
        t = f.type
        if isinstance(t, str):
            base = t.split("[")[0]
            t = {"int": int, "float": float, "str": str, "bool": bool}.get(base, tuple)
        out[f.name] = t
    return out


def _read_tables(path) -> dict[str, dict[str, tuple[str, str]]]:
    """Returns section -> key -> (raw value, "file:line")."""
    tables: dict[str, dict[str, tuple[str, str]]] = {"": {}}
    section = ""
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        where = f"{path}:{lineno}"
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if text.startswith("[") and text.endswith("]"):
            section = text[1:-1].strip()
            tables.setdefault(section, {})
            continue
        if "=" not in text:
            raise ConfigParseError(f"{where}: expected 'key = value'")
        key, val = (s.strip() for s in text.split("=", 1))
        if key in tables[section]:
            raise ConfigParseError(f"{where}: duplicate key {key!r}")
        tables[section][key] = (val, where)
    return tables


def parse_config(path) -> ExperimentConfig:
    if not Path(path).exists():
        raise ConfigParseError(f"config file not found: {path}")
    tables = _read_tables(path)
    known_sections = {"", "scenario", "model", "train", "eval", "io", "physics"}
    for sec in tables:
        if sec not in known_sections:
            raise ConfigParseError(f"{path}: unknown section [{sec}]")

    # top level: seed only
    top = dict(tables.get("", {}))
    seed_raw = top.pop("seed", ("0", f"{path}:0"))
    if top:
        key, (_, where) = next(iter(top.items()))
        raise ConfigParseError(f"{where}: unknown key {key!r}")
    seed = _parse_value(seed_raw[0], int, seed_raw[1])

    # scenario
    sc = dict(tables.get("scenario", {}))
    if "scenario_id" not in sc:
        raise ConfigParseError(f"{path}: [scenario] needs scenario_id")
    scenario_id, _ = sc.pop("scenario_id")
    types = _field_types(ScenarioSpec)
    overrides = {}
    for key, (raw, where) in sc.items():
        if key not in types or key == "scenario_id":
            raise ConfigParseError(f"{where}: unknown scenario key {key!r}")
        overrides[key] = _parse_value(raw, types[key], where)
    try:
        spec = default_spec(scenario_id, **overrides)
    except ValueError as e:
        raise ConfigParseError(f"{path}: [scenario]: {e}") from e

    # model
    mc = dict(tables.get("model", {}))
    sharing_raw, typing_mode = "hetgppo", "none"
    model_kwargs = {}
    for key, (raw, where) in mc.items():
        if key == "sharing_mode":
            if raw not in SHARING_ALIASES:
                raise ConfigParseError(f"{where}: sharing_mode must be gppo or hetgppo")
            sharing_raw = raw
        elif key == "typing_mode":
            if raw not in ("none", "explicit_index"):
                raise ConfigParseError(f"{where}: bad typing_mode {raw!r}")
            typing_mode = raw
        elif key in ("hidden", "embed"):
            model_kwargs[key] = _parse_value(raw, int, where)
        elif key == "aggregation":
            if raw not in AGGREGATIONS:
                raise ConfigParseError(f"{where}: bad aggregation {raw!r}")
            model_kwargs[key] = raw
        else:
            raise ConfigParseError(f"{where}: unknown model key {key!r}")
    model = ModelConfig(sharing_mode=SHARING_ALIASES[sharing_raw], **model_kwargs)

    # train
    tr = dict(tables.get("train", {}))
    train = TrainConfig(seed=seed, sharing_mode=model.sharing_mode,
                        typing_mode=typing_mode)
    if "profile" in tr:
        profile_raw, where = tr.pop("profile")
        try:
            train = apply_profile(train, profile_raw)
        except ValueError as e:
            raise ConfigParseError(f"{where}: {e}") from e
    types = _field_types(TrainConfig)
    updates = {}
    for key, (raw, where) in tr.items():
        if key not in types or key in ("sharing_mode", "typing_mode", "seed"):
            raise ConfigParseError(f"{where}: unknown train key {key!r}")
        updates[key] = _parse_value(raw, types[key], where)
    try:
        train = replace(train, **updates)
    except ValueError as e:
        raise ConfigParseError(f"{path}: [train]: {e}") from e

    # eval / io / physics: plain dataclass tables
    def fill(cls, section):
        obj = cls()
        types = _field_types(cls)
        updates = {}
        for key, (raw, where) in tables.get(section, {}).items():
            if key not in types:
                raise ConfigParseError(f"{where}: unknown {section} key {key!r}")
            updates[key] = _parse_value(raw, types[key], where)
        try:
            return replace(obj, **updates)
        except ValueError as e:
            raise ConfigParseError(f"{path}: [{section}]: {e}") from e

    eval_cfg = fill(EvalConfig, "eval")
    io_cfg = fill(IoConfig, "io")
    physics = fill(PhysicsParams, "physics")

    return ExperimentConfig(seed=seed, spec=spec, model=model, train=train,
                            eval=eval_cfg, io=io_cfg, physics=physics)


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def write_resolved_config(cfg: ExperimentConfig, path) -> None:
    """Snapshot every resolved value so the run can be reproduced from it."""
    lines = [f"seed = {cfg.seed}", "", "[scenario]"]
    for f in dataclasses.fields(ScenarioSpec):
        lines.append(f"{f.name} = {_fmt(getattr(cfg.spec, f.name))}")
    lines += ["", "[model]",
              f"sharing_mode = {SHARING_NAMES[cfg.model.sharing_mode]}",
              f"typing_mode = {cfg.train.typing_mode}",
              f"hidden = {cfg.model.hidden}",
              f"embed = {cfg.model.embed}",
              f"aggregation = {cfg.model.aggregation}"]
    lines += ["", "[train]"]
    for f in dataclasses.fields(TrainConfig):
        if f.name in ("sharing_mode", "typing_mode", "seed"):
            continue
        lines.append(f"{f.name} = {_fmt(getattr(cfg.train, f.name))}")
    for section, obj in (("eval", cfg.eval), ("io", cfg.io), ("physics", cfg.physics)):
        lines += ["", f"[{section}]"]
        for f in dataclasses.fields(type(obj)):
            lines.append(f"{f.name} = {_fmt(getattr(obj, f.name))}")
    Path(path).write_text("\n".join(lines) + "\n")
