"""Policy/value model: encoder, message-passing layer, Gaussian heads.

Each agent encodes its non-absolute observation entries, exchanges messages
with communication neighbors using relative position/velocity edge features
(making the whole pipeline translation invariant), and decodes the hidden
state into an action distribution and a value estimate.

Parameter sharing is the only difference between the two modes: ``shared``
aliases one parameter set across all agents, ``per_agent`` gives every agent
its own set that is free to diverge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, concat
from .layers import mlp_forward, mlp_params

LOG_STD_MIN, LOG_STD_MAX = -10.0, 2.0
LOG_2PI = float(np.log(2.0 * np.pi))

SHARING_MODES = ("shared", "per_agent")
AGGREGATIONS = ("sum", "mean")


@dataclass(frozen=True)
class ObsLayout:
    """Where the absolute position and velocity live in the observation."""

    obs_dim: int
    pos: slice
    vel: slice
    act_dim: int

    @classmethod
    def from_env(cls, env) -> "ObsLayout":
        return cls(env.full_obs_dim, env.pos_slice, env.vel_slice, env.act_dim)

    @property
    def pos_dim(self) -> int:
        return self.pos.stop - self.pos.start

    @property
    def vel_dim(self) -> int:
        return self.vel.stop - self.vel.start

    @property
    def edge_dim(self) -> int:
        return self.pos_dim + self.vel_dim

    @property
    def encoder_indices(self) -> np.ndarray:
        """All entries except the absolute position."""
        keep = np.ones(self.obs_dim, dtype=bool)
        keep[self.pos] = False
        return np.flatnonzero(keep)

    @property
    def encoder_dim(self) -> int:
        return len(self.encoder_indices)


@dataclass(frozen=True)
class ModelConfig:
    sharing_mode: str = "per_agent"
    hidden: int = 64
    embed: int = 64
    aggregation: str = "sum"

    def __post_init__(self):
        if self.sharing_mode not in SHARING_MODES:
            raise ValueError(f"unknown sharing mode {self.sharing_mode!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class ModelParams:
    """All learnable weights plus the sharing mode.

    ``agent_sets`` has one dict per agent; in shared mode every entry is the
    same dict object, so a single optimizer step updates all agents at once.
    """

    layout: ObsLayout
    config: ModelConfig
    agent_sets: list[dict[str, Tensor]] = field(default_factory=list)

    @property
    def n_agents(self) -> int:
        return len(self.agent_sets)

    @property
    def sharing_mode(self) -> str:
        return self.config.sharing_mode

    def agent(self, i: int) -> dict[str, Tensor]:
        return self.agent_sets[i]

    def named_parameters(self) -> dict[str, Tensor]:
        """Flat unique name -> tensor map (one set in shared mode)."""
        out: dict[str, Tensor] = {}
        if self.sharing_mode == "shared":
            for k, t in self.agent_sets[0].items():
                out[f"shared/{k}"] = t
        else:
            for i, s in enumerate(self.agent_sets):
                for k, t in s.items():
                    out[f"agent{i}/{k}"] = t
        return out

    def zero_grad(self) -> None:
        for t in self.named_parameters().values():
            t.grad = None


def _one_agent_params(rng: np.random.Generator, layout: ObsLayout,
                      cfg: ModelConfig) -> dict[str, Tensor]:
    h, e = cfg.hidden, cfg.embed
    p: dict[str, Tensor] = {}
    p.update(mlp_params(rng, [layout.encoder_dim, h, h, e], prefix="enc"))
    p.update(mlp_params(rng, [e, h, h], prefix="psi"))
    p.update(mlp_params(rng, [e + layout.edge_dim, h, h], prefix="phi"))
    # near-zero initial actions for stable early exploration
    p.update(mlp_params(rng, [h, h, layout.act_dim], final_gain=0.01, prefix="pol"))
    p.update(mlp_params(rng, [h, h, 1], prefix="val"))
    p["log_std"] = Tensor(np.zeros(layout.act_dim), requires_grad=True, name="log_std")
    return p


def init_model(rng: np.random.Generator, layout: ObsLayout, cfg: ModelConfig,
               n_agents: int = 2) -> ModelParams:
    if cfg.sharing_mode == "shared":
        one = _one_agent_params(rng, layout, cfg)
        sets = [one] * n_agents
    else:
        sets = [_one_agent_params(rng, layout, cfg) for _ in range(n_agents)]
    return ModelParams(layout=layout, config=cfg, agent_sets=sets)


def edge_features(p_i, v_i, p_j, v_j) -> np.ndarray:
    """(p_i - p_j) || (v_i - v_j), antisymmetric under i <-> j."""
    return np.concatenate([np.asarray(p_i) - np.asarray(p_j),
                           np.asarray(v_i) - np.asarray(v_j)], axis=-1)


def encode(params: dict[str, Tensor], layout: ObsLayout, obs: np.ndarray) -> Tensor:
    """Embed the non-absolute observation entries, (B, embed)."""
    x = np.asarray(obs)[..., layout.encoder_indices]
    return mlp_forward(params, "enc", Tensor(x))


def gnn_layer(z: list[Tensor], edges: dict[tuple[int, int], np.ndarray],
              adjacency: np.ndarray, params: dict[str, Tensor], agent: int,
              aggregation: str = "sum") -> Tensor:
    """h_i: self term plus aggregated messages from graph neighbors.

    z: per-agent embeddings (B, embed); edges[(i, j)]: (B, edge_dim);
    adjacency: (B, n, n) boolean mask.
    """
    i = agent
    n = len(z)
    h = mlp_forward(params, "psi", z[i])
    count = np.zeros(adjacency.shape[0])
    msg_sum: Tensor | None = None
    for j in range(n):
        if j == i:
            continue
        mask = adjacency[:, i, j]
        if not np.any(mask):
            continue
        if (i, j) not in edges:
            raise KeyError(f"missing edge features for graph neighbors ({i}, {j})")
        inp = concat([z[j], Tensor(edges[(i, j)])], axis=-1)
        m = mlp_forward(params, "phi", inp) * mask.astype(np.float64)[:, None]
        msg_sum = m if msg_sum is None else msg_sum + m
        count = count + mask
    if msg_sum is not None:
        if aggregation == "mean":
            msg_sum = msg_sum * (1.0 / np.maximum(count, 1.0))[:, None]
        h = h + msg_sum
    return h


def team_forward(model: ModelParams, obs: np.ndarray, adjacency: np.ndarray):
    """Full pipeline for all agents over a batch of team observations.

    obs: (n, B, obs_dim); adjacency: (B, n, n).
    Returns per agent (mean (B, act), log_std (act,), value (B,)) tensors.
    """
    layout, cfg = model.layout, model.config
    n = model.n_agents
    z = [encode(model.agent(i), layout, obs[i]) for i in range(n)]
    pos = [obs[i][..., layout.pos] for i in range(n)]
    vel = [obs[i][..., layout.vel] for i in range(n)]
    edges = {
        (i, j): edge_features(pos[i], vel[i], pos[j], vel[j])
        for i in range(n) for j in range(n) if i != j
    }
    outs = []
    for i in range(n):
        p = model.agent(i)
        h = gnn_layer(z, edges, adjacency, p, i, cfg.aggregation)
        mean = mlp_forward(p, "pol", h)
        value = mlp_forward(p, "val", h).reshape(-1)
        log_std = p["log_std"].clip(LOG_STD_MIN, LOG_STD_MAX)
        outs.append((mean, log_std, value))
    return outs


# --------------------------------------------------------- Gaussian helpers

def log_prob_and_entropy(mean: Tensor, log_std: Tensor, action: np.ndarray):
    """Diagonal-Gaussian log density of ``action`` rows and analytic entropy.

    mean: (B, d); log_std: (d,); action: (B, d).
    Returns (log_prob (B,), entropy scalar Tensor).
    """
    a = np.asarray(action)
    d = a.shape[-1]
    from .autodiff import exp
    inv_std = exp(-log_std)
    zscore = (Tensor(a) - mean) * inv_std
    log_prob = (zscore**2).sum(axis=-1) * -0.5 - log_std.sum() - 0.5 * d * LOG_2PI
    entropy = log_std.sum() + 0.5 * d * (1.0 + LOG_2PI)
    return log_prob, entropy


def gaussian_kl(old_mean: np.ndarray, old_log_std: np.ndarray,
                new_mean: Tensor, new_log_std: Tensor) -> Tensor:
    """KL(old || new) per row, (B,).  Old distribution held constant."""
    from .autodiff import exp
    var_ratio = exp(2.0 * (Tensor(old_log_std) - new_log_std))
    mean_term = ((Tensor(old_mean) - new_mean)**2) * exp(-2.0 * new_log_std)
    per_dim = new_log_std - old_log_std + 0.5 * (var_ratio + mean_term) - 0.5
    return per_dim.sum(axis=-1)


def sample_action(mean: np.ndarray, log_std: np.ndarray,
                  rng: np.random.Generator) -> np.ndarray:
    return mean + np.exp(log_std) * rng.standard_normal(mean.shape)
