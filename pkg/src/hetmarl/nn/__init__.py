from .autodiff import Tensor, concat, exp, log, maximum, minimum, tanh, tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import mlp_forward, mlp_params, orthogonal
from .model import (
    ModelConfig,
    ModelParams,
    ObsLayout,
    edge_features,
    encode,
    gaussian_kl,
    gnn_layer,
    init_model,
    log_prob_and_entropy,
    sample_action,
    team_forward,
)
