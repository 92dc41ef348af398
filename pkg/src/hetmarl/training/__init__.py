from .advantages import discounted_returns, gae
from .config import DESK_PROFILE, PAPER_PROFILE, PROFILES, TrainConfig, apply_profile
from .ppo import Adam, TrainMetrics, TrainingAbort, normalize_advantages, ppo_update
from .rollout import RolloutBatch, collect_rollouts, make_rollout_env
from .trainer import Trainer, train
