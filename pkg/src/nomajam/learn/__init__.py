"""Reinforcement-learning agents for the two base stations."""

from .agents import (
    DqnAgent,
    EpsSchedule,
    QTable,
    TabularAgent,
    encode_observation,
    hot_boot,
    load_checkpoint,
    observation_for,
    ql_update,
    quantize_sinr,
    save_checkpoint,
    select_action,
    selfish_reward,
    SINR_HI_DB,
    SINR_LEVELS,
    SINR_LO_DB,
)
from .nn import (
    MlpParams,
    Transition,
    dqn_train_step,
    init_mlp,
    mlp_backward,
    mlp_forward,
    mlp_forward_batch,
    target_sync,
)

__all__ = [
    "DqnAgent",
    "EpsSchedule",
    "MlpParams",
    "QTable",
    "SINR_HI_DB",
    "SINR_LEVELS",
    "SINR_LO_DB",
    "TabularAgent",
    "Transition",
    "dqn_train_step",
    "encode_observation",
    "hot_boot",
    "init_mlp",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "mlp_forward_batch",
    "observation_for",
    "ql_update",
    "quantize_sinr",
    "save_checkpoint",
    "select_action",
    "selfish_reward",
    "target_sync",
]
