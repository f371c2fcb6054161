from .baselines import (
    frontier_guided_stochastic_policy,
    nearest_frontier_policy,
    rrt_nbv_policy,
    rrt_nbv_search,
    utility_frontier_policy,
)
from .bridge import ExternalPolicyBridge, JsonLineClient, serialize_observation
from .env import EnvTransition, ExplorationEnv
from .goals import GlobalGoal
from .reward import RewardBreakdown, compute_reward, frontier_term

__all__ = [
    "GlobalGoal",
    "RewardBreakdown",
    "compute_reward",
    "frontier_term",
    "nearest_frontier_policy",
    "utility_frontier_policy",
    "rrt_nbv_policy",
    "rrt_nbv_search",
    "frontier_guided_stochastic_policy",
    "ExplorationEnv",
    "EnvTransition",
    "ExternalPolicyBridge",
    "JsonLineClient",
    "serialize_observation",
]
