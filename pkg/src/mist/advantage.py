"""Group-relative advantage normalization for trajectory rewards."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyGroup

__all__ = ["AdvantageGroup", "group_advantages", "DEFAULT_SIGMA_EPS"]

DEFAULT_SIGMA_EPS = 1e-8


def group_advantages(
    rewards: Sequence[float], sigma_eps: float = DEFAULT_SIGMA_EPS
) -> list[float]:
    """Normalize rewards to zero mean and unit population std.

    When the population standard deviation is at or below ``sigma_eps``
    (a degenerate all-equal group) every advantage is 0 instead of
    dividing by a vanishing sigma.
    """
    if not rewards:
        raise EmptyGroup("cannot normalize an empty reward group")
    n = len(rewards)
    mean = math.fsum(rewards) / n
    sigma = math.sqrt(math.fsum((r - mean) ** 2 for r in rewards) / n)
    if sigma <= sigma_eps:
        return [0.0] * n
    return [(r - mean) / sigma for r in rewards]


@dataclass(frozen=True)
class AdvantageGroup:
    """Rewards of one sampled group together with their normalization."""

    rewards: tuple[float, ...]
    mean: float
    std: float
    advantages: tuple[float, ...]

    @classmethod
    def from_rewards(
        cls, rewards: Sequence[float], sigma_eps: float = DEFAULT_SIGMA_EPS
    ) -> "AdvantageGroup":
        advantages = group_advantages(rewards, sigma_eps)
        n = len(rewards)
        mean = math.fsum(rewards) / n
        std = math.sqrt(math.fsum((r - mean) ** 2 for r in rewards) / n)
        return cls(
            rewards=tuple(rewards),
            mean=mean,
            std=std,
            advantages=tuple(advantages),
        )
