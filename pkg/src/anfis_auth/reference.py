"""Adaptive score reference: mean minus stddev bootstrap, then blockwise EWMA."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

SECONDS_PER_DAY = 86_400


class Phase(enum.Enum):
    Preparing = "Preparing"
    Ready = "Ready"


@dataclass(frozen=True)
class EsbState:
    prep_len_days: float = 7.0
    block_size: int = 7
    ewma_alpha: float = 0.2
    phase: Phase = Phase.Preparing
    prep_start: int | None = None
    prep_scores: tuple[float, ...] = ()
    block_sum: float = 0.0
    block_count: int = 0
    ref: float | None = None

    def __post_init__(self):
        if not 0 < self.ewma_alpha <= 1:
            raise ValueError("ewma_alpha must lie in (0, 1]")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.prep_len_days < 0:
            raise ValueError("prep_len_days must be non-negative")
        if (self.ref is None) != (self.phase is Phase.Preparing):
            raise ValueError("ref is defined exactly in the Ready phase")

    @property
    def ready(self) -> bool:
        return self.phase is Phase.Ready


def mean_minus_std(scores) -> float:
    """Mean less the population standard deviation (0 spread for < 2 scores)."""
    n = len(scores)
    if n == 0:
        return 0.0
    mean = math.fsum(scores) / n
    if n < 2:
        return mean
    var = math.fsum((s - mean) ** 2 for s in scores) / n
    return mean - math.sqrt(var)


def esb_update(state: EsbState, as_value: float, now: int):
    """Feed one score; returns ``(state, ref)`` with ``ref`` None while preparing.

    In the Ready phase the returned ref is the one in force after this score.
    """
    if state.phase is Phase.Preparing:
        start = now if state.prep_start is None else state.prep_start
        if now - start < state.prep_len_days * SECONDS_PER_DAY:
            return replace(state, prep_start=start,
                           prep_scores=state.prep_scores + (as_value,)), None
        # the score that ends preparation only triggers the bootstrap
        ref = mean_minus_std(state.prep_scores)
        return replace(state, prep_start=start, phase=Phase.Ready, ref=ref,
                       block_sum=0.0, block_count=0), ref

    if state.block_count < state.block_size:
        return replace(state, block_sum=state.block_sum + as_value,
                       block_count=state.block_count + 1), state.ref
    ave = state.block_sum / state.block_size
    ref = state.ewma_alpha * ave + (1 - state.ewma_alpha) * state.ref
    # the boundary score opens the next block
    return replace(state, ref=ref, block_sum=as_value, block_count=1), ref


def ewma_step(ref: float, value: float, alpha: float = 0.2) -> float:
    return alpha * value + (1 - alpha) * ref
