"""Global-update strategies over post-DP client parameter vectors.

fed_avg / fed_prox_aggregate: example-count-weighted mean.
fed_median: coordinate-wise median, robust to a minority of corrupted updates.
fed_opt_step: server-side Adam / Yogi driven by the pseudo-gradient
    delta = fed_avg(updates) - global.

Summation order inside fed_avg is fixed by sorted client_id so that the
result is exactly invariant under permutation of the update list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ParamVector


class EmptyUpdateSetError(ValueError):
    pass


STRATEGY_NAMES = ("fedavg", "fedmedian", "fedprox", "fedyogi", "fedadam")


@dataclass(frozen=True)
class AggregationStrategy:
    """Tagged strategy choice plus its hyperparameters.

    mu applies to fedprox client training; beta1/beta2/tau/server_lr apply to
    the fedyogi/fedadam server optimizer. weight_by_examples switches fed_avg
    weighting between local dataset sizes (default) and uniform.
    """

    name: str = "fedavg"
    mu: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    tau: float = 1e-3
    server_lr: float = 0.01
    weight_by_examples: bool = True

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ValueError(
                f"unknown strategy {self.name!r}; expected one of {STRATEGY_NAMES}"
            )
        if self.mu < 0:
            raise ValueError("mu must be >= 0")


@dataclass(frozen=True)
class ClientUpdate:
    client_id: str
    params: ParamVector
    num_examples: int = 1

    def __post_init__(self):
        if self.num_examples < 1:
            raise ValueError("num_examples must be >= 1")


@dataclass
class ServerOptState:
    """Adam/Yogi server state: momentum m and second moment v.

    v starts at tau^2 per coordinate (not 0) so the first step never divides
    by tau alone; the single-step oracle tests depend on this.
    """

    m: ParamVector
    v: ParamVector

    @classmethod
    def fresh(cls, like: ParamVector, tau: float) -> "ServerOptState":
        return cls(
            m=like.zeros_like(),
            v=ParamVector(np.full_like(like.values, tau * tau), like.layout),
        )


def _check_updates(updates: list[ClientUpdate]) -> list[ClientUpdate]:
    if not updates:
        raise EmptyUpdateSetError("no client updates to aggregate")
    ordered = sorted(updates, key=lambda u: u.client_id)
    first = ordered[0].params
    for u in ordered[1:]:
        first.check_same_layout(u.params)
    return ordered


def fed_avg(updates: list[ClientUpdate], weight_by_examples: bool = True) -> ParamVector:
    """Example-count-weighted mean of the client parameter vectors."""
    ordered = _check_updates(updates)
    if len(ordered) == 1:  # keep the single-client round bitwise exact
        return ordered[0].params.copy()
    layout = ordered[0].params.layout
    total = np.zeros_like(ordered[0].params.values)
    weight_sum = 0.0
    for u in ordered:
        w = float(u.num_examples) if weight_by_examples else 1.0
        total += w * u.params.values
        weight_sum += w
    return ParamVector(total / weight_sum, layout)


def fed_median(updates: list[ClientUpdate]) -> ParamVector:
    """Coordinate-wise median; even counts average the two central values.

    num_examples is ignored: every update gets one vote per coordinate.
    """
    ordered = _check_updates(updates)
    stacked = np.stack([u.params.values for u in ordered])
    return ParamVector(np.median(stacked, axis=0), ordered[0].params.layout)


def fed_prox_aggregate(
    updates: list[ClientUpdate], weight_by_examples: bool = True
) -> ParamVector:
    """FedProx aggregates exactly like FedAvg; the proximal term is client-side."""
    return fed_avg(updates, weight_by_examples)


def fed_opt_step(
    state: ServerOptState,
    global_params: ParamVector,
    updates: list[ClientUpdate],
    variant: str,
    strategy: AggregationStrategy,
) -> tuple[ParamVector, ServerOptState]:
    """One server-side Adam or Yogi step on the round's pseudo-gradient."""
    if variant not in ("adam", "yogi"):
        raise ValueError(f"variant must be 'adam' or 'yogi', got {variant!r}")
    state.m.check_same_layout(global_params)
    delta = fed_avg(updates, strategy.weight_by_examples) - global_params
    b1, b2, tau = strategy.beta1, strategy.beta2, strategy.tau
    m = state.m.values * b1 + (1.0 - b1) * delta.values
    d2 = delta.values * delta.values
    if variant == "adam":
        v = state.v.values * b2 + (1.0 - b2) * d2
    else:
        v = state.v.values - (1.0 - b2) * d2 * np.sign(state.v.values - d2)
    new_values = global_params.values + strategy.server_lr * m / (np.sqrt(v) + tau)
    new_state = ServerOptState(
        m=ParamVector(m, global_params.layout),
        v=ParamVector(v, global_params.layout),
    )
    return ParamVector(new_values, global_params.layout), new_state
