"""Round orchestration: broadcast, local training, per-client DP processing
on the aggregator shard, aggregation, and per-round bookkeeping.

One round, under dp_mode = "adaptive_per_client":
  1. every eligible client trains a copy of the global model on its own data
     (proximal variant when the strategy is fedprox);
  2. each returned model is copied and DP-trained for one epoch on the
     aggregator dataset with that client's noise multiplier;
  3. the strategy aggregates the DP copies into the new global model.
Under "uniform_post_aggregation", step 2 is skipped and one Gaussian
perturbation is applied to the aggregate instead; under "none", neither.

Clients are stateless across rounds: round r+1 sees only the aggregate of
round r. All randomness is derived from (master_seed, round, client_id), so
adding a client never perturbs the randomness of the others, and the client
reduction order is fixed (sorted client_id) for bitwise determinism.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .aggregation import (
    AggregationStrategy,
    ClientUpdate,
    ServerOptState,
    fed_avg,
    fed_median,
    fed_opt_step,
    fed_prox_aggregate,
)
from .compliance import ComplianceProfile, NoisePolicy, eligible, noise_multiplier
from .data import Dataset, PartitionedData
from .dp import DPConfig, add_uniform_noise, dp_sgd_epoch
from .metrics import MetricsReport, evaluate
from .models import ModelSpec, forward_loss, init_params, proximal_sgd_epoch, sgd_epoch
from .params import ParamVector

if TYPE_CHECKING:
    from .experiments import ExperimentConfig

DP_MODES = ("adaptive_per_client", "uniform_post_aggregation", "none")

THREADS_ENV_VAR = "COMPLYFED_THREADS"


class NoEligibleClientsError(RuntimeError):
    pass


class ConfigMismatchError(ValueError):
    pass


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts (never Python's salted hash)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class FederatedClient:
    client_id: str
    data: Dataset
    profile: ComplianceProfile | None = None

    @property
    def score(self) -> float | None:
        return None if self.profile is None else self.profile.score


@dataclass(frozen=True)
class FederationConfig:
    strategy: AggregationStrategy = AggregationStrategy()
    dp_mode: str = "none"
    rounds: int = 50
    local_epochs: int = 3
    lr: float = 0.001
    batch_size: int = 32
    clip_norm: float = 1.0
    noise_policy: NoisePolicy | None = None
    master_seed: int = 0
    # Uniform-mode sigma override; by default the round uses the mean of the
    # participating clients' adaptive noise multipliers.
    uniform_sigma: float | None = None

    def __post_init__(self):
        if self.dp_mode not in DP_MODES:
            raise ValueError(f"dp_mode must be one of {DP_MODES}, got {self.dp_mode!r}")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.local_epochs < 0:
            raise ValueError("local_epochs must be >= 0")
        if self.dp_mode != "none" and self.noise_policy is None:
            object.__setattr__(self, "noise_policy", NoisePolicy())


@dataclass
class PerClientRecord:
    client_id: str
    score: float | None
    noise_multiplier: float | None
    local_loss: float


@dataclass
class RoundRecord:
    round: int
    per_client: list[PerClientRecord]
    global_metrics: MetricsReport | None = None
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    spec: ModelSpec
    initial_params: ParamVector
    final_params: ParamVector
    records: list[RoundRecord] = field(default_factory=list)


def _thread_count(num_clients: int) -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        threads = int(raw)
    except ValueError:
        threads = 1
    return max(1, min(threads, num_clients))


def _train_one_client(
    client: FederatedClient,
    global_params: ParamVector,
    agg_data: Dataset,
    cfg: FederationConfig,
    spec: ModelSpec,
    round_index: int,
) -> tuple[ClientUpdate, PerClientRecord]:
    local = global_params.copy()
    for epoch in range(cfg.local_epochs):
        seed = derive_seed(cfg.master_seed, round_index, client.client_id, "local", epoch)
        if cfg.strategy.name == "fedprox":
            local = proximal_sgd_epoch(
                spec, local, global_params, cfg.strategy.mu,
                client.data.features, client.data.labels,
                cfg.lr, cfg.batch_size, seed,
            )
        else:
            local = sgd_epoch(
                spec, local, client.data.features, client.data.labels,
                cfg.lr, cfg.batch_size, seed,
            )
    local_loss, _ = forward_loss(spec, local, client.data.features, client.data.labels)

    score = client.score
    eta = None
    update_params = local
    if cfg.dp_mode != "none":
        # Scoreless clients under DP get the minimum (full-compliance) noise.
        effective_score = 1.0 if score is None else score
        eta = noise_multiplier(effective_score, cfg.noise_policy)
    if cfg.dp_mode == "adaptive_per_client":
        dp_cfg = DPConfig(
            noise_multiplier=eta,
            clip_norm=cfg.clip_norm,
            lr=cfg.lr,
            batch_size=cfg.batch_size,
            seed=derive_seed(cfg.master_seed, round_index, client.client_id, "dp"),
        )
        update_params = dp_sgd_epoch(
            spec, local, agg_data.features, agg_data.labels, dp_cfg
        )

    update = ClientUpdate(client.client_id, update_params, num_examples=len(client.data))
    record = PerClientRecord(client.client_id, score, eta, local_loss)
    return update, record


def run_round(
    global_params: ParamVector,
    clients: list[FederatedClient],
    agg_data: Dataset,
    cfg: FederationConfig,
    state: ServerOptState | None,
    round_index: int,
    spec: ModelSpec,
) -> tuple[ParamVector, ServerOptState | None, RoundRecord]:
    """One federated round; returns (new global, new state, round record)."""
    t0 = time.perf_counter()
    participants = sorted(
        (
            c
            for c in clients
            if c.profile is None
            or cfg.noise_policy is None
            or eligible(c.profile, cfg.noise_policy)
        ),
        key=lambda c: c.client_id,
    )
    if not participants:
        raise NoEligibleClientsError("no clients meet the participation threshold")

    def work(client: FederatedClient):
        return _train_one_client(client, global_params, agg_data, cfg, spec, round_index)

    threads = _thread_count(len(participants))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, participants))
    else:
        results = [work(c) for c in participants]
    updates = [u for u, _ in results]
    per_client = [r for _, r in results]

    name = cfg.strategy.name
    if name == "fedavg":
        new_global = fed_avg(updates, cfg.strategy.weight_by_examples)
    elif name == "fedprox":
        new_global = fed_prox_aggregate(updates, cfg.strategy.weight_by_examples)
    elif name == "fedmedian":
        new_global = fed_median(updates)
    else:
        variant = "yogi" if name == "fedyogi" else "adam"
        new_global, state = fed_opt_step(
            state, global_params, updates, variant, cfg.strategy
        )

    if cfg.dp_mode == "uniform_post_aggregation":
        if cfg.uniform_sigma is not None:
            sigma = cfg.uniform_sigma
        else:
            sigma = float(np.mean([r.noise_multiplier for r in per_client]))
        new_global = add_uniform_noise(
            new_global, sigma, derive_seed(cfg.master_seed, round_index, "uniform")
        )

    record = RoundRecord(
        round=round_index,
        per_client=per_client,
        wall_time=time.perf_counter() - t0,
    )
    return new_global, state, record


def run_experiment(
    cfg: FederationConfig, exp: "ExperimentConfig", data: PartitionedData
) -> ExperimentResult:
    """Run every round of one experiment, evaluating after each round.

    The final record carries the end-of-training metrics. Identical
    (cfg, exp, master_seed) inputs reproduce records and final parameters
    bitwise (wall_time excepted).
    """
    from .experiments import build_clients  # local import to avoid a cycle

    if exp.total_clients() > len(data.client_shards):
        raise ConfigMismatchError(
            f"experiment {exp.name!r} needs {exp.total_clients()} client shards, "
            f"partition has {len(data.client_shards)}"
        )
    clients = build_clients(exp, data, cfg.master_seed)
    num_classes = max(
        int(shard.labels.max())
        for shard in (*data.client_shards, data.aggregator_shard, data.eval_shard)
        if len(shard)
    ) + 1
    spec = exp.model_spec(input_dim=data.eval_shard.features.shape[1],
                          num_classes=num_classes)
    params = init_params(spec, derive_seed(cfg.master_seed, "init"))
    initial = params.copy()
    state = (
        ServerOptState.fresh(params, cfg.strategy.tau)
        if cfg.strategy.name in ("fedyogi", "fedadam")
        else None
    )
    records: list[RoundRecord] = []
    for round_index in range(cfg.rounds):
        params, state, record = run_round(
            params, clients, data.aggregator_shard, cfg, state, round_index, spec
        )
        record.global_metrics = evaluate(spec, params, data.eval_shard)
        records.append(record)
    return ExperimentResult(
        spec=spec, initial_params=initial, final_params=params, records=records
    )
