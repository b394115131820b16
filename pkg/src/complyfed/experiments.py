"""Executable experiment configurations and the bundled presets.

A configuration names the client population (how many compliant clients, how
many non-compliant, their score range and grouping), the DP mode, the
aggregation strategies to sweep, the dataset, and the seeds. The presets
exp1..exp6 mirror the six standard designs:

  exp1  4 compliant + 12 non-compliant (two groups of 6, scores in [0.1, 0.6]),
        adaptive per-client DP
  exp2  10 compliant + 6 non-compliant (scores in [0.1, 0.6]), adaptive DP
  exp3  16 compliant, adaptive DP
  exp4  4 compliant only, no compliance scoring, minimum DP on every client
  exp5  16 clients, no compliance, no DP (vanilla control)
  exp6  16 compliant, uniform post-aggregation DP

plus "dataquality": 4 trusted clients at score 1.0 and 12 clients with
degraded data shards at score 0.3, adaptive DP.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .aggregation import STRATEGY_NAMES, AggregationStrategy
from .compliance import ComplianceProfile, NoisePolicy
from .data import (
    Dataset,
    DegradationConfig,
    PartitionedData,
    degrade,
    load_csv,
    partition,
    synth_classification,
)
from .federation import DP_MODES, FederatedClient, FederationConfig, derive_seed
from .models import ModelSpec

import numpy as np


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending key."""


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "synthetic"  # "synthetic" | "csv"
    n: int = 1800
    d: int = 16
    classes: int = 2
    class_separation: float = 2.0
    image_shape: tuple[int, int] | None = (4, 4)
    path: str | None = None
    partition_clients: int = 16


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    compliant_clients: int
    noncompliant_clients: int = 0
    noncompliant_score_range: tuple[float, float] = (0.1, 0.6)
    noncompliant_groups: int = 1
    compliance_applied: bool = True
    dp_mode: str = "adaptive_per_client"
    degrade_noncompliant: bool = False
    strategies: tuple[AggregationStrategy, ...] = (AggregationStrategy(),)
    dataset: DatasetSpec = DatasetSpec()
    model_kind: str = "mlp"
    hidden_dim: int = 16
    rounds: int = 50
    local_epochs: int = 3
    lr: float = 0.001
    batch_size: int = 32
    clip_norm: float = 1.0
    min_noise_multiplier: float = 1e-10
    participation_threshold: float = 0.0
    uniform_sigma: float | None = None
    seeds: tuple[int, ...] = (0,)
    # Optional explicit client list (id, score), e.g. from a profile file.
    profile_clients: tuple[tuple[str, float], ...] | None = None
    inline_scores: dict[str, float] = field(default_factory=dict)

    def total_clients(self) -> int:
        if self.profile_clients is not None:
            return len(self.profile_clients)
        return self.compliant_clients + self.noncompliant_clients

    def model_spec(self, input_dim: int, num_classes: int) -> ModelSpec:
        hidden = self.hidden_dim if self.model_kind == "mlp" else 0
        return ModelSpec(
            kind=self.model_kind,
            input_dim=input_dim,
            num_classes=num_classes,
            hidden_dim=hidden,
        )

    def noise_policy(self) -> NoisePolicy | None:
        if self.dp_mode == "none" and not self.compliance_applied:
            return None
        return NoisePolicy(
            min_noise_multiplier=self.min_noise_multiplier,
            participation_threshold=self.participation_threshold,
        )

    def federation_config(
        self, strategy: AggregationStrategy, master_seed: int
    ) -> FederationConfig:
        return FederationConfig(
            strategy=strategy,
            dp_mode=self.dp_mode,
            rounds=self.rounds,
            local_epochs=self.local_epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            clip_norm=self.clip_norm,
            noise_policy=self.noise_policy(),
            master_seed=master_seed,
            uniform_sigma=self.uniform_sigma,
        )


def build_data(exp: ExperimentConfig, master_seed: int) -> PartitionedData:
    """Materialize and partition the configured dataset for one seed."""
    ds = exp.dataset
    if ds.kind == "synthetic":
        data = synth_classification(
            ds.n, ds.d, ds.classes, ds.class_separation,
            seed=derive_seed(master_seed, "data"),
            image_shape=ds.image_shape,
        )
    elif ds.kind == "csv":
        if not ds.path:
            raise ConfigError("dataset.path is required when dataset.kind is 'csv'")
        data = load_csv(ds.path)
        if ds.image_shape is not None:
            data = Dataset(data.features, data.labels, ds.image_shape)
    else:
        raise ConfigError(f"dataset.kind must be 'synthetic' or 'csv', got {ds.kind!r}")
    return partition(data, ds.partition_clients, derive_seed(master_seed, "partition"))


def _drawn_scores(exp: ExperimentConfig, master_seed: int) -> list[float | None]:
    """Per-client scores in client order, or None for scoreless clients."""
    total = exp.compliant_clients + exp.noncompliant_clients
    if not exp.compliance_applied:
        # Minimum DP treats every client as fully compliant; vanilla runs
        # carry no scores at all.
        return [1.0 if exp.dp_mode != "none" else None] * total
    scores: list[float | None] = [1.0] * exp.compliant_clients
    low, high = exp.noncompliant_score_range
    groups = max(1, exp.noncompliant_groups)
    group_sizes = [
        exp.noncompliant_clients // groups + (1 if g < exp.noncompliant_clients % groups else 0)
        for g in range(groups)
    ]
    for g, size in enumerate(group_sizes):
        rng = np.random.default_rng(derive_seed(master_seed, "scores", g))
        scores.extend(float(s) for s in rng.uniform(low, high, size=size))
    return scores


def build_clients(
    exp: ExperimentConfig, data: PartitionedData, master_seed: int
) -> list[FederatedClient]:
    """Attach shards to clients, degrade flagged shards, and assign scores.

    Clients occupy the first total_clients() partition shards in order; the
    non-compliant block follows the compliant block. Degraded clients are
    exactly the non-compliant ones when degrade_noncompliant is set.
    """
    total = exp.total_clients()
    if exp.profile_clients is not None:
        ids_scores: list[tuple[str, float | None]] = list(exp.profile_clients)
    else:
        ids_scores = [
            (f"client_{i:02d}", s) for i, s in enumerate(_drawn_scores(exp, master_seed))
        ]
    for cid, override in exp.inline_scores.items():
        hit = [i for i, (known, _) in enumerate(ids_scores) if known == cid]
        if not hit:
            raise ConfigError(f"inline_scores names unknown client {cid!r}")
        ids_scores[hit[0]] = (cid, float(override))

    clients = []
    noncompliant_start = total - exp.noncompliant_clients
    for i, (cid, score) in enumerate(ids_scores):
        shard = data.client_shards[i]
        if exp.degrade_noncompliant and i >= noncompliant_start:
            shard = degrade(
                shard, DegradationConfig(seed=derive_seed(master_seed, "degrade", i))
            )
        profile = None if score is None else ComplianceProfile(cid, {}, score)
        clients.append(FederatedClient(cid, shard, profile))
    return clients


_STRATEGY_KEYS = {
    "name", "mu", "beta1", "beta2", "tau", "server_lr", "weight_by_examples",
}
_DATASET_KEYS = {
    "kind", "n", "d", "classes", "class_separation", "image_shape", "path",
    "partition_clients",
}
_MODEL_KEYS = {"kind", "hidden_dim"}
_TOP_KEYS = {
    "preset", "name", "compliant_clients", "noncompliant_clients",
    "noncompliant_score_range", "noncompliant_groups", "compliance_applied",
    "dp_mode", "degrade_noncompliant", "strategies", "dataset", "model",
    "rounds", "local_epochs", "lr", "batch_size", "clip_norm",
    "min_noise_multiplier", "participation_threshold", "uniform_sigma",
    "seeds", "profile_file", "catalog_file", "profile_clients", "inline_scores",
}

ALL_STRATEGIES = [{"name": n} for n in STRATEGY_NAMES]

PRESETS: dict[str, dict] = {
    "exp1": {
        "name": "exp1",
        "compliant_clients": 4,
        "noncompliant_clients": 12,
        "noncompliant_score_range": [0.1, 0.6],
        "noncompliant_groups": 2,
        "compliance_applied": True,
        "dp_mode": "adaptive_per_client",
    },
    "exp2": {
        "name": "exp2",
        "compliant_clients": 10,
        "noncompliant_clients": 6,
        "noncompliant_score_range": [0.1, 0.6],
        "noncompliant_groups": 1,
        "compliance_applied": True,
        "dp_mode": "adaptive_per_client",
    },
    "exp3": {
        "name": "exp3",
        "compliant_clients": 16,
        "noncompliant_clients": 0,
        "compliance_applied": True,
        "dp_mode": "adaptive_per_client",
    },
    "exp4": {
        "name": "exp4",
        "compliant_clients": 4,
        "noncompliant_clients": 0,
        "compliance_applied": False,
        "dp_mode": "adaptive_per_client",
    },
    "exp5": {
        "name": "exp5",
        "compliant_clients": 16,
        "noncompliant_clients": 0,
        "compliance_applied": False,
        "dp_mode": "none",
    },
    "exp6": {
        "name": "exp6",
        "compliant_clients": 16,
        "noncompliant_clients": 0,
        "compliance_applied": True,
        "dp_mode": "uniform_post_aggregation",
    },
    "dataquality": {
        "name": "dataquality",
        "compliant_clients": 4,
        "noncompliant_clients": 12,
        "noncompliant_score_range": [0.3, 0.3],
        "noncompliant_groups": 1,
        "compliance_applied": True,
        "dp_mode": "adaptive_per_client",
        "degrade_noncompliant": True,
    },
}

# Expected (compliant, non-compliant, compliance applied, dp mode) per preset;
# checked at resolve time so preset drift cannot go unnoticed.
_PRESET_CONTRACT = {
    "exp1": (4, 12, True, "adaptive_per_client"),
    "exp2": (10, 6, True, "adaptive_per_client"),
    "exp3": (16, 0, True, "adaptive_per_client"),
    "exp4": (4, 0, False, "adaptive_per_client"),
    "exp5": (16, 0, False, "none"),
    "exp6": (16, 0, True, "uniform_post_aggregation"),
}


def _require_keys(doc: dict, allowed: set[str], context: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown {context} key {key!r}")


def _parse_strategy(entry) -> AggregationStrategy:
    if isinstance(entry, str):
        entry = {"name": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"strategy entries must be names or objects, got {entry!r}")
    _require_keys(entry, _STRATEGY_KEYS, "strategy")
    try:
        return AggregationStrategy(**entry)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid strategy {entry!r}: {exc}") from exc


def resolve_config(doc: dict) -> tuple[ExperimentConfig, str | None]:
    """Validate a config document (strict keys) and apply preset defaults.

    Returns the resolved config plus the profile_file path, if any; the
    caller loads and attaches profile clients (see cli.attach_profiles).
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(doc, _TOP_KEYS, "config")
    doc = copy.deepcopy(doc)
    preset_name = doc.pop("preset", None)
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset_name!r}; expected one of {sorted(PRESETS)}"
            )
        merged = copy.deepcopy(PRESETS[preset_name])
        for key, value in doc.items():
            if key in ("dataset", "model") and isinstance(merged.get(key), dict):
                merged[key].update(value)
            else:
                merged[key] = value
        doc = merged
        contract = _PRESET_CONTRACT.get(preset_name)
        if contract is not None:
            resolved = (
                doc.get("compliant_clients"),
                doc.get("noncompliant_clients", 0),
                doc.get("compliance_applied", True),
                doc.get("dp_mode", "adaptive_per_client"),
            )
            base = PRESETS[preset_name]
            base_tuple = (
                base["compliant_clients"],
                base.get("noncompliant_clients", 0),
                base.get("compliance_applied", True),
                base.get("dp_mode", "adaptive_per_client"),
            )
            if base_tuple != contract:
                raise ConfigError(f"preset {preset_name!r} violates its client contract")

    dataset_doc = doc.get("dataset", {})
    _require_keys(dataset_doc, _DATASET_KEYS, "dataset")
    image_shape = dataset_doc.get("image_shape", (4, 4))
    if image_shape is not None:
        image_shape = tuple(int(v) for v in image_shape)
        if len(image_shape) != 2:
            raise ConfigError("dataset.image_shape must be [height, width] or null")
    dataset = DatasetSpec(
        kind=dataset_doc.get("kind", "synthetic"),
        n=int(dataset_doc.get("n", 1800)),
        d=int(dataset_doc.get("d", 16)),
        classes=int(dataset_doc.get("classes", 2)),
        class_separation=float(dataset_doc.get("class_separation", 2.0)),
        image_shape=image_shape,
        path=dataset_doc.get("path"),
        partition_clients=int(dataset_doc.get("partition_clients", 16)),
    )

    model_doc = doc.get("model", {})
    _require_keys(model_doc, _MODEL_KEYS, "model")
    model_kind = model_doc.get("kind", "mlp")
    hidden_dim = int(model_doc.get("hidden_dim", 16))

    strategies = tuple(_parse_strategy(s) for s in doc.get("strategies", ALL_STRATEGIES))
    if not strategies:
        raise ConfigError("strategies must not be empty")

    dp_mode = doc.get("dp_mode", "adaptive_per_client")
    if dp_mode not in DP_MODES:
        raise ConfigError(f"dp_mode must be one of {DP_MODES}, got {dp_mode!r}")

    score_range = doc.get("noncompliant_score_range", [0.1, 0.6])
    if len(score_range) != 2 or not 0 <= score_range[0] <= score_range[1] <= 1:
        raise ConfigError(
            "noncompliant_score_range must be [low, high] with 0 <= low <= high <= 1"
        )

    seeds = tuple(int(s) for s in doc.get("seeds", [0]))
    if not seeds:
        raise ConfigError("seeds must not be empty")

    profile_file = doc.get("profile_file")
    if profile_file is not None and not isinstance(profile_file, str):
        raise ConfigError("profile_file must be a path string")

    inline_scores = doc.get("inline_scores") or {}
    if not isinstance(inline_scores, dict):
        raise ConfigError("inline_scores must map client ids to scores")

    profile_clients = doc.get("profile_clients")
    if profile_clients is not None:
        try:
            profile_clients = tuple((str(c), float(s)) for c, s in profile_clients)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                "profile_clients must be a list of [client_id, score] pairs"
            ) from exc

    if "compliant_clients" not in doc and profile_file is None and profile_clients is None:
        raise ConfigError("missing required config key 'compliant_clients'")

    try:
        exp = ExperimentConfig(
            name=str(doc.get("name", "experiment")),
            compliant_clients=int(doc.get("compliant_clients", 0)),
            noncompliant_clients=int(doc.get("noncompliant_clients", 0)),
            noncompliant_score_range=(float(score_range[0]), float(score_range[1])),
            noncompliant_groups=int(doc.get("noncompliant_groups", 1)),
            compliance_applied=bool(doc.get("compliance_applied", True)),
            dp_mode=dp_mode,
            degrade_noncompliant=bool(doc.get("degrade_noncompliant", False)),
            strategies=strategies,
            dataset=dataset,
            model_kind=model_kind,
            hidden_dim=hidden_dim,
            rounds=int(doc.get("rounds", 50)),
            local_epochs=int(doc.get("local_epochs", 3)),
            lr=float(doc.get("lr", 0.001)),
            batch_size=int(doc.get("batch_size", 32)),
            clip_norm=float(doc.get("clip_norm", 1.0)),
            min_noise_multiplier=float(doc.get("min_noise_multiplier", 1e-10)),
            participation_threshold=float(doc.get("participation_threshold", 0.0)),
            uniform_sigma=(
                float(doc["uniform_sigma"]) if doc.get("uniform_sigma") is not None else None
            ),
            seeds=seeds,
            profile_clients=profile_clients,
            inline_scores={str(k): float(v) for k, v in inline_scores.items()},
        )
    except KeyError as exc:
        raise ConfigError(f"missing required config key {exc}") from exc
    if profile_file is None:
        if exp.total_clients() < 1:
            raise ConfigError("experiment must have at least one client")
        if exp.total_clients() > exp.dataset.partition_clients:
            raise ConfigError(
                f"{exp.total_clients()} clients exceed dataset.partition_clients="
                f"{exp.dataset.partition_clients}"
            )
    return exp, profile_file


def config_to_dict(exp: ExperimentConfig) -> dict:
    """Canonical config document; resolving it reproduces exp exactly."""
    doc_tail = {}
    if exp.profile_clients is not None:
        doc_tail["profile_clients"] = [[c, s] for c, s in exp.profile_clients]
    return {
        **doc_tail,
        "name": exp.name,
        "compliant_clients": exp.compliant_clients,
        "noncompliant_clients": exp.noncompliant_clients,
        "noncompliant_score_range": list(exp.noncompliant_score_range),
        "noncompliant_groups": exp.noncompliant_groups,
        "compliance_applied": exp.compliance_applied,
        "dp_mode": exp.dp_mode,
        "degrade_noncompliant": exp.degrade_noncompliant,
        "strategies": [
            {
                "name": s.name,
                "mu": s.mu,
                "beta1": s.beta1,
                "beta2": s.beta2,
                "tau": s.tau,
                "server_lr": s.server_lr,
                "weight_by_examples": s.weight_by_examples,
            }
            for s in exp.strategies
        ],
        "dataset": {
            "kind": exp.dataset.kind,
            "n": exp.dataset.n,
            "d": exp.dataset.d,
            "classes": exp.dataset.classes,
            "class_separation": exp.dataset.class_separation,
            "image_shape": list(exp.dataset.image_shape) if exp.dataset.image_shape else None,
            "path": exp.dataset.path,
            "partition_clients": exp.dataset.partition_clients,
        },
        "model": {"kind": exp.model_kind, "hidden_dim": exp.hidden_dim},
        "rounds": exp.rounds,
        "local_epochs": exp.local_epochs,
        "lr": exp.lr,
        "batch_size": exp.batch_size,
        "clip_norm": exp.clip_norm,
        "min_noise_multiplier": exp.min_noise_multiplier,
        "participation_threshold": exp.participation_threshold,
        "uniform_sigma": exp.uniform_sigma,
        "seeds": list(exp.seeds),
        "inline_scores": dict(exp.inline_scores),
    }
