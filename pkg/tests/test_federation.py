import numpy as np
import pytest

from complyfed.aggregation import AggregationStrategy, ClientUpdate, fed_avg
from complyfed.compliance import ComplianceProfile, NoisePolicy
from complyfed.data import Dataset, synth_classification
from complyfed.experiments import ExperimentConfig, build_clients, build_data
from complyfed.federation import (
    FederatedClient,
    FederationConfig,
    NoEligibleClientsError,
    derive_seed,
    run_experiment,
    run_round,
)
from complyfed.models import ModelSpec, init_params, sgd_epoch

SPEC = ModelSpec(kind="mlp", input_dim=6, num_classes=2, hidden_dim=4)


def shard(seed, n=24):
    rng = np.random.default_rng(seed)
    return Dataset(rng.uniform(0, 1, size=(n, 6)), rng.integers(0, 2, size=n))


def client(cid, seed, score=None):
    profile = None if score is None else ComplianceProfile(cid, {}, score)
    return FederatedClient(cid, shard(seed), profile)


def local_train(global_params, c, cfg):
    """Reference client-side loop mirroring the orchestrator's seeds."""
    local = global_params.copy()
    for epoch in range(cfg.local_epochs):
        seed = derive_seed(cfg.master_seed, 0, c.client_id, "local", epoch)
        local = sgd_epoch(SPEC, local, c.data.features, c.data.labels,
                          cfg.lr, cfg.batch_size, seed)
    return local


class TestRunRound:
    def test_single_client_fedavg_is_its_local_model(self):
        cfg = FederationConfig(dp_mode="none", rounds=1, local_epochs=2,
                               lr=0.05, batch_size=8, master_seed=1)
        c = client("only", seed=0)
        global_params = init_params(SPEC, seed=5)
        new_global, _, record = run_round(
            global_params, [c], shard(99), cfg, None, 0, SPEC
        )
        expected = local_train(global_params, c, cfg)
        assert np.array_equal(new_global.values, expected.values)
        assert len(record.per_client) == 1
        assert record.per_client[0].noise_multiplier is None

    def test_full_compliance_matches_plain_round_plus_agg_epoch(self):
        # Noise floor 1e-10 with a generous clip bound: the DP epoch is a
        # plain SGD epoch on the aggregator shard to within 1e-6.
        cfg = FederationConfig(
            dp_mode="adaptive_per_client", local_epochs=1, lr=0.05, batch_size=8,
            clip_norm=1e3, master_seed=2,
            noise_policy=NoisePolicy(participation_threshold=0.0),
        )
        clients = [client("a", 0, 1.0), client("b", 1, 1.0)]
        agg = shard(50)
        global_params = init_params(SPEC, seed=9)
        new_global, _, record = run_round(
            global_params, clients, agg, cfg, None, 0, SPEC
        )
        updates = []
        for c in clients:
            local = local_train(global_params, c, cfg)
            dp_seed = derive_seed(cfg.master_seed, 0, c.client_id, "dp")
            local = sgd_epoch(SPEC, local, agg.features, agg.labels,
                              cfg.lr, cfg.batch_size, dp_seed)
            updates.append(ClientUpdate(c.client_id, local, len(c.data)))
        expected = fed_avg(updates)
        np.testing.assert_allclose(new_global.values, expected.values, atol=1e-6)
        assert all(r.noise_multiplier == 1e-10 for r in record.per_client)

    def test_mixed_compliance_etas_recorded(self):
        cfg = FederationConfig(
            dp_mode="adaptive_per_client", local_epochs=1, lr=0.01, batch_size=8,
            master_seed=3, noise_policy=NoisePolicy(participation_threshold=0.0),
        )
        clients = [client("hi", 0, 1.0), client("lo", 1, 0.3)]
        _, _, record = run_round(
            init_params(SPEC, seed=0), clients, shard(50), cfg, None, 0, SPEC
        )
        etas = {r.client_id: r.noise_multiplier for r in record.per_client}
        assert etas["hi"] == 1e-10
        assert etas["lo"] == (1.0 - 0.3) + 1e-10

    def test_eta_sorted_against_score(self):
        cfg = FederationConfig(
            dp_mode="adaptive_per_client", local_epochs=1, lr=0.01, batch_size=8,
            master_seed=4, noise_policy=NoisePolicy(participation_threshold=0.0),
        )
        rng = np.random.default_rng(0)
        clients = [client(f"c{i}", i, float(s))
                   for i, s in enumerate(rng.uniform(0, 1, size=6))]
        _, _, record = run_round(
            init_params(SPEC, seed=0), clients, shard(50), cfg, None, 0, SPEC
        )
        by_score = sorted(record.per_client, key=lambda r: -r.score)
        etas = [r.noise_multiplier for r in by_score]
        assert etas == sorted(etas)

    def test_threshold_gates_participation(self):
        cfg = FederationConfig(
            dp_mode="adaptive_per_client", local_epochs=1, lr=0.01, batch_size=8,
            master_seed=5, noise_policy=NoisePolicy(participation_threshold=0.5),
        )
        clients = [client("in", 0, 0.8), client("out", 1, 0.2)]
        _, _, record = run_round(
            init_params(SPEC, seed=0), clients, shard(50), cfg, None, 0, SPEC
        )
        assert [r.client_id for r in record.per_client] == ["in"]

    def test_no_eligible_clients_raises(self):
        cfg = FederationConfig(
            dp_mode="adaptive_per_client", local_epochs=1, master_seed=5,
            noise_policy=NoisePolicy(participation_threshold=0.9),
        )
        with pytest.raises(NoEligibleClientsError):
            run_round(init_params(SPEC, seed=0), [client("c", 0, 0.3)],
                      shard(50), cfg, None, 0, SPEC)

    def test_two_client_fedavg_reference_loop(self):
        cfg = FederationConfig(dp_mode="none", local_epochs=3, lr=0.02,
                               batch_size=8, master_seed=6)
        clients = [client("a", 0), client("b", 1, None)]
        global_params = init_params(SPEC, seed=1)
        for round_index in range(3):
            updates = []
            for c in clients:
                local = global_params.copy()
                for epoch in range(cfg.local_epochs):
                    seed = derive_seed(cfg.master_seed, round_index, c.client_id,
                                       "local", epoch)
                    local = sgd_epoch(SPEC, local, c.data.features, c.data.labels,
                                      cfg.lr, cfg.batch_size, seed)
                updates.append(ClientUpdate(c.client_id, local, len(c.data)))
            expected = fed_avg(updates)
            got, _, _ = run_round(global_params, clients, shard(50), cfg,
                                  None, round_index, SPEC)
            np.testing.assert_allclose(got.values, expected.values, atol=1e-12)
            global_params = got

    def test_uniform_mode_sigma_is_mean_eta(self):
        cfg = FederationConfig(
            dp_mode="uniform_post_aggregation", local_epochs=1, lr=0.01,
            batch_size=8, master_seed=7,
            noise_policy=NoisePolicy(participation_threshold=0.0),
        )
        clients = [client("a", 0, 1.0), client("b", 1, 0.5)]
        none_cfg = FederationConfig(dp_mode="none", local_epochs=1, lr=0.01,
                                    batch_size=8, master_seed=7)
        noisy, _, record = run_round(init_params(SPEC, seed=2), clients, shard(50),
                                     cfg, None, 0, SPEC)
        clean, _, _ = run_round(init_params(SPEC, seed=2), clients, shard(50),
                                none_cfg, None, 0, SPEC)
        etas = [r.noise_multiplier for r in record.per_client]
        sigma = float(np.mean(etas))
        diff = noisy.values - clean.values
        # Same noise realization as add_uniform_noise with the derived seed.
        from complyfed.dp import add_uniform_noise

        expected = add_uniform_noise(clean, sigma, derive_seed(7, 0, "uniform"))
        np.testing.assert_allclose(noisy.values, expected.values, atol=1e-12)
        assert diff.std() > 0

    def test_adding_a_client_does_not_disturb_others(self):
        cfg = FederationConfig(dp_mode="none", local_epochs=2, lr=0.02,
                               batch_size=8, master_seed=8)
        a, b, c = client("a", 0), client("b", 1), client("c", 2)
        global_params = init_params(SPEC, seed=3)
        # a's locally trained params are identical whether or not c joined.
        expected_a = local_train(global_params, a, cfg)
        two, _, _ = run_round(global_params, [a, b], shard(50), cfg, None, 0, SPEC)
        three, _, _ = run_round(global_params, [a, b, c], shard(50), cfg, None, 0, SPEC)
        expected_c = local_train(global_params, c, cfg)
        n = len(a.data)
        manual_three = (expected_a.values * n
                        + local_train(global_params, b, cfg).values * n
                        + expected_c.values * n) / (3 * n)
        np.testing.assert_allclose(three.values, manual_three, atol=1e-12)

    def test_fedprox_mu_zero_round_equals_fedavg_round(self):
        base = dict(dp_mode="none", local_epochs=2, lr=0.05, batch_size=8,
                    master_seed=11)
        avg_cfg = FederationConfig(strategy=AggregationStrategy(name="fedavg"), **base)
        prox_cfg = FederationConfig(
            strategy=AggregationStrategy(name="fedprox", mu=0.0), **base
        )
        clients = [client("a", 0), client("b", 1)]
        global_params = init_params(SPEC, seed=6)
        got_avg, _, _ = run_round(global_params, clients, shard(50), avg_cfg,
                                  None, 0, SPEC)
        got_prox, _, _ = run_round(global_params, clients, shard(50), prox_cfg,
                                   None, 0, SPEC)
        assert np.array_equal(got_avg.values, got_prox.values)

    def test_fedprox_keeps_clients_nearer_the_broadcast_model(self):
        # Compare the round aggregate's distance from the anchor: the
        # proximal pull shrinks every client's excursion.
        base = dict(dp_mode="none", local_epochs=3, lr=0.2, batch_size=8,
                    master_seed=12)
        avg_cfg = FederationConfig(strategy=AggregationStrategy(name="fedavg"), **base)
        prox_cfg = FederationConfig(
            strategy=AggregationStrategy(name="fedprox", mu=0.5), **base
        )
        clients = [client("a", 0), client("b", 1)]
        anchor = init_params(SPEC, seed=7)
        got_avg, _, _ = run_round(anchor, clients, shard(50), avg_cfg, None, 0, SPEC)
        got_prox, _, _ = run_round(anchor, clients, shard(50), prox_cfg, None, 0, SPEC)
        assert (got_prox - anchor).l2_norm() < (got_avg - anchor).l2_norm()

    def test_thread_env_var_preserves_results(self, monkeypatch):
        cfg = FederationConfig(
            dp_mode="adaptive_per_client", local_epochs=2, lr=0.02, batch_size=8,
            master_seed=9, noise_policy=NoisePolicy(participation_threshold=0.0),
        )
        clients = [client(f"c{i}", i, 0.5 + 0.1 * i) for i in range(4)]
        global_params = init_params(SPEC, seed=4)
        serial, _, _ = run_round(global_params, clients, shard(50), cfg, None, 0, SPEC)
        monkeypatch.setenv("COMPLYFED_THREADS", "4")
        threaded, _, _ = run_round(global_params, clients, shard(50), cfg, None, 0, SPEC)
        assert np.array_equal(serial.values, threaded.values)


EXP = ExperimentConfig(
    name="unit",
    compliant_clients=2,
    noncompliant_clients=2,
    noncompliant_score_range=(0.1, 0.6),
    dp_mode="adaptive_per_client",
    strategies=(AggregationStrategy(name="fedavg"),),
    rounds=2,
    local_epochs=1,
    lr=0.01,
    batch_size=8,
)


def small_exp(**overrides):
    import dataclasses

    base = dataclasses.replace(EXP, **overrides)
    return base


class TestRunExperiment:
    def test_zero_rounds_returns_init(self):
        exp = small_exp(rounds=0)
        data = build_data(exp, master_seed=0)
        cfg = exp.federation_config(exp.strategies[0], 0)
        result = run_experiment(cfg, exp, data)
        assert result.records == []
        assert np.array_equal(result.final_params.values, result.initial_params.values)

    def test_vanilla_shape_needs_no_profiles(self):
        exp = small_exp(compliant_clients=4, noncompliant_clients=0,
                        compliance_applied=False, dp_mode="none")
        data = build_data(exp, master_seed=1)
        clients = build_clients(exp, data, master_seed=1)
        assert all(c.profile is None for c in clients)
        cfg = exp.federation_config(exp.strategies[0], 1)
        result = run_experiment(cfg, exp, data)
        assert len(result.records) == 2
        assert all(r.noise_multiplier is None
                   for rec in result.records for r in rec.per_client)

    def test_minimum_dp_shape_scores_everyone_fully(self):
        exp = small_exp(compliant_clients=4, noncompliant_clients=0,
                        compliance_applied=False, dp_mode="adaptive_per_client")
        data = build_data(exp, master_seed=1)
        clients = build_clients(exp, data, master_seed=1)
        assert all(c.score == 1.0 for c in clients)

    def test_mixed_shape_score_ranges(self):
        exp = small_exp(compliant_clients=4, noncompliant_clients=12,
                        noncompliant_groups=2)
        data = build_data(exp, master_seed=3)
        clients = build_clients(exp, data, master_seed=3)
        scores = [c.score for c in clients]
        assert scores[:4] == [1.0] * 4
        assert all(0.1 <= s <= 0.6 for s in scores[4:])
        # Two groups draw from distinct sub-seeded streams.
        assert scores[4:10] != scores[10:16]

    def test_bitwise_determinism(self):
        exp = small_exp()
        data = build_data(exp, master_seed=5)
        cfg = exp.federation_config(exp.strategies[0], 5)
        a = run_experiment(cfg, exp, data)
        b = run_experiment(cfg, exp, data)
        assert np.array_equal(a.final_params.values, b.final_params.values)
        for ra, rb in zip(a.records, b.records):
            assert ra.round == rb.round
            assert [(p.client_id, p.score, p.noise_multiplier, p.local_loss)
                    for p in ra.per_client] == \
                   [(p.client_id, p.score, p.noise_multiplier, p.local_loss)
                    for p in rb.per_client]
            assert ra.global_metrics.accuracy == rb.global_metrics.accuracy

    def test_metrics_recorded_every_round(self):
        exp = small_exp(rounds=3)
        data = build_data(exp, master_seed=6)
        cfg = exp.federation_config(exp.strategies[0], 6)
        result = run_experiment(cfg, exp, data)
        assert len(result.records) == 3
        assert all(r.global_metrics is not None for r in result.records)

    @pytest.mark.parametrize("name", ["fedmedian", "fedprox", "fedyogi", "fedadam"])
    def test_all_strategies_run(self, name):
        exp = small_exp(strategies=(AggregationStrategy(name=name),))
        data = build_data(exp, master_seed=7)
        cfg = exp.federation_config(exp.strategies[0], 7)
        result = run_experiment(cfg, exp, data)
        assert len(result.records) == exp.rounds
