"""Ensemble tests: replica seeding, merge order, aggregation, parallelism."""

import numpy as np
import pytest

import fitchoice.ensemble as ensemble_mod
from fitchoice import (AGGREGATES, QUANTITIES, Checkpoint, CheckpointSchedule,
                       EnsembleError, EnsembleSpec, ModelParams, ParamError,
                       aggregate, derive_replica_seed, hub_stabilization_step,
                       init_state, replica_trajectory, run, run_ensemble)


def small_spec(replicas=4, target=3000, parallelism=1, d=2, beta=0.0):
    params = ModelParams(d=d, beta=beta, lam=1.9, p_lambda=0.5)
    return EnsembleSpec(params=params, replicas=replicas,
                        target_edges=target, master_seed=11,
                        schedule=CheckpointSchedule(ratio=1.5),
                        parallelism=parallelism)


def synthetic_checkpoint(n, m, z=None, hubs=(0, 1)):
    return Checkpoint(n=n, M=m, M1=m, Mlambda=m, X=1.9 * m,
                      Z=(m / n) if z is None else z,
                      hub_low=hubs[0], hub_high=hubs[1],
                      L1_at_max=1, Llambda_at_max=1)


class TestSpecValidation:
    def test_replicas_bound(self):
        params = ModelParams(d=2, beta=0.0, lam=1.9, p_lambda=0.5)
        with pytest.raises(ParamError, match="replicas"):
            EnsembleSpec(params=params, replicas=0, target_edges=100,
                         master_seed=1)

    def test_parallelism_bound(self):
        params = ModelParams(d=2, beta=0.0, lam=1.9, p_lambda=0.5)
        with pytest.raises(ParamError, match="parallelism"):
            EnsembleSpec(params=params, replicas=2, target_edges=100,
                         master_seed=1, parallelism=0)

    def test_target_bound(self):
        params = ModelParams(d=2, beta=0.0, lam=1.9, p_lambda=0.5)
        with pytest.raises(ParamError, match="target_edges"):
            EnsembleSpec(params=params, replicas=2, target_edges=1,
                         master_seed=1)


class TestReplicaTrajectory:
    def test_matches_manual_run(self):
        """replica_trajectory is exactly init_state with the derived
        seed followed by run over the spec schedule."""
        spec = small_spec(replicas=3, target=2000)
        for r in range(3):
            traj = replica_trajectory(spec, r)
            st = init_state(spec.params, derive_replica_seed(11, r))
            manual = []
            run(st, 2000, spec.schedule, sink=manual.append)
            assert list(traj) == manual

    def test_single_replica_ensemble(self):
        spec = small_spec(replicas=1, target=1500)
        result = run_ensemble(spec)
        assert result.trajectories[0] == replica_trajectory(spec, 0)


class TestParallelism:
    def test_worker_count_does_not_change_results(self):
        """Everything observable is identical at parallelism 1 and 8;
        only the spec field recording the worker count differs."""
        seq = run_ensemble(small_spec(replicas=6, parallelism=1))
        par = run_ensemble(small_spec(replicas=6, parallelism=8))
        assert seq.checkpoint_ns == par.checkpoint_ns
        assert seq.stats == par.stats
        assert seq.hub_stabilization == par.hub_stabilization
        assert seq.report == par.report
        assert seq.trajectories == par.trajectories

    def test_failure_names_replica(self, monkeypatch):
        calls = []
        real = ensemble_mod.replica_trajectory

        def flaky(spec, replica):
            calls.append(replica)
            if replica == 2:
                raise ValueError("boom")
            return real(spec, replica)

        monkeypatch.setattr(ensemble_mod, "replica_trajectory", flaky)
        with pytest.raises(EnsembleError, match="replica 2 failed"):
            run_ensemble(small_spec(replicas=4))


class TestAggregate:
    def test_constant_across_replicas(self):
        """If every replica agrees, mean = min = max = every quantile."""
        spec = small_spec(replicas=3, target=100)
        traj = [synthetic_checkpoint(10, 4), synthetic_checkpoint(100, 13)]
        trajs = [list(traj) for _ in range(3)]
        spec = EnsembleSpec(params=spec.params, replicas=3, target_edges=100,
                            master_seed=0,
                            schedule=CheckpointSchedule(ratio=10.0))
        result = aggregate(trajs, spec)
        assert result.checkpoint_ns == (10, 100)
        m_mean = result.stats["M_mean"]
        m_min = result.stats["M_min"]
        m_q95 = result.stats["M_q95"]
        assert m_mean == m_min == m_q95 == (4.0, 13.0)

    def test_quantiles_and_mean(self):
        spec = small_spec(replicas=2, target=10)
        trajs = [[synthetic_checkpoint(10, 4, z=0.4)],
                 [synthetic_checkpoint(10, 6, z=0.6)]]
        spec = EnsembleSpec(params=spec.params, replicas=2, target_edges=10,
                            master_seed=0)
        result = aggregate(trajs, spec)
        assert result.stats["Z_mean"] == (0.5,)
        assert result.stats["Z_min"] == (0.4,)
        assert result.stats["Z_max"] == (0.6,)
        assert result.stats["Z_q50"] == (0.4,)
        assert result.stats["Z_q95"] == (0.6,)

    def test_derived_ratio_columns(self):
        """M ln n / n and M / n^(d/(2+beta)) are computed per checkpoint
        from the raw M column."""
        spec = small_spec(replicas=1, target=100, d=2, beta=0.0)
        trajs = [[synthetic_checkpoint(100, 20)]]
        spec = EnsembleSpec(params=spec.params, replicas=1, target_edges=100,
                            master_seed=0)
        result = aggregate(trajs, spec)
        assert result.stats["M_logn_over_n_mean"][0] == pytest.approx(
            20 * np.log(100) / 100)
        assert result.stats["M_over_n_exp_mean"][0] == pytest.approx(
            20 / 100.0, rel=1e-12)
        assert result.stats["X_max"] == (1.9 * 20,)

    def test_schedule_mismatch_rejected(self):
        spec = small_spec(replicas=2, target=100)
        trajs = [[synthetic_checkpoint(10, 4)],
                 [synthetic_checkpoint(20, 4)]]
        spec = EnsembleSpec(params=spec.params, replicas=2, target_edges=100,
                            master_seed=0)
        with pytest.raises(EnsembleError, match="checkpoint schedule"):
            aggregate(trajs, spec)

    def test_replica_count_mismatch_rejected(self):
        spec = small_spec(replicas=3, target=100)
        trajs = [[synthetic_checkpoint(10, 4)]]
        spec = EnsembleSpec(params=spec.params, replicas=3, target_edges=100,
                            master_seed=0)
        with pytest.raises(EnsembleError, match="expected 3"):
            aggregate(trajs, spec)

    def test_stat_names_complete(self):
        spec = small_spec(replicas=2, target=200)
        result = run_ensemble(spec)
        expected = {f"{q}_{a}" for q in QUANTITIES for a in AGGREGATES}
        assert set(result.stats) == expected
        for values in result.stats.values():
            assert len(values) == len(result.checkpoint_ns)


class TestHubStabilization:
    def test_earliest_constant_suffix(self):
        traj = [synthetic_checkpoint(10, 3, hubs=(0, 1)),
                synthetic_checkpoint(20, 5, hubs=(2, 1)),
                synthetic_checkpoint(40, 8, hubs=(2, 1)),
                synthetic_checkpoint(80, 12, hubs=(2, 1))]
        assert hub_stabilization_step(traj) == 20

    def test_constant_everywhere(self):
        traj = [synthetic_checkpoint(10, 3), synthetic_checkpoint(20, 5)]
        assert hub_stabilization_step(traj) == 10

    def test_never_stable_reports_final(self):
        traj = [synthetic_checkpoint(10, 3, hubs=(0, 1)),
                synthetic_checkpoint(20, 5, hubs=(2, 1)),
                synthetic_checkpoint(40, 8, hubs=(3, 1))]
        assert hub_stabilization_step(traj) == 40

    def test_recorded_in_result(self):
        spec = small_spec(replicas=3, target=500)
        result = run_ensemble(spec)
        assert len(result.hub_stabilization) == 3
        for step, traj in zip(result.hub_stabilization,
                              result.trajectories):
            ns = [cp.n for cp in traj]
            assert step in ns
            tail = [(cp.hub_low, cp.hub_high) for cp in traj
                    if cp.n >= step]
            assert len(set(tail)) == 1


class TestSeeding:
    def test_derived_seeds_injective(self):
        seeds = {derive_replica_seed(123, i) for i in range(10_000)}
        assert len(seeds) == 10_000

    def test_distinct_masters_decorrelate(self):
        a = derive_replica_seed(1, 0)
        b = derive_replica_seed(2, 0)
        assert a != b

    def test_replica_streams_differ(self):
        spec = small_spec(replicas=2, target=500)
        t0 = replica_trajectory(spec, 0)
        t1 = replica_trajectory(spec, 1)
        assert t0 != t1
