import math

import numpy as np
import pytest

from seasonchain.distributions import PairDistribution, preset
from seasonchain.model import ImmunityState, ModelConfig
from seasonchain.simulate import (ChainRun, SampleSet, conditional_window,
                                  kde, one_step_outcomes, run_chain,
                                  scatter_support_check, season_stream,
                                  silverman_bandwidth, stationary_samples)


class TestRunChain:
    def test_deterministic(self, tmp_path):
        cfg, dist = ModelConfig(2), preset("case1")
        a = run_chain(cfg, dist, 42, 500, burn_in=10)
        b = run_chain(cfg, dist, 42, 500, burn_in=10)
        assert np.array_equal(a.z, b.z) and np.array_equal(a.taus, b.taus)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        a.write_csv(pa)
        b.write_csv(pb)
        assert pa.read_bytes() == pb.read_bytes()
        c = run_chain(cfg, dist, 43, 500, burn_in=10)
        assert not np.array_equal(a.z, c.z)

    def test_no_outbreak_when_tau_below_one(self):
        dist = PairDistribution(a=2, b=2, mu0=math.log(0.5), sigma2=1e-12)
        run = run_chain(ModelConfig(4), dist, 7, 50, burn_in=0)
        assert np.all(run.z == 0.0)
        # state returns to the immunity-free corner within r steps
        naive = np.zeros(4)
        naive[-1] = 1.0
        for k in range(4, 50):
            assert np.allclose(run.p_after[k], naive)

    def test_states_valid_along_the_run(self):
        run = run_chain(ModelConfig(5), preset("case4"), 11, 2000, burn_in=0)
        assert np.all(np.abs(run.p_after.sum(axis=1) - 1.0) <= 1e-12)
        assert np.all(run.p_after >= 0.0)
        for k in range(0, 2000, 97):
            ImmunityState(run.p_after[k], run.iota_after[k]).validate()

    def test_validates_arguments(self):
        with pytest.raises(ValueError):
            run_chain(ModelConfig(2), preset("case1"), 1, 0)
        with pytest.raises(ValueError):
            run_chain(ModelConfig(2), preset("case1"), 1, 10, burn_in=-1)

    def test_csv_shape(self, tmp_path):
        run = run_chain(ModelConfig(3), preset("case2"), 3, 20, burn_in=0)
        path = tmp_path / "chain.csv"
        run.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# schema=1"
        assert lines[1] == "season,delta,tau,r_e,z_overall,p_1,p_2,p_3"
        assert len(lines) == 22


class TestSamplesAndWindows:
    def test_burn_in_consumes_everything(self):
        import dataclasses
        run = run_chain(ModelConfig(2), preset("case1"), 5, 1, burn_in=100)
        run = dataclasses.replace(run, burn_in=101)
        assert stationary_samples(run).n == 0

    def test_window_identity_when_wide(self, samples):
        s = samples("case1", 2)
        w = conditional_window(s, 2.0, window=100.0)
        assert w.n == s.n

    def test_window_nonempty_at_default(self, samples):
        w = conditional_window(samples("case1", 2), 1.6, 0.02)
        assert w.n > 100
        assert np.all(np.abs(w.r_e - 1.6) <= 0.02)

    def test_window_validates(self, samples):
        with pytest.raises(ValueError):
            conditional_window(samples("case1", 2), 1.6, 0.0)

    def test_r10_mean_below_r2(self, samples):
        z2 = samples("case1", 2).positive().z
        z10 = samples("case1", 10).positive().z
        assert z10.mean() < z2.mean()


class TestKde:
    def test_single_value_bump(self):
        z = np.full(100, 0.4)
        est = kde(z)
        assert est.defective_mass == 0.0
        assert est.grid[np.argmax(est.values)] == pytest.approx(0.4, abs=0.01)

    def test_half_zeros(self):
        z = np.concatenate([np.zeros(500), np.full(500, 0.3)])
        est = kde(z)
        assert est.defective_mass == pytest.approx(0.5)

    def test_mass_invariant(self, samples):
        s = samples("case1", 2)
        est = kde(s.z)
        total = est.defective_mass + float(np.trapezoid(est.values, est.grid))
        assert total == pytest.approx(1.0, abs=2e-2)

    def test_needs_enough_positives(self):
        with pytest.raises(ValueError):
            kde(np.concatenate([np.zeros(100), np.full(10, 0.5)]))

    def test_silverman_floor(self):
        assert silverman_bandwidth(np.full(50, 0.7)) == pytest.approx(1e-3)

    def test_custom_bandwidth(self):
        z = np.linspace(0.2, 0.8, 200)
        est = kde(z, bandwidth=0.05)
        assert est.bandwidth == 0.05

    def test_window_narrowing_sharpens_conditional(self, samples):
        # wide windows blur the conditional law; the narrow default tracks it
        from seasonchain.stationary import stationary_conditional, stationary_solve
        dist = preset("case1")
        law = stationary_solve(dist)
        cond = stationary_conditional(dist, law, 1.6)
        s = samples("case1", 2)
        l1 = {}
        for w in (0.3, 0.02):
            est = kde(conditional_window(s, 1.6, w).z)
            smeared = cond(est.grid) + cond.atom_mass * np.exp(
                -0.5 * ((est.grid - cond.atom_location) / est.bandwidth) ** 2) \
                / (est.bandwidth * math.sqrt(2 * math.pi))
            l1[w] = float(np.trapezoid(np.abs(smeared - est.values), est.grid))
        assert l1[0.02] < l1[0.3]

    def test_export(self, tmp_path, samples):
        est = kde(samples("case2", 2).z)
        est.write_csv(tmp_path / "kde.csv")
        lines = (tmp_path / "kde.csv").read_text().splitlines()
        assert lines[0] == "# schema=1" and lines[1] == "z,density"
        import json
        side = json.loads((tmp_path / "kde.csv.json").read_text())
        assert set(side) == {"atom", "bandwidth", "n"}


class TestSupportCheck:
    def test_zero_samples_skipped(self):
        s = SampleSet(np.asarray([0.8, 0.9]), np.zeros(2), np.zeros((2, 2)))
        check = scatter_support_check(s)
        assert check.n_positive == 0 and check.n_violations == 0

    def test_case1_no_violations(self, samples):
        check = scatter_support_check(samples("case1", 2))
        assert check.n_violations == 0
        assert check.max_violation <= 1e-9
        assert check.distances.size == check.n_positive

    def test_r10_closer_than_r2_case1(self, samples):
        d2 = scatter_support_check(samples("case1", 2)).median_distance
        d10 = scatter_support_check(samples("case1", 10)).median_distance
        assert d10 < d2


class TestStreamsAndOneStep:
    def test_independent_chains(self):
        cfg, dist = ModelConfig(2), preset("case1")
        a = run_chain(cfg, dist, 21, 20_000, burn_in=0, chain_id=0)
        b = run_chain(cfg, dist, 21, 20_000, burn_in=0, chain_id=1)
        c = run_chain(cfg, dist, 22, 20_000, burn_in=0, chain_id=0)
        for other in (b, c):  # distinct chain ids and distinct seeds
            corr = np.corrcoef(a.z, other.z)[0, 1]
            assert abs(corr) < 3.0 / math.sqrt(20_000)

    def test_full_reset_atom_chain(self):
        # a point mass at delta = 1 wipes immunity; the chain keeps running
        dist = PairDistribution(a=3, b=7, mu0=0.7, delta_atom=0.3)
        run = run_chain(ModelConfig(3), dist, 13, 3000, burn_in=0)
        resets = run.deltas == 1.0
        assert np.mean(resets) == pytest.approx(0.3, abs=0.03)
        # after a full-drift season the carried immunity levels are all gone
        k = int(np.flatnonzero(resets[:-1])[0])
        assert np.all(run.iota_after[k][1:] == 0.0)
        assert np.all(np.abs(run.p_after.sum(axis=1) - 1.0) <= 1e-12)

    def test_one_step_threshold(self):
        re, z = one_step_outcomes(preset("case1"), 0.3, 5000, 17)
        assert np.all((re > 1.0) == (z > 0.0))

    def test_one_step_matches_model_step(self):
        from seasonchain.model import DriftPair, step
        dist = preset("case3")
        re, z = one_step_outcomes(dist, 0.4, 50, 23)
        deltas, taus = dist.sample_arrays(season_stream(23, 0), 50)
        for k in range(50):
            s = ImmunityState([0.4, 0.6], [1.0, 0.0])
            _, out = step(s, DriftPair(deltas[k], taus[k]))
            assert out.z_overall == pytest.approx(z[k], abs=1e-12)
            assert out.r_e == pytest.approx(re[k], abs=1e-12)
