import numpy as np
import pytest

from echochain.analytic import DephasingParams, cn_monte_carlo
from echochain.coherence import (CoherenceCurve, CoherencePoint,
                                 bootstrap_std_error, coherence_from_ensemble,
                                 coherence_scan, point_from_amplitudes)
from echochain.config import RunConfig
from echochain.dynamics import EchoSchedule, evolve
from echochain.noise import NoiseModel, sample_realization
from echochain.seeding import child_seed
from echochain.spinchain import ChainCouplings, ConfigError, SpinBasis, \
    cat_state

PAPER_J = ChainCouplings(-0.47, 0.79, 0.37)


def echo_records(n_spins, tau0, seeds, couplings=PAPER_J, h_rms=0.0085,
                 j_max=200, reversal_error=0.0):
    model = NoiseModel(h_rms=h_rms, gamma=0.25, delta_omega=np.pi / 1000.0,
                       j_max=j_max)
    basis = SpinBasis(n_spins)
    schedule = EchoSchedule(tau0=tau0, dt=0.01, record_stride=10**6,
                            reversal_error=reversal_error)
    return [evolve(cat_state(basis), couplings,
                   sample_realization(model, s), schedule) for s in seeds]


class TestCoherencePoint:
    def test_channel_validation(self):
        with pytest.raises(ConfigError):
            CoherencePoint(1.0, 0.5, 0.01, 10, "quantum")

    def test_statistical_overshoot_allowed(self):
        CoherencePoint(1.0, 1.02, 0.01, 10, "interacting")

    def test_inconsistent_value_rejected(self):
        with pytest.raises(ConfigError):
            CoherencePoint(1.0, 1.2, 0.01, 10, "interacting")


class TestCurve:
    def test_requires_increasing_tau0(self):
        points = [CoherencePoint(t, 0.5, 0.0, 5, "interacting")
                  for t in (1.0, 1.0)]
        with pytest.raises(ConfigError):
            CoherenceCurve(tuple(points))

    def test_rejects_mixed_channels(self):
        points = (CoherencePoint(1.0, 0.5, 0.0, 5, "interacting"),
                  CoherencePoint(2.0, 0.5, 0.0, 5, "noninteracting"))
        with pytest.raises(ConfigError):
            CoherenceCurve(points)

    def test_accessors(self):
        points = tuple(CoherencePoint(t, 0.9 - 0.1 * t, 0.01, 5, "interacting")
                       for t in (1.0, 2.0, 3.0, 4.0))
        curve = CoherenceCurve(points, {"gamma": 0.25})
        assert np.array_equal(curve.tau0_values(), [1, 2, 3, 4])
        assert curve.channel == "interacting"


class TestEnsembleAveraging:
    def test_perfect_echo_gives_unity(self):
        records = echo_records(4, tau0=3.0, seeds=[1, 2, 3], h_rms=0.0)
        point = coherence_from_ensemble(records)
        assert point.c_value == pytest.approx(1.0, abs=1e-6)

    def test_tau0_zero_initial_condition(self):
        records = echo_records(4, tau0=0.0, seeds=[1, 2])
        point = coherence_from_ensemble(records)
        assert point.c_value == pytest.approx(1.0, abs=1e-12)

    def test_dephased_phasors_average_out(self):
        rng = np.random.default_rng(12)
        vals = 0.5 * np.exp(1j * rng.uniform(0, 2 * np.pi, size=10000))
        point = point_from_amplitudes(1.0, vals, "interacting")
        assert point.c_value <= 0.02

    def test_modulus_taken_after_averaging(self):
        # averaging |c1 c2| instead would report full coherence
        rng = np.random.default_rng(9)
        vals = 0.5 * np.exp(1j * rng.uniform(0, 2 * np.pi, size=4000))
        point = point_from_amplitudes(1.0, vals, "interacting")
        wrong_order = 2.0 * np.abs(vals).mean()
        assert wrong_order == pytest.approx(1.0, abs=1e-12)
        assert point.c_value < 0.1 * wrong_order

    def test_shuffle_invariance(self):
        rng = np.random.default_rng(10)
        vals = 0.4 * np.exp(1j * rng.normal(0, 0.3, size=500))
        shuffled = vals[rng.permutation(500)]
        a = 2.0 * abs(vals.mean())
        b = 2.0 * abs(shuffled.mean())
        assert a == b

    def test_mixed_parameters_refused(self):
        records = echo_records(4, tau0=2.0, seeds=[1, 2])
        other = echo_records(4, tau0=2.0, seeds=[3], h_rms=0.001)
        with pytest.raises(ConfigError, match="mixed"):
            coherence_from_ensemble(records + other)

    def test_duplicate_seeds_refused(self):
        records = echo_records(4, tau0=2.0, seeds=[1, 1])
        with pytest.raises(ConfigError, match="distinct"):
            coherence_from_ensemble(records)

    def test_minimum_ensemble(self):
        records = echo_records(4, tau0=2.0, seeds=[1])
        with pytest.raises(ConfigError):
            coherence_from_ensemble(records)

    def test_stderr_shrinks_with_root_n(self):
        rng = np.random.default_rng(11)
        vals = 0.5 * np.exp(1j * rng.normal(0, 0.4, size=6400))
        err_small = bootstrap_std_error(vals[:400])
        err_large = bootstrap_std_error(vals)
        ratio = err_small / err_large
        assert 2.8 <= ratio <= 5.7  # ideal sqrt(16) = 4, bootstrap jitter

    def test_channel_consistency_with_phase_average(self):
        # zero couplings through the simulator == pure dephasing formula
        n, tau0, j_max = 6, 4.0, 200
        seeds = [child_seed(123, i) for i in range(200)]
        records = echo_records(n, tau0, seeds,
                               couplings=ChainCouplings(0, 0, 0), j_max=j_max)
        sim = coherence_from_ensemble(records)
        params = DephasingParams(
            n, NoiseModel(h_rms=0.0085, gamma=0.25,
                          delta_omega=np.pi / 1000.0, j_max=j_max))
        mc = cn_monte_carlo(params, tau0, 20000, seed=3)
        joint = np.hypot(sim.std_error, mc.std_error)
        assert abs(sim.c_value - mc.c_value) <= 3.0 * joint


def tiny_config(**kwargs):
    base = dict(n_spins=(4,), j_max=100, tau0_grid=(0.0, 1.0),
                n_realizations=4, n_phase_samples=200, master_seed=5,
                channel="both", dt=0.01)
    base.update(kwargs)
    return RunConfig().with_overrides(**base)


class TestScan:
    def test_returns_both_channels(self):
        curves = coherence_scan(tiny_config())
        assert set(curves) == {"interacting", "noninteracting"}
        for curve in curves.values():
            assert [p.tau0 for p in curve.points] == [0.0, 1.0]
            assert curve.points[0].c_value == pytest.approx(1.0, abs=1e-9)

    def test_deterministic(self):
        a = coherence_scan(tiny_config())
        b = coherence_scan(tiny_config())
        for channel in a:
            assert [p.c_value for p in a[channel].points] == \
                   [p.c_value for p in b[channel].points]

    def test_worker_count_invariance(self):
        serial = coherence_scan(tiny_config(workers=1))
        pooled = coherence_scan(tiny_config(workers=2))
        for channel in serial:
            assert [p.c_value for p in serial[channel].points] == \
                   [p.c_value for p in pooled[channel].points]
            assert [p.std_error for p in serial[channel].points] == \
                   [p.std_error for p in pooled[channel].points]

    def test_existing_points_short_circuit(self):
        sentinel = {"tau0": 0.0, "c_value": 0.5, "std_error": 0.01,
                    "n_realizations": 2, "channel": "interacting"}
        curves = coherence_scan(tiny_config(channel="interacting"),
                                existing={("interacting", 0): sentinel})
        assert curves["interacting"].points[0].c_value == 0.5

    def test_on_point_payloads(self):
        seen = []
        coherence_scan(tiny_config(channel="interacting"),
                       on_point=lambda ch, i, p: seen.append((ch, i, p)))
        assert [(ch, i) for ch, i, _ in seen] == [("interacting", 0),
                                                  ("interacting", 1)]
        assert len(seen[0][2]["c1c2"]) == 4

    def test_monotonic_grid_required(self):
        with pytest.raises(ConfigError):
            coherence_scan(tiny_config(), tau0_grid=[1.0, 0.5])

    def test_realization_doubling_shrinks_error(self):
        cfg = tiny_config(channel="interacting", tau0_grid=(3.0,),
                          n_spins=(4,), j_max=200)
        small = coherence_scan(cfg, n_realizations=25)
        large = coherence_scan(cfg, n_realizations=100)
        err_s = small["interacting"].points[0].std_error
        err_l = large["interacting"].points[0].std_error
        assert 1.3 <= err_s / err_l <= 3.2  # ideal 2, bootstrap jitter
