# coding: utf-8
# @Author: bgtech
import json
import math

import pytest
import allure
import numpy as np
from scipy import sparse

from common.consensus_sim import (
    consensus_trajectory, empirical_rho, fit_decay_ratio, initial_state, predicted_value, run_consensus,
)
from common.get_caseparams import load_test_data, case_ids
from common.graph_core import LatticeSpec, build_lattice, generate_connected
from common.spectral import PerronVector, convergence_rate, perron_lattice_1d, perron_lattice_d
from common.weights import AxisWeights, WeightMatrix, angular_design_weights, lattice_asymmetric_weights
from utils.allure_utils import attach_json

PREDICTED = load_test_data('consensus_sim.yaml', 'predicted_value')


def lattice_100() -> WeightMatrix:
    return lattice_asymmetric_weights(build_lattice(LatticeSpec((100,))), AxisWeights((0.2,), (0.3,)))


@allure.feature("共识仿真")
class TestPredictedValue:

    @pytest.mark.unit
    @pytest.mark.parametrize("case", PREDICTED, ids=case_ids(PREDICTED))
    def test_cases(self, case):
        pi = PerronVector(np.array(case['pi']))
        assert predicted_value(pi, case['x0']) == pytest.approx(case['expected'], abs=1e-15)

    @pytest.mark.unit
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            predicted_value(PerronVector(np.full(3, 1 / 3)), [1.0, 2.0])


@allure.feature("共识仿真")
class TestRunConsensus:
    """共识迭代"""

    @pytest.mark.unit
    def test_consensus_is_fixed_point(self):
        W = lattice_100()
        run = run_consensus(W, np.full(100, 2.5))
        assert run.iterations == 0
        assert run.converged
        assert np.all(run.final_state == 2.5)
        assert run.empirical_rho is None

    @pytest.mark.unit
    def test_averaging_matrix_one_step(self):
        W = WeightMatrix(sparse.csr_matrix(np.full((8, 8), 0.125)))
        x0 = np.arange(8, dtype=np.float64)
        run = run_consensus(W, x0)
        assert run.iterations == 1
        assert run.predicted_value == pytest.approx(3.5, abs=1e-15)
        assert np.allclose(run.final_state, 3.5, atol=1e-15)

    @pytest.mark.integration
    def test_lattice_converges_to_prediction(self):
        W = lattice_100()
        pi = perron_lattice_1d(100, 0.2, 0.3)
        run = run_consensus(W, initial_state('gaussian', 100, seed=3), tol=1e-10, pi=pi)
        attach_json({k: v for k, v in run.to_dict().items() if k not in ('final_state', 'deviation_log')},
                    "共识迭代结果")
        assert run.converged
        assert run.achieved_spread < 1e-10
        assert abs(run.final_value - run.predicted_value) <= 1e-8
        rho = convergence_rate(W).rho
        assert run.empirical_rho == pytest.approx(rho, rel=0.02)

    @pytest.mark.unit
    def test_numeric_perron_when_not_supplied(self):
        W = lattice_asymmetric_weights(build_lattice(LatticeSpec((12,))), AxisWeights((0.2,), (0.3,)))
        x0 = initial_state('indices', 12)
        run = run_consensus(W, x0)
        expected = predicted_value(perron_lattice_1d(12, 0.2, 0.3), x0)
        assert run.predicted_value == pytest.approx(expected, abs=1e-10)

    @pytest.mark.unit
    def test_max_iter_exhausted(self):
        run = run_consensus(lattice_100(), initial_state('indices', 100), tol=1e-10, max_iter=25, log_stride=10)
        assert not run.converged
        assert run.iterations == 25
        assert run.deviation_steps.tolist() == [0, 10, 20, 25]
        assert run.deviation_log.shape == run.deviation_steps.shape
        assert run.achieved_spread >= 1e-10

    @pytest.mark.unit
    def test_deviation_log_stride(self):
        run = run_consensus(lattice_100(), initial_state('gaussian', 100, seed=1), log_stride=50)
        steps = run.deviation_steps
        assert steps[0] == 0 and steps[-1] == run.iterations
        assert np.all(steps[1:-1] % 50 == 0)
        assert np.all(np.diff(steps) > 0)

    @pytest.mark.unit
    def test_invalid_arguments(self):
        W = lattice_100()
        with pytest.raises(ValueError):
            run_consensus(W, np.zeros(99))
        with pytest.raises(ValueError):
            run_consensus(W, np.zeros(100), tol=0.0)
        with pytest.raises(ValueError):
            run_consensus(W, np.zeros(100), log_stride=0)

    @pytest.mark.unit
    def test_spread_never_increases(self, rng):
        g, _ = generate_connected('delaunay', 60, seed=6)
        W = angular_design_weights(g, 0.5)
        states = consensus_trajectory(W, rng.standard_normal(g.n), 200)
        spreads = states.max(axis=1) - states.min(axis=1)
        assert states.shape == (201, 60)
        assert np.all(np.diff(spreads) <= 1e-14)

    @pytest.mark.unit
    def test_weighted_average_preserved(self, rng):
        spec, w = LatticeSpec((5, 4)), AxisWeights((0.1, 0.15), (0.2, 0.1))
        p = perron_lattice_d(spec, w).entries
        x0 = rng.standard_normal(20)
        states = consensus_trajectory(lattice_asymmetric_weights(build_lattice(spec), w), x0, 30)
        assert np.allclose(states @ p, p.dot(x0), atol=1e-13)


@allure.feature("共识仿真")
class TestDecayFit:
    """经验收缩比拟合"""

    @pytest.mark.unit
    def test_synthetic_geometric_decay(self):
        steps = np.arange(0, 300, 3)
        devs = 4.0 * 0.9 ** steps
        assert fit_decay_ratio(steps, devs) == pytest.approx(0.9, abs=1e-12)

    @pytest.mark.unit
    def test_transient_discarded(self):
        steps = np.arange(100)
        devs = np.where(steps < 10, 1e3 * 0.5 ** steps, 0.95 ** steps)
        assert fit_decay_ratio(steps, devs, transient_fraction=0.2) == pytest.approx(0.95, abs=1e-12)

    @pytest.mark.unit
    def test_zero_deviations_ignored(self):
        steps = np.arange(40)
        devs = 0.8 ** steps
        devs[-5:] = 0.0
        assert fit_decay_ratio(steps, devs, transient_fraction=0.0) == pytest.approx(0.8, abs=1e-12)

    @pytest.mark.unit
    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_decay_ratio([0, 1, 2], [1.0, 0.5, 0.25], min_tail=10)

    @pytest.mark.unit
    def test_empirical_rho_from_run(self):
        run = run_consensus(lattice_100(), initial_state('gaussian', 100, seed=4), log_stride=5)
        assert empirical_rho(run) == pytest.approx(run.empirical_rho, abs=0.0)
        assert 0.0 < run.empirical_rho < 1.0
        assert math.isfinite(run.empirical_rho)


@allure.feature("共识仿真")
class TestInitialState:

    @pytest.mark.unit
    def test_gaussian_reproducible(self):
        first = initial_state('gaussian', 50, seed=9)
        assert np.array_equal(first, initial_state('gaussian', 50, seed=9))
        assert not np.array_equal(first, initial_state('gaussian', 50, seed=10))

    @pytest.mark.unit
    def test_indices(self):
        assert initial_state('indices', 4).tolist() == [0.0, 1.0, 2.0, 3.0]

    @pytest.mark.unit
    def test_from_file(self, tmp_path):
        path = tmp_path / "x0.json"
        path.write_text(json.dumps({'x0': [1.0, 2.0, 3.5]}), encoding='utf-8')
        assert initial_state(f'file:{path}', 3).tolist() == [1.0, 2.0, 3.5]
        with pytest.raises(ValueError):
            initial_state(f'file:{path}', 4)

    @pytest.mark.unit
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            initial_state('uniform', 3)
