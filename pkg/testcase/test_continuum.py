# coding: utf-8
# @Author: bgtech
import math

import pytest
import allure
import numpy as np

from common.continuum import (
    CONTINUUM_GAP_LIMIT, SLSpec, continuum_gap, continuum_gap_d, continuum_report, discrete_mu2_1d,
    sl_mu2_d, sl_spectrum_1d, sl_spectrum_d,
)
from common.get_caseparams import load_test_data, case_ids
from utils.allure_decorators import allure_oracle_test
from utils.allure_utils import attach_comparison, attach_json
from utils.oracles import fd_sturm_liouville_eigs

MU2_1D = load_test_data('continuum.yaml', 'sl_mu2_1d')
MU2_D = load_test_data('continuum.yaml', 'sl_mu2_d')
GAP_CASES = load_test_data('continuum.yaml', 'continuum_gap')


@allure.feature("连续近似")
class TestSturmLiouvilleSpectrum:
    """Sturm-Liouville 算子的闭式谱"""

    @pytest.mark.unit
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SLSpec((1,), 0.5)
        with pytest.raises(ValueError):
            SLSpec((10,), 0.0)
        with pytest.raises(ValueError):
            SLSpec((10,), 1.0)
        assert SLSpec((10, 20), 0.3).D == 2

    @pytest.mark.unit
    @pytest.mark.parametrize("case", MU2_1D, ids=case_ids(MU2_1D))
    def test_mu2_1d(self, case):
        vals = sl_spectrum_1d(case['N'], case['epsilon'], 3)
        assert vals[0] == 0.0
        assert vals[1] == pytest.approx(case['mu2'], abs=1e-15)
        assert sl_mu2_d(SLSpec((case['N'],), case['epsilon'])) == pytest.approx(case['mu2'], abs=1e-15)

    @pytest.mark.unit
    def test_spectrum_1d_ordering(self):
        vals = sl_spectrum_1d(25, 0.3, 6)
        assert vals.size == 6
        assert np.all(np.diff(vals) > 0.0)
        with pytest.raises(ValueError):
            sl_spectrum_1d(25, 0.3, 0)

    @pytest.mark.unit
    @pytest.mark.parametrize("case", MU2_D, ids=case_ids(MU2_D))
    def test_mu2_d(self, case):
        spec = SLSpec(tuple(case['dims']), case['epsilon'])
        assert sl_mu2_d(spec) == pytest.approx(case['mu2'], abs=1e-15)
        vals = sl_spectrum_d(spec, 4)
        assert vals[0] == 0.0
        assert vals[1] == pytest.approx(case['mu2'], abs=1e-15)

    @pytest.mark.unit
    def test_spectrum_d_reduces_to_1d(self):
        assert np.allclose(sl_spectrum_d(SLSpec((30,), 0.2), 5), sl_spectrum_1d(30, 0.2, 5), atol=1e-15)

    @pytest.mark.integration
    @allure_oracle_test("格心有限差分离散")
    @pytest.mark.parametrize("N,eps", [(20, 0.1), (50, 0.3), (10, 0.05)])
    def test_matches_finite_differences(self, N, eps):
        closed = sl_spectrum_1d(N, eps, 4)
        fd = fd_sturm_liouville_eigs(N, eps, 4)
        attach_comparison(closed, fd)
        assert fd[0] == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(fd[1:], closed[1:], rtol=1e-2, atol=0.0)


@allure.feature("连续近似")
class TestContinuumGap:
    """离散 μ2 与连续 μ2 的比较"""

    @pytest.mark.unit
    @pytest.mark.parametrize("case", GAP_CASES, ids=case_ids(GAP_CASES))
    def test_gap_cases(self, case):
        gap = continuum_gap(case['N'], case['epsilon'])
        attach_json(gap.to_dict(), "连续近似差距")
        assert gap.mu2_discrete == pytest.approx(case['discrete'], abs=5e-8)
        assert gap.mu2_sl == pytest.approx(case['sl'], abs=5e-8)
        assert case['gap_low'] <= gap.relative_gap <= case['gap_high']

    @pytest.mark.unit
    @pytest.mark.parametrize("N", [50, 100, 500])
    @pytest.mark.parametrize("eps", [0.01, 0.05, 0.1])
    def test_gap_within_limit_for_weak_asymmetry(self, N, eps):
        assert continuum_gap(N, eps).relative_gap <= CONTINUUM_GAP_LIMIT

    @pytest.mark.unit
    def test_strong_asymmetry_breaks_approximation(self):
        assert continuum_gap(10, 0.9).relative_gap > CONTINUUM_GAP_LIMIT

    @pytest.mark.unit
    @pytest.mark.parametrize("N", [2, 10, 100, 1000])
    @pytest.mark.parametrize("eps", [0.05, 0.5, 0.95])
    def test_discrete_mu2_above_size_free_bound(self, N, eps):
        assert discrete_mu2_1d(N, eps) >= eps ** 2 / 2.0 - 1e-15
        assert float(sl_spectrum_1d(N, eps, 2)[1]) > eps ** 2 / 2.0

    @pytest.mark.unit
    def test_gap_d_matches_1d_on_single_axis(self):
        one = continuum_gap(80, 0.1)
        same = continuum_gap_d(SLSpec((80,), 0.1))
        assert same.mu2_discrete == pytest.approx(one.mu2_discrete, abs=1e-15)
        assert same.relative_gap == pytest.approx(one.relative_gap, abs=1e-10)

    @pytest.mark.unit
    def test_gap_d_square_lattice(self):
        gap = continuum_gap_d(SLSpec((60, 60), 0.05))
        # 两轴相同时各量恰为一维的一半
        assert gap.mu2_discrete == pytest.approx(discrete_mu2_1d(60, 0.05) / 2.0, abs=1e-15)
        assert gap.relative_gap <= CONTINUUM_GAP_LIMIT


@allure.feature("连续近似")
class TestContinuumReport:

    @pytest.mark.unit
    def test_report_1d(self):
        report = continuum_report(100, 0.1)
        assert report['dims'] == [100]
        assert report['mu2_bound'] == pytest.approx(0.005, abs=1e-18)
        assert report['relative_gap'] == pytest.approx(continuum_gap(100, 0.1).relative_gap, abs=1e-15)
        assert len(report['sl_spectrum']) == 4

    @pytest.mark.unit
    def test_report_multi_axis(self):
        report = continuum_report(10, 0.5, dims=[10, 40])
        assert report['dims'] == [10, 40]
        assert report['mu2_bound'] == pytest.approx(0.0625, abs=1e-18)
        assert report['mu2_sl'] == pytest.approx(0.0640421256876702, abs=1e-15)
        assert report['sl_spectrum'][1] == pytest.approx(report['mu2_sl'], abs=1e-15)
