# coding: utf-8
# @Author: bgtech
import math
import os

import pytest
import allure
import numpy as np

from common.graph_core import LatticeSpec, build_lattice
from common.harness import (
    CSV_COLUMNS, EXAMPLE_FAMILIES, ExperimentConfig, ResultRow, cell_seed, emit_example_graphs, emit_outputs,
    fit_scaling, lattice_bound, load_experiment_config, load_experiment_configs, plot_graph, plot_weight_function,
    preset_names, resolve_preset, run_sweep, summarize, write_results_csv,
)
from common.serialization import read_json, write_json
from utils.allure_utils import attach_json, attach_file

BOUND_1D = 0.5 - 2 * math.sqrt(0.06)


def lattice_config(output_dir: str, **kwargs) -> ExperimentConfig:
    params = dict(family='lattice-1d', sizes=(10, 20), samples=1, schemes=('asymmetric', 'uniform'),
                  axis_a=(0.2,), axis_c=(0.3,), alpha=0.25, output_dir=output_dir, jobs=2, name='lattice')
    params.update(kwargs)
    return ExperimentConfig(**params)


def synthetic_rows(sizes, values, scheme='uniform', family='lattice-1d'):
    rows = []
    for n, vals in zip(sizes, values):
        for sample, r in enumerate(vals):
            rows.append(ResultRow(family, n, sample, scheme, r, 1.0 - r, 'dense', 0.0, True, 0))
    return rows


def read_bytes(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


@allure.feature("实验编排")
class TestExperimentConfig:
    """实验配置校验"""

    @pytest.mark.unit
    def test_defaults(self):
        config = ExperimentConfig(family='lz', sizes=[100, 400])
        assert config.sizes == (100, 400)
        assert config.name == 'lz'
        assert config.samples == 10
        assert config.schemes == ('asymmetric', 'mh')
        assert not config.record_runtime

    @pytest.mark.unit
    @pytest.mark.parametrize("kwargs", [
        {'family': 'smallworld', 'sizes': (10,)},
        {'family': 'rgg', 'sizes': ()},
        {'family': 'rgg', 'sizes': (100, 50)},
        {'family': 'lz', 'sizes': (100, 101)},
        {'family': 'lattice-2d', 'sizes': (10,)},
        {'family': 'rgg', 'sizes': (10,), 'samples': 0},
        {'family': 'rgg', 'sizes': (10,), 'epsilon': 1.0},
        {'family': 'rgg', 'sizes': (10,), 'schemes': ('sdp',)},
        {'family': 'lattice-1d', 'sizes': (10,), 'axis_a': (0.2,)},
        {'family': 'lz', 'sizes': (9,), 'axis_a': (0.2,), 'axis_c': (0.3,)},
        {'family': 'lattice-2d', 'sizes': (9,), 'axis_a': (0.2,), 'axis_c': (0.3,)},
        {'family': 'rgg', 'sizes': (10,), 'jobs': 0},
    ], ids=['family', 'empty', 'order', 'lz-square', 'lattice2d-square', 'samples', 'epsilon', 'scheme',
            'axis-pair', 'axis-family', 'axis-dim', 'jobs'])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)

    @pytest.mark.unit
    def test_dict_round_trip(self, sweep_dir):
        config = lattice_config(sweep_dir)
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    @pytest.mark.unit
    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({'family': 'rgg', 'sizes': [10], 'colour': 'red'})

    @pytest.mark.unit
    def test_cell_seed(self):
        assert cell_seed(2012, 100, 0) == cell_seed(2012, 100, 0)
        seeds = {cell_seed(2012, n, s) for n in (100, 225) for s in range(5)}
        assert len(seeds) == 10


@allure.feature("实验编排")
class TestRunSweep:
    """扫描执行"""

    @pytest.mark.unit
    def test_empty_schemes(self, sweep_dir):
        assert run_sweep(lattice_config(sweep_dir, schemes=())) == []

    @pytest.mark.unit
    def test_lattice_closed_forms(self, sweep_dir):
        rows = run_sweep(lattice_config(sweep_dir))
        attach_json([r.__dict__ for r in rows], "扫描结果")
        assert [(r.N, r.scheme) for r in rows] == [(10, 'asymmetric'), (10, 'uniform'),
                                                  (20, 'asymmetric'), (20, 'uniform')]
        for r in rows:
            assert r.ok and r.connected and r.resamples == 0
            assert r.R == 1.0 - r.rho
            if r.scheme == 'asymmetric':
                expected = 0.5 - 2 * math.sqrt(0.06) * math.cos(math.pi / r.N)
            else:
                expected = 0.5 * (1.0 - math.cos(math.pi / r.N))
            assert r.R == pytest.approx(expected, abs=1e-10)

    @pytest.mark.unit
    def test_bipartite_mh_recorded_as_error(self, sweep_dir):
        rows = run_sweep(lattice_config(sweep_dir, schemes=('mh',), axis_a=None, axis_c=None, alpha=None))
        assert len(rows) == 2
        for r in rows:
            assert not r.ok
            assert r.method == 'error'
            assert r.R is None and r.rho is None

    @pytest.mark.unit
    def test_generation_failure_recorded(self, sweep_dir, monkeypatch):
        def broken(family, n, seed, *args, **kwargs):
            raise RuntimeError("连通图重采样失败")

        monkeypatch.setattr('common.harness.generate_connected', broken)
        config = ExperimentConfig(family='rgg', sizes=(30,), samples=2, output_dir=sweep_dir)
        rows = run_sweep(config)
        assert len(rows) == 4
        assert all(r.method == 'error' and not r.connected for r in rows)
        assert "重采样" in rows[0].error

    @pytest.mark.integration
    def test_deterministic_across_jobs(self, tmp_path):
        serial = ExperimentConfig(family='lz', sizes=(16, 25), samples=2, jobs=1, output_dir=str(tmp_path / 'a'))
        parallel = ExperimentConfig(family='lz', sizes=(16, 25), samples=2, jobs=3, output_dir=str(tmp_path / 'b'))
        first = write_results_csv(run_sweep(serial), str(tmp_path / 'serial.csv'))
        second = write_results_csv(run_sweep(parallel), str(tmp_path / 'parallel.csv'))
        assert read_bytes(first) == read_bytes(second)


@allure.feature("实验编排")
class TestScalingFit:
    """log R 对 log N 的尺度拟合"""

    @pytest.mark.unit
    def test_exact_power_law(self):
        sizes = [16, 32, 64, 128]
        rows = synthetic_rows(sizes, [[2.0 * n ** -2.0] for n in sizes])
        fit = fit_scaling(rows, scheme='uniform')
        assert fit.slope == pytest.approx(-2.0, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-10)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)
        assert fit.sizes == tuple(sizes)

    @pytest.mark.unit
    def test_uses_median_per_size(self):
        sizes = [10, 20, 40, 80]
        rows = synthetic_rows(sizes, [[n ** -1.0, 5.0, 1e-9] for n in sizes])
        assert fit_scaling(rows).slope == pytest.approx(-1.0, abs=1e-12)

    @pytest.mark.unit
    def test_error_rows_and_other_schemes_ignored(self):
        sizes = [10, 20, 40, 80]
        rows = synthetic_rows(sizes, [[n ** -1.5] for n in sizes])
        rows += synthetic_rows(sizes, [[0.3] for _ in sizes], scheme='mh')
        rows.append(ResultRow('lattice-1d', 160, 0, 'uniform', None, None, 'error', 0.0, True, 0, 'boom'))
        fit = fit_scaling(rows, scheme='uniform')
        assert fit.slope == pytest.approx(-1.5, abs=1e-12)
        assert 160 not in fit.sizes

    @pytest.mark.unit
    def test_too_few_sizes(self):
        rows = synthetic_rows([10, 20, 40], [[0.1], [0.05], [0.02]])
        with pytest.raises(ValueError):
            fit_scaling(rows)

    @pytest.mark.integration
    def test_uniform_1d_slope(self, sweep_dir):
        config = ExperimentConfig(family='lattice-1d', sizes=(32, 64, 128, 256), samples=1, schemes=('uniform',),
                                  alpha=0.25, output_dir=sweep_dir)
        fit = fit_scaling(run_sweep(config), scheme='uniform')
        attach_json(fit.to_dict(), "尺度拟合")
        assert fit.slope == pytest.approx(-2.0, abs=0.02)


@allure.feature("实验编排")
class TestOutputs:
    """CSV、SVG与汇总输出"""

    @pytest.mark.unit
    def test_csv_format(self, tmp_path):
        rows = [
            ResultRow('lattice-1d', 10, 0, 'asymmetric', 0.25, 0.75, 'dense', 3.5, True, 0),
            ResultRow('lattice-1d', 10, 0, 'mh', None, None, 'error', 1.0, False, 2, 'W 非本原'),
        ]
        path = write_results_csv(rows, str(tmp_path / 'results.csv'))
        lines = read_bytes(path).decode('utf-8').splitlines()
        assert lines[0] == ','.join(CSV_COLUMNS)
        assert lines[1] == 'lattice-1d,10,0,asymmetric,0.25,0.75,dense,,true,0'
        assert lines[2] == 'lattice-1d,10,0,mh,,,error,,false,2'
        timed = write_results_csv(rows, str(tmp_path / 'timed.csv'), record_runtime=True)
        assert read_bytes(timed).decode('utf-8').splitlines()[1].split(',')[7] == '3.5'

    @pytest.mark.integration
    def test_emit_outputs(self, sweep_dir):
        config = lattice_config(sweep_dir)
        rows = run_sweep(config)
        paths = emit_outputs(rows, config)
        for key in ('csv', 'samples_plot', 'mean_plot', 'summary'):
            assert os.path.isfile(paths[key])
        assert os.path.basename(paths['samples_plot']) == 'lattice_samples.svg'
        assert os.path.basename(paths['mean_plot']) == 'lattice_mean.svg'
        attach_file(paths['csv'], "results.csv")
        svg = read_bytes(paths['samples_plot']).decode('utf-8')
        assert '<svg' in svg
        summary = read_json(paths['summary'])
        assert summary['rows'] == 4 and summary['failed'] == 0
        assert summary['lattice_bound'] == pytest.approx(BOUND_1D, abs=1e-15)
        assert summary['schemes']['asymmetric']['fit'] is None
        assert summary['schemes']['uniform']['per_N']['10']['count'] == 1

    @pytest.mark.integration
    def test_rerun_is_byte_identical(self, tmp_path):
        first = lattice_config(str(tmp_path / 'first'))
        second = lattice_config(str(tmp_path / 'second'))
        a = emit_outputs(run_sweep(first), first)
        b = emit_outputs(run_sweep(second), second)
        assert read_bytes(a['csv']) == read_bytes(b['csv'])

    @pytest.mark.unit
    def test_all_failed_rows_still_written(self, sweep_dir):
        config = lattice_config(sweep_dir, schemes=('mh',), axis_a=None, axis_c=None, alpha=None)
        paths = emit_outputs(run_sweep(config), config)
        assert 'samples_plot' not in paths
        assert read_json(paths['summary'])['failed'] == 2

    @pytest.mark.unit
    def test_empty_rows_rejected(self, sweep_dir):
        with pytest.raises(ValueError):
            emit_outputs([], lattice_config(sweep_dir))

    @pytest.mark.unit
    def test_lattice_bound(self, sweep_dir):
        assert lattice_bound(lattice_config(sweep_dir)) == pytest.approx(BOUND_1D, abs=1e-15)
        assert lattice_bound(ExperimentConfig(family='lz', sizes=(100,))) is None
        eps_2d = ExperimentConfig(family='lattice-2d', sizes=(100,), epsilon=0.5, schemes=('asymmetric',))
        a, c = 0.125, 0.375
        assert lattice_bound(eps_2d) == pytest.approx((math.sqrt(a) - math.sqrt(c)) ** 2, abs=1e-15)

    @pytest.mark.unit
    def test_summary_includes_fit_with_enough_sizes(self, sweep_dir):
        sizes = [16, 32, 64, 128]
        config = ExperimentConfig(family='lattice-1d', sizes=tuple(sizes), samples=1, schemes=('uniform',),
                                  alpha=0.25, output_dir=sweep_dir)
        summary = summarize(synthetic_rows(sizes, [[n ** -2.0] for n in sizes]), config)
        assert summary['schemes']['uniform']['fit']['slope'] == pytest.approx(-2.0, abs=1e-12)
        assert 'lattice_bound' not in summary


@allure.feature("实验编排")
class TestLoadExperimentConfig:
    """预设、预设组、别名与配置文件"""

    @pytest.mark.unit
    def test_preset_names(self):
        names = set(preset_names())
        assert names >= {'fig3', 'fig7-lz', 'fig7-delaunay', 'fig7-rgg', 'fig8', 'scaling-1d', 'scaling-2d'}
        assert names >= {'fig8-lz', 'fig8-delaunay', 'fig8-rgg'}
        assert names >= {'lattice-1d-bound', 'lz-compare', 'delaunay-compare', 'rgg-compare', 'lz-mean'}

    @pytest.mark.unit
    def test_load_preset(self):
        config = load_experiment_config('fig3')
        assert config.family == 'lattice-1d'
        assert config.name == 'fig3'
        assert config.sizes == (10, 20, 50, 100, 200, 500, 1000)
        assert config.axis_a == (0.2,) and config.axis_c == (0.3,)
        assert config.samples == 1

    @pytest.mark.unit
    @pytest.mark.parametrize("alias, name", [
        ('lattice-1d-bound', 'fig3'),
        ('lz-compare', 'fig7-lz'),
        ('delaunay-compare', 'fig7-delaunay'),
        ('rgg-compare', 'fig7-rgg'),
        ('lz-mean', 'fig8-lz'),
    ])
    def test_alias_resolves_to_named_preset(self, alias, name):
        assert resolve_preset(alias) == [name]
        assert load_experiment_config(alias) == load_experiment_config(name)

    @pytest.mark.unit
    def test_preset_defaults_and_overrides(self, sweep_dir):
        config = load_experiment_config('fig7-lz', overrides={'samples': 3, 'jobs': None, 'output_dir': sweep_dir})
        assert config.samples == 3
        assert config.output_dir == sweep_dir
        assert config.sizes == (100, 225, 400, 625, 900)
        assert load_experiment_config('fig7-rgg', overrides={'sizes': [400]}).sizes == (400,)

    @pytest.mark.unit
    def test_group_expands_to_every_family(self, sweep_dir):
        configs = load_experiment_configs('fig8', overrides={'output_dir': sweep_dir, 'samples': 2})
        assert [c.name for c in configs] == ['fig8-lz', 'fig8-delaunay', 'fig8-rgg']
        assert [c.family for c in configs] == ['lz', 'delaunay', 'rgg']
        for config in configs:
            assert config.output_dir == os.path.join(sweep_dir, config.name)
            assert config.samples == 2
            assert config.schemes == ('asymmetric', 'mh')
        with pytest.raises(ValueError, match="load_experiment_configs"):
            load_experiment_config('fig8')
        defaults = load_experiment_configs('fig8')
        assert len({c.output_dir for c in defaults}) == 3
        assert all(c.output_dir.endswith(c.name) for c in defaults)

    @pytest.mark.unit
    def test_single_preset_through_group_loader(self):
        assert load_experiment_configs('fig3') == [load_experiment_config('fig3')]

    @pytest.mark.unit
    def test_custom_from_file(self, tmp_path):
        path = write_json(str(tmp_path / 'exp.json'),
                          {'family': 'delaunay', 'sizes': [50, 100], 'samples': 2, 'name': 'mine'})
        config = load_experiment_config('custom', path)
        assert config.family == 'delaunay' and config.name == 'mine' and config.samples == 2
        assert load_experiment_configs('custom', path) == [config]

    @pytest.mark.unit
    def test_invalid_requests(self):
        with pytest.raises(ValueError):
            load_experiment_config('no-such-preset')
        with pytest.raises(ValueError):
            resolve_preset('fig9')
        with pytest.raises(ValueError):
            load_experiment_config('custom')
        with pytest.raises(FileNotFoundError):
            load_experiment_config('custom', '/nonexistent/exp.json')

    @pytest.mark.unit
    def test_all_presets_valid(self):
        for name in preset_names():
            members = resolve_preset(name)
            configs = load_experiment_configs(name)
            assert [c.name for c in configs] == members
            for config in configs:
                assert np.all(np.diff(config.sizes) > 0)


@allure.feature("实验编排")
class TestExampleGraphs:
    """各几何图族示例图与 g(θ) 曲线"""

    @pytest.mark.integration
    def test_emit_example_graphs(self, sweep_dir, allure_utils):
        paths = emit_example_graphs(36, 3, sweep_dir)
        assert set(paths) == {'lz', 'delaunay', 'rgg', 'g'}
        for family in EXAMPLE_FAMILIES:
            assert os.path.basename(paths[family]) == f"example_{family}.svg"
            assert '<svg' in read_bytes(paths[family]).decode('utf-8')
        assert os.path.basename(paths['g']) == 'weight_g.svg'
        allure_utils.attach_file(paths['rgg'], "example_rgg.svg", allure.attachment_type.SVG)

    @pytest.mark.integration
    def test_example_graphs_byte_identical(self, tmp_path):
        first = emit_example_graphs(49, 11, str(tmp_path / 'first'))
        second = emit_example_graphs(49, 11, str(tmp_path / 'second'))
        for key in first:
            assert read_bytes(first[key]) == read_bytes(second[key]), key

    @pytest.mark.unit
    def test_subset_and_invalid_families(self, sweep_dir):
        paths = emit_example_graphs(30, 1, sweep_dir, families=('rgg',))
        assert set(paths) == {'rgg', 'g'}
        with pytest.raises(ValueError):
            emit_example_graphs(30, 1, sweep_dir, families=('lattice',))
        with pytest.raises(ValueError):
            emit_example_graphs(30, 1, sweep_dir, families=('lz',))

    @pytest.mark.unit
    def test_plot_graph_requires_planar_positions(self, sweep_dir):
        g = build_lattice(LatticeSpec((5,)))
        with pytest.raises(ValueError):
            plot_graph(g, os.path.join(sweep_dir, 'line.svg'))
        square = build_lattice(LatticeSpec((3, 3)))
        path = plot_graph(square, os.path.join(sweep_dir, 'square.svg'))
        assert os.path.isfile(path)

    @pytest.mark.unit
    def test_weight_function_plot(self, sweep_dir):
        path = plot_weight_function(0.5, os.path.join(sweep_dir, 'g.svg'))
        assert '<svg' in read_bytes(path).decode('utf-8')
