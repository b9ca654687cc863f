# coding: utf-8
# @Author: bgtech
"""
实验编排模块
按(图族, N, 样本, 权重方案)扫描收敛速率，输出CSV、SVG图与汇总JSON；另可绘制各几何图族的示例图与 g(θ)。
每个(N, 样本)单元独立派生种子，由有界线程池并行执行，结果按规范顺序排序。
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402
import numpy as np
import pandas as pd
from scipy import stats

from common.config import get_config
from common.graph_core import GeometricGraph, LatticeSpec, build_lattice, generate_connected
from common.log import info, error, warn
from common.op_monitor import op_monitor
from common.serialization import read_json, write_json
from common.spectral import convergence_rate
from common.weights import AxisWeights, build_weights, epsilon_lattice_weights, weight_g

HARNESS_FAMILIES = ('lattice-1d', 'lattice-2d', 'lz', 'delaunay', 'rgg')
HARNESS_SCHEMES = ('asymmetric', 'mh', 'uniform')
EXAMPLE_FAMILIES = ('lz', 'delaunay', 'rgg')
CSV_COLUMNS = ['family', 'N', 'sample', 'scheme', 'R', 'rho', 'method', 'runtime_ms', 'connected', 'resamples']
SCHEME_LABELS = {
    'asymmetric': 'asymmetric design',
    'mh': 'Metropolis-Hastings',
    'uniform': 'uniform symmetric baseline',
}
# R 低于该值视为 W 非本原（例如二部图上的零自权重）
PRIMITIVE_TOL = 1e-10
MIN_SCALING_SIZES = 4
SVG_HASHSALT = 'consensus-lab'


@dataclass(frozen=True)
class ExperimentConfig:
    """实验配置"""
    family: str
    sizes: Tuple[int, ...]
    samples: int = 10
    seed: int = 2012
    schemes: Tuple[str, ...] = ('asymmetric', 'mh')
    epsilon: float = 0.5
    output_dir: str = 'report/sweeps'
    axis_a: Optional[Tuple[float, ...]] = None
    axis_c: Optional[Tuple[float, ...]] = None
    alpha: Optional[float] = None
    self_weight: float = 0.0
    jobs: int = 4
    name: Optional[str] = None
    record_runtime: bool = False

    def __post_init__(self):
        if self.family not in HARNESS_FAMILIES:
            raise ValueError(f"不支持的图族: {self.family}，可选: {HARNESS_FAMILIES}")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes:
            raise ValueError("sizes 不能为空")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"sizes 必须严格递增: {sizes}")
        if self.family in ('lattice-2d', 'lz'):
            bad = [n for n in sizes if math.isqrt(n) ** 2 != n]
            if bad:
                raise ValueError(f"{self.family} 的节点数必须是完全平方数: {bad}")
        if int(self.samples) < 1:
            raise ValueError(f"samples 必须 >= 1: {self.samples}")
        if not 0.0 < float(self.epsilon) < 1.0:
            raise ValueError(f"ε 必须位于(0,1): {self.epsilon}")
        schemes = tuple(self.schemes)
        unknown = [s for s in schemes if s not in HARNESS_SCHEMES]
        if unknown:
            raise ValueError(f"不支持的权重方案: {unknown}，可选: {HARNESS_SCHEMES}")
        if (self.axis_a is None) != (self.axis_c is None):
            raise ValueError("axis_a 与 axis_c 必须同时给出")
        if self.axis_a is not None:
            if not self.family.startswith('lattice'):
                raise ValueError("axis_a/axis_c 只适用于格点图族")
            AxisWeights(tuple(self.axis_a), tuple(self.axis_c))
            if len(self.axis_a) != self.lattice_dim:
                raise ValueError(f"axis_a 维数{len(self.axis_a)}与{self.family}不一致")
            object.__setattr__(self, 'axis_a', tuple(float(x) for x in self.axis_a))
            object.__setattr__(self, 'axis_c', tuple(float(x) for x in self.axis_c))
        if int(self.jobs) < 1:
            raise ValueError(f"jobs 必须 >= 1: {self.jobs}")
        object.__setattr__(self, 'sizes', sizes)
        object.__setattr__(self, 'schemes', schemes)
        object.__setattr__(self, 'samples', int(self.samples))
        object.__setattr__(self, 'seed', int(self.seed))
        object.__setattr__(self, 'epsilon', float(self.epsilon))
        if not self.name:
            object.__setattr__(self, 'name', self.family)

    @property
    def lattice_dim(self) -> int:
        return 2 if self.family == 'lattice-2d' else 1

    @classmethod
    def from_dict(cls, payload: dict) -> 'ExperimentConfig':
        known = set(cls.__dataclass_fields__)
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"实验配置含未知字段: {sorted(unknown)}")
        data = dict(payload)
        for key in ('sizes', 'schemes', 'axis_a', 'axis_c'):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ('sizes', 'schemes', 'axis_a', 'axis_c'):
            if data[key] is not None:
                data[key] = list(data[key])
        return data


@dataclass(frozen=True)
class ResultRow:
    """一个(N, 样本, 方案)单元的结果；失败时 method='error' 且 R/rho 为空"""
    family: str
    N: int
    sample: int
    scheme: str
    R: Optional[float]
    rho: Optional[float]
    method: str
    runtime_ms: float
    connected: bool
    resamples: int
    error: str = ''

    @property
    def ok(self) -> bool:
        return not self.error

    def sort_key(self):
        return self.family, self.N, self.sample, self.scheme


@dataclass(frozen=True)
class ScalingFit:
    """log R 对 log N 的最小二乘拟合"""
    slope: float
    intercept: float
    r2: float
    sizes: Tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return {'slope': self.slope, 'intercept': self.intercept, 'r2': self.r2, 'sizes': list(self.sizes)}


def cell_seed(base: int, n: int, sample: int) -> int:
    """单元种子：由(base, N, sample)派生，与其它单元是否运行无关"""
    return int(np.random.SeedSequence([int(base), int(n), int(sample)]).generate_state(1, dtype=np.uint64)[0])


def _cell_graph(config: ExperimentConfig, n: int, sample: int):
    if config.family == 'lattice-1d':
        return build_lattice(LatticeSpec((n,))), 0
    if config.family == 'lattice-2d':
        m = math.isqrt(n)
        return build_lattice(LatticeSpec((m, m))), 0
    return generate_connected(config.family, n, cell_seed(config.seed, n, sample))


def _axis_weights(config: ExperimentConfig, spec: LatticeSpec) -> AxisWeights:
    if config.axis_a is not None:
        return AxisWeights(config.axis_a, config.axis_c)
    return epsilon_lattice_weights(spec, config.epsilon)


def _error_row(config, n, sample, scheme, elapsed_ms, connected, resamples, message) -> ResultRow:
    return ResultRow(config.family, n, sample, scheme, None, None, 'error', elapsed_ms, connected, resamples, message)


def run_cell(config: ExperimentConfig, n: int, sample: int) -> List[ResultRow]:
    """
    计算一个(N, 样本)单元的全部方案；异常记录在行内，不向外抛出
    """
    start = time.perf_counter()
    try:
        g, resamples = _cell_graph(config, n, sample)
    except Exception as e:
        elapsed = (time.perf_counter() - start) * 1000
        error(f"{config.family} N={n} 样本{sample} 生成图失败: {e}")
        return [_error_row(config, n, sample, s, elapsed, False, 0, str(e)) for s in config.schemes]

    rows = []
    for scheme in config.schemes:
        t0 = time.perf_counter()
        try:
            axis = _axis_weights(config, LatticeSpec(g.dims)) if g.is_lattice else None
            W = build_weights(scheme, g, epsilon=config.epsilon, self_weight=config.self_weight,
                              alpha=config.alpha, axis=axis)
            report = convergence_rate(W)
            elapsed = (time.perf_counter() - t0) * 1000
            if report.rate <= PRIMITIVE_TOL:
                message = f"W 非本原（R={report.rate:.3e}），收敛速率无定义"
                error(f"{config.family} N={n} 样本{sample} 方案{scheme}: {message}")
                rows.append(_error_row(config, n, sample, scheme, elapsed, g.connected, resamples, message))
                continue
            rows.append(ResultRow(config.family, n, sample, scheme, report.rate, report.rho, report.method,
                                  elapsed, g.connected, resamples))
        except Exception as e:
            elapsed = (time.perf_counter() - t0) * 1000
            error(f"{config.family} N={n} 样本{sample} 方案{scheme} 失败: {type(e).__name__}: {e}")
            rows.append(_error_row(config, n, sample, scheme, elapsed, g.connected, resamples, str(e)))
    return rows


@op_monitor
def run_sweep(config: ExperimentConfig) -> List[ResultRow]:
    """
    扫描全部(N, 样本, 方案)；单元失败记录在行内，扫描继续
    :return: 按(family, N, sample, scheme)排序的结果
    """
    if not config.schemes:
        warn(f"实验 {config.name} 没有权重方案，返回空结果")
        return []
    cells = [(n, s) for n in config.sizes for s in range(config.samples)]
    info(f"实验 {config.name}: {len(cells)} 个单元 × {len(config.schemes)} 个方案，jobs={config.jobs}")
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        results = list(pool.map(lambda cell: run_cell(config, *cell), cells))
    rows = sorted((row for batch in results for row in batch), key=ResultRow.sort_key)
    failed = sum(1 for r in rows if not r.ok)
    if failed:
        warn(f"实验 {config.name}: {failed}/{len(rows)} 行失败")
    return rows


def rows_to_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows],
                        columns=CSV_COLUMNS + ['error']) if rows else pd.DataFrame(columns=CSV_COLUMNS + ['error'])


def fit_scaling(rows: Sequence[ResultRow], scheme: Optional[str] = None, family: Optional[str] = None) -> ScalingFit:
    """
    对每个N取R的中位数，拟合 log R = slope·log N + intercept
    :raises ValueError: 有效N少于4个
    """
    ok = [r for r in rows if r.ok and (scheme is None or r.scheme == scheme) and (family is None or r.family == family)]
    frame = rows_to_frame(ok)
    medians = frame.groupby('N')['R'].median().sort_index() if ok else pd.Series(dtype=float)
    if len(medians) < MIN_SCALING_SIZES:
        error(f"尺度拟合需要至少{MIN_SCALING_SIZES}个不同的N，实际{len(medians)}个")
        raise ValueError(f"尺度拟合需要至少{MIN_SCALING_SIZES}个不同的N: {list(medians.index)}")
    fit = stats.linregress(np.log(medians.index.to_numpy(dtype=np.float64)),
                           np.log(medians.to_numpy(dtype=np.float64)))
    return ScalingFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2),
                      tuple(int(n) for n in medians.index))


def _fmt_float(value) -> str:
    return '' if value is None or (isinstance(value, float) and math.isnan(value)) else repr(float(value))


def write_results_csv(rows: Sequence[ResultRow], path: str, record_runtime: bool = False) -> str:
    """results.csv：固定列顺序，浮点为最短往返表示"""
    frame = pd.DataFrame({
        'family': [r.family for r in rows],
        'N': [str(r.N) for r in rows],
        'sample': [str(r.sample) for r in rows],
        'scheme': [r.scheme for r in rows],
        'R': [_fmt_float(r.R) for r in rows],
        'rho': [_fmt_float(r.rho) for r in rows],
        'method': [r.method for r in rows],
        'runtime_ms': [_fmt_float(r.runtime_ms) if record_runtime else '' for r in rows],
        'connected': ['true' if r.connected else 'false' for r in rows],
        'resamples': [str(r.resamples) for r in rows],
    }, columns=CSV_COLUMNS)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        frame.to_csv(f, index=False)
    return path


def lattice_bound(config: ExperimentConfig) -> Optional[float]:
    """格点非对称方案与N无关的速率下界 min_d(√a_d - √c_d)²，非格点族返回None"""
    if not config.family.startswith('lattice') or 'asymmetric' not in config.schemes:
        return None
    dims = (2,) * config.lattice_dim
    w = _axis_weights(config, LatticeSpec(dims))
    return float(min((math.sqrt(a) - math.sqrt(c)) ** 2 for a, c in zip(w.a, w.c)))


def _save_svg(fig, path: str) -> str:
    """固定哈希盐、去掉日期元数据，同一输入得到相同的SVG字节"""
    with matplotlib.rc_context({'svg.hashsalt': SVG_HASHSALT}):
        fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return path


def _plot(frame: pd.DataFrame, config: ExperimentConfig, path: str, statistic: str) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for scheme in config.schemes:
        sub = frame[frame['scheme'] == scheme]
        if sub.empty:
            continue
        label = SCHEME_LABELS[scheme]
        grouped = sub.groupby('N')['R']
        if statistic == 'samples':
            points = ax.scatter(sub['N'], sub['R'], s=12, alpha=0.6, label=f"{label} (samples)")
            med = grouped.median()
            ax.plot(med.index, med.values, '-', color=points.get_facecolor()[0], label=f"{label} (median)")
        else:
            mean = grouped.mean()
            ax.plot(mean.index, mean.values, 'o-', label=f"{label} (mean)")
    bound = lattice_bound(config)
    if bound is not None and bound > 0.0:
        ax.axhline(bound, color='black', linestyle='--', linewidth=1.0, label=f"N-free lower bound {bound:.6f}")
    ax.set_xscale('log')
    ax.set_yscale('log')
    ax.set_xlabel('N')
    ax.set_ylabel('R = 1 - rho(W)')
    ax.set_title(f"{config.name}: {config.family}, epsilon={config.epsilon}")
    ax.legend(fontsize='small')
    return _save_svg(fig, path)


def summarize(rows: Sequence[ResultRow], config: ExperimentConfig) -> dict:
    """每个方案、每个N的中位数与均值，以及N足够时的尺度拟合"""
    frame = rows_to_frame([r for r in rows if r.ok])
    summary = {'config': config.to_dict(), 'rows': len(rows), 'failed': sum(1 for r in rows if not r.ok),
               'schemes': {}}
    for scheme in config.schemes:
        sub = frame[frame['scheme'] == scheme]
        entry = {'per_N': {}}
        for n, group in sub.groupby('N'):
            entry['per_N'][str(int(n))] = {'median_R': float(group['R'].median()),
                                          'mean_R': float(group['R'].mean()),
                                          'count': int(len(group))}
        try:
            entry['fit'] = fit_scaling(rows, scheme=scheme).to_dict()
        except ValueError:
            entry['fit'] = None
        summary['schemes'][scheme] = entry
    bound = lattice_bound(config)
    if bound is not None:
        summary['lattice_bound'] = bound
    return summary


def emit_outputs(rows: Sequence[ResultRow], config: ExperimentConfig) -> Dict[str, str]:
    """
    写出 results.csv、<name>_samples.svg、<name>_mean.svg、summary.json
    :raises ValueError: rows 为空
    :raises OSError: 输出目录不可写
    """
    if not rows:
        raise ValueError("没有结果行可输出")
    out = config.output_dir
    try:
        os.makedirs(out, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"输出目录不可写: {out}")
    except OSError as e:
        error(f"无法使用输出目录 {out}: {e}")
        raise
    paths = {'csv': write_results_csv(rows, os.path.join(out, 'results.csv'), config.record_runtime)}
    frame = rows_to_frame([r for r in rows if r.ok])
    if not frame.empty:
        frame['R'] = frame['R'].astype(float)
        paths['samples_plot'] = _plot(frame, config, os.path.join(out, f"{config.name}_samples.svg"), 'samples')
        paths['mean_plot'] = _plot(frame, config, os.path.join(out, f"{config.name}_mean.svg"), 'mean')
    paths['summary'] = write_json(os.path.join(out, 'summary.json'), summarize(rows, config))
    info(f"实验 {config.name} 输出: {paths}")
    return paths


def plot_graph(g: GeometricGraph, path: str, title: str = '') -> str:
    """二维几何图：淡色边加节点散点"""
    if g.dim != 2:
        raise ValueError(f"只能绘制二维图，实际维数 {g.dim}")
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    ax.add_collection(LineCollection(g.positions[g.edges].reshape(-1, 2, 2), colors='black',
                                     linewidths=0.5, alpha=0.3))
    ax.scatter(g.positions[:, 0], g.positions[:, 1], s=15, alpha=0.6, color='tab:blue', zorder=2)
    lo = min(0.0, float(g.positions.min())) - 0.02
    hi = max(1.0, float(g.positions.max())) + 0.02
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_aspect('equal')
    ax.set_title(title or f"N={g.n}, edges={len(g.edges)}")
    return _save_svg(fig, path)


def plot_weight_function(epsilon: float, path: str) -> str:
    """方位角权重函数 g(θ) 在 [0, 2π] 上的曲线，标出四个约束点"""
    theta = np.linspace(0.0, 2.0 * math.pi, 721)
    knots = np.array([0.0, 0.5, 1.0, 1.5]) * math.pi
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(theta, weight_g(theta, epsilon), '-', label=f"g, epsilon={epsilon}")
    ax.plot(knots, weight_g(knots, epsilon), 'o', color='black', label='constraints')
    ax.set_xticks(list(knots) + [2.0 * math.pi])
    ax.set_xticklabels(['0', 'pi/2', 'pi', '3pi/2', '2pi'])
    ax.set_xlabel('theta')
    ax.set_ylabel('g(theta)')
    ax.legend(fontsize='small')
    return _save_svg(fig, path)


def emit_example_graphs(n: int, seed: int, output_dir: str, epsilon: float = 0.5,
                        families: Sequence[str] = EXAMPLE_FAMILIES) -> Dict[str, str]:
    """
    每个几何图族各画一个连通样本（example_<family>.svg），并画 g(θ)（weight_g.svg）
    :raises ValueError: 图族不支持或 lz 的 n 不是完全平方数
    """
    unknown = [f for f in families if f not in EXAMPLE_FAMILIES]
    if unknown:
        raise ValueError(f"不支持的示例图族: {unknown}，可选: {EXAMPLE_FAMILIES}")
    os.makedirs(output_dir, exist_ok=True)
    paths = {}
    for family in families:
        g, resamples = generate_connected(family, n, seed)
        title = f"{family}: N={g.n}, edges={len(g.edges)}, seed={seed + resamples}"
        paths[family] = plot_graph(g, os.path.join(output_dir, f"example_{family}.svg"), title)
    paths['g'] = plot_weight_function(epsilon, os.path.join(output_dir, 'weight_g.svg'))
    info(f"示例图输出: {paths}")
    return paths


def _preset_tables() -> Tuple[dict, dict, dict]:
    return (get_config('presets', default={}) or {},
            get_config('preset_groups', default={}) or {},
            get_config('preset_aliases', default={}) or {})


def preset_names() -> List[str]:
    """全部可用预设名：单实验预设、预设组与别名"""
    presets, groups, aliases = _preset_tables()
    return sorted(set(presets) | set(groups) | set(aliases))


def resolve_preset(name: str) -> List[str]:
    """
    别名映射到规范名，预设组展开为成员列表
    :raises ValueError: 未知预设
    """
    presets, groups, aliases = _preset_tables()
    name = aliases.get(name, name)
    members = list(groups[name]) if name in groups else [name]
    unknown = [m for m in members if m not in presets]
    if unknown:
        raise ValueError(f"未知的预设: {unknown[0]}，可选: {preset_names()}")
    return members


def load_experiment_config(preset: Optional[str] = None, path: Optional[str] = None,
                           overrides: Optional[dict] = None) -> ExperimentConfig:
    """
    由预设名（conf/presets.yaml，可用别名）或JSON文件构造实验配置，overrides中非None的值优先
    :param preset: 预设名；custom 或 None 时必须给出 path
    :raises ValueError: 预设组含多个实验时改用 load_experiment_configs
    """
    payload = {
        'samples': get_config('harness.samples', default=10),
        'epsilon': get_config('harness.epsilon', default=0.5),
        'jobs': get_config('harness.jobs', default=4),
        'seed': get_config('harness.seed', default=2012),
        'output_dir': get_config('harness.output_dir', default='report/sweeps'),
    }
    if preset and preset != 'custom':
        members = resolve_preset(preset)
        if len(members) != 1:
            raise ValueError(f"预设组 {preset} 包含多个实验 {members}，请使用 load_experiment_configs")
        payload.update(_preset_tables()[0][members[0]])
        payload.setdefault('name', members[0])
    if path:
        payload.update(read_json(path))
    elif not preset or preset == 'custom':
        raise ValueError("custom 实验必须通过 --config 提供配置文件")
    payload.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(payload)


def load_experiment_configs(preset: Optional[str] = None, path: Optional[str] = None,
                            overrides: Optional[dict] = None) -> List[ExperimentConfig]:
    """
    预设组展开为多个实验配置；每个成员写入 output_dir 下以成员名命名的子目录
    """
    if not preset or preset == 'custom':
        return [load_experiment_config(preset, path, overrides)]
    members = resolve_preset(preset)
    if len(members) == 1:
        return [load_experiment_config(members[0], path, overrides)]
    configs = []
    for member in members:
        base = load_experiment_config(member, path, overrides)
        local = dict(overrides or {}, output_dir=os.path.join(base.output_dir, member))
        configs.append(load_experiment_config(member, path, local))
    return configs
