# coding: utf-8
# @Author: bgtech
"""
连续近似模块
格点拉普拉斯的 Sturm-Liouville 连续近似：
  L^{(1)} u = -(1/(2N²)) u'' - (ε/N) u'，Neumann 边界 u'(0)=u'(1)=0
特征值由闭式给出，并与离散格点的 μ2 做定量比较。
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from common.graph_core import LatticeSpec
from common.log import debug
from common.spectral import spectrum_lattice_d
from common.weights import epsilon_lattice_weights

# ε <= 0.1 且 N >= 50 时离散与连续 μ2 的相对差距上限
CONTINUUM_GAP_LIMIT = 0.02


@dataclass(frozen=True)
class SLSpec:
    """Sturm-Liouville 规格：各轴节点数 N_d 与非对称程度 ε"""
    dims: Tuple[int, ...]
    epsilon: float

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError(f"N_d 必须 >= 2: {dims}")
        if not 0.0 < float(self.epsilon) < 1.0:
            raise ValueError(f"ε 必须位于(0,1): {self.epsilon}")
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'epsilon', float(self.epsilon))

    @property
    def D(self) -> int:
        return len(self.dims)

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.dims)


@dataclass(frozen=True)
class ContinuumGap:
    mu2_discrete: float
    mu2_sl: float
    relative_gap: float

    def to_dict(self) -> dict:
        return {'mu2_discrete': self.mu2_discrete, 'mu2_sl': self.mu2_sl, 'relative_gap': self.relative_gap}


def sl_spectrum_1d(N: int, epsilon: float, count: int) -> np.ndarray:
    """
    一维算子最小的count个特征值：0, ε²/2 + ℓ²π²/(2N²)（ℓ = 1, 2, ...）
    """
    if count < 1:
        raise ValueError(f"count 必须 >= 1: {count}")
    ell = np.arange(1, int(count))
    return np.concatenate(([0.0], epsilon ** 2 / 2.0 + (ell * math.pi) ** 2 / (2.0 * N ** 2)))


def sl_mu2_d(spec: SLSpec) -> float:
    """D维算子的 μ2 = min_d (ε² + π²/N_d²)/(2D)"""
    dims = np.array(spec.dims, dtype=np.float64)
    return float(np.min((spec.epsilon ** 2 + math.pi ** 2 / dims ** 2) / (2.0 * spec.D)))


def sl_spectrum_d(spec: SLSpec, count: int) -> np.ndarray:
    """
    D维算子最小的count个特征值：分离变量后各轴一维谱按 1/D 缩放再求和
    """
    if count < 1:
        raise ValueError(f"count 必须 >= 1: {count}")
    total = np.zeros(1)
    for n_d in spec.dims:
        axis = sl_spectrum_1d(n_d, spec.epsilon, count) / spec.D
        total = np.add.outer(axis, total).ravel()
        total = np.sort(total)[:count]
    return total


def discrete_mu2_1d(N: int, epsilon: float) -> float:
    """ε格点权重下一维拉普拉斯的 μ2 = 1 - √(1-ε²)·cos(π/N)"""
    return 1.0 - math.sqrt(1.0 - epsilon ** 2) * math.cos(math.pi / N)


def continuum_gap(N: int, epsilon: float) -> ContinuumGap:
    """
    一维离散 μ2 与连续 μ2 的相对差距 |discrete - SL| / discrete
    """
    spec = SLSpec((N,), epsilon)
    discrete = discrete_mu2_1d(N, epsilon)
    sl = float(sl_spectrum_1d(N, epsilon, 2)[1])
    gap = ContinuumGap(discrete, sl, abs(discrete - sl) / discrete)
    debug(f"连续近似 N={spec.dims[0]} ε={epsilon}: {gap}")
    return gap


def continuum_gap_d(spec: SLSpec) -> ContinuumGap:
    """
    D维ε格点的离散 μ2（闭式谱）与 sl_mu2_d 比较
    """
    lattice = spec.lattice
    vals = spectrum_lattice_d(lattice, epsilon_lattice_weights(lattice, spec.epsilon))
    discrete = float(1.0 - np.max(vals[1:]))
    sl = sl_mu2_d(spec)
    return ContinuumGap(discrete, sl, abs(discrete - sl) / discrete)


def continuum_report(N: int, epsilon: float, dims: Sequence[int] = None) -> dict:
    """CLI continuum 子命令的输出内容"""
    spec = SLSpec(tuple(dims) if dims else (N,), epsilon)
    gap = continuum_gap(spec.dims[0], epsilon) if spec.D == 1 else continuum_gap_d(spec)
    payload = {'dims': list(spec.dims), 'epsilon': spec.epsilon, 'mu2_bound': spec.epsilon ** 2 / (2 * spec.D)}
    payload.update(gap.to_dict())
    payload['sl_spectrum'] = sl_spectrum_d(spec, 4).tolist()
    return payload
