# coding: utf-8
# @Author: bgtech
"""
共识迭代仿真模块
执行 x(k+1) = W x(k)，记录偏差衰减，拟合经验收缩比，并与稳态预测值 x̄ = πx(0) 对照。
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from common.config import get_config
from common.log import info, error, warn
from common.op_monitor import op_monitor
from common.serialization import load_vector
from common.spectral import PerronVector, perron_numeric
from common.weights import WeightMatrix

INITIAL_STATES = ('gaussian', 'indices', 'file')


@dataclass(frozen=True, eq=False)
class ConsensusRun:
    """
    一次共识迭代的结果
    deviation_log[i] 是第 deviation_steps[i] 步的 ‖x(k) - x̄·1‖₂
    """
    iterations: int
    final_state: np.ndarray
    predicted_value: float
    achieved_spread: float
    deviation_log: np.ndarray
    deviation_steps: np.ndarray
    converged: bool = True
    tol: float = 0.0
    empirical_rho: Optional[float] = field(default=None)

    @property
    def final_value(self) -> float:
        return float(np.mean(self.final_state))

    def to_dict(self) -> dict:
        return {
            'iterations': self.iterations,
            'converged': self.converged,
            'tol': self.tol,
            'predicted_value': self.predicted_value,
            'final_value': self.final_value,
            'achieved_spread': self.achieved_spread,
            'empirical_rho': self.empirical_rho,
            'deviation_steps': self.deviation_steps.tolist(),
            'deviation_log': self.deviation_log.tolist(),
            'final_state': self.final_state.tolist(),
        }


def predicted_value(pi: PerronVector, x0: Sequence[float]) -> float:
    """稳态预测值 x̄ = Σ π_i x_i(0)"""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != pi.entries.shape:
        raise ValueError(f"x0 长度{x0.size}与Perron向量长度{pi.n}不一致")
    return float(pi.entries.dot(x0))


def _spread(x: np.ndarray) -> float:
    return float(x.max() - x.min())


def consensus_trajectory(W: WeightMatrix, x0: Sequence[float], steps: int) -> np.ndarray:
    """前steps步的全部状态，形状 (steps+1, N)"""
    x = np.array(x0, dtype=np.float64)
    states = np.empty((steps + 1, x.size))
    states[0] = x
    for k in range(1, steps + 1):
        x = W.matrix @ x
        states[k] = x
    return states


@op_monitor
def run_consensus(W: WeightMatrix, x0: Sequence[float], tol: Optional[float] = None, max_iter: Optional[int] = None,
                  log_stride: Optional[int] = None, pi: Optional[PerronVector] = None) -> ConsensusRun:
    """
    迭代 x(k+1) = W x(k) 直到 max_i x_i - min_i x_i < tol 或达到 max_iter
    :param pi: Perron向量，缺省时数值计算
    :return: ConsensusRun；max_iter 用尽时 converged=False
    """
    tol = float(get_config('sim.tol', default=1e-10)) if tol is None else float(tol)
    max_iter = int(get_config('sim.max_iter', default=1000000)) if max_iter is None else int(max_iter)
    log_stride = int(get_config('sim.log_stride', default=10)) if log_stride is None else int(log_stride)
    if tol <= 0.0:
        raise ValueError(f"tol 必须为正: {tol}")
    if log_stride < 1:
        raise ValueError(f"log_stride 必须 >= 1: {log_stride}")
    x = np.array(x0, dtype=np.float64)
    if x.shape != (W.n,):
        raise ValueError(f"x0 形状{x.shape}与W的阶{W.n}不一致")
    if pi is None:
        pi = perron_numeric(W)
    xbar = predicted_value(pi, x)

    steps, devs = [0], [float(np.linalg.norm(x - xbar))]
    A = W.matrix
    k = 0
    spread = _spread(x)
    while spread >= tol and k < max_iter:
        x = A @ x
        k += 1
        spread = _spread(x)
        if k % log_stride == 0:
            steps.append(k)
            devs.append(float(np.linalg.norm(x - xbar)))
    converged = spread < tol
    if steps[-1] != k:
        steps.append(k)
        devs.append(float(np.linalg.norm(x - xbar)))
    if converged:
        info(f"共识迭代{k}步收敛，spread={spread:.3e}，x̄={xbar:.12g}")
    else:
        warn(f"共识迭代达到max_iter={max_iter}仍未收敛，spread={spread:.3e}")

    run = ConsensusRun(iterations=k, final_state=x, predicted_value=xbar, achieved_spread=spread,
                       deviation_log=np.array(devs), deviation_steps=np.array(steps, dtype=np.int64),
                       converged=converged, tol=tol)
    try:
        rho = empirical_rho(run)
    except ValueError:
        rho = None
    object.__setattr__(run, 'empirical_rho', rho)
    return run


def fit_decay_ratio(steps: Sequence[int], deviations: Sequence[float], transient_fraction: Optional[float] = None,
                    min_tail: Optional[int] = None) -> float:
    """
    丢弃前transient_fraction的记录后，对 log(偏差) ~ k 做最小二乘，返回每步衰减比 exp(斜率)
    :raises ValueError: 尾部有效样本不足
    """
    if transient_fraction is None:
        transient_fraction = float(get_config('sim.transient_fraction', default=0.2))
    if min_tail is None:
        min_tail = int(get_config('sim.min_tail_samples', default=10))
    steps = np.asarray(steps, dtype=np.float64)
    devs = np.asarray(deviations, dtype=np.float64)
    cutoff = int(math.floor(transient_fraction * devs.size))
    steps, devs = steps[cutoff:], devs[cutoff:]
    positive = devs > 0.0
    steps, devs = steps[positive], devs[positive]
    if devs.size < min_tail:
        error(f"衰减拟合需要至少{min_tail}个尾部样本，实际{devs.size}个")
        raise ValueError(f"尾部样本不足: {devs.size} < {min_tail}")
    slope, _ = np.polyfit(steps, np.log(devs), 1)
    return float(math.exp(slope))


def empirical_rho(run: ConsensusRun) -> float:
    """由偏差记录拟合的经验收缩比"""
    return fit_decay_ratio(run.deviation_steps, run.deviation_log)


def initial_state(kind: str, n: int, seed: int = 0) -> np.ndarray:
    """
    初始状态
    :param kind: gaussian（单位方差、按seed可复现）| indices（节点编号）| file:<path>
    """
    if kind == 'gaussian':
        return np.random.default_rng(seed).standard_normal(n)
    if kind == 'indices':
        return np.arange(n, dtype=np.float64)
    if kind.startswith('file:'):
        x0 = load_vector(kind[len('file:'):])
        if x0.size != n:
            raise ValueError(f"文件中的初始状态长度{x0.size}与节点数{n}不一致")
        return x0
    raise ValueError(f"不支持的初始状态: {kind}，可选: gaussian | indices | file:<path>")
