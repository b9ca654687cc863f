# coding: utf-8
# @Author: bgtech
"""
谱分析模块
格点权重的闭式谱与Perron向量、一般W的Perron向量与本质谱半径数值估计、
收敛速率 R = 1 - ρ(W)，以及格点速率下界（含Gerschgorin圆盘界）。
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order

from common.config import get_config
from common.graph_core import LatticeSpec, build_lattice
from common.log import info, error, debug, warn
from common.op_monitor import op_monitor
from common.weights import AxisWeights, WeightMatrix, lattice_asymmetric_weights

METHODS = ('closed-form', 'dense', 'power-deflation')
# 判断谱是否为实数的虚部容差
IMAG_TOL = 1e-10
# 1-ρ 与 min{1-λ2, 1+λN} 的一致性容差
RATE_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """数值迭代未收敛，携带残差与迭代次数"""

    def __init__(self, message: str, residual: float = float('nan'), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SpectralReport:
    """
    谱分析结果
    rate 与 mu2 由 rho、lambda2 派生，保证 rate = 1 - rho 精确成立
    """
    rho: float
    method: str
    residual: float = 0.0
    lambda2: Optional[float] = None
    lambdaN: Optional[float] = None
    rate: float = field(init=False)
    mu2: Optional[float] = field(init=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"未知的谱分析方法: {self.method}")
        if not math.isfinite(self.rho) or self.rho < 0.0:
            raise ValueError(f"ρ 必须为非负有限值: {self.rho}")
        object.__setattr__(self, 'rho', float(self.rho))
        object.__setattr__(self, 'rate', 1.0 - float(self.rho))
        object.__setattr__(self, 'mu2', None if self.lambda2 is None else 1.0 - float(self.lambda2))

    @property
    def two_sided_rate(self) -> Optional[float]:
        """实谱时的 min{1-λ2, 1+λN}"""
        if self.lambda2 is None or self.lambdaN is None:
            return None
        return min(1.0 - self.lambda2, 1.0 + self.lambdaN)

    def to_dict(self) -> dict:
        return {
            'rho': self.rho,
            'rate': self.rate,
            'lambda2': self.lambda2,
            'lambdaN': self.lambdaN,
            'mu2': self.mu2,
            'method': self.method,
            'residual': self.residual,
        }


@dataclass(frozen=True, eq=False)
class PerronVector:
    """左Perron向量 π：πW = π，Σπ_i = 1，π_i > 0"""
    entries: np.ndarray

    def __post_init__(self):
        p = np.array(self.entries, dtype=np.float64).ravel()
        if p.size < 1 or not np.all(np.isfinite(p)):
            raise ValueError("Perron向量必须非空且有限")
        if np.any(p <= 0.0):
            raise ValueError(f"Perron向量分量必须为正，最小值 {p.min()}")
        total = p.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Perron向量之和必须为1: {total}")
        p.setflags(write=False)
        object.__setattr__(self, 'entries', p)

    @classmethod
    def normalized(cls, values) -> 'PerronVector':
        """归一化；下溢为0的分量取最小正规数"""
        v = np.asarray(values, dtype=np.float64)
        v = np.where(v == 0.0, np.finfo(np.float64).tiny, v)
        return cls(v / v.sum())

    @property
    def n(self) -> int:
        return self.entries.size

    def defect(self, W: WeightMatrix) -> float:
        """‖πW - π‖_1"""
        return float(np.abs(W.matrix.T @ self.entries - self.entries).sum())


@dataclass(frozen=True)
class RateBounds:
    """格点速率的解析界"""
    lambda2_upper: float
    lambdaN_lower: float
    lambdaN_lower_uniform: float
    gerschgorin_lower: float
    rate_lower: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def laplacian_of(W: WeightMatrix) -> sparse.csr_matrix:
    """图拉普拉斯 L = I - W"""
    return (sparse.identity(W.n, format='csr') - W.matrix).tocsr()


def _check_axis(a: float, c: float) -> None:
    if a <= 0 or c <= 0:
        raise ValueError(f"a, c 必须为正: a={a}, c={c}")


def spectrum_lattice_1d(N: int, a: float, c: float) -> np.ndarray:
    """
    一维格点权重的全部特征值
    {1} ∪ {1-a-c+2√(ac)·cos((ℓ-1)π/N) : ℓ=2..N}
    """
    _check_axis(a, c)
    if a + c > 1.0 + 1e-12:
        raise ValueError(f"a + c = {a + c} > 1")
    k = np.arange(1, int(N))
    rest = 1.0 - a - c + 2.0 * math.sqrt(a * c) * np.cos(k * math.pi / N)
    return np.concatenate(([1.0], rest))


def perron_lattice_1d(N: int, a: float, c: float) -> PerronVector:
    """
    一维格点的左Perron向量 π_i ∝ (c/a)^{i-1}；a=c 时为均匀向量
    在对数域计算，避免 (c/a)^N 溢出
    """
    _check_axis(a, c)
    N = int(N)
    ratio = c / a
    if abs(ratio - 1.0) < 1e-14:
        return PerronVector(np.full(N, 1.0 / N))
    logs = np.arange(N) * math.log(ratio)
    v = np.exp(logs - logs.max())
    return PerronVector.normalized(v)


def spectrum_lattice_d(spec: LatticeSpec, w: AxisWeights) -> np.ndarray:
    """
    D维格点的全部特征值 λ = 1 - Σ_d (1 - λ_{ℓ_d})
    输出顺序与格点编号一致（第1轴变化最快）
    """
    if w.D != spec.D:
        raise ValueError(f"轴向权重维数{w.D}与格点维数{spec.D}不一致")
    total = np.zeros(1)
    for d in range(spec.D):
        mu_d = 1.0 - spectrum_lattice_1d(spec.dims[d], w.a[d], w.c[d])
        total = np.add.outer(mu_d, total).ravel()
    return 1.0 - total


def perron_lattice_d(spec: LatticeSpec, w: AxisWeights) -> PerronVector:
    """D维格点的Perron向量 π = π_D ⊗ ... ⊗ π_1"""
    if w.D != spec.D:
        raise ValueError(f"轴向权重维数{w.D}与格点维数{spec.D}不一致")
    p = np.ones(1)
    for d in range(spec.D):
        p = np.kron(perron_lattice_1d(spec.dims[d], w.a[d], w.c[d]).entries, p)
    return PerronVector.normalized(p)


def perron_numeric(W: WeightMatrix, tol: Optional[float] = None, max_iter: Optional[int] = None) -> PerronVector:
    """
    幂迭代求左Perron向量：p <- W^T p，从均匀向量出发，直到相邻迭代的L1变化 < tol
    :raises ConvergenceError: max_iter 内未收敛
    """
    tol = float(get_config('spectral.perron_tol', default=1e-13)) if tol is None else tol
    max_iter = int(get_config('spectral.perron_max_iter', default=100000)) if max_iter is None else max_iter
    P = W.matrix.T.tocsr()
    p = np.full(W.n, 1.0 / W.n)
    residual = float('inf')
    for k in range(1, max_iter + 1):
        q = P @ p
        q /= q.sum()
        residual = float(np.abs(q - p).sum())
        p = q
        if residual < tol:
            debug(f"Perron幂迭代在第{k}步收敛，残差 {residual:.3e}")
            return PerronVector.normalized(p)
    error(f"Perron幂迭代{max_iter}步未收敛，残差 {residual:.3e}")
    raise ConvergenceError(f"Perron幂迭代{max_iter}步未收敛", residual=residual, iterations=max_iter)


def _symmetrized(A: sparse.csr_matrix) -> Optional[np.ndarray]:
    """
    若W满足细致平衡（可逆），返回相似的对称矩阵 S_ij = √(W_ij W_ji)，否则返回None
    """
    n = A.shape[0]
    off = A.tocoo()
    keep = (off.row != off.col) & (off.data > 0.0)
    off = sparse.csr_matrix((off.data[keep], (off.row[keep], off.col[keep])), shape=(n, n))
    off.sort_indices()
    off_t = off.T.tocsr()
    off_t.sort_indices()
    if not (np.array_equal(off.indptr, off_t.indptr) and np.array_equal(off.indices, off_t.indices)):
        return None
    if np.array_equal(off.data, off_t.data):
        dense = off.toarray()
    else:
        # 势函数 φ：沿BFS树积累 log(W_ij/W_ji)，再检验所有边
        ratio = off.copy()
        ratio.data = np.log(off.data) - np.log(off_t.data)
        phi = np.zeros(n)
        seen = np.zeros(n, dtype=bool)
        for root in range(n):
            if seen[root]:
                continue
            order, pred = breadth_first_order(off, root, directed=False, return_predecessors=True)
            for node in order[1:]:
                phi[node] = phi[pred[node]] + ratio[pred[node], node]
            seen[order] = True
        rows = np.repeat(np.arange(n), np.diff(ratio.indptr))
        if np.max(np.abs(phi[ratio.indices] - phi[rows] - ratio.data), initial=0.0) > 1e-8:
            return None
        sym = off.copy()
        sym.data = np.sqrt(off.data * off_t.data)
        dense = sym.toarray()
    dense[np.diag_indices(n)] = A.diagonal()
    return dense


def _dense_report(W: WeightMatrix) -> SpectralReport:
    sym = _symmetrized(W.matrix)
    if sym is not None:
        vals = scipy.linalg.eigvalsh(sym).astype(np.complex128)
        real = True
    else:
        vals = scipy.linalg.eigvals(W.to_dense())
        real = bool(np.max(np.abs(vals.imag), initial=0.0) <= IMAG_TOL)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    residual = float(abs(vals[idx] - 1.0))
    rest = np.delete(vals, idx)
    if rest.size == 0:
        return SpectralReport(rho=0.0, method='dense', residual=residual)
    rho = float(np.max(np.abs(rest)))
    if real:
        re = np.sort(rest.real)
        return SpectralReport(rho=rho, method='dense', residual=residual,
                              lambda2=float(re[-1]), lambdaN=float(re[0]))
    debug(f"W的谱含复特征值（最大虚部 {np.max(np.abs(vals.imag)):.3e}），λ2/λN 不可用")
    return SpectralReport(rho=rho, method='dense', residual=residual)


def _ritz_pair(apply, v: np.ndarray) -> Tuple[float, float]:
    """
    span{v, Mv} 上的二维 Rayleigh-Ritz：返回残差最小的Ritz值的模及其残差
    实主特征值与复共轭主特征值对都在这个子空间内收敛
    """
    Q, _ = np.linalg.qr(np.column_stack((v, apply(v))))
    MQ = np.column_stack((apply(Q[:, 0]), apply(Q[:, 1])))
    theta, Z = np.linalg.eig(Q.T @ MQ)
    residuals = np.linalg.norm(MQ @ Z - (Q @ Z) * theta, axis=0) / np.linalg.norm(Z, axis=0)
    best = int(np.argmin(residuals))
    return float(abs(theta[best])), float(residuals[best])


def _tail_bound(changes: List[float], scale: float) -> float:
    """
    估计序列按几何速率 q 收敛时剩余误差的上界 d_k·q/(1-q)
    q 取最近两个相邻变化比的较大者；尚未进入几何收敛时返回 inf，
    连续两个窗口的变化都落在舍入误差内时返回0
    """
    if len(changes) >= 2 and max(changes[-2:]) <= 64.0 * np.finfo(np.float64).eps * scale:
        return 0.0
    if len(changes) < 3 or min(changes[-3:-1]) == 0.0:
        return float('inf')
    q = max(changes[-1] / changes[-2], changes[-2] / changes[-3])
    if q >= 1.0:
        return float('inf')
    return changes[-1] * q / (1.0 - q)


def _power_deflation(W: WeightMatrix, pi: PerronVector, tol: float) -> SpectralReport:
    """
    收缩算子 M = W - 1π 上的幂迭代，多次随机重启
    每个窗口末用二维Ritz值估计 ρ，按估计序列的几何外推误差 <= tol·ρ 停止
    """
    restarts = int(get_config('spectral.restarts', default=5))
    window = int(get_config('spectral.window', default=50))
    max_steps = int(get_config('spectral.max_steps', default=100000))
    rng = np.random.default_rng(int(get_config('spectral.seed', default=20120101)))
    A = W.matrix
    p = pi.entries

    def apply(v):
        return A @ v - p.dot(v)

    estimates = []
    worst_residual = 0.0
    for restart in range(restarts):
        v = apply(rng.standard_normal(W.n))
        norm = np.linalg.norm(v)
        if norm == 0.0:
            estimates.append(0.0)
            continue
        v /= norm
        estimate, residual, changes, done = float('nan'), float('nan'), [], False
        for step in range(1, max_steps + 1):
            y = apply(v)
            g = np.linalg.norm(y)
            if g == 0.0:
                estimate, residual, done = 0.0, 0.0, True
                break
            v = y / g
            if step % window == 0 and step >= 2 * window:
                previous = estimate
                estimate, residual = _ritz_pair(apply, v)
                if not math.isnan(previous):
                    changes.append(abs(estimate - previous))
                    if _tail_bound(changes, estimate) <= tol * max(estimate, 1e-300):
                        done = True
                        break
        if not done:
            drift = changes[-1] if changes else float('nan')
            error(f"收缩幂迭代第{restart + 1}次重启{max_steps}步未收敛，估计值变化 {drift:.3e}")
            raise ConvergenceError(
                f"本质谱半径估计在{max_steps}步内未稳定（估计值振荡），建议改用dense方法",
                residual=drift, iterations=max_steps)
        worst_residual = max(worst_residual, residual)
        estimates.append(estimate)
    rho = max(estimates)
    debug(f"收缩幂迭代估计: {estimates}")
    return SpectralReport(rho=rho, method='power-deflation', residual=worst_residual)


def essential_spectral_radius(W: WeightMatrix, pi: Optional[PerronVector] = None, tol: Optional[float] = None,
                              method: str = 'auto') -> SpectralReport:
    """
    本质谱半径 ρ(W)：除特征值1以外的最大模
    :param method: auto（N <= 阈值时dense，否则iterative）| dense | iterative
    :raises ConvergenceError: 迭代路径估计振荡
    """
    if method not in ('auto', 'dense', 'iterative'):
        raise ValueError(f"method 必须为 auto|dense|iterative: {method}")
    tol = float(get_config('spectral.tol', default=1e-8)) if tol is None else tol
    if method == 'auto':
        threshold = int(get_config('spectral.dense_threshold', default=2000))
        method = 'dense' if W.n <= threshold else 'iterative'
    if W.n == 1:
        return SpectralReport(rho=0.0, method='dense')
    if method == 'dense':
        return _dense_report(W)
    if pi is None:
        pi = perron_numeric(W)
    if pi.n != W.n:
        raise ValueError(f"Perron向量长度{pi.n}与W的阶{W.n}不一致")
    return _power_deflation(W, pi, tol)


@op_monitor
def convergence_rate(W: WeightMatrix, method: str = 'auto', pi: Optional[PerronVector] = None,
                     tol: Optional[float] = None) -> SpectralReport:
    """
    收敛速率 R = 1 - ρ(W)；实谱时同时检验 R = min{1-λ2, 1+λN}
    """
    report = essential_spectral_radius(W, pi=pi, tol=tol, method=method)
    two_sided = report.two_sided_rate
    if two_sided is not None and abs(two_sided - report.rate) > RATE_TOL:
        error(f"速率不一致: 1-ρ={report.rate}, min{{1-λ2,1+λN}}={two_sided}")
        raise RuntimeError(f"1-ρ={report.rate} 与 min{{1-λ2,1+λN}}={two_sided} 不一致")
    info(f"N={W.n} 方案={W.scheme} 方法={report.method} R={report.rate:.10g}")
    return report


def closed_form_report(spec: LatticeSpec, w: AxisWeights) -> SpectralReport:
    """格点闭式谱给出的报告（method=closed-form）"""
    vals = spectrum_lattice_d(spec, w)
    # 下标0对应全部 ℓ_d=1，即特征值1
    rest = vals[1:]
    return SpectralReport(rho=float(np.max(np.abs(rest))), method='closed-form',
                          lambda2=float(rest.max()), lambdaN=float(rest.min()))


def lattice_rate_bounds(spec: LatticeSpec, w: AxisWeights, W: Optional[WeightMatrix] = None) -> RateBounds:
    """
    格点速率的解析界
    λ2 <= 1 - min_d(√a_d - √c_d)²
    λN >= 1 - Σ_d(a_d + c_d - 2√(a_d c_d)·cos((N_d-1)π/N_d))，与N无关的松弛 1 - Σ_d(√a_d + √c_d)²
    Gerschgorin：λN >= -1 + 2·min_i W_ii
    :param W: 已构造的权重矩阵，缺省时按(spec, w)构造
    """
    if w.D != spec.D:
        raise ValueError(f"轴向权重维数{w.D}与格点维数{spec.D}不一致")
    a, c, dims = np.array(w.a), np.array(w.c), np.array(spec.dims, dtype=np.float64)
    gaps = (np.sqrt(a) - np.sqrt(c)) ** 2
    lambda2_upper = float(1.0 - gaps.min())
    lambdaN_lower = float(1.0 - np.sum(a + c - 2.0 * np.sqrt(a * c) * np.cos((dims - 1.0) * math.pi / dims)))
    lambdaN_uniform = float(1.0 - np.sum((np.sqrt(a) + np.sqrt(c)) ** 2))
    if W is None:
        W = lattice_asymmetric_weights(build_lattice(spec), w)
    gerschgorin = float(-1.0 + 2.0 * W.diagonal().min())
    rate_lower = min(1.0 - lambda2_upper, 1.0 + max(lambdaN_lower, lambdaN_uniform, gerschgorin))
    if rate_lower <= 0.0:
        warn(f"格点 {spec.dims} 的速率下界非正: {rate_lower}（a_d = c_d 时没有与N无关的界）")
    return RateBounds(lambda2_upper, lambdaN_lower, lambdaN_uniform, gerschgorin, rate_lower)
