# coding: utf-8
# @Author: bgtech
"""
权重设计模块
为给定的图生成行随机权重矩阵W：
  - 格点非对称权重 W_{i,i^{d+}}=c_d, W_{i,i^{d-}}=a_d
  - 基于方位角函数g(θ)的非对称设计权重
  - Metropolis-Hastings 权重 W_{i,j}=1/|N_i|
  - 均匀对称基线 W_{i,j}=α
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from common.config import get_config
from common.graph_core import GeometricGraph, LatticeSpec, edge_angles
from common.log import error, warn

WEIGHT_SCHEMES = ('lattice-asym', 'angular', 'mh', 'uniform')
TWO_PI = 2.0 * math.pi
# g(θ) 的插值节点：[0,π/2] 与 [π,3π/2] 为平台，其余两段线性
_G_KNOTS = np.array([0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi, TWO_PI])


def _row_tol() -> float:
    return float(get_config('weights.row_tol', default=1e-12))


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """
    稀疏行随机权重矩阵（CSR），每行显式包含对角元 W_{i,i}
    """
    matrix: sparse.csr_matrix
    scheme: str = 'custom'

    def __post_init__(self):
        mat = sparse.csr_matrix(self.matrix, dtype=np.float64)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"权重矩阵必须是方阵: {mat.shape}")
        mat.sum_duplicates()
        mat.sort_indices()
        if not np.all(np.isfinite(mat.data)):
            raise ValueError("权重矩阵含有非有限值")
        if np.any(mat.data < 0.0):
            raise ValueError(f"权重必须非负，最小值为 {mat.data.min()}")
        row_sums = np.asarray(mat.sum(axis=1)).ravel()
        worst = float(np.max(np.abs(row_sums - 1.0))) if row_sums.size else 0.0
        if worst > _row_tol():
            raise ValueError(f"权重矩阵不是行随机矩阵，行和最大偏差 {worst:.3e}")
        object.__setattr__(self, 'matrix', mat)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row(self, i: int) -> List[Tuple[int, float]]:
        """第i行的稀疏表示 [(列, 权重), ...]"""
        start, end = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return [(int(j), float(w)) for j, w in zip(self.matrix.indices[start:end], self.matrix.data[start:end])]

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self) -> List[Tuple[int, int, float]]:
        """按(行, 列)排序的三元组，包含对角元"""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]


@dataclass(frozen=True)
class AxisWeights:
    """格点轴向权重：a_d 指向负方向邻居，c_d 指向正方向邻居"""
    a: Tuple[float, ...]
    c: Tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        c = tuple(float(x) for x in self.c)
        if len(a) != len(c) or len(a) < 1:
            raise ValueError(f"a与c的维数必须相同且>=1: a={a}, c={c}")
        if any(x <= 0 for x in a + c):
            raise ValueError(f"轴向权重必须为正: a={a}, c={c}")
        total = sum(a) + sum(c)
        if total > 1.0 + _row_tol():
            raise ValueError(f"sum(a_d + c_d) = {total} > 1，对角元将为负")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'c', c)

    @property
    def D(self) -> int:
        return len(self.a)

    @property
    def is_asymmetric(self) -> bool:
        """每个轴都满足 a_d != c_d"""
        return all(x != y for x, y in zip(self.a, self.c))


@dataclass(frozen=True)
class Asymmetry:
    """非对称程度 ε ∈ (0,1)"""
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not 0.0 < eps < 1.0:
            raise ValueError(f"ε 必须位于(0,1): {eps}")
        object.__setattr__(self, 'epsilon', eps)


def _as_epsilon(eps: Union[Asymmetry, float]) -> float:
    return eps.epsilon if isinstance(eps, Asymmetry) else Asymmetry(eps).epsilon


def _assemble(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, diag: np.ndarray,
              scheme: str) -> WeightMatrix:
    """拼装非对角元与显式对角元"""
    diag = np.where(np.abs(diag) < 1e-15, 0.0, diag)
    idx = np.arange(n)
    mat = sparse.coo_matrix(
        (np.concatenate((vals, diag)), (np.concatenate((rows, idx)), np.concatenate((cols, idx)))),
        shape=(n, n),
    ).tocsr()
    return WeightMatrix(mat, scheme=scheme)


def lattice_asymmetric_weights(g: GeometricGraph, w: AxisWeights) -> WeightMatrix:
    """
    格点非对称权重：W_{i,i^{d+}}=c_d，W_{i,i^{d-}}=a_d，对角元吸收缺失邻居的权重
    :param g: 带轴向邻居表的格点图
    :param w: 轴向权重
    """
    if not g.is_lattice:
        raise ValueError("lattice_asymmetric_weights 需要格点图")
    if w.D != len(g.dims):
        raise ValueError(f"轴向权重维数{w.D}与格点维数{len(g.dims)}不一致")
    idx = np.arange(g.n)
    rows, cols, vals = [], [], []
    for d in range(w.D):
        for side, weight in ((0, w.a[d]), (1, w.c[d])):
            target = g.axis_neighbors[:, d, side]
            has = target >= 0
            rows.append(idx[has])
            cols.append(target[has])
            vals.append(np.full(int(has.sum()), weight))
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    diag = 1.0 - np.bincount(rows, weights=vals, minlength=g.n)
    return _assemble(g.n, rows, cols, vals, diag, 'lattice-asym')


def epsilon_lattice_weights(spec: LatticeSpec, eps: Union[Asymmetry, float]) -> AxisWeights:
    """
    ε参数化的格点权重：c_d=(1+ε)/(2D)，a_d=(1-ε)/(2D)
    """
    epsilon = _as_epsilon(eps)
    D = spec.D
    return AxisWeights(a=((1.0 - epsilon) / (2 * D),) * D, c=((1.0 + epsilon) / (2 * D),) * D)


def weight_g(theta, eps: Union[Asymmetry, float]):
    """
    方位角权重函数g：2π周期的分段线性函数
    g(0)=g(π/2)=(1+ε)/4，g(π)=g(3π/2)=(1-ε)/4，[π/2,π]与[3π/2,2π]上线性插值
    :param theta: 弧度（标量或数组）
    :param eps: 非对称程度
    """
    epsilon = _as_epsilon(eps)
    hi, lo = (1.0 + epsilon) / 4.0, (1.0 - epsilon) / 4.0
    t = np.mod(np.asarray(theta, dtype=np.float64), TWO_PI)
    vals = np.interp(t, _G_KNOTS, [hi, hi, lo, lo, hi])
    return float(vals) if vals.ndim == 0 else vals


def _require_no_isolated(g: GeometricGraph, scheme: str) -> np.ndarray:
    deg = g.degrees()
    if np.any(deg == 0):
        isolated = np.flatnonzero(deg == 0)
        error(f"{scheme} 权重要求每个节点至少有一个邻居，孤立节点: {isolated[:10].tolist()}")
        raise ValueError(f"存在孤立节点: {isolated[:10].tolist()}")
    if not g.connected:
        warn(f"{scheme} 权重构造于不连通图上，W 不可约的前提不成立")
    return deg


def angular_design_weights(g: GeometricGraph, eps: Union[Asymmetry, float],
                           self_weight: float = 0.0) -> WeightMatrix:
    """
    方位角设计权重：W_{i,k}=(1-s)·g(θ_{i,k})/Σ_{j∈N_i} g(θ_{i,j})，W_{i,i}=s
    :param g: 二维几何图
    :param eps: 非对称程度
    :param self_weight: 自权重 s ∈ [0,1)，缺省0即原始设计
    """
    if g.dim != 2:
        raise ValueError(f"方位角设计只支持二维图: D={g.dim}")
    if not 0.0 <= self_weight < 1.0:
        raise ValueError(f"self_weight 必须位于[0,1): {self_weight}")
    _require_no_isolated(g, 'angular')
    src, dst, theta = edge_angles(g)
    gv = weight_g(theta, eps)
    totals = np.bincount(src, weights=gv, minlength=g.n)
    vals = (1.0 - self_weight) * gv / totals[src]
    diag = np.full(g.n, float(self_weight))
    return _assemble(g.n, src, dst, vals, diag, 'angular')


def metropolis_hastings_weights(g: GeometricGraph) -> WeightMatrix:
    """
    Metropolis-Hastings 权重（按本项目约定）：W_{i,j}=1/deg(i)，W_{i,i}=0
    """
    deg = _require_no_isolated(g, 'mh')
    adj = g.adjacency.tocoo()
    vals = 1.0 / deg[adj.row]
    return _assemble(g.n, adj.row, adj.col, vals, np.zeros(g.n), 'mh')


def uniform_symmetric_weights(g: GeometricGraph, alpha: float) -> WeightMatrix:
    """
    均匀对称基线：边上权重α，W_{i,i}=1-α·deg(i)，双随机
    :param alpha: 0 < α <= 1/最大度
    """
    deg = g.degrees()
    max_deg = int(deg.max()) if deg.size else 0
    if alpha <= 0.0:
        raise ValueError(f"α 必须为正: {alpha}")
    if max_deg > 0 and alpha * max_deg > 1.0 + 1e-15:
        error(f"α={alpha} 超过 1/最大度={1.0 / max_deg}")
        raise ValueError(f"α={alpha} 过大，对角元为负（最大度 {max_deg}）")
    adj = g.adjacency.tocoo()
    vals = np.full(adj.nnz, float(alpha))
    return _assemble(g.n, adj.row, adj.col, vals, 1.0 - alpha * deg, 'uniform')


def support_matches(W: WeightMatrix, g: GeometricGraph, exact: bool = False) -> bool:
    """
    检查非对角支撑是否落在图的边上
    :param exact: True 时要求非零非对角元与边集完全一致
    """
    off = W.matrix.tocoo()
    mask = (off.row != off.col) & (off.data != 0.0)
    pattern = sparse.csr_matrix((np.ones(int(mask.sum()), dtype=bool), (off.row[mask], off.col[mask])),
                                shape=W.matrix.shape)
    outside = pattern > g.adjacency
    if outside.nnz:
        return False
    return pattern.nnz == g.adjacency.nnz if exact else True


def is_doubly_stochastic(W: WeightMatrix, tol: Optional[float] = None) -> bool:
    """列和是否全部为1（容差tol）"""
    tol = _row_tol() if tol is None else tol
    col_sums = np.asarray(W.matrix.sum(axis=0)).ravel()
    return bool(np.all(np.abs(col_sums - 1.0) <= tol))


def default_alpha(g: GeometricGraph) -> float:
    """均匀基线的缺省α=1/(最大度+1)，保证对角元为正"""
    return 1.0 / (int(g.degrees().max()) + 1)


def build_weights(scheme: str, g: GeometricGraph, epsilon: float = 0.5, self_weight: float = 0.0,
                  alpha: Optional[float] = None, axis: Optional[AxisWeights] = None) -> WeightMatrix:
    """
    按方案名构造权重矩阵
    :param scheme: lattice-asym | angular | mh | uniform，或 asymmetric（格点图取轴向权重，其余取方位角设计）
    """
    if scheme == 'asymmetric':
        scheme = 'lattice-asym' if g.is_lattice else 'angular'
    if scheme == 'lattice-asym':
        if axis is None:
            axis = epsilon_lattice_weights(LatticeSpec(g.dims), epsilon)
        return lattice_asymmetric_weights(g, axis)
    if scheme == 'angular':
        return angular_design_weights(g, epsilon, self_weight)
    if scheme == 'mh':
        return metropolis_hastings_weights(g)
    if scheme == 'uniform':
        return uniform_symmetric_weights(g, default_alpha(g) if alpha is None else alpha)
    raise ValueError(f"不支持的权重方案: {scheme}，可选: {WEIGHT_SCHEMES + ('asymmetric',)}")
