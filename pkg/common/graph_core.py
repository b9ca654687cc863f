# coding: utf-8
# @Author: bgtech
"""
图核心模块
构造并校验格点图与二维几何图（L-Z、Delaunay、随机几何图），提供邻居几何查询。
所有图在构造后不可变，可被多个线程安全地共享读取。
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, cKDTree

from common.config import get_config
from common.log import info, error, debug, warn
from common.op_monitor import op_monitor

# 生成器常数：L-Z 半径 2/sqrt(N)，扰动标准差 1/(4 sqrt(N))；随机几何图半径 3/sqrt(N)
LZ_RADIUS_FACTOR = 2.0
LZ_NOISE_FACTOR = 0.25
RGG_RADIUS_FACTOR = 3.0
# Delaunay 剪枝：保留欧氏距离小于 1/3 的边
DELAUNAY_MAX_EDGE = 1.0 / 3.0
ANGLE_TOL = 1e-12
TWO_PI = 2.0 * math.pi

FAMILIES = ('lattice', 'lz', 'delaunay', 'rgg')


@dataclass(frozen=True)
class LatticeSpec:
    """N_1 x N_2 x ... x N_D 格点规格"""
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise ValueError("格点维数D必须至少为1")
        if any(d < 2 for d in dims):
            raise ValueError(f"格点每个方向的节点数必须>=2: {dims}")
        object.__setattr__(self, 'dims', dims)

    @property
    def D(self) -> int:
        return len(self.dims)

    @property
    def N(self) -> int:
        return int(np.prod(self.dims))


@dataclass(frozen=True)
class EdgeAngle:
    """邻居j相对于节点i的方位角，取值[0, 2π)"""
    source: int
    target: int
    theta: float


def lattice_coordinates(dims: Sequence[int]) -> np.ndarray:
    """整数格点坐标，节点编号以第1轴变化最快"""
    n = int(np.prod(dims))
    return np.stack(np.unravel_index(np.arange(n), tuple(dims), order='F'), axis=1)


def lattice_axis_neighbors(dims: Sequence[int]) -> np.ndarray:
    """
    计算格点轴向邻居表
    :return: 形状(N, D, 2)的整数数组，[:, d, 0]为i^{d-}，[:, d, 1]为i^{d+}，不存在时为-1
    """
    dims = tuple(dims)
    coords = lattice_coordinates(dims)
    n = coords.shape[0]
    idx = np.arange(n)
    strides = np.concatenate(([1], np.cumprod(dims)[:-1]))
    table = np.full((n, len(dims), 2), -1, dtype=np.int64)
    for d, (size, stride) in enumerate(zip(dims, strides)):
        table[:, d, 0] = np.where(coords[:, d] > 0, idx - stride, -1)
        table[:, d, 1] = np.where(coords[:, d] < size - 1, idx + stride, -1)
    return table


def _normalize_edges(edges, n: int) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("图中不允许自环")
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError(f"边的端点超出节点范围[0, {n})")
    arr = np.sort(arr, axis=1)
    return np.unique(arr, axis=0)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GeometricGraph:
    """
    几何图：R^D 中的节点坐标 + 无向边集合
    边以 i<j 的有序对保存，邻接关系天然对称；dims 非空时为格点图并带轴向邻居表
    """
    positions: np.ndarray
    edges: np.ndarray
    dims: Optional[Tuple[int, ...]] = None
    axis_neighbors: Optional[np.ndarray] = None

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64, ndmin=2)
        if positions.ndim != 2 or positions.shape[0] < 1:
            raise ValueError(f"节点坐标形状非法: {positions.shape}")
        if not np.all(np.isfinite(positions)):
            raise ValueError("节点坐标必须全部为有限值")
        edges = _normalize_edges(self.edges, positions.shape[0])
        object.__setattr__(self, 'positions', _frozen(positions))
        object.__setattr__(self, 'edges', _frozen(edges))

        if self.dims is not None:
            dims = tuple(int(d) for d in self.dims)
            if int(np.prod(dims)) != positions.shape[0]:
                raise ValueError(f"格点规格{dims}与节点数{positions.shape[0]}不一致")
            expected = lattice_axis_neighbors(dims)
            table = expected if self.axis_neighbors is None else np.asarray(self.axis_neighbors, dtype=np.int64)
            if table.shape != expected.shape or not np.array_equal(table, expected):
                raise ValueError("轴向邻居表与整数格点邻接关系不一致")
            object.__setattr__(self, 'dims', dims)
            object.__setattr__(self, 'axis_neighbors', _frozen(table.copy()))
        elif self.axis_neighbors is not None:
            raise ValueError("只有格点图可以携带轴向邻居表")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def is_lattice(self) -> bool:
        return self.dims is not None

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """对称的CSR邻接矩阵（布尔）"""
        rows = np.concatenate((self.edges[:, 0], self.edges[:, 1]))
        cols = np.concatenate((self.edges[:, 1], self.edges[:, 0]))
        data = np.ones(rows.shape[0], dtype=bool)
        adj = sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        adj.sort_indices()
        return adj

    def neighbors(self, i: int) -> np.ndarray:
        """节点i的邻居（升序）"""
        adj = self.adjacency
        return adj.indices[adj.indptr[i]:adj.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @cached_property
    def connected(self) -> bool:
        """连通性标记"""
        return is_connected(self)


def is_connected(g: GeometricGraph) -> bool:
    """
    判断图是否只有一个连通分量
    :param g: 几何图
    :return: 连通返回True
    """
    if g.n == 1:
        return True
    n_components, _ = connected_components(g.adjacency, directed=False)
    return n_components == 1


def build_lattice(spec: LatticeSpec) -> GeometricGraph:
    """
    构造D维格点图：节点位于整数坐标，距离为1的节点之间连边
    :param spec: 格点规格
    :return: 带轴向邻居表的几何图
    """
    coords = lattice_coordinates(spec.dims)
    table = lattice_axis_neighbors(spec.dims)
    idx = np.arange(spec.N)
    pieces = []
    for d in range(spec.D):
        plus = table[:, d, 1]
        has = plus >= 0
        pieces.append(np.stack((idx[has], plus[has]), axis=1))
    edges = np.concatenate(pieces, axis=0)
    debug(f"构造格点图: dims={spec.dims}, N={spec.N}, 边数={edges.shape[0]}")
    return GeometricGraph(coords.astype(np.float64), edges, dims=spec.dims, axis_neighbors=table)


def radius_graph(positions, radius: float) -> GeometricGraph:
    """
    半径图：欧氏距离不超过radius的节点对之间连边
    :param positions: 节点坐标 (N, D)
    :param radius: 连接半径
    """
    positions = np.asarray(positions, dtype=np.float64)
    pairs = cKDTree(positions).query_pairs(r=radius, output_type='ndarray')
    return GeometricGraph(positions, pairs)


def _log_connectivity(name: str, g: GeometricGraph, seed) -> None:
    if g.connected:
        debug(f"{name}样本连通: N={g.n}, seed={seed}, 边数={g.edges.shape[0]}")
    else:
        warn(f"{name}样本不连通: N={g.n}, seed={seed}")


@op_monitor
def generate_lz(n: int, seed: int) -> GeometricGraph:
    """
    L-Z几何图：单位正方形内间距1/sqrt(N)的方形格点加高斯扰动，半径2/sqrt(N)内连边
    :param n: 节点数，必须是完全平方数 m^2 (m>=2)
    :param seed: 随机种子
    """
    m = math.isqrt(int(n))
    if m * m != n or m < 2:
        error(f"L-Z几何图节点数必须为完全平方数: n={n}")
        raise ValueError(f"L-Z几何图节点数必须为完全平方数 m^2 (m>=2): n={n}")
    rng = np.random.default_rng(seed)
    grid = (lattice_coordinates((m, m)) + 0.5) / m
    sqrt_n = math.sqrt(n)
    positions = grid + rng.normal(0.0, LZ_NOISE_FACTOR / sqrt_n, size=grid.shape)
    g = radius_graph(positions, LZ_RADIUS_FACTOR / sqrt_n)
    _log_connectivity("L-Z", g, seed)
    return g


@op_monitor
def generate_random_geometric(n: int, seed: int) -> GeometricGraph:
    """
    随机几何图：单位正方形内均匀撒点，距离不超过3/sqrt(N)的节点对连边
    :param n: 节点数 (>=2)
    :param seed: 随机种子
    """
    if n < 2:
        raise ValueError(f"随机几何图节点数必须>=2: n={n}")
    rng = np.random.default_rng(seed)
    positions = rng.uniform(0.0, 1.0, size=(n, 2))
    g = radius_graph(positions, RGG_RADIUS_FACTOR / math.sqrt(n))
    _log_connectivity("随机几何图", g, seed)
    return g


def delaunay_triangles(points) -> np.ndarray:
    """
    Delaunay三角剖分（剪枝前）
    共圆/共线等退化输入先按Qhull默认选项三角化，失败时改用QJ微扰重试
    :param points: 二维点集 (N, 2)
    :return: 三角形顶点索引 (T, 3)
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < 3:
        raise ValueError("Delaunay三角剖分需要至少3个二维点")
    try:
        tri = Delaunay(points)
    except RuntimeError as e:
        warn(f"Delaunay输入退化，使用QJ微扰重试: {e}")
        try:
            tri = Delaunay(points, qhull_options="QJ")
        except RuntimeError as e2:
            error(f"Delaunay三角剖分失败: {e2}")
            raise RuntimeError(f"Delaunay三角剖分失败: {e2}") from e2
    return np.sort(tri.simplices, axis=1)


def delaunay_graph(points, max_length: float = DELAUNAY_MAX_EDGE) -> GeometricGraph:
    """
    Delaunay图：三角剖分的边中保留长度小于max_length的边
    """
    points = np.asarray(points, dtype=np.float64)
    triangles = delaunay_triangles(points)
    pairs = np.concatenate((triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [0, 2]]), axis=0)
    pairs = np.unique(pairs, axis=0)
    lengths = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    return GeometricGraph(points, pairs[lengths < max_length])


@op_monitor
def generate_delaunay(n: int, seed: int) -> GeometricGraph:
    """
    Delaunay几何图：单位正方形内均匀撒点，Voronoi胞相交且距离小于1/3的节点对连边
    :param n: 节点数 (>=3)
    :param seed: 随机种子
    """
    if n < 3:
        raise ValueError(f"Delaunay图节点数必须>=3: n={n}")
    rng = np.random.default_rng(seed)
    g = delaunay_graph(rng.uniform(0.0, 1.0, size=(n, 2)))
    _log_connectivity("Delaunay", g, seed)
    return g


def _angles(delta: np.ndarray) -> np.ndarray:
    if np.any(np.hypot(delta[:, 0], delta[:, 1]) == 0.0):
        raise ValueError("存在长度为0的边（节点坐标重合），方位角无定义")
    theta = np.mod(np.arctan2(delta[:, 1], delta[:, 0]), TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    return theta


def neighbor_angles(g: GeometricGraph, i: int) -> List[EdgeAngle]:
    """
    计算节点i的每个邻居相对于i的方位角 atan2(y_j-y_i, x_j-x_i)，映射到[0, 2π)
    :param g: 二维几何图
    :param i: 节点编号
    """
    if g.dim != 2:
        raise ValueError(f"方位角只对二维图有定义: D={g.dim}")
    nbrs = g.neighbors(i)
    if nbrs.size == 0:
        raise ValueError(f"节点{i}没有邻居")
    theta = _angles(g.positions[nbrs] - g.positions[i])
    return [EdgeAngle(int(i), int(j), float(t)) for j, t in zip(nbrs, theta)]


def edge_angles(g: GeometricGraph) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    所有有向边(i→j)的方位角，neighbor_angles的向量化形式
    :return: (sources, targets, theta)
    """
    if g.dim != 2:
        raise ValueError(f"方位角只对二维图有定义: D={g.dim}")
    adj = g.adjacency.tocoo()
    theta = _angles(g.positions[adj.col] - g.positions[adj.row])
    return adj.row.astype(np.int64), adj.col.astype(np.int64), theta


def generate(family: str, n: int, seed: int = 0, dims: Optional[Sequence[int]] = None) -> GeometricGraph:
    """
    按图族生成图
    :param family: lattice | lz | delaunay | rgg
    :param n: 节点数
    :param seed: 随机种子（格点图忽略）
    :param dims: 格点规格，缺省时为一维 (n,)
    """
    if family == 'lattice':
        spec = LatticeSpec(tuple(dims) if dims else (n,))
        if n and spec.N != n:
            raise ValueError(f"格点规格{spec.dims}的节点数{spec.N}与n={n}不一致")
        return build_lattice(spec)
    if family == 'lz':
        return generate_lz(n, seed)
    if family == 'delaunay':
        return generate_delaunay(n, seed)
    if family == 'rgg':
        return generate_random_geometric(n, seed)
    raise ValueError(f"不支持的图族: {family}，可选: {FAMILIES}")


def generate_connected(family: str, n: int, seed: int, dims: Optional[Sequence[int]] = None,
                       max_resamples: Optional[int] = None) -> Tuple[GeometricGraph, int]:
    """
    生成连通样本：不连通时以 seed+offset 重采样
    :return: (图, 重采样次数)
    """
    if max_resamples is None:
        max_resamples = int(get_config('graph.max_resamples', default=100))
    for offset in range(max_resamples + 1):
        g = generate(family, n, (int(seed) + offset) % 2 ** 64, dims)
        if g.connected:
            if offset:
                info(f"{family} N={n} 经过{offset}次重采样得到连通样本")
            return g, offset
    error(f"{family} N={n} seed={seed} 重采样{max_resamples}次后仍不连通")
    raise RuntimeError(f"{family} N={n} seed={seed}: {max_resamples}次重采样后仍不连通")
