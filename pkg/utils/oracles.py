# coding: utf-8
# @Author: bgtech
"""
测试用独立参照
与被测实现互不依赖的朴素算法：显式稠密矩阵、稠密特征值分解、稠密幂迭代、
暴力空外接圆检查、Sturm-Liouville 算子的有限差分离散。
"""

import math
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal


def dense_lattice_matrix(dims: Sequence[int], a: Sequence[float], c: Sequence[float]) -> np.ndarray:
    """
    逐节点显式构造格点权重矩阵（第1轴变化最快）
    """
    dims = tuple(int(d) for d in dims)
    n = int(np.prod(dims))
    W = np.zeros((n, n))
    strides = np.cumprod((1,) + dims[:-1])
    for i in range(n):
        coord = [(i // strides[d]) % dims[d] for d in range(len(dims))]
        for d in range(len(dims)):
            if coord[d] + 1 < dims[d]:
                W[i, i + strides[d]] = c[d]
            if coord[d] - 1 >= 0:
                W[i, i - strides[d]] = a[d]
        W[i, i] = 1.0 - W[i].sum()
    return W


def dense_eigvals(matrix: np.ndarray) -> np.ndarray:
    return np.linalg.eigvals(np.asarray(matrix, dtype=np.float64))


def dense_essential_radius(matrix: np.ndarray) -> float:
    """去掉最接近1的特征值后的最大模"""
    vals = dense_eigvals(matrix)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    return float(np.max(np.abs(np.delete(vals, idx))))


def power_perron(matrix: np.ndarray, iters: int = 200000, tol: float = 1e-15) -> np.ndarray:
    """稠密幂迭代求左Perron向量"""
    m = np.asarray(matrix, dtype=np.float64)
    p = np.full(m.shape[0], 1.0 / m.shape[0])
    for _ in range(iters):
        q = p @ m
        q /= q.sum()
        if np.max(np.abs(q - p)) < tol:
            return q
        p = q
    return p


def circumcircle(a, b, c):
    """三角形外接圆的圆心与半径"""
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay) + (cx ** 2 + cy ** 2) * (ay - by)) / d
    uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx) + (cx ** 2 + cy ** 2) * (bx - ax)) / d
    return np.array([ux, uy]), math.hypot(ax - ux, ay - uy)


def empty_circumcircle_violations(points: np.ndarray, triangles: np.ndarray, rel_tol: float = 1e-9) -> int:
    """
    暴力检查：统计严格落在某个三角形外接圆内部的点数
    """
    points = np.asarray(points, dtype=np.float64)
    violations = 0
    for tri in np.asarray(triangles):
        center, radius = circumcircle(*points[tri])
        dist = np.hypot(points[:, 0] - center[0], points[:, 1] - center[1])
        inside = dist < radius * (1.0 - rel_tol)
        inside[tri] = False
        violations += int(inside.sum())
    return violations


def fd_sturm_liouville_eigs(N: int, epsilon: float, count: int, refine: int = 10) -> np.ndarray:
    """
    -(1/(2N²)) u'' - (ε/N) u' 在[0,1]上、Neumann边界的有限差分特征值
    以权函数 e^{2εNs} 化为对称形式，格心网格 M = refine·N 个单元，二阶通量差分
    """
    M = int(refine * N)
    h = 1.0 / M
    kappa = 1.0 / (2.0 * N ** 2)
    shift = epsilon * N * h
    scale = kappa / h ** 2
    diag = np.full(M, 2.0 * scale * math.cosh(shift))
    diag[0] = scale * math.exp(shift)
    diag[-1] = scale * math.exp(-shift)
    off = np.full(M - 1, -scale)
    return eigh_tridiagonal(diag, off, eigvals_only=True, select='i', select_range=(0, count - 1))
