# coding: utf-8
# @Author: bgtech
"""
JSON序列化
图、权重矩阵与各类报告的读写。输出键排序、浮点按最短往返表示，保证同一输入得到相同字节。
"""

import json
import os
from typing import Any

import numpy as np
from scipy import sparse

from common.graph_core import GeometricGraph
from common.log import error
from common.weights import WeightMatrix


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"无法序列化的类型: {type(obj).__name__}")


def dumps(payload: Any) -> str:
    return json.dumps(payload, default=_default, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def write_json(path: str, payload: Any) -> str:
    """
    写JSON文件，自动创建父目录
    :return: 文件路径
    """
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(dumps(payload))
    except OSError as e:
        error(f"写入文件失败: {path}: {e}")
        raise
    return path


def read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise FileNotFoundError(f"JSON文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        error(f"JSON解析失败: {path}: {e}")
        raise ValueError(f"JSON文件格式错误: {path}: {e}")


def graph_to_dict(g: GeometricGraph) -> dict:
    payload = {'positions': g.positions.tolist(), 'edges': g.edges.tolist()}
    if g.is_lattice:
        payload['dims'] = list(g.dims)
    return payload


def graph_from_dict(payload: dict) -> GeometricGraph:
    try:
        positions = payload['positions']
        edges = payload.get('edges', [])
    except (KeyError, TypeError, AttributeError):
        raise ValueError("图JSON必须包含 positions 与 edges")
    dims = payload.get('dims')
    return GeometricGraph(np.asarray(positions, dtype=np.float64),
                          np.asarray(edges, dtype=np.int64).reshape(-1, 2),
                          dims=tuple(dims) if dims else None)


def weights_to_dict(W: WeightMatrix) -> dict:
    return {'n': W.n, 'scheme': W.scheme, 'triplets': [list(t) for t in W.triplets()]}


def weights_from_dict(payload: dict) -> WeightMatrix:
    try:
        n = int(payload['n'])
        triplets = np.asarray(payload['triplets'], dtype=np.float64).reshape(-1, 3)
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"权重JSON格式错误: {e}")
    rows, cols = triplets[:, 0].astype(np.int64), triplets[:, 1].astype(np.int64)
    mat = sparse.coo_matrix((triplets[:, 2], (rows, cols)), shape=(n, n)).tocsr()
    return WeightMatrix(mat, scheme=payload.get('scheme', 'custom'))


def save_graph(path: str, g: GeometricGraph) -> str:
    return write_json(path, graph_to_dict(g))


def load_graph(path: str) -> GeometricGraph:
    return graph_from_dict(read_json(path))


def save_weights(path: str, W: WeightMatrix) -> str:
    return write_json(path, weights_to_dict(W))


def load_weights(path: str) -> WeightMatrix:
    return weights_from_dict(read_json(path))


def load_vector(path: str) -> np.ndarray:
    """读取初始状态：JSON数组，或含 x0 键的对象"""
    payload = read_json(path)
    if isinstance(payload, dict):
        payload = payload.get('x0')
    if not isinstance(payload, list):
        raise ValueError(f"初始状态文件必须是数组或含x0键的对象: {path}")
    return np.asarray(payload, dtype=np.float64)
