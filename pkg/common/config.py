# coding: utf-8
# @Author: bgtech
import os
import yaml
from typing import Any, Dict

from common.log import set_level

global_config = {}

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONF_DIR = os.path.join(BASE_DIR, 'conf')


def load_yaml(file_path: str) -> Dict[str, Any]:
    """
    加载YAML文件
    :param file_path: YAML文件路径
    :return: 解析后的字典数据
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"YAML文件不存在: {file_path}")
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ValueError(f"YAML文件解析错误: {file_path}: {e}")


def merge_dicts(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    递归合并两个字典，override中的值优先
    :param base: 基础字典
    :param override: 覆盖字典
    :return: 合并后的新字典
    """
    result = dict(base)
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_dicts(result[key], value)
        else:
            result[key] = value
    return result


# 自动加载conf目录下所有yaml配置文件
def load_all_configs(conf_dir=None):
    global global_config
    if conf_dir is None:
        conf_dir = CONF_DIR
    if not os.path.isdir(conf_dir):
        return
    for fname in sorted(os.listdir(conf_dir)):
        if fname.endswith('.yaml') or fname.endswith('.yml'):
            global_config = merge_dicts(global_config, load_yaml(os.path.join(conf_dir, fname)))


def get_config(*keys, default=None):
    """
    支持多级嵌套key访问，如get_config('spectral', 'tol')或get_config('spectral.tol')。
    """
    if not keys:
        return global_config
    path = []
    for k in keys:
        if isinstance(k, str):
            path.extend(k.split('.'))
        elif isinstance(k, (list, tuple)):
            path.extend(k)
    val = global_config
    for k in path:
        if isinstance(val, dict) and k in val:
            val = val[k]
        else:
            return default
    return val


# 项目启动时自动加载
def _auto_load():
    load_all_configs()
    set_level(get_config('log.level', default='INFO'))

_auto_load()
