# coding: utf-8
# @Author: bgtech
import pandas as pd
import json
import os
from typing import List, Dict, Any, Optional

import yaml


def get_project_root():
    """获取项目根目录"""
    return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def get_caseparams_dir():
    """获取caseparams目录的绝对路径"""
    return os.path.join(get_project_root(), 'caseparams')


def resolve_file_path(file_path):
    """解析文件路径：绝对路径直接返回，文件名在caseparams下查找，其余相对于项目根目录"""
    if os.path.isabs(file_path):
        return file_path
    for candidate in (os.path.join(get_caseparams_dir(), file_path),
                      os.path.join(get_project_root(), file_path),
                      os.path.join(os.getcwd(), file_path)):
        if os.path.exists(candidate):
            return candidate
    return os.path.join(get_caseparams_dir(), file_path)


def read_test_data(file_path, encoding='utf-8'):
    """
    读取测试数据文件
    :param file_path: 文件路径（caseparams下的文件名、相对于项目根目录或绝对路径）
    :param encoding: 文件编码
    :return: 解析后的数据
    """
    resolved_path = resolve_file_path(file_path)
    ext = os.path.splitext(resolved_path)[-1].lower()
    try:
        if ext in ('.yaml', '.yml'):
            with open(resolved_path, 'r', encoding=encoding) as file:
                return yaml.safe_load(file)
        elif ext == '.csv':
            return pd.read_csv(resolved_path, encoding=encoding).to_dict(orient='records')
        elif ext == '.json':
            with open(resolved_path, 'r', encoding=encoding) as file:
                return json.load(file)
        else:
            raise ValueError(f"Unsupported file format: {ext}")
    except Exception as e:
        raise RuntimeError(f"Failed to read {resolved_path} with encoding {encoding}: {e}")


def load_test_data(file_name: str, section: Optional[str] = None) -> List[Dict[str, Any]]:
    """
    读取caseparams中的用例列表
    :param file_name: 文件名，如 spectral.yaml
    :param section: 顶层分组名；为None时文件本身必须是列表
    :return: 用例字典列表
    """
    data = read_test_data(file_name)
    if section is not None:
        if not isinstance(data, dict) or section not in data:
            raise KeyError(f"{file_name} 中没有分组 {section}")
        data = data[section]
    if not isinstance(data, list):
        raise ValueError(f"{file_name}:{section} 不是用例列表")
    return data


def case_ids(cases: List[Dict[str, Any]]) -> List[str]:
    """pytest参数化的用例ID"""
    return [str(case.get('case_id', i)) for i, case in enumerate(cases)]
