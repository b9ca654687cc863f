#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
运算监控装饰器
自动记录耗时较长的数值运算（谱分析、共识迭代、实验扫描）到op_monitor.log
"""

import time
import json
import functools
from common.log import monitor_info, monitor_error


def _describe(value, limit=120):
    """参数摘要：数组只记录形状，其余截断为字符串"""
    shape = getattr(value, 'shape', None)
    if shape is not None:
        return f"{type(value).__name__}{tuple(shape)}"
    text = repr(value)
    return text if len(text) <= limit else text[:limit] + '...'


def op_monitor(func):
    """
    运算监控装饰器
    记录运算名称、参数摘要、耗时和结果状态
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        name = f"{func.__module__}.{func.__name__}"
        monitor_info(f"运算开始: {json.dumps({'function': name, 'args': [_describe(a) for a in args], 'kwargs': {k: _describe(v) for k, v in kwargs.items()}}, ensure_ascii=False)}")
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            elapsed = (time.perf_counter() - start_time) * 1000
            monitor_error(f"运算失败: {json.dumps({'function': name, 'execution_time_ms': round(elapsed, 2), 'status': 'error', 'error': str(e)}, ensure_ascii=False)}")
            raise
        elapsed = (time.perf_counter() - start_time) * 1000
        monitor_info(f"运算成功: {json.dumps({'function': name, 'execution_time_ms': round(elapsed, 2), 'status': 'success', 'result': _describe(result)}, ensure_ascii=False)}")
        return result

    return wrapper
