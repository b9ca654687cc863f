# coding: utf-8
# @Author: bgtech
from common.log import debug, error
from typing import Any, Dict, Optional

import numpy as np


def _spectrum_key(values) -> np.ndarray:
    """按(实部, 虚部)排序"""
    v = np.asarray(values, dtype=np.complex128).ravel()
    return v[np.lexsort((v.imag, v.real))]


class AssertionUtils:
    """断言工具类，提供数值断言并统计通过/失败次数"""

    def __init__(self):
        self.assertion_count = 0
        self.passed_count = 0
        self.failed_count = 0

    def _check(self, ok: bool, passed_msg: str, failed_msg: str) -> bool:
        self.assertion_count += 1
        if ok:
            self.passed_count += 1
            debug(f"断言通过: {passed_msg}")
            return True
        self.failed_count += 1
        error(failed_msg)
        raise AssertionError(failed_msg)

    def assert_equal(self, actual: Any, expected: Any, msg: str = None) -> bool:
        """断言实际值等于期望值"""
        return self._check(actual == expected, f"{actual} == {expected}",
                           msg or f"断言失败: 期望 {expected}, 实际 {actual}")

    def assert_true(self, condition: bool, msg: str = None) -> bool:
        return self._check(bool(condition), "条件为真", msg or "断言失败: 条件为假")

    def assert_close(self, actual: float, expected: float, abs_tol: float = 1e-12, rel_tol: float = 0.0,
                     msg: str = None) -> bool:
        """
        断言 |actual - expected| <= max(abs_tol, rel_tol·|expected|)
        """
        diff = abs(float(actual) - float(expected))
        limit = max(abs_tol, rel_tol * abs(float(expected)))
        return self._check(diff <= limit, f"{actual} ≈ {expected} (误差 {diff:.3e})",
                           msg or f"断言失败: 期望 {expected}, 实际 {actual}, 误差 {diff:.3e} > {limit:.3e}")

    def assert_allclose(self, actual, expected, abs_tol: float = 1e-12, msg: str = None) -> bool:
        """逐项比较，最大绝对误差不超过abs_tol"""
        a = np.asarray(actual)
        e = np.asarray(expected)
        if a.shape != e.shape:
            return self._check(False, "", msg or f"断言失败: 形状不一致 {a.shape} != {e.shape}")
        diff = float(np.max(np.abs(a - e))) if a.size else 0.0
        return self._check(diff <= abs_tol, f"最大误差 {diff:.3e}",
                           msg or f"断言失败: 最大绝对误差 {diff:.3e} > {abs_tol:.3e}")

    def assert_spectrum_close(self, actual, expected, abs_tol: float = 1e-10, msg: str = None) -> bool:
        """特征值多重集比较：按(实部, 虚部)排序后逐项比较"""
        return self.assert_allclose(_spectrum_key(actual), _spectrum_key(expected), abs_tol, msg)

    def assert_less_equal(self, actual: float, bound: float, slack: float = 0.0, msg: str = None) -> bool:
        """断言 actual <= bound + slack"""
        return self._check(float(actual) <= float(bound) + slack, f"{actual} <= {bound}",
                           msg or f"断言失败: {actual} > {bound}")

    def assert_in_range(self, value: float, low: float, high: float, msg: Optional[str] = None) -> bool:
        return self._check(low <= float(value) <= high, f"{value} ∈ [{low}, {high}]",
                           msg or f"断言失败: {value} 不在 [{low}, {high}] 内")

    def get_assertion_stats(self) -> Dict[str, int]:
        """获取断言统计信息"""
        return {
            'total': self.assertion_count,
            'passed': self.passed_count,
            'failed': self.failed_count
        }

    def reset_stats(self):
        self.assertion_count = 0
        self.passed_count = 0
        self.failed_count = 0
