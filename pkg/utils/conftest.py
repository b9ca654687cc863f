# coding: utf-8
# @Author: bgtech
"""
共享fixtures与hooks
"""

import pytest
import os
import sys
import time
from pathlib import Path

import numpy as np

from common.assertion import AssertionUtils
from common.log import info, error
from utils.allure_utils import AllureUtils, attach_text, attach_json, attach_exception


# ==================== 配置和初始化 ====================

def pytest_configure(config):
    """pytest配置钩子"""
    config.addinivalue_line("markers", "unit: 单元测试")
    config.addinivalue_line("markers", "integration: 跨模块集成测试")
    config.addinivalue_line("markers", "slow: 慢速测试（大规模谱分析或扫描）")
    config.addinivalue_line("markers", "property: 随机化性质测试")
    config.addinivalue_line("markers", "acceptance: 验收测试")
    Path("report").mkdir(exist_ok=True)
    info("pytest配置完成")


def pytest_sessionstart(session):
    info("=" * 50)
    info("测试会话开始")
    info(f"Python版本: {sys.version}")
    info(f"numpy版本: {np.__version__}")
    info(f"工作目录: {os.getcwd()}")
    info("=" * 50)


def pytest_sessionfinish(session, exitstatus):
    info("=" * 50)
    info(f"测试会话结束，退出状态: {exitstatus}")
    info("=" * 50)


# ==================== 核心Fixtures ====================

@pytest.fixture(scope="session")
def allure_utils():
    """Allure工具类fixture"""
    return AllureUtils()


@pytest.fixture(scope="function")
def assertion_utils():
    """断言工具fixture"""
    return AssertionUtils()


@pytest.fixture(scope="function")
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(20121210)


@pytest.fixture(scope="function")
def sweep_dir(tmp_path):
    """实验输出目录"""
    out = tmp_path / "sweep"
    out.mkdir()
    return str(out)


# ==================== Allure增强Hooks ====================

@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """失败时附加测试数据"""
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed:
        test_data = getattr(item, "callspec", None)
        if test_data is not None:
            try:
                attach_json({k: repr(v) for k, v in test_data.params.items()}, "测试参数")
            except Exception as e:
                error(f"附加测试参数到Allure失败: {e}")


def pytest_exception_interact(call, report):
    """异常处理钩子"""
    if report.failed and call.excinfo:
        try:
            attach_exception(call.excinfo.value, "测试异常")
            attach_text(str(call.excinfo.traceback), "异常堆栈")
        except Exception as e:
            error(f"附加异常信息到Allure失败: {e}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    """记录慢速测试"""
    start_time = time.time()
    yield
    duration = time.time() - start_time
    if duration > 5.0:
        test_class = item.cls.__name__ if item.cls else "Unknown"
        info(f"慢速测试: {test_class}.{item.name} 耗时 {duration:.2f}秒")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    stats = terminalreporter.stats
    passed = len(stats.get('passed', []))
    failed = len(stats.get('failed', []))
    skipped = len(stats.get('skipped', []))
    total = passed + failed + skipped
    info("=" * 50)
    info(f"测试执行总结: 总数 {total}，通过 {passed}，失败 {failed}，跳过 {skipped}")
    info(f"成功率: {(passed / total * 100):.1f}%" if total > 0 else "成功率: 0%")
    info("=" * 50)
