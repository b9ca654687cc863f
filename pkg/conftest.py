# coding: utf-8
# @Author: bgtech
"""
根目录conftest.py文件
导入utils/conftest.py中的所有fixtures和hooks
"""

from utils.conftest import *

__all__ = [
    # Fixtures
    'allure_utils',
    'assertion_utils',
    'rng',
    'sweep_dir',

    # Hooks
    'pytest_configure',
    'pytest_sessionstart',
    'pytest_sessionfinish',
    'pytest_runtest_makereport',
    'pytest_exception_interact',
    'pytest_runtest_call',
    'pytest_terminal_summary',
]
