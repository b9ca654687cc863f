# coding: utf-8
# @Author: bgtech
"""
Allure装饰器模块
避免与pytest的fixture检测冲突，装饰器内部只使用allure.step与附件
"""

import allure
from functools import wraps
from utils.allure_utils import AllureUtils


def allure_oracle_test(oracle: str):
    """
    对照测试装饰器：记录所用的独立参照（稠密特征值分解、有限差分、暴力外接圆检查等）
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            with allure.step(f"对照测试: {oracle}"):
                allure.attach(f"参照: {oracle}", "对照信息", allure.attachment_type.TEXT)
                try:
                    return func(*args, **kwargs)
                except Exception as e:
                    AllureUtils.attach_exception(e, f"对照测试异常: {oracle}")
                    raise
        return wrapper
    return decorator
