# coding: utf-8
# @Author: bgtech
import allure
import json
import traceback
from typing import Dict, Any, Sequence
from allure_commons.types import AttachmentType

import numpy as np

from common.log import error


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, 'to_dict'):
        return obj.to_dict()
    return str(obj)


class AllureUtils:
    """Allure报告增强工具类"""

    @staticmethod
    def attach_text(content: str, name: str = "Text Attachment"):
        allure.attach(content, name=name, attachment_type=AttachmentType.TEXT)

    @staticmethod
    def attach_json(data: Any, name: str = "JSON Data"):
        """
        附加JSON数据到Allure报告，numpy类型与带to_dict的结果对象自动转换
        :param data: JSON数据
        :param name: 附件名称
        """
        allure.attach(
            json.dumps(data, ensure_ascii=False, indent=2, default=_jsonable),
            name=name,
            attachment_type=AttachmentType.JSON
        )

    @staticmethod
    def attach_report(report, name: str = "Spectral Report"):
        """附加谱分析报告或其它结果对象"""
        AllureUtils.attach_json(report.to_dict(), name)

    @staticmethod
    def attach_comparison(actual: Sequence[float], expected: Sequence[float], name: str = "数值比较"):
        """
        附加逐项比较结果：实际值、期望值与最大绝对误差
        """
        a = np.asarray(actual, dtype=np.float64).ravel()
        e = np.asarray(expected, dtype=np.float64).ravel()
        payload = {"size": int(a.size), "actual_head": a[:10], "expected_head": e[:10]}
        if a.shape == e.shape and a.size:
            payload["max_abs_error"] = float(np.max(np.abs(a - e)))
        AllureUtils.attach_json(payload, name)

    @staticmethod
    def attach_file(file_path: str, name: str = None, attachment_type: AttachmentType = AttachmentType.TEXT):
        """
        附加文件到Allure报告（CSV、SVG、JSON产物）
        """
        try:
            with open(file_path, 'rb') as f:
                allure.attach(f.read(), name=name or file_path.split('/')[-1], attachment_type=attachment_type)
        except Exception as e:
            error(f"附加文件失败: {e}")

    @staticmethod
    def attach_exception(exception: Exception, name: str = "Exception Details"):
        exception_info = {
            "exception_type": type(exception).__name__,
            "exception_message": str(exception),
            "traceback": traceback.format_exc()
        }
        AllureUtils.attach_json(exception_info, name)


# 便捷函数
def attach_text(content: str, name: str = "Text Attachment"):
    AllureUtils.attach_text(content, name)

def attach_json(data: Any, name: str = "JSON Data"):
    """附加JSON数据到Allure报告"""
    AllureUtils.attach_json(data, name)

def attach_report(report, name: str = "Spectral Report"):
    AllureUtils.attach_report(report, name)

def attach_comparison(actual, expected, name: str = "数值比较"):
    AllureUtils.attach_comparison(actual, expected, name)

def attach_file(file_path: str, name: str = None):
    AllureUtils.attach_file(file_path, name)

def attach_exception(exception: Exception, name: str = "Exception Details"):
    """附加异常信息到Allure报告"""
    AllureUtils.attach_exception(exception, name)
