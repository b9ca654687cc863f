# coding: utf-8
# @Author: bgtech
import os
import logging
from logging.handlers import TimedRotatingFileHandler

# 获取log目录
base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
log_dir = os.path.join(base_dir, 'log')
if not os.path.exists(log_dir):
    os.makedirs(log_dir, exist_ok=True)
log_file = os.path.join(log_dir, 'lab.log')
monitor_file = os.path.join(log_dir, 'op_monitor.log')

LOG_FORMAT = '[%(asctime)s] [%(levelname)s] %(message)s'

# 创建主logger
logger = logging.getLogger('consensus_lab')
logger.setLevel(logging.INFO)

# 文件日志处理器（每天轮转，保留7天）
file_handler = TimedRotatingFileHandler(log_file, when='midnight', backupCount=7, encoding='utf-8')
file_handler.setLevel(logging.DEBUG)
file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

# 控制台日志处理器
console_handler = logging.StreamHandler()
console_handler.setLevel(logging.INFO)
console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

# 运算监控logger：记录耗时较长的数值运算
monitor_logger = logging.getLogger('consensus_lab_monitor')
monitor_logger.setLevel(logging.INFO)
monitor_file_handler = TimedRotatingFileHandler(monitor_file, when='midnight', backupCount=7, encoding='utf-8')
monitor_file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
if not monitor_logger.handlers:
    monitor_logger.addHandler(monitor_file_handler)

# 避免重复添加handler
if not logger.handlers:
    logger.addHandler(file_handler)
    logger.addHandler(console_handler)


def set_level(level):
    """
    设置主logger的日志级别
    :param level: 级别名称（如 'DEBUG'）或logging常量
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(level)
    console_handler.setLevel(level)


# 日志输出函数
def info(msg):
    logger.info(msg)

def error(msg):
    logger.error(msg)

def debug(msg):
    logger.debug(msg)

def warn(msg):
    """警告日志输出函数"""
    logger.warning(msg)

# 运算监控日志输出函数
def monitor_info(msg):
    """记录运算开始/结束与耗时"""
    monitor_logger.info(msg)

def monitor_error(msg):
    """记录运算异常信息"""
    monitor_logger.error(msg)
