#!/usr/bin/env python3
"""
测试脚本 - 验证PaqLogger功能
"""

import logging
import os
import sys
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from logger import PaqLogger


def test_logger():
    """测试日志功能"""
    print("开始测试PaqLogger...")

    # 初始化日志器, 重复实例化不应重复挂 handler
    logger = PaqLogger()
    handlers = len(logger.logger.handlers)
    PaqLogger()
    assert len(logger.logger.handlers) == handlers

    # 测试所有日志级别
    logger.debug("这是一条DEBUG级别的日志")
    logger.info("这是一条INFO级别的日志")
    logger.warning("这是一条WARNING级别的日志")
    logger.error("这是一条ERROR级别的日志")
    logger.critical("这是一条CRITICAL级别的日志")

    # 测试带变量的日志
    N, m, tau = 20000, 2, 37.71
    logger.info(f"流水线配置: N={N}, m={m}, tau={tau}")
    print("日志测试完成！")


def test_set_level():
    logger = PaqLogger('PaqLoggerLevel', log_file=None)
    logger.set_level("DEBUG")
    assert logger.is_debug()
    logger.set_level(logging.WARNING)
    assert not logger.is_debug()


if __name__ == "__main__":
    test_logger()
    test_set_level()
