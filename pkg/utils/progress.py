#!/usr/bin/env python3
"""
无人机蜂群LoS MIMO回传项目 - 进度处理工具
提供蒙特卡洛试验的进度跟踪和报告功能
"""

import os
import sys
import time
import threading
from typing import Dict, Any, Optional, Callable

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from utils.logging import get_logger

logger = get_logger(__name__)


class TrialProgress:
    """一组试验（一次蒙特卡洛或一个扫描单元）的进度跟踪器"""

    def __init__(self, label: str, total_trials: int):
        """初始化进度跟踪器

        Args:
            label: 进度标签，例如 "gd sigma_loc=0.001"
            total_trials: 试验总数
        """
        if total_trials < 1:
            raise ValueError("试验总数必须至少为1")
        self.label = label
        self.total_trials = total_trials
        self.completed = 0
        self.converged = 0
        self.start_time = time.time()
        self.complete_time = None
        self.subscribers = []
        self.lock = threading.RLock()

    @property
    def fraction(self) -> float:
        return self.completed / self.total_trials

    @property
    def finished(self) -> bool:
        return self.completed >= self.total_trials

    def record(self, converged: bool, extra_data: Optional[Dict[str, Any]] = None) -> None:
        """记录一次完成的试验并通知订阅者

        Args:
            converged: 该试验是否达到ICN要求
            extra_data: 额外数据
        """
        with self.lock:
            if self.finished:
                logger.warning(f"{self.label}: 试验数已超过声明的总数 {self.total_trials}")
            self.completed += 1
            if converged:
                self.converged += 1
            if self.finished and self.complete_time is None:
                self.complete_time = time.time()

            update_data = self.get_progress()
            if extra_data:
                update_data.update(extra_data)

            self._notify_subscribers(update_data)

    def get_progress(self) -> Dict[str, Any]:
        """获取当前进度

        Returns:
            进度信息
        """
        with self.lock:
            elapsed = time.time() - self.start_time

            # 未完成时估计剩余时间
            remaining = None
            if not self.finished and self.completed > 0:
                remaining = elapsed / self.completed * (self.total_trials - self.completed)

            return {
                "label": self.label,
                "completed": self.completed,
                "total_trials": self.total_trials,
                "converged": self.converged,
                "fraction": self.fraction,
                "elapsed_time": elapsed,
                "estimated_remaining": remaining,
            }

    def subscribe(self, callback: Callable[[Dict[str, Any]], None]) -> None:
        """订阅进度更新

        Args:
            callback: 回调函数
        """
        with self.lock:
            if callback not in self.subscribers:
                self.subscribers.append(callback)

    def unsubscribe(self, callback: Callable[[Dict[str, Any]], None]) -> None:
        """取消订阅进度更新"""
        with self.lock:
            if callback in self.subscribers:
                self.subscribers.remove(callback)

    def _notify_subscribers(self, data: Dict[str, Any]) -> None:
        """通知所有订阅者，抛出异常的订阅者会被移除"""
        for callback in list(self.subscribers):
            try:
                callback(data)
            except Exception as e:
                logger.error(f"调用进度更新回调出错: {str(e)}")
                self.subscribers.remove(callback)


def log_every(every: int) -> Callable[[Dict[str, Any]], None]:
    """创建一个每完成 every 次试验记录一行日志的订阅回调

    Args:
        every: 日志间隔（试验数）

    Returns:
        回调函数
    """
    def callback(data: Dict[str, Any]) -> None:
        done = data["completed"]
        if done % max(every, 1) == 0 or done == data["total_trials"]:
            logger.info(
                f"{data['label']}: {done}/{data['total_trials']} 次试验完成，"
                f"收敛 {data['converged']}，耗时 {data['elapsed_time']:.1f}秒"
            )
    return callback
