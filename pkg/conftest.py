"""
无人机蜂群LoS MIMO回传项目 - 测试公共配置
共享夹具，以及 --runslow 选项（完整规模的收敛与扫描检查默认跳过）
"""

import os
import sys

import numpy as np
import pytest

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.abspath(__file__)))
from experiments.scenario import build_scenario, default_scenario


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="运行完整规模的慢速测试")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 完整规模的慢速测试，需要 --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def reference_scenario():
    return default_scenario()


@pytest.fixture
def small_scenario():
    """2根发射天线、2架无人机、20米距离的小场景，几十次迭代内即可收敛"""
    return build_scenario(
        tx_rows=1, tx_cols=2, n_rx=2,
        cube_side_m=4.0, range_m=20.0,
        gd_step=1e-3, gd_decay=1.0,
        bf_step=0.01, bf_decay=0.99,
        objective_normalization="column",
        max_iterations=2000,
        seed=7,
    )


@pytest.fixture
def random_channel(rng):
    """生成恒模随机相位信道的工厂"""
    def make(n_rx, n_tx, amplitude=1.0):
        phases = rng.uniform(0, 2 * np.pi, size=(n_rx, n_tx))
        return amplitude * np.exp(1j * phases)
    return make
