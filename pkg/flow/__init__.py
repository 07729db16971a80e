"""
无人机蜂群LoS MIMO回传项目 - 流程层
用PocketFlow实现主控无人机与各无人机之间的迭代定位协议

这个包包含了:
1. world - 蜂群状态与误差注入
2. shared - 共享存储
3. nodes - 流程节点
4. flows - 流程定义与运行入口
"""

from flow.flows import (ProtocolException, SwarmFlowFactory, execute_run, run_algorithm,
                        run_bf, run_gd, run_ura)
from flow.world import (SwarmWorld, apply_actuation, meets_criterion, measure_csi,
                        observe_position)
