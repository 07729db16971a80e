"""
无人机蜂群LoS MIMO回传项目 - 信道与优化层

这个包包含了:
1. channel - LoS MIMO信道、ICN、目标函数与容量
2. combining - ZF / NV / MF 合并下的单流SINR
3. optimizers - GD梯度步、BF探测、URA基线
"""
