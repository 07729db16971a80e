"""
无人机蜂群LoS MIMO回传项目 - 实验层
场景配置、蒙特卡洛试验、误差扫描以及CSV与图像输出
"""
