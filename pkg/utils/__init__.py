"""
无人机蜂群LoS MIMO回传项目 - 工具包
包含日志和进度跟踪等辅助功能
"""
