"""文件读写模块。

场景配置文件的解析与导出、轨迹 CSV 与 JSON 摘要的原子落盘都集中在这里，
数值内核不直接接触文件系统。
"""
