"""Decoherence Studio 退相干数值实验平台。

这个包按“空间 -> 态 -> 度量 -> 动力学 -> 场景”的主链路组织，
解析结论（谱、偏转置谱、相对熵）和数值轨迹共用同一套线性代数底座。
"""
