"""数值内核模块。

这里集中放张量积空间代数、纯-混合纠缠态族、距离与关联度量、
三体哈密顿量演化以及衰减形状拟合。
"""
