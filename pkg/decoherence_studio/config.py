"""项目默认配置。

这里故意只保留轻量常量，不在配置层引入复杂逻辑。
"""

DEFAULT_SCENARIO = "fig1"
DEFAULT_OUTPUT_DIR = "outputs"
ENV_PREFIX = "DECOHERENCE_STUDIO_"
