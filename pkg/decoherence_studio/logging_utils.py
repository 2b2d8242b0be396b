import sys

from loguru import logger


def configure_logging(level: str = "INFO") -> None:
    """配置日志输出。

    轨迹和摘要都直接写文件，日志只走终端，不额外落地日志文件。
    """
    logger.remove()

    # 终端日志以可读性优先，逐记录诊断只在 DEBUG 级别出现。
    logger.add(
        sys.stderr,
        level=level.upper(),
        format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {message}",
    )
