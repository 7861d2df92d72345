import structlog


def get_polylab_logger(name):
    """This will add a `polylab` prefix to logger for easy configuration."""

    return structlog.get_logger(
        f"polylab.{name}",
        project="polylab",
    )
