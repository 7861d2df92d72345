import pytest


@pytest.fixture(autouse=True)
def lab_settings(settings, tmp_path):
    """Keep artifacts out of the checkout and run every search in-process."""
    settings.POLYLAB_ARTIFACTS_DIR = tmp_path / "artifacts"
    settings.POLYLAB_WORKERS = 1
    settings.POLYLAB_BUDGET = 50_000_000
