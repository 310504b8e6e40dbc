import pytest

import blfstep


@pytest.fixture(scope="session")
def sec6_config():
    return blfstep.load_config_file(blfstep.paper_sec6_path())


@pytest.fixture(scope="session")
def sec6_result(sec6_config):
    """The flagship run at its configured step (shared; runs are pure)."""
    return blfstep.run(sec6_config)
