import time

import pytest

from uwbranging import (
    DEFAULT_THRESHOLD_DBM,
    extract_feature_table,
    fit_ranging_model,
    generate_campaign,
    default_tunnel_profile,
)


class CampaignRun:
    """Default campaign generated once per session, with fit timing."""

    def __init__(self):
        t0 = time.monotonic()
        self.profile = default_tunnel_profile()
        self.records = generate_campaign(self.profile)
        self.table, self.skipped = extract_feature_table(self.records, DEFAULT_THRESHOLD_DBM)
        self.model = fit_ranging_model(self.table)
        self.elapsed_s = time.monotonic() - t0


@pytest.fixture(scope="session")
def default_run() -> CampaignRun:
    return CampaignRun()
