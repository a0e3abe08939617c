import pytest

from orbint import cli
from orbint import scenarios as S


@pytest.mark.parametrize("name", sorted(S.REGISTRY))
def test_default_config_passes(name):
    cfg = cli.load_config(S.get(name).default_config().to_text(), None)
    outcome, report = cli.run_scenario(cfg)
    failed = [k for k, v in report["verdicts"].items() if not v["passed"]]
    assert report["verdicts"] and not failed, failed
    assert report["rows"] == len(outcome.rows) > 0
