import json
import os

import numpy as np
import pytest

from pyiterates import ExperimentRunner
from pyiterates.cli import emit, main, run_experiment
from pyiterates.errors import ConfigError
from pyiterates.models import ReportBundle


RENEWAL_CONFIG = """
[experiment]
kind = meeting-time
seed = 42

[model]
family = discrete_renewal
p_seq = 0.5, 0.5

[budgets]
cap = 16
n_paths = 4000
n_max = 12
"""

STICKY_CONFIG = """
[experiment]
kind = conditions
seed = 7
label = sticky

[model]
family = sticky_beta
a = 2.5

[budgets]
n_paths = 1000

[conditions]
p = 3
r = 6
kinds = C1
"""


def test_seed_is_required():
    with pytest.raises(ConfigError, match="seed required") as error:
        ExperimentRunner.parse_text("[experiment]\nkind = clt\n\n[model]\nfamily = sticky_beta\na = 2\n")
    assert error.value.field == "experiment.seed"


def test_model_range_names_the_field():
    with pytest.raises(ConfigError) as error:
        ExperimentRunner.parse_text("[experiment]\nseed = 1\n\n[model]\nfamily = sticky_beta\na = 0.5\n")
    assert error.value.field == "model.a"


@pytest.mark.parametrize(
    "extra, field",
    [
        ("[budgets]\nreps = 10\nwalkers = 4\n", "budgets.walkers"),
        ("[conditions]\nq = 3\n", "conditions.q"),
        ("[conditions]\nkinds = C1, C42\n", "conditions.kinds"),
        ("[plots]\nwidth = 3\n", "plots"),
    ],
)
def test_strict_sections(extra, field):
    text = "[experiment]\nseed = 1\n\n[model]\nfamily = sticky_beta\na = 2\n\n" + extra
    with pytest.raises(ConfigError) as error:
        ExperimentRunner.parse_text(text)
    assert error.value.field == field


def test_defaults_are_materialized():
    config = ExperimentRunner.parse_text(STICKY_CONFIG)
    assert config.threads == 1
    assert config.model["observable"] == "centered_state"
    assert config.budgets["reps"] == 2000
    assert config.conditions["kinds"] == ["C1"]
    assert config.output["formats"] == ["csv", "json"]


def test_overrides_apply_before_validation():
    config = ExperimentRunner.parse_text(STICKY_CONFIG, {"experiment.seed": "99", "budgets.reps": "50"})
    assert config.seed == 99
    assert config.budgets["reps"] == 50


def test_written_config_parses_back():
    config = ExperimentRunner.parse_text(RENEWAL_CONFIG)
    assert ExperimentRunner.parse_text(config.to_ini()) == config
    sticky = ExperimentRunner.parse_text(STICKY_CONFIG)
    assert ExperimentRunner.parse_text(sticky.to_ini()) == sticky


def test_meeting_time_run_is_deterministic():
    config = ExperimentRunner.parse_text(RENEWAL_CONFIG)
    first = run_experiment(config)
    second = run_experiment(config)
    assert first.errors == []
    np.testing.assert_array_equal(first.tables["survival"].count, second.tables["survival"].count)
    assert "survival_exact" in first.tables
    assert first.tables["tv_coupling_bound"].holds
    np.testing.assert_allclose(first.reports["renewal_oracle"]["regeneration_sigma2"], 2.0 / 27.0)


def test_missing_delta_is_reported():
    bundle = run_experiment(ExperimentRunner.parse_text(STICKY_CONFIG))
    assert len(bundle.errors) == 1
    assert "run coupling first" in bundle.errors[0]
    assert bundle.exit_status == 1


def test_emit_empty_bundle(tmp_path):
    written = emit(ReportBundle({"kind": "clt"}), directory=str(tmp_path))
    assert written == [os.path.join(str(tmp_path), "manifest.json")]
    with open(written[0], encoding="utf-8") as file:
        manifest = json.load(file)
    assert manifest["manifest"] == {"kind": "clt"}
    assert manifest["errors"] == []


def test_emit_writes_tables_and_config(tmp_path):
    config = ExperimentRunner.parse_text(RENEWAL_CONFIG)
    bundle = run_experiment(config)
    written = emit(bundle, formats=("csv", "json", "plot"), directory=str(tmp_path))
    names = {os.path.basename(path) for path in written}
    assert {"survival.csv", "renewal_oracle.json", "plot.csv", "config.ini", "manifest.json"} <= names


def test_main_exit_codes(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(RENEWAL_CONFIG, encoding="utf-8")
    out = tmp_path / "results"
    assert main(["meeting-time", "--config", str(good), "--out", str(out), "--quiet"]) == 0
    assert (out / "manifest.json").exists()

    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nkind = clt\n\n[model]\nfamily = sticky_beta\na = 2\n", encoding="utf-8")
    assert main(["clt", "--config", str(bad), "--out", str(out), "--quiet"]) == 2
