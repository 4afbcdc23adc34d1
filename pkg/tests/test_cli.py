"""Command-line client: exit codes, flags, JSON output."""
import json

import pytest
from click.testing import CliRunner

from pricecast.cli import main
from pricecast.store import ModelStore

from test_pipeline import CONFIG


def invoke(*args):
    return CliRunner().invoke(main, list(args))


@pytest.fixture(scope="module")
def env(tmp_path_factory):
    """Simulated inputs plus a trained model version 1 for product "demo"."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "run.yaml"
    cfg.write_text(CONFIG)
    assert invoke("simulate", "--config", str(cfg)).exit_code == 0
    assert invoke("train", "--config", str(cfg)).exit_code == 0
    return str(cfg), root


def test_simulate_prints_json_summary(env):
    cfg, _ = env
    result = invoke("simulate", "--config", cfg)
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["horizon_days"] == 180
    assert payload["n_transactions"] > 0


def test_simulate_seed_flag(env, tmp_path):
    _, _ = env
    cfg = tmp_path / "sim.yaml"
    cfg.write_text(
        "product_id: tiny\ntransactions: data/tx.csv\n"
        "simulation:\n  base: reference\n  horizon_days: 40\n"
    )
    tx = tmp_path / "data" / "tx.csv"
    invoke("simulate", "--config", str(cfg), "--seed", "1")
    first = tx.read_bytes()
    invoke("simulate", "--config", str(cfg), "--seed", "2")
    assert tx.read_bytes() != first
    invoke("simulate", "--config", str(cfg), "--seed", "1")
    assert tx.read_bytes() == first


def test_ingest_and_eligibility_ok(env):
    cfg, _ = env
    result = invoke("ingest", "--config", cfg)
    assert result.exit_code == 0
    assert json.loads(result.output)["days"] == 180

    result = invoke("eligibility", "--config", cfg)
    assert result.exit_code == 0
    assert json.loads(result.output)["eligible"] is True


def test_eligibility_failure_exits_2(env, tmp_path):
    cfg, root = env
    strict = tmp_path / "strict.yaml"
    strict.write_text(
        CONFIG.replace("data/tx.csv", str(root / "data" / "tx.csv"))
        .replace("data/quotes.csv", str(root / "data" / "quotes.csv"))
        + "eligibility:\n  min_distinct_prices: 100000\n"
    )
    result = invoke("eligibility", "--config", str(strict))
    assert result.exit_code == 2
    assert json.loads(result.output)["eligible"] is False

    result = invoke("train", "--config", str(strict))
    assert result.exit_code == 2
    payload = json.loads(result.output)
    assert payload["error"] == "IneligibleError"


def test_train_stores_version_and_prints_model(env):
    cfg, root = env
    result = invoke("train", "--config", cfg, "--product", "demo-b")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["version"] == 1
    assert payload["elasticity"]["value"] < 0
    assert ModelStore(root / "store").list_versions("demo-b") == [1]


def test_forecast_flags(env):
    cfg, _ = env
    result = invoke("forecast", "--config", cfg, "--weeks", "2", "--levels", "3")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert len(payload["prices"]) == 3
    assert len(payload["buckets"]) == 2


def test_optimize_feasible_exit_0(env):
    cfg, _ = env
    result = invoke("optimize", "--config", cfg)
    assert result.exit_code == 0
    plan = json.loads(result.output)["plan"]
    assert plan["status"] == "optimal"
    assert plan["alpha"] == 0.05


def test_optimize_flags_and_infeasible_exit_3(env):
    cfg, _ = env
    result = invoke("optimize", "--config", cfg, "--alpha", "0.95")
    assert result.exit_code == 3
    assert json.loads(result.output)["plan"]["status"] == "infeasible"

    # an --s0 too small to cover demand is infeasible as well
    result = invoke("optimize", "--config", cfg, "--s0", "5.0")
    assert result.exit_code == 3


def test_sweep_flags(env):
    cfg, _ = env
    result = invoke("sweep", "--config", cfg, "--alphas", "0.02,0.95")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["status"] == "ok"
    assert [p["status"] for p in payload["plans"]] == ["optimal", "infeasible"]

    result = invoke("sweep", "--config", cfg, "--alphas", "0.95")
    assert result.exit_code == 3


def test_bad_alpha_list_is_a_usage_error(env):
    cfg, _ = env
    result = invoke("sweep", "--config", cfg, "--alphas", "a,b")
    assert result.exit_code == 2
    assert "cannot parse alpha list" in result.stderr


def test_run_ok_exit_0(env):
    cfg, _ = env
    result = invoke("run", "--config", cfg, "--product", "demo-run")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["status"] == "ok"
    assert payload["stages"][-1] == "figures"


def test_run_ineligible_exit_2(env, tmp_path):
    _, root = env
    strict = tmp_path / "strict.yaml"
    strict.write_text(CONFIG + "eligibility:\n  min_distinct_prices: 100000\n")
    result = invoke("run", "--config", str(strict))
    assert result.exit_code == 2
    assert json.loads(result.output)["status"] == "ineligible"


def test_run_infeasible_exit_3(env, tmp_path):
    strict = tmp_path / "tight.yaml"
    strict.write_text(CONFIG.replace("alpha: 0.05", "alpha: 0.95"))
    result = invoke("run", "--config", str(strict))
    assert result.exit_code == 3
    assert json.loads(result.output)["status"] == "infeasible"


def test_figures_subcommand(env):
    cfg, _ = env
    result = invoke("figures", "--config", cfg)
    assert result.exit_code == 0
    assert json.loads(result.output)["status"] == "ok"

    result = invoke("figures", "--config", cfg, "--alpha", "0.95")
    assert result.exit_code == 3


def test_versions_subcommand(env):
    cfg, _ = env
    result = invoke("versions", "--config", cfg)
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["product_id"] == "demo"
    assert payload["versions"] == [1]


def test_bad_config_exit_1(tmp_path):
    result = invoke("ingest", "--config", str(tmp_path / "nope.yaml"))
    assert result.exit_code == 1
    assert json.loads(result.output)["error"] == "ConfigError"
