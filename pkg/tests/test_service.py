"""HTTP service endpoints, exercised in process."""
import warnings
from pathlib import Path

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from pricecast.service import create_app
from pricecast.store import ModelStore

from test_pipeline import CONFIG


@pytest.fixture(scope="module")
def env(tmp_path_factory):
    """One simulated product trained as version 1 under product id "demo"."""
    root = tmp_path_factory.mktemp("svc")
    cfg_path = root / "run.yaml"
    cfg_path.write_text(CONFIG)
    client = TestClient(create_app(), raise_server_exceptions=False)
    assert client.post("/simulate", json={"config": str(cfg_path)}).status_code == 200
    assert client.post("/train", json={"config": str(cfg_path)}).status_code == 200
    return client, str(cfg_path), root


def test_health(env):
    client, _, _ = env
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["name"] == "pricecast"


def test_simulate_reports_written_files(env):
    client, cfg, root = env
    r = client.post("/simulate", json={"config": cfg})
    assert r.status_code == 200
    body = r.json()
    assert body["product_id"] == "demo"
    assert body["horizon_days"] == 180
    assert body["n_transactions"] > 180  # one to three per selling day
    assert body["n_quotes"] > 0
    assert Path(body["transactions"]).is_file()
    assert Path(body["competitor"]).is_file()
    assert Path(body["latent"]).is_file()


def test_simulate_seed_override(env, tmp_path):
    client, _, _ = env
    cfg = tmp_path / "sim.yaml"
    cfg.write_text(
        "product_id: tiny\ntransactions: data/tx.csv\n"
        "simulation:\n  base: reference\n  horizon_days: 40\n"
    )
    tx = tmp_path / "data" / "tx.csv"

    client.post("/simulate", json={"config": str(cfg), "seed": 1})
    first = tx.read_bytes()
    client.post("/simulate", json={"config": str(cfg), "seed": 2})
    assert tx.read_bytes() != first
    client.post("/simulate", json={"config": str(cfg), "seed": 1})
    assert tx.read_bytes() == first


def test_ingest_summary(env):
    client, cfg, _ = env
    r = client.post("/ingest", json={"config": cfg})
    assert r.status_code == 200
    body = r.json()
    assert body["days"] == 180
    assert 90 <= body["days_with_transactions"] <= 180
    assert body["y_bar"] > 0 and body["x_bar"] > 0


def test_eligibility_endpoint(env):
    client, cfg, _ = env
    r = client.post("/eligibility", json={"config": cfg})
    assert r.status_code == 200
    body = r.json()
    assert body["eligible"] is True
    assert body["reasons"] == []
    assert {o["rule"] for o in body["outcomes"]} >= {
        "min_days_with_transactions",
        "min_distinct_prices",
    }


def test_train_stores_next_version(env):
    client, cfg, root = env
    r = client.post("/train", json={"config": cfg, "product": "demo-b"})
    assert r.status_code == 200
    body = r.json()
    assert body["product_id"] == "demo-b"
    assert body["version"] == 1
    assert body["elasticity"]["value"] < 0
    assert body["elasticity"]["std_error"] > 0
    assert set(body["metrics"]) == {"rmse_log", "mape_units", "n_log", "n_units"}
    assert body["coefficients"].keys() == body["std_errors"].keys()
    assert ModelStore(root / "store").list_versions("demo-b") == [1]


def test_train_ineligible_conflict(env, tmp_path):
    client, _, root = env
    cfg = tmp_path / "strict.yaml"
    cfg.write_text(
        CONFIG.replace("store_dir: store", f"store_dir: {tmp_path / 'store'}")
        + "eligibility:\n  min_distinct_prices: 100000\n"
    )
    # point at the already simulated inputs
    body = cfg.read_text().replace("data/tx.csv", str(root / "data" / "tx.csv"))
    body = body.replace("data/quotes.csv", str(root / "data" / "quotes.csv"))
    cfg.write_text(body)

    r = client.post("/train", json={"config": str(cfg)})
    assert r.status_code == 409
    payload = r.json()
    assert payload["error"] == "IneligibleError"
    assert "min_distinct_prices" in payload["detail"]
    assert ModelStore(tmp_path / "store").list_versions("demo") == []


def test_forecast_endpoint(env):
    client, cfg, _ = env
    r = client.post("/forecast", json={"config": cfg})
    assert r.status_code == 200
    body = r.json()
    assert body["model_version"] == 1
    assert len(body["prices"]) == 5  # configured ladder_levels
    assert body["weeks"] == 4
    assert len(body["buckets"]) == 4
    assert Path(body["daily_csv"]).is_file()
    assert Path(body["weekly_csv"]).is_file()

    r = client.post("/forecast", json={"config": cfg, "weeks": 2, "levels": 3})
    body = r.json()
    assert len(body["prices"]) == 3
    assert len(body["buckets"]) == 2


def test_forecast_before_any_model(env):
    client, cfg, _ = env
    r = client.post("/forecast", json={"config": cfg, "product": "ghost"})
    assert r.status_code == 404
    assert r.json()["error"] == "NotFoundError"


def test_optimize_endpoint(env):
    client, cfg, root = env
    out = str(root / "alt_out")
    r = client.post("/optimize", json={"config": cfg, "out": out})
    assert r.status_code == 200
    body = r.json()
    plan = body["plan"]
    assert plan["status"] == "optimal"
    assert plan["alpha"] == 0.05
    assert plan["solver"] in ("enumeration", "branch-and-bound")
    assert len(plan["levels"]) == 4
    assert plan["sell_through"] >= 0.05
    assert body["path"].startswith(out)
    assert Path(body["path"]).is_file()


def test_optimize_infeasible_is_not_an_error(env):
    client, cfg, _ = env
    r = client.post("/optimize", json={"config": cfg, "alpha": 0.95})
    assert r.status_code == 200
    plan = r.json()["plan"]
    assert plan["status"] == "infeasible"
    assert plan["objective"] is None


def test_sweep_endpoint(env):
    client, cfg, _ = env
    r = client.post("/sweep", json={"config": cfg, "alphas": [0.02, 0.95]})
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert [p["alpha"] for p in body["plans"]] == [0.02, 0.95]
    assert body["plans"][0]["status"] == "optimal"
    assert body["plans"][1]["status"] == "infeasible"
    assert body["plans"][1]["objective"] is None
    assert any(p.endswith("sweep.csv") for p in body["paths"])
    for p in body["paths"]:
        assert Path(p).is_file()


def test_figures_endpoint(env):
    client, cfg, _ = env
    r = client.post("/figures", json={"config": cfg})
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert sorted(Path(p).name for p in body["paths"]) == [
        "fig2.csv", "fig2.svg", "fig3.csv", "fig3.svg",
    ]

    r = client.post("/figures", json={"config": cfg, "alphas": [0.02, 0.95]})
    names = sorted(Path(p).name for p in r.json()["paths"])
    assert "fig4.csv" in names and "fig4.svg" in names

    r = client.post("/figures", json={"config": cfg, "alpha": 0.95})
    assert r.status_code == 200
    assert r.json()["status"] == "infeasible"


def test_run_endpoint(env):
    client, cfg, _ = env
    r = client.post("/run", json={"config": cfg, "product": "demo-run"})
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["stages"][0] == "simulate" and body["stages"][-1] == "figures"
    assert body["model"]["version"] == 1
    assert body["plans"][0]["status"] == "optimal"
    assert all(Path(p).is_file() for p in body["outputs"])


def test_model_listing_endpoints(env):
    client, cfg, _ = env
    r = client.get("/models/demo/versions", params={"config": cfg})
    assert r.status_code == 200
    assert r.json() == {"product_id": "demo", "versions": [1]}

    r = client.get("/models/demo/latest", params={"config": cfg})
    assert r.status_code == 200
    doc = r.json()
    assert doc["version"] == 1
    assert "log_price" in doc["coefficients"]

    r = client.get("/models/ghost/latest", params={"config": cfg})
    assert r.status_code == 404

    r = client.get("/models/ghost/versions", params={"config": cfg})
    assert r.status_code == 200
    assert r.json()["versions"] == []


def test_bad_config_is_400(env, tmp_path):
    client, _, _ = env
    r = client.post("/ingest", json={"config": str(tmp_path / "nope.yaml")})
    assert r.status_code == 400
    assert r.json()["error"] == "ConfigError"

    bad = tmp_path / "bad.yaml"
    bad.write_text("transactions: tx.csv\n")  # product_id missing
    r = client.post("/train", json={"config": str(bad)})
    assert r.status_code == 400
    assert r.json()["error"] == "ConfigError"

    missing_inputs = tmp_path / "missing.yaml"
    missing_inputs.write_text("product_id: x\ntransactions: nothere.csv\n")
    r = client.post("/ingest", json={"config": str(missing_inputs)})
    assert r.status_code == 400
    assert r.json()["error"] == "FileNotFoundError"


def test_request_validation_is_422(env):
    client, cfg, _ = env
    assert client.post("/optimize", json={"config": cfg, "alpha": 1.5}).status_code == 422
    assert client.post("/forecast", json={"config": cfg, "weeks": 0}).status_code == 422
    assert client.post("/train", json={}).status_code == 422
