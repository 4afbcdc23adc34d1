"""Versioned model persistence."""
import concurrent.futures
import json

import numpy as np
import pytest

from pricecast.errors import NotFoundError, ParseError
from pricecast.store import ModelStore, model_from_dict, model_to_dict

from test_ssm import toy_model


@pytest.fixture
def store(tmp_path):
    return ModelStore(tmp_path / "store")


def test_save_starts_at_one_and_counts_up(store):
    m = toy_model()
    assert store.save_model("widget", m) == 1
    assert store.save_model("widget", m) == 2
    assert store.save_model("widget", m) == 3
    assert store.list_versions("widget") == [1, 2, 3]


def test_products_are_isolated(store):
    m = toy_model()
    store.save_model("a", m)
    store.save_model("b", m)
    assert store.list_versions("a") == [1]
    assert store.list_versions("b") == [1]


def test_round_trip_preserves_model(store):
    m = toy_model(coef={"log_price": -1.25}, last_min_other_price=17.5)
    version = store.save_model("widget", m)
    loaded = store.load("widget", version)
    assert loaded.version == version
    assert loaded.spec == m.spec
    assert loaded.hyperparams == m.hyperparams
    assert loaded.coefficients == m.coefficients
    assert loaded.std_errors == m.std_errors
    assert loaded.y_bar == m.y_bar and loaded.x_bar == m.x_bar
    assert loaded.train_start == m.train_start and loaded.train_end == m.train_end
    assert loaded.last_min_other_price == 17.5
    np.testing.assert_array_equal(loaded.final_state, m.final_state)
    np.testing.assert_array_equal(loaded.final_cov, m.final_cov)


def test_doc_round_trip_full_precision():
    m = toy_model(coef={"log_price": -1.0 / 3.0})
    doc = json.loads(json.dumps(model_to_dict(m)))
    again = model_from_dict(doc)
    assert again.coefficients["log_price"] == m.coefficients["log_price"]


def test_load_latest_returns_newest(store):
    store.save_model("widget", toy_model(coef={"log_price": -1.0}))
    store.save_model("widget", toy_model(coef={"log_price": -2.0}))
    latest = store.load_latest("widget")
    assert latest.version == 2
    assert latest.coefficients["log_price"] == -2.0


def test_missing_model_not_found(store):
    with pytest.raises(NotFoundError):
        store.load_latest("widget")
    store.save_model("widget", toy_model())
    with pytest.raises(NotFoundError):
        store.load("widget", 9)


def test_corrupt_file_parse_error_names_the_file(store):
    store.save_model("widget", toy_model())
    path = store.root / "widget" / "model_v1.json"
    path.write_text(path.read_text()[:40])
    with pytest.raises(ParseError) as err:
        store.load("widget", 1)
    assert "model_v1.json" in str(err.value)


def test_existing_versions_never_rewritten(store):
    store.save_model("widget", toy_model())
    path = store.root / "widget" / "model_v1.json"
    before = path.read_bytes()
    store.save_model("widget", toy_model(coef={"log_price": -9.0}))
    assert path.read_bytes() == before


def test_bad_product_id_rejected(store):
    for bad in ("", "a/b", ".hidden"):
        with pytest.raises(ValueError):
            store.save_model(bad, toy_model())


def test_concurrent_saves_get_distinct_versions(store):
    m = toy_model()
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        versions = list(pool.map(lambda _: store.save_model("widget", m), range(12)))
    assert sorted(versions) == list(range(1, 13))
    assert store.list_versions("widget") == list(range(1, 13))
