"""Filesystem model store.

One directory per product; each fitted model is an immutable JSON
document named model_v<version>.json with versions counting up from 1.
Writes take an advisory lock on the product directory so concurrent
saves cannot race to the same version number, and never overwrite an
existing file.
"""
from __future__ import annotations

import datetime as dt
import fcntl
import json
import os
import re
from pathlib import Path

import numpy as np

from .errors import NotFoundError, ParseError
from .ssm import FittedModel, Hyperparams, ModelSpec

_VERSION_RE = re.compile(r"^model_v(\d+)\.json$")


def model_to_dict(fitted: FittedModel) -> dict:
    return {
        "format": 1,
        "spec": fitted.spec.as_dict(),
        "hyperparams": fitted.hyperparams.as_dict(),
        "coefficients": dict(fitted.coefficients),
        "std_errors": dict(fitted.std_errors),
        "final_state": [float(v) for v in fitted.final_state],
        "final_cov": [[float(v) for v in row] for row in fitted.final_cov],
        "y_bar": fitted.y_bar,
        "x_bar": fitted.x_bar,
        "loglik": fitted.loglik,
        "metrics": dict(fitted.metrics),
        "train_start": fitted.train_start.isoformat(),
        "train_end": fitted.train_end.isoformat(),
        "last_min_other_price": fitted.last_min_other_price,
        "version": fitted.version,
        "fitted_at": fitted.fitted_at,
    }


def model_from_dict(doc: dict) -> FittedModel:
    return FittedModel(
        spec=ModelSpec(**doc["spec"]),
        hyperparams=Hyperparams(**doc["hyperparams"]),
        coefficients=dict(doc["coefficients"]),
        std_errors=dict(doc["std_errors"]),
        final_state=np.asarray(doc["final_state"], dtype=float),
        final_cov=np.asarray(doc["final_cov"], dtype=float),
        y_bar=float(doc["y_bar"]),
        x_bar=float(doc["x_bar"]),
        loglik=float(doc["loglik"]),
        metrics=dict(doc["metrics"]),
        train_start=dt.date.fromisoformat(doc["train_start"]),
        train_end=dt.date.fromisoformat(doc["train_end"]),
        last_min_other_price=doc.get("last_min_other_price"),
        version=doc.get("version"),
        fitted_at=doc.get("fitted_at"),
    )


class ModelStore:
    """Versioned, append-only model persistence rooted at one directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _product_dir(self, product_id: str) -> Path:
        if not product_id or "/" in product_id or product_id.startswith("."):
            raise ValueError(f"bad product id {product_id!r}")
        return self.root / product_id

    def list_versions(self, product_id: str) -> list:
        pdir = self._product_dir(product_id)
        if not pdir.is_dir():
            return []
        versions = []
        for name in os.listdir(pdir):
            m = _VERSION_RE.match(name)
            if m:
                versions.append(int(m.group(1)))
        return sorted(versions)

    def save_model(self, product_id: str, fitted: FittedModel) -> int:
        """Persist at the next version; returns the version number."""
        pdir = self._product_dir(product_id)
        pdir.mkdir(parents=True, exist_ok=True)
        lock_path = pdir / ".lock"
        with open(lock_path, "w") as lock:
            fcntl.flock(lock, fcntl.LOCK_EX)
            try:
                existing = self.list_versions(product_id)
                version = (existing[-1] + 1) if existing else 1
                doc = model_to_dict(fitted)
                doc["version"] = version
                path = pdir / f"model_v{version}.json"
                # "x" mode: refuse to clobber a version that appeared despite the lock
                with open(path, "x") as fh:
                    json.dump(doc, fh, indent=1, sort_keys=True)
                    fh.write("\n")
            finally:
                fcntl.flock(lock, fcntl.LOCK_UN)
        return version

    def load(self, product_id: str, version: int) -> FittedModel:
        path = self._product_dir(product_id) / f"model_v{version}.json"
        if not path.is_file():
            raise NotFoundError(f"no model version {version} for product {product_id!r}")
        try:
            with open(path) as fh:
                doc = json.load(fh)
            return model_from_dict(doc)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(str(path), exc) from exc

    def load_latest(self, product_id: str) -> FittedModel:
        versions = self.list_versions(product_id)
        if not versions:
            raise NotFoundError(f"no stored model for product {product_id!r}")
        return self.load(product_id, versions[-1])
