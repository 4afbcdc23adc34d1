"""Command-line client for the pricing service.

Every subcommand is a thin HTTP call: by default the service runs in
process (no socket), while ``--server`` points the same commands at a
running instance. Responses print as JSON on stdout; the exit code
carries the verdict: 0 success, 2 product ineligible, 3 no feasible
plan, 1 any other failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INELIGIBLE = 2
EXIT_INFEASIBLE = 3


class ServiceClient:
    """HTTP calls against an in-process app or a remote server."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def post(self, path: str, body: dict):
        return self._client.post(path, json=body)

    def get(self, path: str, params: dict):
        return self._client.get(path, params=params)


def common_options(f):
    f = click.option(
        "--server",
        default=None,
        envvar="PRICECAST_SERVER",
        help="base URL of a running service; omit to run in process",
    )(f)
    f = click.option("--product", default=None, help="override the configured product id")(f)
    f = click.option(
        "--out", default=None, type=click.Path(), help="override the output directory"
    )(f)
    f = click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(exists=False),
        help="path to the YAML run config",
    )(f)
    return f


def _body(config_path: str, out: str | None, product: str | None, **extra) -> dict:
    body = {
        "config": str(Path(config_path).resolve()),
        "product": product,
        "out": str(Path(out).resolve()) if out else None,
    }
    body.update({k: v for k, v in extra.items() if v is not None})
    return body


def _emit(resp) -> dict:
    try:
        payload = resp.json()
    except ValueError:
        click.echo(resp.text, err=True)
        sys.exit(EXIT_ERROR)
    click.echo(json.dumps(payload, indent=1, sort_keys=True))
    if resp.status_code >= 400:
        if resp.status_code == 409 and payload.get("error") == "IneligibleError":
            sys.exit(EXIT_INELIGIBLE)
        sys.exit(EXIT_ERROR)
    return payload


def _parse_alphas(text: str | None):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse alpha list {text!r}")


@click.group()
@click.version_option(package_name="pricecast")
def main():
    """Demand forecasting and price optimization for one product."""


@main.command()
@common_options
@click.option("--seed", type=int, default=None, help="override the simulation seed")
def simulate(config_path, out, product, server, seed):
    """Generate the configured synthetic product history."""
    client = ServiceClient(server)
    _emit(client.post("/simulate", _body(config_path, out, product, seed=seed)))


@main.command()
@common_options
def ingest(config_path, out, product, server):
    """Read and clean the input files; print the series summary."""
    client = ServiceClient(server)
    _emit(client.post("/ingest", _body(config_path, out, product)))


@main.command()
@common_options
def eligibility(config_path, out, product, server):
    """Check the product against the eligibility rules."""
    client = ServiceClient(server)
    payload = _emit(client.post("/eligibility", _body(config_path, out, product)))
    if not payload.get("eligible", False):
        sys.exit(EXIT_INELIGIBLE)


@main.command()
@common_options
def train(config_path, out, product, server):
    """Fit the demand model and store it as the next version."""
    client = ServiceClient(server)
    _emit(client.post("/train", _body(config_path, out, product)))


@main.command()
@common_options
@click.option("--weeks", type=int, default=None, help="forecast horizon in weeks")
@click.option("--levels", type=int, default=None, help="price ladder size")
def forecast(config_path, out, product, server, weeks, levels):
    """Forecast demand over the price ladder; write the grid CSVs."""
    client = ServiceClient(server)
    _emit(
        client.post(
            "/forecast", _body(config_path, out, product, weeks=weeks, levels=levels)
        )
    )


@main.command()
@common_options
@click.option("--s0", type=float, default=None, help="starting inventory")
@click.option("--alpha", type=float, default=None, help="sell-through floor in [0,1]")
@click.option("--weeks", type=int, default=None)
@click.option("--levels", type=int, default=None)
def optimize(config_path, out, product, server, s0, alpha, weeks, levels):
    """Solve for the revenue-maximizing weekly price plan."""
    client = ServiceClient(server)
    payload = _emit(
        client.post(
            "/optimize",
            _body(config_path, out, product, s0=s0, alpha=alpha, weeks=weeks, levels=levels),
        )
    )
    if payload.get("plan", {}).get("status") != "optimal":
        sys.exit(EXIT_INFEASIBLE)


@main.command()
@common_options
@click.option("--alphas", default=None, help="comma-separated ascending floors, e.g. 0.4,0.5")
@click.option("--s0", type=float, default=None)
@click.option("--weeks", type=int, default=None)
@click.option("--levels", type=int, default=None)
def sweep(config_path, out, product, server, alphas, s0, weeks, levels):
    """Solve one plan per sell-through floor and summarize."""
    client = ServiceClient(server)
    payload = _emit(
        client.post(
            "/sweep",
            _body(
                config_path,
                out,
                product,
                alphas=_parse_alphas(alphas),
                s0=s0,
                weeks=weeks,
                levels=levels,
            ),
        )
    )
    if payload.get("status") == "infeasible":
        sys.exit(EXIT_INFEASIBLE)


@main.command()
@common_options
@click.option("--alpha", type=float, default=None)
@click.option("--alphas", default=None, help="comma-separated ascending floors")
@click.option("--s0", type=float, default=None)
def run(config_path, out, product, server, alpha, alphas, s0):
    """Execute the full pipeline: simulate/ingest through figures."""
    client = ServiceClient(server)
    payload = _emit(
        client.post(
            "/run",
            _body(config_path, out, product, alpha=alpha, alphas=_parse_alphas(alphas), s0=s0),
        )
    )
    status = payload.get("status")
    if status == "ineligible":
        sys.exit(EXIT_INELIGIBLE)
    if status == "infeasible":
        sys.exit(EXIT_INFEASIBLE)


@main.command()
@common_options
@click.option("--alpha", type=float, default=None)
@click.option("--alphas", default=None, help="comma-separated ascending floors")
@click.option("--s0", type=float, default=None)
def figures(config_path, out, product, server, alpha, alphas, s0):
    """Re-export the figure CSVs and SVG charts from the latest model."""
    client = ServiceClient(server)
    payload = _emit(
        client.post(
            "/figures",
            _body(config_path, out, product, alpha=alpha, alphas=_parse_alphas(alphas), s0=s0),
        )
    )
    if payload.get("status") == "infeasible":
        sys.exit(EXIT_INFEASIBLE)


@main.command()
@common_options
def versions(config_path, out, product, server):
    """List the stored model versions for the product."""
    client = ServiceClient(server)
    body = _body(config_path, out, product)
    path = f"/models/{body['product'] or _product_from_config(config_path)}/versions"
    _emit(client.get(path, params={"config": body["config"]}))


def _product_from_config(config_path: str) -> str:
    from .config import load_config

    return load_config(config_path).product_id


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
