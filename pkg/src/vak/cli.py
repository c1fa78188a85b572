"""Command-line client.

``vak <command> --in problem.json --out report.json [--plot out.csv]``
runs in process by default; ``--server URL`` sends the document to a
running service instead.  Exit codes: 0 success, 2 schema errors,
3 computation errors, 4 warnings escalated by --strict.
"""

from __future__ import annotations

import json
import pathlib
import sys

import click

from .errors import SchemaViolation, VakError
from .problem import COMMANDS, canonical_report_json
from .service import execute


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(COMMANDS))
@click.option("--in", "in_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="problem document (JSON)")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="write the report here (otherwise stdout)")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False),
              help="emit unit-sphere plot data (.csv or .json)")
@click.option("--seed", type=int, default=None, help="override params.seed")
@click.option("--exact", is_flag=True, default=False,
              help="emit generators as exact rationals in the report")
@click.option("--strict", is_flag=True, default=False,
              help="treat criterion-precondition warnings as failures")
@click.option("--server", default=None,
              help="POST to a running service instead of running in process")
def main(command, in_path, out_path, plot_path, seed, exact, strict, server):
    document = json.loads(pathlib.Path(in_path).read_text())
    declared = document.get("query", {}).get("command")
    if declared is not None and declared != command:
        click.echo(f"error: document query declares {declared!r}, "
                   f"CLI invoked with {command!r}", err=True)
        sys.exit(2)
    params = document.setdefault("query", {}).setdefault("params", {})
    if seed is not None:
        params["seed"] = seed
    if exact:
        params["exact"] = True

    plot_format = None
    if plot_path:
        plot_format = "json" if plot_path.endswith(".json") else "csv"

    try:
        if server:
            response = _remote(server, document, plot_format)
        else:
            response = execute(document, plot_format)
    except SchemaViolation as exc:
        for err in exc.errors:
            click.echo(f"schema: {err}", err=True)
        sys.exit(2)
    except VakError as exc:
        click.echo(f"error[{exc.code}]: {exc}", err=True)
        sys.exit(3)

    text = canonical_report_json(response.report)
    if out_path:
        pathlib.Path(out_path).write_text(text + "\n")
    else:
        click.echo(text)
    if plot_path and response.plot is not None:
        pathlib.Path(plot_path).write_text(response.plot)

    warnings = response.report.get("warnings", [])
    if strict and warnings:
        for w in warnings:
            click.echo(f"warning: {w}", err=True)
        sys.exit(4)
    sys.exit(0)


def _remote(server, document, plot_format):
    import httpx

    from .service import RunResponse

    resp = httpx.post(server.rstrip("/") + "/v1/run",
                      json={"document": document, "plot_format": plot_format},
                      timeout=600.0)
    if resp.status_code == 422:
        raise SchemaViolation(resp.json().get("errors", ["invalid document"]))
    if resp.status_code != 200:
        raise VakError(resp.json().get("error", f"HTTP {resp.status_code}"))
    data = resp.json()
    return RunResponse(report=data["report"], plot=data.get("plot"))


if __name__ == "__main__":  # pragma: no cover
    main()
