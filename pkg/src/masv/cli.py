"""Command-line client for the verification service.

By default the commands talk to an in-process instance of the FastAPI app
(no server needed); pass --server/MASV_SERVER to target a running one.

Exit codes: 0 success; 1 invalid spec; 2 IO/input error; 3 bound exceeded;
4 run completed but safety interventions occurred (steps whose attempted
decisions were all unsafe).
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from .ioutil import canonical_json, ndjson_lines, pretty_json, read_ndjson

log = logging.getLogger("masv")


def _setup_logging() -> None:
    level = os.environ.get("MASV_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", 2)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        _fail(f"cannot write {path}: {exc}", 2)


def _fail(message: str, code: int):
    click.echo(message, err=True)
    sys.exit(code)


def _diagnostics_to_stderr(detail: dict) -> None:
    for d in detail.get("diagnostics", []):
        click.echo(f"{d['line']}:{d['col']}: {d['severity']}: {d['message']}", err=True)


def _handle_error(resp) -> None:
    """Map service errors to exit codes; only returns on 2xx."""
    if resp.status_code < 400:
        return
    try:
        detail = resp.json().get("detail", {})
    except Exception:
        _fail(f"service error: HTTP {resp.status_code}", 2)
    kind = detail.get("kind", "")
    if kind == "invalid-spec":
        _diagnostics_to_stderr(detail)
        _fail("spec is invalid", 1)
    if kind == "bound-exceeded":
        _fail(
            f"{detail.get('bound')} bound of {detail.get('limit')} exceeded "
            f"({detail.get('explored')} states explored)",
            3,
        )
    _fail(f"service error: {detail}", 2)


@click.group()
@click.option("--server", envvar="MASV_SERVER", default=None,
              help="URL of a running masv service; default is in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Static and runtime verification for multi-agent decision specs."""
    _setup_logging()
    ctx.obj = server


@main.command()
@click.argument("spec_path")
@click.pass_obj
def check(server: str | None, spec_path: str) -> None:
    """Parse, stratify, and validate a spec; exit 0 iff valid."""
    source = _read_text(spec_path)
    with _client(server) as client:
        resp = client.post("/check", json={"source": source})
        _handle_error(resp)
        body = resp.json()
    if not body["valid"]:
        _diagnostics_to_stderr(body)
        _fail("spec is invalid", 1)
    click.echo(canonical_json(body["summary"]))


@main.command(name="compile")
@click.argument("spec_path")
@click.option("--out", "out_dir", default="out", show_default=True,
              help="Directory for ts.json, model.prism, props.pctl.")
@click.option("--max-states", default=100_000, show_default=True)
@click.option("--max-depth", default=None, type=int)
@click.pass_obj
def compile_cmd(server: str | None, spec_path: str, out_dir: str,
                max_states: int, max_depth: int | None) -> None:
    """Generate the transition system and its Prism encoding."""
    source = _read_text(spec_path)
    with _client(server) as client:
        resp = client.post(
            "/compile",
            json={"source": source, "max_states": max_states, "max_depth": max_depth},
        )
        _handle_error(resp)
        body = resp.json()
    out = Path(out_dir)
    _write_text(out / "ts.json", pretty_json(body["ts"]) + "\n")
    _write_text(out / "model.prism", body["model"])
    _write_text(out / "props.pctl", body["props"])
    click.echo(canonical_json(
        {"states": body["states"], "transitions": body["transitions"], "out": str(out)}
    ))


@main.command()
@click.argument("spec_path")
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--cap", default=2000, show_default=True,
              help="Hard state cap for the brute-force oracle.")
@click.pass_obj
def oracle(server: str | None, spec_path: str, out_dir: str, cap: int) -> None:
    """Write ts.oracle.json using the independent naive evaluator."""
    source = _read_text(spec_path)
    with _client(server) as client:
        resp = client.post("/oracle", json={"source": source, "cap": cap})
        _handle_error(resp)
        body = resp.json()
    out = Path(out_dir)
    _write_text(out / "ts.oracle.json", pretty_json(body["ts"]) + "\n")
    click.echo(canonical_json({"states": body["states"], "out": str(out)}))


@main.command()
@click.argument("spec_path")
@click.option("--scenario", default=None,
              help="NDJSON sensor records; '-' reads standard input.")
@click.option("--conversions", default=None,
              help="JSON conversion table for raw channel records.")
@click.option("--seed", default=0, show_default=True)
@click.option("--steps", default=10_000, show_default=True, help="Max steps.")
@click.option("--quiesce", default=3, show_default=True,
              help="Idle steps before the loop stops.")
@click.option("--wall-ms", default=None, type=int, help="Wall-clock limit.")
@click.option("--trace", "trace_path", default=None,
              help="Write the step trace as NDJSON to this file.")
@click.option("--actions", "actions_path", default=None,
              help="Write dispatched actions to this file instead of stdout.")
@click.pass_obj
def run(server: str | None, spec_path: str, scenario: str | None,
        conversions: str | None, seed: int, steps: int, quiesce: int,
        wall_ms: int | None, trace_path: str | None, actions_path: str | None) -> None:
    """Run the decision node; dispatched actions go to stdout as NDJSON,
    followed by a one-line JSON summary."""
    source = _read_text(spec_path)
    scenario_records: list[dict] = []
    if scenario is not None:
        text = sys.stdin.read() if scenario == "-" else _read_text(scenario)
        try:
            scenario_records = read_ndjson(text)
        except ValueError as exc:
            _fail(f"bad scenario: {exc}", 2)
    conversion_table = None
    if conversions is not None:
        try:
            conversion_table = json.loads(_read_text(conversions))
        except json.JSONDecodeError as exc:
            _fail(f"bad conversion table: {exc}", 2)
    if any("channel" in r for r in scenario_records) and conversion_table is None:
        _fail("scenario contains raw channel records; pass --conversions", 2)

    with _client(server) as client:
        resp = client.post(
            "/run",
            json={
                "source": source,
                "seed": seed,
                "max_steps": steps,
                "quiesce": quiesce,
                "wall_ms": wall_ms,
                "scenario": scenario_records,
                "conversions": conversion_table,
            },
        )
        if resp.status_code == 422:
            detail = resp.json().get("detail", {})
            if detail.get("kind") in ("bad-scenario", "bad-conversions"):
                _fail(f"{detail.get('kind')}: {detail.get('error')}", 2)
        _handle_error(resp)
        body = resp.json()

    if trace_path is not None:
        _write_text(Path(trace_path), ndjson_lines(body["reports"]))
    action_text = ndjson_lines(body["actions"])
    if actions_path is not None:
        _write_text(Path(actions_path), action_text)
    elif action_text:
        click.echo(action_text, nl=False)
    click.echo(canonical_json(body["summary"]))
    if body["intervention"]:
        sys.exit(4)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the verification service with uvicorn."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
