"""Command line interface.

Exit codes: 0 success, 2 input error, 3 pipeline error, 4 review-server
bind failure.
"""

from __future__ import annotations

import logging
import socket
import sys
from pathlib import Path
from typing import Optional

import click

from .errors import InputError, PipelineError
from .linker import resolve_mappings
from .pipeline import (
    PipelineConfig,
    export_union,
    load_external_lists,
    load_state,
    read_decisions,
    read_manuals,
    read_union,
    resolve_report_dict,
    run_pipeline,
    stage_analyze,
    stage_bgp_validate,
    stage_ingest,
    stage_link,
    stage_merge_siblings,
    write_ingest_outputs,
    write_json,
    write_mappings_jsonl,
    write_state,
)

EXIT_INPUT = 2
EXIT_PIPELINE = 3
EXIT_BIND = 4


def _fail(stage: str, exc: BaseException, code: int) -> None:
    click.echo(f"error [stage={stage}]: {exc}", err=True)
    sys.exit(code)


def _guard(stage: str):
    """Map toolkit errors onto exit codes, tagging the failing stage."""

    def decorator(fn):
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except InputError as exc:
                _fail(getattr(exc, "stage", stage), exc, EXIT_INPUT)
            except PipelineError as exc:
                _fail(getattr(exc, "stage", stage), exc, EXIT_PIPELINE)
            except (click.ClickException, SystemExit):
                raise
            except Exception as exc:  # noqa: BLE001 - last resort tagging
                _fail(stage, exc, EXIT_PIPELINE)

        wrapper.__name__ = fn.__name__
        wrapper.__doc__ = fn.__doc__
        return wrapper

    return decorator


def _load_config(ctx: click.Context) -> PipelineConfig:
    config: Optional[PipelineConfig] = ctx.obj.get("config")
    if config is None:
        raise InputError("this command needs --config")
    return config


def _apply_out(config: PipelineConfig, out: Optional[str]) -> PipelineConfig:
    if out is not None:
        config.out_dir = Path(out)
    return config


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Pipeline config file (TOML or JSON).")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory (overrides the config).")
@click.option("--log-level", default="warning", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], out_dir: Optional[str],
         log_level: str) -> None:
    """Compare and link public IXP database snapshots."""
    logging.basicConfig(level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)
    config = None
    if config_path is not None:
        try:
            config = PipelineConfig.load(config_path)
        except InputError as exc:
            _fail("config", exc, EXIT_INPUT)
    ctx.obj["config"] = config
    ctx.obj["out"] = out_dir


@main.command()
@click.pass_context
@_guard("ingest")
def ingest(ctx: click.Context) -> None:
    """Parse and sanitize every configured snapshot."""
    config = _apply_out(_load_config(ctx), ctx.obj["out"])
    results = stage_ingest(config)
    write_ingest_outputs(config.out_dir, results)
    for source, result in results.items():
        click.echo(f"{source.value}: {result.manifest.record_count} records")


@main.command("merge-siblings")
@click.option("--decisions", type=click.Path(), default=None)
@click.pass_context
@_guard("merge-siblings")
def merge_siblings_cmd(ctx: click.Context, decisions: Optional[str]) -> None:
    """Merge same-source sibling records using the decision log."""
    from .pipeline import load_ingest_outputs

    config = _apply_out(_load_config(ctx), ctx.obj["out"])
    records, _ = load_ingest_outputs(config.out_dir)
    log = read_decisions(Path(decisions) if decisions else config.decisions)
    merged = stage_merge_siblings(records, log)
    for source, data in merged.items():
        write_json(
            config.out_dir / f"canonical_{source.value}.json",
            {
                "ixps": [e.to_dict() for e in data["ixps"]],
                "candidates": [c.to_dict() for c in data["candidates"]],
            },
        )
        click.echo(f"{source.value}: {len(data['ixps'])} entities")


@main.command()
@click.option("--decisions", type=click.Path(), default=None)
@click.option("--auto-accept-steps", default="", help="Comma-separated steps, e.g. '1'.")
@click.pass_context
@_guard("link")
def link(ctx: click.Context, decisions: Optional[str], auto_accept_steps: str) -> None:
    """Run the candidate cascade; writes state.json and cascade.json."""
    from .pipeline import load_ingest_outputs

    config = _apply_out(_load_config(ctx), ctx.obj["out"])
    records, facilities = load_ingest_outputs(config.out_dir)
    log = read_decisions(Path(decisions) if decisions else config.decisions)
    manuals = read_manuals(config.manual_candidates)
    steps = tuple(int(s) for s in auto_accept_steps.split(",") if s)
    steps = steps or config.auto_accept_steps
    datasets, cascade = stage_link(records, log, manuals, steps)
    write_state(config.out_dir / "state.json", records, facilities, steps)
    write_json(config.out_dir / "cascade.json", cascade.to_dict())
    pending = sum(len(o.pending()) for o in cascade.pairs.values())
    click.echo(f"pending candidates: {pending}")


@main.command("review-serve")
@click.option("--port", type=click.IntRange(1, 65535), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--decisions", type=click.Path(), required=True)
@click.option("--state", "state_path", type=click.Path(), required=True)
@click.option("--manual-candidates", type=click.Path(), default=None,
              help="Defaults to <decisions>.manual")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Serve a static review console from this directory.")
@click.pass_context
@_guard("review-serve")
def review_serve(ctx: click.Context, port: int, host: str, decisions: str,
                 state_path: str, manual_candidates: Optional[str],
                 ui_dir: Optional[str]) -> None:
    """Serve the review API (and console) for a linked state file."""
    import uvicorn

    from .review import ReviewStore, create_app

    records, _, auto_steps = load_state(Path(state_path))
    store = ReviewStore(
        records,
        decisions_path=decisions,
        manual_path=manual_candidates,
        auto_accept_steps=auto_steps,
    )
    app = create_app(store, ui_dir=Path(ui_dir) if ui_dir else None)

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        _fail("review-serve", f"cannot bind {host}:{port}: {exc}", EXIT_BIND)
    finally:
        probe.close()

    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--state", "state_path", type=click.Path(), required=True)
@click.option("--decisions", type=click.Path(), default=None)
@click.pass_context
@_guard("resolve")
def resolve(ctx: click.Context, state_path: str, decisions: Optional[str]) -> None:
    """Merge accepted mappings into the unified dataset and export it."""
    config = ctx.obj.get("config") or PipelineConfig()
    _apply_out(config, ctx.obj["out"])
    records, facilities, auto_steps = load_state(Path(state_path))
    log = read_decisions(Path(decisions) if decisions else config.decisions)
    manuals = read_manuals(config.manual_candidates)
    datasets, cascade = stage_link(records, log, manuals, auto_steps)
    result = resolve_mappings(cascade, log)
    write_json(config.out_dir / "resolve_report.json", resolve_report_dict(result))
    write_mappings_jsonl(config.out_dir / "mappings.jsonl", result)
    export_union(result.unified, config.out_dir / "union.json")
    click.echo(f"unified entities: {len(result.unified)}")


@main.command()
@click.option("--state", "state_path", type=click.Path(), required=True)
@click.option("--decisions", type=click.Path(), default=None)
@click.option("--city-threshold", type=int, default=None)
@click.option("--external-lists", type=click.Path(), default=None)
@click.pass_context
@_guard("analyze")
def analyze(ctx: click.Context, state_path: str, decisions: Optional[str],
            city_threshold: Optional[int], external_lists: Optional[str]) -> None:
    """Produce every comparison table as CSV plus a JSON summary."""
    config = ctx.obj.get("config") or PipelineConfig()
    _apply_out(config, ctx.obj["out"])
    records, facilities, auto_steps = load_state(Path(state_path))
    log = read_decisions(Path(decisions) if decisions else config.decisions)
    manuals = read_manuals(config.manual_candidates)
    datasets, cascade = stage_link(records, log, manuals, auto_steps)
    result = resolve_mappings(cascade, log)
    external = None
    external_path = Path(external_lists) if external_lists else config.external_lists
    if external_path is not None:
        external = load_external_lists(external_path)
    threshold = city_threshold if city_threshold is not None else config.city_threshold
    stage_analyze(
        result.unified,
        records,
        facilities,
        result,
        config.out_dir,
        city_threshold=threshold,
        external_lists=external,
        top_asn_count=config.top_asn_count,
    )
    click.echo(f"reports written to {config.out_dir}")


@main.command("bgp-validate")
@click.option("--collectors", type=click.Path(), required=True)
@click.option("--unified", type=click.Path(), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--jaccard-threshold", type=float, default=0.05, show_default=True)
@click.option("--ambiguity-margin", type=float, default=0.01, show_default=True)
@click.option("--exclude-asns", default="", help="Comma-separated ASNs to drop.")
@click.pass_context
@_guard("bgp-validate")
def bgp_validate(ctx: click.Context, collectors: str, unified: str, out_dir: str,
                 jaccard_threshold: float, ambiguity_margin: float,
                 exclude_asns: str) -> None:
    """Link route collectors to IXPs and score dataset completeness."""
    entities = read_union(Path(unified))
    excluded = tuple(int(a) for a in exclude_asns.split(",") if a)
    report = stage_bgp_validate(
        Path(collectors),
        entities,
        Path(out_dir),
        jaccard_threshold=jaccard_threshold,
        ambiguity_margin=ambiguity_margin,
        exclude_asns=excluded,
    )
    click.echo(
        f"linked {report['collectors_linked']} collectors, "
        f"{report['bgp_link_count']} BGP links"
    )


@main.command()
@click.option("--state", "state_path", type=click.Path(), required=True)
@click.option("--decisions", type=click.Path(), default=None)
@click.option("--output", type=click.Path(), default=None,
              help="Defaults to <out>/union.json")
@click.pass_context
@_guard("export")
def export(ctx: click.Context, state_path: str, decisions: Optional[str],
           output: Optional[str]) -> None:
    """Re-export the unified dataset (byte-identical for identical inputs)."""
    config = ctx.obj.get("config") or PipelineConfig()
    _apply_out(config, ctx.obj["out"])
    records, _, auto_steps = load_state(Path(state_path))
    log = read_decisions(Path(decisions) if decisions else config.decisions)
    manuals = read_manuals(config.manual_candidates)
    _, cascade = stage_link(records, log, manuals, auto_steps)
    result = resolve_mappings(cascade, log)
    target = Path(output) if output else config.out_dir / "union.json"
    export_union(result.unified, target)
    click.echo(f"union written to {target}")


@main.command()
@click.pass_context
@_guard("run")
def run(ctx: click.Context) -> None:
    """Run the full pipeline end to end."""
    config = _apply_out(_load_config(ctx), ctx.obj["out"])
    manifest = run_pipeline(config)
    counts = manifest["stage_counts"]
    click.echo(f"ingest: {counts['ingest']}")
    click.echo(f"unified: {counts['resolve']['unified']}")
    click.echo(f"manifest: {config.out_dir / 'run_manifest.json'}")


if __name__ == "__main__":
    main()
