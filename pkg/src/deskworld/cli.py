"""Command-line entrypoints: serve, capture, scenario, replay."""

from __future__ import annotations

import json
import logging
import signal
import sys
from pathlib import Path

import click

from .audio import MaterialModeTable
from .dispatch import Dispatcher
from .errors import DeskworldError
from .physics.solver import SolverConfig
from .protocol import DEFAULT_PORT, canonical_json, decode_command_list, encode_frame
from .scenarios import CaptureConfig, SCENARIO_KINDS, ScenarioSpec, capture_dataset, generate_scenario
from .server import Server, run_bench
from .world import ModelLibrary, World

DEFAULT_CAPTURE_MODELS = ("unit_cube", "iron_box", "rubber_ball", "ramp",
                          "pentagon_prism")


def _library(path: str | None) -> ModelLibrary | None:
    return ModelLibrary(path) if path else None


@click.group()
@click.option("--log-level", default="INFO", show_default=True)
def main(log_level: str) -> None:
    """Headless lock-step simulation service and dataset tooling."""
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command()
@click.option("--port", default=DEFAULT_PORT, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--dt", default=None, type=float, help="Physics timestep in seconds.")
@click.option("--library", default=None, type=click.Path(exists=True))
@click.option("--audio-materials", default=None, type=click.Path(exists=True))
@click.option("--bench", is_flag=True,
              help="Run the 10-body throughput benchmark and exit.")
def serve(port, host, seed, dt, library, audio_materials, bench) -> None:
    """Run the simulation server (single controller session)."""
    if bench:
        rate = run_bench(seed=seed)
        click.echo(f"benchmark: {rate:.0f} steps/s (10 bodies, transforms output)")
        return
    try:
        server = Server(port=port, seed=seed, dt=dt, library=library,
                        audio_materials=audio_materials, host=host)
        server.bind()
    except DeskworldError as exc:
        raise click.ClickException(str(exc)) from exc
    signal.signal(signal.SIGINT, lambda *_: server.close())
    server.serve_forever()


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", default="capture_out", show_default=True,
              type=click.Path())
@click.option("--models", default=",".join(DEFAULT_CAPTURE_MODELS),
              show_default=True, help="Comma-separated model names.")
@click.option("--shots", default=20, show_default=True)
@click.option("--threshold", default=0.55, show_default=True)
@click.option("--criterion", default="ratio", show_default=True,
              type=click.Choice(["ratio", "difference"]))
@click.option("--library", default=None, type=click.Path(exists=True))
def capture(seed, out_dir, models, shots, threshold, criterion, library) -> None:
    """Generate a pose-filtered image dataset (two-loop algorithm)."""
    cfg = CaptureConfig(seed=seed, shots_per_model=shots,
                        grayscale_threshold=threshold, criterion=criterion)
    names = [m.strip() for m in models.split(",") if m.strip()]
    try:
        manifest = capture_dataset(cfg, names, out_dir=out_dir,
                                   library=_library(library))
    except DeskworldError as exc:
        raise click.ClickException(str(exc)) from exc
    total = sum(len(m["shots"]) for m in manifest["models"])
    click.echo(f"captured {total} images into {out_dir}")


@main.command()
@click.argument("kind", type=click.Choice(SCENARIO_KINDS))
@click.option("--seed", default=0, show_default=True)
@click.option("--trials", default=10, show_default=True)
@click.option("--steps", default=500, show_default=True)
@click.option("--out-dir", default=None, type=click.Path(),
              help="Defaults to scenario_<kind>.")
@click.option("--audio", is_flag=True, help="Also export per-collision WAV clips.")
@click.option("--library", default=None, type=click.Path(exists=True))
def scenario(kind, seed, trials, steps, out_dir, audio, library) -> None:
    """Generate a rigid-body scenario dataset."""
    spec = ScenarioSpec(kind=kind, seed=seed, trial_count=trials,
                        steps_per_trial=steps, emit_audio=audio)
    out = out_dir or f"scenario_{kind}"
    manifest = generate_scenario(spec, out_dir=out, library=_library(library))
    click.echo(f"wrote {len(manifest['trials'])} trials into {out}")


@main.command()
@click.argument("transcript", type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--library", default=None, type=click.Path(exists=True))
@click.option("--audio-materials", default=None, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path(),
              help="Write responses (one canonical JSON per line) here.")
def replay(transcript, seed, library, audio_materials, out) -> None:
    """Re-execute a recorded transcript (one JSON command list per line)."""
    table = MaterialModeTable(audio_materials) if audio_materials else None
    world = World(_library(library), seed=seed, solver_config=SolverConfig())
    d = Dispatcher(world, audio_table=table)
    responses = []
    for line_no, line in enumerate(Path(transcript).read_text().splitlines()):
        if not line.strip():
            continue
        try:
            envelopes = decode_command_list(
                encode_frame(canonical_json(json.loads(line))), d.registry)
            outputs, frame = d.execute(envelopes)
        except DeskworldError as exc:
            raise click.ClickException(f"line {line_no + 1}: {exc}") from exc
        responses.append(canonical_json([*outputs, frame]).decode())
        if d.terminated:
            break
    text = "\n".join(responses) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"replayed {len(responses)} steps into {out}")
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
