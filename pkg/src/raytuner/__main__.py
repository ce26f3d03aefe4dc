import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import click
import numpy as np
from pydantic import ValidationError

from .classify import RayClassifier, fingerprint_projection
from .exceptions import DataError, RaytunerError
from .harness import seeds
from .harness.campaign import (
    Campaign,
    campaign_starts,
    campaign_state_map,
    make_campaign,
    reference_campaign,
    reference_sampler_space,
    space_state_map,
    state_map_rows,
    tune_sweep,
    write_campaign_csv,
)
from .harness.dataset import gen_dataset
from .harness.io import (
    export_signal_csv,
    load_diagrams,
    load_document,
    load_projection,
    load_records,
    save_diagram,
    save_document,
    save_projection,
    save_stack,
    write_csv,
    write_json,
)
from .harness.sweep import reduction_table, run_sweep
from .harness.trace import RunTrace
from .ml import (
    EVAL_HEADER,
    Dataset,
    MLPModel,
    evaluate_ensemble,
    forward,
    get_model_dir,
    init_model,
    load_model,
    save_model,
    train,
    train_ensemble,
)
from .ml.exceptions import DimensionMismatchError
from .rays.acquire import acquire_offline
from .schema import DeviceState, FingerprintRecord, RunConfig, SweepSpec, WeightFn, parse_config
from .sim import REFERENCE_VB_2D, REFERENCE_VB_STACK
from .sim.device import make_device, reference_device
from .sim.render import DiagramStack, default_window, render_diagram, render_stack
from .tune.tuner import tune
from .utils import file_digest

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

WEIGHT_CHOICES = [w.value for w in WeightFn]


def get_output_dir() -> Path:
    """Default output directory: RAYTUNER_OUTPUT_DIR, else the working directory."""
    out_dir = os.environ.get("RAYTUNER_OUTPUT_DIR")
    return Path(out_dir) if out_dir else Path.cwd()


def parse_int_specs(spec: Optional[str]) -> Optional[List[int]]:
    """
    Parse comma-separated integers and inclusive ranges.

    Examples:
      --ray-counts 5,6,7,9,12
      --lengths 20-80:4
      --lengths 24,44
    """
    if spec is None:
        return None

    values: List[int] = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            if "-" in token:
                bounds, _, step_s = token.partition(":")
                start_s, end_s = (p.strip() for p in bounds.split("-", 1))
                start, end, step = int(start_s), int(end_s), int(step_s) if step_s else 1
                if step <= 0 or end < start:
                    raise click.BadParameter(f"Invalid range {token!r}")
                values.extend(range(start, end + 1, step))
            else:
                values.append(int(token))
        except ValueError as e:
            raise click.BadParameter(f"Invalid integer list {token!r}") from e
    if not values:
        raise click.BadParameter(f"Empty integer list {spec!r}")
    return values


def parse_point(spec: str, dims: int) -> np.ndarray:
    try:
        values = [float(t) for t in spec.split(",")]
    except ValueError as e:
        raise click.BadParameter(f"Invalid point {spec!r}") from e
    if len(values) != dims:
        raise click.BadParameter(f"Point {spec!r} needs {dims} comma-separated voltages")
    return np.array(values)


@dataclass
class CliState:
    seed: int
    config: RunConfig
    out: Optional[Path]
    trace: bool

    def output(self, default_name: str) -> Path:
        return self.out if self.out is not None else get_output_dir() / default_name

    def run_trace(self, label: str) -> RunTrace:
        return RunTrace(enabled=self.trace, label=label)

    def save_trace(self, trace: RunTrace, output: Path) -> None:
        path = trace.save_json(output.with_name(output.name + ".trace.json"))
        if path:
            click.echo(f"Trace saved to {path}")


def load_run_config(path: Optional[Path]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError) as e:
        raise DataError(f"Could not read config {path}: {e}") from e
    return parse_config(RunConfig, data)


def _classifier(state: CliState, model: MLPModel) -> RayClassifier:
    """Bind a model to the configured rays; the model's own l_px and weight win when recorded."""
    cfg = state.config
    ray_cfg = cfg.ray.model_copy(update={"m": model.m, "l_px": model.l_px or cfg.ray.l_px})
    weight = model.weight_id or WeightFn.INV
    return RayClassifier(model, ray_cfg, weight, cfg.peaks, cfg.quality)


def _campaign(state: CliState, classifier: RayClassifier, dims: int, diagram: Optional[Path]) -> Campaign:
    if diagram is None:
        return reference_campaign(
            dims, classifier.ray_cfg, state.config.fitness, noise_seed=seeds.derive_seed(state.seed, seeds.NOISE)
        )
    source = load_diagrams(diagram)
    if (dims == 3) != isinstance(source, DiagramStack):
        raise click.BadParameter(f"--dims {dims} does not match {diagram}", param_hint="--dims")
    return make_campaign(source, classifier.ray_cfg, state.config.fitness)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Root seed for every random stream")
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="JSON run configuration")
@click.option(
    "--out", type=click.Path(path_type=Path), help="Output file (default: a file in $RAYTUNER_OUTPUT_DIR or cwd)"
)
@click.option("--trace", is_flag=True, help="Write step timings next to the output as <out>.trace.json")
@click.pass_context
def cli(ctx: click.Context, seed: int, config_path: Optional[Path], out: Optional[Path], trace: bool):
    """Raytuner: ray-based state classification and autotuning for double quantum dots."""
    ctx.obj = CliState(seed=seed, config=load_run_config(config_path), out=out, trace=trace)


@cli.command()
@click.option("--reference", is_flag=True, help="Use the fixed reference device")
@click.option("--device-seed", type=int, help="Device seed (default: derived from --seed)")
@click.option("--vb", "vbs", type=float, multiple=True, help="Barrier voltage(s) in mV; several give a stack")
@click.option("--stack", is_flag=True, help="Render the reference six-slice barrier stack")
@click.option("--size", "size_mv", type=float, default=300.0, show_default=True, help="Window size in mV")
@click.option("--resolution", type=float, default=0.5, show_default=True, help="mV per pixel")
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), help="Also export the signal grid as CSV")
@click.pass_obj
def simulate(
    state: CliState,
    reference: bool,
    device_seed: Optional[int],
    vbs: Tuple[float, ...],
    stack: bool,
    size_mv: float,
    resolution: float,
    csv_path: Optional[Path],
):
    """Render a stability diagram (or a barrier stack) of a simulated device."""
    if reference:
        params = reference_device()
    else:
        params = make_device(
            device_seed if device_seed is not None else seeds.derive_seed(state.seed, seeds.DEVICE),
            state.config.device_ranges,
        )
    vb_list = list(REFERENCE_VB_STACK) if stack else list(vbs) or [REFERENCE_VB_2D]
    noise_seed = seeds.derive_seed(state.seed, seeds.NOISE)
    window = default_window(params, float(np.median(vb_list)), size_mv, resolution)
    output = state.output("diagram.json")

    if len(vb_list) == 1:
        diagram = render_diagram(params, window, resolution, vb_list[0], noise_seed)
        save_diagram(diagram, output)
        fractions = ", ".join(f"{s.name} {f:.2f}" for s, f in zip(DeviceState, diagram.state_fractions()))
        click.echo(f"Rendered {diagram.shape[1]}x{diagram.shape[0]} diagram at V_B = {diagram.vb} mV ({fractions})")
        if csv_path:
            export_signal_csv(diagram, csv_path)
            click.echo(f"Signal grid saved to {csv_path}")
    else:
        if csv_path:
            raise click.UsageError("--csv exports a single diagram; drop it or render one --vb")
        diagrams = render_stack(params, window, resolution, vb_list, noise_seed)
        save_stack(diagrams, output)
        click.echo(f"Rendered {len(diagrams)} slices at V_B = {', '.join(str(v) for v in diagrams.vbs)} mV")

    click.echo(f"Done! Saved to {output}")


@cli.command()
@click.argument("diagram", type=click.Path(exists=True, path_type=Path))
@click.option("--origin", required=True, help="Ray origin 'V_P1,V_P2' in mV")
@click.option("--vb", type=float, help="Slice to use when DIAGRAM is a stack (nearest V_B)")
@click.pass_obj
def rays(state: CliState, diagram: Path, origin: str, vb: Optional[float]):
    """Acquire an M-projection from a rendered diagram."""
    source = load_diagrams(diagram)
    if isinstance(source, DiagramStack):
        source = source.nearest(vb if vb is not None else float(source.vbs[-1]))
    proj = acquire_offline(source, tuple(parse_point(origin, 2)), state.config.ray)
    output = state.output("projection.json")
    save_projection(proj, output)
    click.echo(f"Acquired {proj.config.m} rays of {proj.config.l_px} px at {proj.origin}")
    click.echo(f"Done! Saved to {output}")


@cli.command()
@click.argument("projection", type=click.Path(exists=True, path_type=Path))
@click.option("--weight", type=click.Choice(WEIGHT_CHOICES), default="inv", show_default=True)
@click.pass_obj
def fingerprint(state: CliState, projection: Path, weight: str):
    """Extract critical features from a projection and weight them into a fingerprint."""
    proj = load_projection(projection)
    fp = fingerprint_projection(proj, WeightFn(weight), state.config.peaks)
    record = FingerprintRecord(
        m=proj.config.m,
        l_px=proj.config.l_px,
        px_mv=proj.config.px_mv,
        weight_id=WeightFn(weight),
        values=fp.values.tolist(),
        origin_mv=proj.origin,
    )
    output = state.output("fingerprint.json")
    save_document(record, output)
    click.echo(" ".join(f"{v:.4f}" for v in record.values))
    click.echo(f"Done! Saved to {output}")


@cli.command()
@click.argument("fingerprint_file", type=click.Path(exists=True, path_type=Path))
@click.option("--model", "model_name", required=True, help="Model file or name in the model directory")
@click.pass_obj
def classify(state: CliState, fingerprint_file: Path, model_name: str):
    """Print state probabilities for a saved fingerprint."""
    record = load_document(FingerprintRecord, fingerprint_file)
    model = load_model(model_name)
    if record.m != model.m:
        raise DimensionMismatchError(f"Fingerprint has {record.m} rays, model expects {model.m}")
    if model.weight_id is not None and model.weight_id != record.weight_id:
        raise DimensionMismatchError(f"Fingerprint uses weight {record.weight_id.value}, model {model.weight_id.value}")
    probs = forward(model, np.asarray(record.values))
    for s, p in zip(DeviceState, probs):
        click.echo(f"{s.name:5s} {p:.6f}")
    if state.out is not None:
        best = DeviceState(int(np.argmax(probs)))
        write_json({"probabilities": probs.tolist(), "state": best.name}, state.out)


@cli.command(name="gen-dataset")
@click.option("--devices", "n_devices", type=int, default=20, show_default=True)
@click.option("--per-device", type=int, default=1350, show_default=True)
@click.option("--weight", type=click.Choice(WEIGHT_CHOICES), default="inv", show_default=True)
@click.pass_obj
def gen_dataset_cmd(state: CliState, n_devices: int, per_device: int, weight: str):
    """Generate a class-balanced labeled fingerprint dataset (JSON lines)."""
    output = state.output("dataset.jsonl")
    trace = state.run_trace("gen-dataset")
    cfg = state.config
    click.echo(f"Generating {n_devices} x {per_device} fingerprints ({cfg.ray.m} rays of {cfg.ray.l_px} px)...")
    records = gen_dataset(
        n_devices, per_device, cfg.ray, WeightFn(weight), state.seed, cfg.device_ranges, cfg.peaks, output, trace
    )
    counts = np.bincount([int(r.label) for r in records if r.label is not None], minlength=len(DeviceState))
    click.echo("  " + ", ".join(f"{s.name} {c}" for s, c in zip(DeviceState, counts)))
    state.save_trace(trace, output)
    click.echo(f"Done! Saved {len(records)} records to {output} ({file_digest(output)})")


@cli.command(name="train")
@click.argument("dataset", type=click.Path(exists=True, path_type=Path))
@click.option("--models", "n_models", type=int, default=1, show_default=True, help="Ensemble size")
@click.option("--name", default="model", show_default=True, help="Model file stem")
@click.option("--workers", type=int, help="Threads for ensemble training")
@click.pass_obj
def train_cmd(state: CliState, dataset: Path, n_models: int, name: str, workers: Optional[int]):
    """Train one model (or an ensemble) on a fingerprint dataset."""
    data = Dataset.from_records(load_records(dataset))
    cfg = state.config.train.model_copy(update={"seed": seeds.derive_seed(state.seed, seeds.INIT)})
    model_dir = state.out if state.out is not None else get_model_dir()

    if n_models == 1:
        model, history = train(init_model(data.m, cfg.seed), data, cfg)
        path = save_model(model, model_dir / f"{name}.json")
        click.echo(
            f"Trained on {len(data)} records: loss {history.initial_loss:.4f} -> {history.final_loss:.4f}, "
            f"validation accuracy {history.val_accuracy[-1]:.3f}"
        )
        click.echo(f"Done! Saved to {path}")
        return

    models = train_ensemble(data, n_models, cfg, max_workers=workers)
    for k, model in enumerate(models):
        save_model(model, model_dir / f"{name}-{k:02d}.json")
    click.echo(f"Done! Saved {len(models)} models to {model_dir}/")


@cli.command(name="eval")
@click.argument("testset", type=click.Path(exists=True, path_type=Path))
@click.option("--model", "model_names", multiple=True, required=True, help="Model file(s); repeat for an ensemble")
@click.pass_obj
def eval_cmd(state: CliState, testset: Path, model_names: Tuple[str, ...]):
    """Evaluate models on a labeled fingerprint dataset."""
    data = Dataset.from_records(load_records(testset))
    report = evaluate_ensemble([load_model(n) for n in model_names], data)
    click.echo(f"Accuracy {report.mean:.4f} ({report.std:.4f}) over {len(report.accuracies)} model(s)")
    per_class = ", ".join(
        f"{s.name} {a:.3f}" if a is not None else f"{s.name} -" for s, a in zip(DeviceState, report.per_class_accuracy)
    )
    click.echo(f"  {per_class}")
    output = state.output("eval.json")
    save_document(report.to_document(), output, indent=2)
    row = write_csv(output.with_suffix(".csv"), EVAL_HEADER, [report.as_csv_row(data)])
    click.echo(f"Done! Saved to {output} and {row}")


@cli.command()
@click.option("--ray-counts", help="Ray counts, e.g. 5,6,7,9,12")
@click.option("--lengths", help="Ray lengths in px, e.g. 20-80:4")
@click.option("--weights", help="Comma-separated weight functions")
@click.option("--models", "n_models", type=int, help="Models per cell")
@click.option("--devices", "n_devices", type=int, help="Training devices per cell")
@click.option("--per-device", type=int, help="Training fingerprints per device")
@click.option("--workers", type=int, help="Cells run concurrently")
@click.pass_obj
def sweep(
    state: CliState,
    ray_counts: Optional[str],
    lengths: Optional[str],
    weights: Optional[str],
    n_models: Optional[int],
    n_devices: Optional[int],
    per_device: Optional[int],
    workers: Optional[int],
):
    """Train and evaluate ensembles over a grid of ray counts, lengths and weights."""
    update: dict = {"seed": state.seed}
    if ray_counts:
        update["ray_counts"] = parse_int_specs(ray_counts)
    if lengths:
        update["ray_lengths_px"] = parse_int_specs(lengths)
    if weights:
        try:
            update["weights"] = [WeightFn(w.strip()) for w in weights.split(",") if w.strip()]
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--weights") from e
    for key, value in [("n_models", n_models), ("n_devices", n_devices), ("per_device", per_device)]:
        if value is not None:
            update[key] = value
    spec = parse_config(SweepSpec, state.config.sweep.model_dump() | update)

    output = state.output("sweep.csv")
    trace = state.run_trace("sweep")
    n_cells = len(spec.ray_counts) * len(spec.ray_lengths_px) * len(spec.weights)
    click.echo(f"Sweeping {n_cells} cells with {spec.n_models} models each...")
    rows = run_sweep(
        spec, state.config.train, state.config.device_ranges, state.config.peaks, workers, output, trace
    )
    for r in rows:
        click.echo(
            f"  M={r.cell.m:2d} L={r.cell.l_px:3d} {r.cell.weight.value:14s} "
            f"{r.report.mean:.3f} ({r.report.std:.3f})  reduction {r.reduction}%"
        )
    state.save_trace(trace, output)
    click.echo(f"Done! Saved to {output} ({file_digest(output)})")


def _tune_options(fn):
    fn = click.option("--model", "model_name", required=True, help="Model file or name in the model directory")(fn)
    fn = click.option("--dims", type=click.Choice(["2", "3"]), default="2", show_default=True)(fn)
    fn = click.option(
        "--diagram",
        type=click.Path(exists=True, path_type=Path),
        help="Diagram (2D) or stack (3D) file (default: the reference device)",
    )(fn)
    return fn


@cli.command(name="tune")
@_tune_options
@click.option("--start", help="Start point 'V_P1,V_P2[,V_B]' (default: domain centre, top slice in 3D)")
@click.pass_obj
def tune_cmd(state: CliState, model_name: str, dims: str, diagram: Optional[Path], start: Optional[str]):
    """Run one classifier-in-the-loop Nelder-Mead tuning."""
    classifier = _classifier(state, load_model(model_name))
    campaign = _campaign(state, classifier, int(dims), diagram)
    x0 = parse_point(start, campaign.dims) if start else campaign_starts(campaign, 1, 1.0)[0]
    result = tune(
        classifier, campaign.space, x0, campaign.fitness_cfg, state.config.simplex, region=campaign.region
    )
    for w in result.warnings:
        click.echo(f"Warning: {w}", err=True)
    state_name = result.final_state.name if result.final_state is not None else "-"
    click.echo(
        f"Final point {[round(float(v), 3) for v in result.final_point]} after {result.iterations} iterations "
        f"({result.reason}): {state_name}, success={result.success}"
    )
    output = state.output("tune.json")
    save_document(result.to_document(), output)
    click.echo(f"Done! Saved to {output}")


@cli.command(name="tune-sweep")
@_tune_options
@click.option("--starts", "n_starts", type=int, default=225, show_default=True, help="Number of start points")
@click.option("--window", "window_mv", type=float, default=200.0, show_default=True, help="Start square side (mV)")
@click.option("--workers", type=int, help="Tuning runs in parallel")
@click.pass_obj
def tune_sweep_cmd(
    state: CliState,
    model_name: str,
    dims: str,
    diagram: Optional[Path],
    n_starts: int,
    window_mv: float,
    workers: Optional[int],
):
    """Tune from a square of start points and report the success rate."""
    classifier = _classifier(state, load_model(model_name))
    campaign = _campaign(state, classifier, int(dims), diagram)
    starts = campaign_starts(campaign, n_starts, window_mv, state.seed)
    trace = state.run_trace("tune-sweep")
    trace.add_step("Setup", len(starts))
    click.echo(f"Tuning from {len(starts)} starts ({campaign.dims}D)...")
    result = tune_sweep(classifier, campaign, starts, state.config.simplex, workers, trace)

    n_warn = sum(len(r.warnings) for r in result.results)
    if n_warn:
        click.echo(f"Warning: {n_warn} simplex warnings across runs", err=True)
    click.echo(f"Success rate {result.report.rate:.3f}")
    if result.report.near_miss_rate is not None:
        click.echo(f"Near-miss rate {result.report.near_miss_rate:.3f}")
    output = state.output("tune_sweep.csv")
    write_campaign_csv(result, campaign.dims, output)
    state.save_trace(trace, output)
    click.echo(f"Done! Saved to {output}")


@cli.command(name="classify-map")
@_tune_options
@click.option("--step", "step_mv", type=float, default=5.0, show_default=True, help="Grid step in mV")
@click.option("--vb", type=float, help="Barrier voltage for 3D maps (default: top slice)")
@click.option("--live", is_flag=True, help="Measure the reference device through a live sampler instead of a diagram")
@click.pass_obj
def classify_map_cmd(
    state: CliState,
    model_name: str,
    dims: str,
    diagram: Optional[Path],
    step_mv: float,
    vb: Optional[float],
    live: bool,
):
    """Classify a grid of origins over the tuning domain."""
    classifier = _classifier(state, load_model(model_name))
    if live:
        if diagram is not None:
            raise click.BadParameter("--live measures the reference device and takes no diagram", param_hint="--live")
        noise_seed = seeds.derive_seed(state.seed, seeds.NOISE)
        space = reference_sampler_space(int(dims), classifier.ray_cfg, noise_seed)
        smap = space_state_map(classifier, space, step_mv, vb)
    else:
        campaign = _campaign(state, classifier, int(dims), diagram)
        smap = campaign_state_map(classifier, campaign, step_mv, vb)
    click.echo(f"Classified {smap.states.size} origins, {smap.coverage():.1%} passed the quality gate")
    output = state.output("state_map.csv")
    header, rows = state_map_rows(smap)
    write_csv(output, header, rows)
    click.echo(f"Done! Saved to {output}")


@cli.command(name="report-reduction")
@click.option("--ray-counts", default="5,6,7,9,12", show_default=True)
@click.option("--lengths", default="24,44", show_default=True, help="Ray lengths in px")
@click.option("--baseline", "baseline_px", type=int, help="Full-image pixel count (default: sweep baseline_px)")
@click.pass_obj
def report_reduction(state: CliState, ray_counts: str, lengths: str, baseline_px: Optional[int]):
    """Print the measurement reduction of each (M, L_px) against a full image."""
    counts = parse_int_specs(ray_counts) or []
    lens = parse_int_specs(lengths) or []
    report = reduction_table(counts, lens, baseline_px or state.config.sweep.baseline_px)
    click.echo("M    " + "".join(f"{length:>6d}" for length in lens))
    for m in counts:
        click.echo(f"{m:<5d}" + "".join(f"{report.lookup(m, length):>6d}" for length in lens))
    if state.out is not None:
        write_csv(state.out, ["m", "l_px", "pixels", "baseline_px", "reduction"], report.to_rows())
        click.echo(f"Done! Saved to {state.out}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes: 1 for usage errors, 2 for data and contract errors."""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="raytuner", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_DATA
    except (RaytunerError, ValidationError, OSError) as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_DATA
    return rv if isinstance(rv, int) else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
