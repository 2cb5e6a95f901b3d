"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error. Every subcommand is
deterministic given its flags and seed; results land in files, stdout gets
one machine-readable summary line, diagnostics go to stderr. A JSON config
file (--config) can preset any flag; explicit flags win.
"""

from __future__ import annotations

import json
import os
import sys

import click

from .errors import CadkitError


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parse_range(text: str, name: str) -> tuple[float, float]:
    # "0.3:0.5" -> (0.3, 0.5)
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise click.UsageError(f"{name} must look like LO:HI, got {text!r}")
    if not 0 < lo <= hi:
        raise click.UsageError(f"{name} bounds must satisfy 0 < LO <= HI")
    return lo, hi


def _load_config(ctx, param, path):
    if path is None:
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise click.UsageError(f"config {path} must hold a JSON object")
    ctx.default_map = data
    return path


_CONFIG = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False),
    callback=_load_config, is_eager=True, expose_value=False,
    help="JSON file presetting any flag of this command; flags override it.")


@click.group()
def cli():
    """CAD-code toolchain: convert, execute, featurize, forge, evaluate."""


# --- convert -----------------------------------------------------------------

@cli.command()
@_CONFIG
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("--to", "target", type=click.Choice(["tokens", "code"]),
              required=True, help="Output form.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def convert(src, target, out):
    """Convert between code text (.cadc) and token-sequence JSON."""
    from .cadcode import from_json, from_tokens, parse, serialize, to_json, to_tokens

    text = _read_text(src)
    if target == "tokens":
        payload = to_json(to_tokens(parse(text)))
    else:
        payload = serialize(from_tokens(from_json(text)))
    _write_text(out, payload)
    click.echo(f'{{"written": "{out}"}}')


# --- exec --------------------------------------------------------------------

@cli.command(name="exec")
@_CONFIG
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("--sample", default=8096, show_default=True,
              help="Points to draw from the solid's surface.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def exec_cmd(src, sample, seed, out):
    """Execute code to a solid and write a sampled point cloud (.xyz)."""
    from .cadcode import parse
    from .geom import execute, sample_surface, save_xyz

    if sample < 1:
        raise click.UsageError("--sample must be positive")
    cloud = sample_surface(execute(parse(_read_text(src))), sample, seed)
    save_xyz(out, cloud)
    click.echo(json.dumps({"written": out, "points": int(cloud.shape[0])}))


# --- graph -------------------------------------------------------------------

@cli.command()
@_CONFIG
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("--uv-res", default=10, show_default=True,
              help="Grid resolution per face.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def graph(src, uv_res, out):
    """Extract the face-adjacency graph tensors to an archive."""
    from .brepgraph import export_tensors, graph_tensors_for_program
    from .cadcode import parse

    if uv_res < 2:
        raise click.UsageError("--uv-res must be at least 2")
    if not out.endswith(".json"):
        raise click.UsageError("--out must be a .json archive header path")
    fg = graph_tensors_for_program(parse(_read_text(src)), resolution=uv_res)
    export_tensors(fg, out)
    click.echo(json.dumps({"written": out, "faces": len(fg.faces)}))


# --- forge -------------------------------------------------------------------

@cli.group()
def forge():
    """Build task records (JSONL) from a directory of programs."""


def _forge_code(task, programs, archives, out, seed, uv_res, keep, ratio):
    from .forge import build_code_records, load_program_dir, write_records

    items = load_program_dir(programs)
    kwargs = {}
    if keep is not None:
        kwargs["keep_range"] = _parse_range(keep, "--keep")
    if ratio is not None:
        kwargs["ratio_range"] = _parse_range(ratio, "--ratio")
    records = build_code_records(task, items, archives, master_seed=seed,
                                 resolution=uv_res, **kwargs)
    write_records(out, records)
    click.echo(json.dumps({"written": out, "records": len(records)}))


_PROGRAMS = click.option("--programs", required=True,
                         type=click.Path(exists=True, file_okay=False),
                         help="Directory of .cadc files.")
_ARCHIVES = click.option("--archives", required=True,
                         type=click.Path(file_okay=False),
                         help="Directory receiving tensor archives.")
_OUT = click.option("--out", required=True, type=click.Path(dir_okay=False))
_SEED = click.option("--seed", default=0, show_default=True)
_UVRES = click.option("--uv-res", default=10, show_default=True)


@forge.command()
@_CONFIG
@_PROGRAMS
@_ARCHIVES
@_OUT
@_SEED
@_UVRES
def reverse(programs, archives, out, seed, uv_res):
    """Records asking for full reconstruction from the B-rep."""
    _forge_code("reverse", programs, archives, out, seed, uv_res, None, None)


@forge.command()
@_CONFIG
@_PROGRAMS
@_ARCHIVES
@_OUT
@_SEED
@_UVRES
@click.option("--keep", default="0.3:0.5", show_default=True,
              help="Kept-prefix fraction range LO:HI.")
def completion(programs, archives, out, seed, uv_res, keep):
    """Records holding a program prefix to be completed."""
    _forge_code("completion", programs, archives, out, seed, uv_res, keep, None)


@forge.command()
@_CONFIG
@_PROGRAMS
@_ARCHIVES
@_OUT
@_SEED
@_UVRES
@click.option("--ratio", default="0.5:0.8", show_default=True,
              help="Corrupted-command fraction range LO:HI.")
def corrupt(programs, archives, out, seed, uv_res, ratio):
    """Records holding a corrupted program to be corrected."""
    _forge_code("correction", programs, archives, out, seed, uv_res, None, ratio)


@forge.command()
@_CONFIG
@click.option("--questions", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON list of question items.")
@_OUT
@_SEED
def qa(questions, out, seed):
    """Multiple-choice records from a questions file."""
    from .forge import build_qa_records, write_records

    try:
        items = json.loads(_read_text(questions))
    except json.JSONDecodeError as exc:
        raise CadkitError(f"cannot parse {questions}: {exc}")
    if not isinstance(items, list):
        raise CadkitError(f"{questions} must hold a JSON list")
    records = build_qa_records(items, master_seed=seed)
    write_records(out, records)
    click.echo(json.dumps({"written": out, "records": len(records)}))


# --- eval --------------------------------------------------------------------

@cli.command(name="eval")
@_CONFIG
@click.option("--gt", required=True, type=click.Path(exists=True, file_okay=False),
              help="Ground-truth program directory.")
@click.option("--pred", required=True, type=click.Path(exists=True, file_okay=False),
              help="Predicted program directory (paired by filename).")
@click.option("--out", default="report.json", show_default=True,
              type=click.Path(dir_okay=False))
@click.option("--delta", default=3, show_default=True,
              help="Parameter tolerance in quantization levels.")
@click.option("--n-points", default=8096, show_default=True,
              help="Surface samples per shape for Chamfer distance.")
@click.option("--cd-power", default=2, show_default=True,
              type=click.Choice(["1", "2"]),
              help="Exponent on nearest-neighbor distances.")
@_SEED
def eval_cmd(gt, pred, out, delta, n_points, cd_power, seed):
    """Score predictions against ground truth; writes report.json."""
    from .metrics import Tolerance, evaluate_sets

    report = evaluate_sets(gt, pred, tol=Tolerance(delta=delta),
                           n_points=n_points, cd_power=int(cd_power),
                           seed=seed)
    report.write_json(out)
    click.echo(json.dumps(report.render()))


# --- align -------------------------------------------------------------------

@cli.group()
def align():
    """Alignment training and gradient verification."""


@align.command()
@_CONFIG
@click.option("--records", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Forge JSONL with archive references.")
@click.option("--objective", type=click.Choice(["align", "stage"]),
              default="align", show_default=True,
              help="Contrastive+captioning, or decoder token loss.")
@click.option("--steps", default=200, show_default=True)
@click.option("--lr", default=3e-4, show_default=True)
@_SEED
@click.option("--init", "init_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Checkpoint to start the stage objective from.")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Checkpoint path (.json); history lands next to it.")
def train(records, objective, steps, lr, seed, init_path, out):
    """Train on forge records and write a checkpoint plus loss history."""
    from .align import (
        AlignConfig,
        dataset_from_records,
        load_checkpoint,
        save_checkpoint,
        train_align,
        train_stage,
        write_history,
    )
    from .forge import load_records

    if steps < 1:
        raise click.UsageError("--steps must be positive")
    base = os.path.dirname(os.path.abspath(records))
    dataset = dataset_from_records(load_records(records), base_dir=base)
    config = AlignConfig()
    if objective == "align":
        if init_path is not None:
            raise click.UsageError("--init only applies to --objective stage")
        pairs = [(tensors, target) for tensors, _, _, target in dataset]
        model, history, exit_step = train_align(pairs, config, steps,
                                                seed=seed, lr=lr)
    else:
        init_arrays = None
        if init_path is not None:
            init_arrays = load_checkpoint(init_path)[0]
        model, history, exit_step = train_stage(dataset, config, steps,
                                                seed=seed, lr=lr,
                                                init_arrays=init_arrays)
    save_checkpoint(out, model, exit_step)
    history_path = out + ".history.csv"
    write_history(history_path, history)
    click.echo(json.dumps({
        "written": out,
        "steps": exit_step,
        "final_loss": history[-1][3],
    }))


@align.command()
@_CONFIG
@click.option("--tolerance", default=1e-4, show_default=True,
              help="Max relative error accepted per case.")
def check(tolerance):
    """Run the analytic-vs-numeric gradient suite."""
    from .align import check_suite

    results = check_suite()
    worst = max(err for _, err in results)
    for name, err in results:
        click.echo(json.dumps({"case": name, "max_rel_err": err}))
    click.echo(json.dumps({"cases": len(results), "worst": worst,
                           "pass": bool(worst < tolerance)}))
    if worst >= tolerance:
        raise CadkitError(f"gradient check failed: worst {worst:.3e}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:        # --help and friends
        return int(exc.exit_code)
    except click.UsageError as exc:
        print(f"error: {exc.format_message()}", file=sys.stderr)
        return 1
    except (CadkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
