import click

from config import FQW_GROUP_CAP, FQW_GROUP_TRIALS, FQW_SEED, FQW_ZG_TOL
from engine import classify, run_census
from models import VerifyResult
from services.bvp_integrals import compute_zg, integral_frame, integral_table
from services.enumeration import (
    TARGETS,
    count_walks,
    project_series,
    series_to_frame,
    table_to_frame,
    table_to_sparse,
    verify_cgf_equation,
)
from services.stepset_catalog import format_stepset, model_by_id, parse_stepset
from utils import dumps, write_text

router = click.Group("walks")


def resolve_stepset(spec):
    """A census id ("12") or a step-set expression ("N,E,S,W")."""
    spec = spec.strip()
    if spec.isdigit():
        return model_by_id(int(spec)).representative
    return parse_stepset(spec)


def emit(model, output):
    write_text(dumps(model.model_dump(mode="json", by_alias=True)), output)


@router.command("models")
@click.option("--cap", default=FQW_GROUP_CAP, show_default=True)
@click.option("--trials", default=FQW_GROUP_TRIALS, show_default=True)
@click.option("--seed", default=FQW_SEED, show_default=True)
@click.option("--genus/--no-genus", default=False)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def models_cmd(cap, trials, seed, genus, output):
    """Census of the 79 small-step models with group orders."""
    emit(run_census(cap, trials, seed, with_genus=genus), output)


@router.command("classify")
@click.argument("spec")
@click.option("--cap", default=FQW_GROUP_CAP, show_default=True)
@click.option("--trials", default=FQW_GROUP_TRIALS, show_default=True)
@click.option("--seed", default=FQW_SEED, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def classify_cmd(spec, cap, trials, seed, output):
    emit(classify(resolve_stepset(spec), cap, trials, seed), output)


@router.command("count")
@click.argument("spec")
@click.option("--n", "N", type=int, required=True)
@click.option("--target", type=click.Choice(TARGETS), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.option(
    "--sparse", "sparse_path", type=click.Path(dir_okay=False), default=None, help="JSON list of nonzero f(i,j,k)"
)
def count_cmd(spec, N, target, csv_path, sparse_path):
    table = count_walks(resolve_stepset(spec), N, keep_layers=sparse_path is not None)
    if sparse_path:
        write_text(dumps(table_to_sparse(table)), sparse_path)
    frame = series_to_frame(project_series(table, target)) if target else table_to_frame(table)
    write_text(frame.to_csv(index=False).rstrip("\n"), csv_path)


@router.command("verify-fe")
@click.argument("spec")
@click.option("--n", "N", type=int, required=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def verify_cmd(spec, N, output):
    ws = resolve_stepset(spec)
    emit(VerifyResult(steps=format_stepset(ws), N=N, residual=verify_cgf_equation(ws, N)), output)


@router.command("integral")
@click.option("--which", type=click.Choice(["F00", "F10"]), required=True)
@click.option("--z", "z_values", type=float, multiple=True, required=True)
@click.option("--n", "N", type=int, default=400, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def integral_cmd(which, z_values, N, output, csv_path):
    result = integral_table(which, z_values, N)
    emit(result, output)
    if csv_path:
        write_text(integral_frame(result).to_csv(index=False).rstrip("\n"), csv_path)


@router.command("zg")
@click.argument("spec")
@click.option("--tol", type=float, default=FQW_ZG_TOL, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def zg_cmd(spec, tol, output):
    emit(compute_zg(resolve_stepset(spec), tol), output)
