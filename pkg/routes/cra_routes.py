import click

from config import FQW_SEED
from routes.walk_routes import emit
from services.cra_solver import cra_constants, cra_report, cra_table
from utils import write_text

router = click.Group("cra")


@router.command("cra")
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--p", type=float, default=0.5, show_default=True)
@click.option("--n-max", type=int, default=8, show_default=True)
@click.option("--replicas", type=int, default=0, show_default=True, help="Monte Carlo replicas for the CSV")
@click.option("--slope-to", type=int, default=None, help="fit the slope on n in [64, slope-to]")
@click.option("--seed", default=FQW_SEED, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def cra_cmd(lam, p, n_max, replicas, slope_to, seed, output, csv_path):
    """Mean CRI, stability threshold and oscillation roots."""
    slope_range = range(64, slope_to + 1) if slope_to else None
    emit(cra_report(lam, p, n_max, seed, slope_range=slope_range), output)
    if csv_path:
        frame = cra_table(lam, p, n_max, replicas, seed, cra_constants(lam, p))
        write_text(frame.to_csv(index=False).rstrip("\n"), csv_path)
