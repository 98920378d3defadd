import json

import click
from pydantic import TypeAdapter

from config import FQW_SEED
from models import CoupledProcessorsParams, JsqParams, QueueParams, QueueResult
from routes.walk_routes import emit
from services.ctmc import FUNCTIONALS, simulate_ctmc
from services.queueing_analysis import (
    compare_v_variants,
    discrepancy_notes,
    empty_probability,
    is_ergodic,
    jsq_branch_points,
)
from utils import number_to_str

router = click.Group("queues")

_params = TypeAdapter(QueueParams)


def load_params(model, path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    payload = payload.get("params", payload)
    payload["model"] = model
    if model == "coupled" and "xi" in payload:
        return CoupledProcessorsParams.from_sharing(
            payload["lambda1"], payload["lambda2"], payload["mu1_star"], payload["mu2_star"], payload["xi"]
        )
    return _params.validate_python(payload)


def analyse(params, seed=FQW_SEED, z_values=(), functional=None, zv=None, replicas=0, horizon=1000.0):
    ergodic, predicate, flags = is_ergodic(params)
    result = QueueResult(model=params.model, seed=seed, ergodic=ergodic, predicate=predicate, flags=flags)

    if isinstance(params, JsqParams):
        result.branch_points = jsq_branch_points(params.alpha, params.beta, params.lam)

    if functional and replicas:
        result.estimate = simulate_ctmc(params, horizon, replicas, seed, functional, zv)

    if isinstance(params, CoupledProcessorsParams) and params.processor_sharing and ergodic:
        result.f00 = number_to_str(empty_probability(params))
        result.f00_source = "work_conservation"
        if params.lambda2 > 0 and z_values:
            derived, printed, gap = compare_v_variants(params, z_values)
            result.f0, result.f0_printed, result.printed_gap = derived, printed, gap
            result.notes = discrepancy_notes(derived, printed, gap, result.estimate, zv)
    return result


@router.command("queue")
@click.argument("model", type=click.Choice(["coupled", "jsq", "alternating"]))
@click.argument("params_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--z", "z_values", type=float, multiple=True)
@click.option("--functional", type=click.Choice(FUNCTIONALS), default=None)
@click.option("--replicas", type=int, default=0, show_default=True)
@click.option("--horizon", type=float, default=1000.0, show_default=True)
@click.option("--seed", default=FQW_SEED, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def queue_cmd(model, params_file, z_values, functional, replicas, horizon, seed, output):
    """Ergodicity, explicit formulas and an optional simulation estimate."""
    params = load_params(model, params_file)
    zv = z_values[0] if z_values else None
    emit(analyse(params, seed, z_values, functional, zv, replicas, horizon), output)
