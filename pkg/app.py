import logging
import os
import sys

import click
import pydantic

from config import FQW_LOG_LEVEL
from errors import VALIDATION, FqwError
from models import (
    ClassifyResult,
    CensusReport,
    CraResult,
    IntegralResult,
    QueueRequest,
    QueueResult,
    SingularityReport,
    VerifyResult,
)
from routes import cra_routes, queue_routes, walk_routes
from utils import dumps

logging.basicConfig(
    level=FQW_LOG_LEVEL,
    stream=sys.stderr,
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)

SCHEMAS = {
    "census_report": CensusReport,
    "classify_result": ClassifyResult,
    "verify_result": VerifyResult,
    "integral_result": IntegralResult,
    "singularity_report": SingularityReport,
    "queue_request": QueueRequest,
    "queue_result": QueueResult,
    "cra_result": CraResult,
}


class FqwGroup(click.Group):
    """Turns library errors into a JSON line on stderr and an exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except FqwError as e:
            click.echo(dumps(e.to_dict()), err=True)
            ctx.exit(e.code)
        except pydantic.ValidationError as e:
            detail = [{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()]
            click.echo(dumps({"error": "ValidationError", "detail": detail, "code": VALIDATION}), err=True)
            ctx.exit(VALIDATION)
        except ValueError as e:
            click.echo(dumps({"error": "ValidationError", "detail": str(e), "code": VALIDATION}), err=True)
            ctx.exit(VALIDATION)

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        # usage and parameter errors are raised before invoke
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else 0
        except click.ClickException as e:
            click.echo(dumps({"error": type(e).__name__, "detail": e.format_message(), "code": VALIDATION}), err=True)
            code = VALIDATION
        except click.Abort:
            click.echo(dumps({"error": "Abort", "detail": "aborted", "code": 1}), err=True)
            code = 1
        if not standalone_mode:
            return code
        sys.exit(code)


@click.group(cls=FqwGroup)
def cli():
    """Walks in the quarter plane, two-queue models and the CRA recursion."""


for router in (walk_routes.router, queue_routes.router, cra_routes.router):
    for name, command in router.commands.items():
        cli.add_command(command, name)


@cli.command("schema")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="schemas", show_default=True)
def schema_cmd(out_dir):
    """Write the JSON schema of every result document."""
    os.makedirs(out_dir, exist_ok=True)
    for name, model in SCHEMAS.items():
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(model.model_json_schema(mode="serialization")))
            fh.write("\n")
    click.echo(out_dir)


if __name__ == "__main__":
    cli()
