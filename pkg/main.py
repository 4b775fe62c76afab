import os
import sys

import coloredlogs
import typer
from dotenv import load_dotenv

from routers import evaluate, evolve, family, identity, verify

load_dotenv()

app = typer.Typer(
    help="Construct, evaluate and verify superoscillating families.",
    no_args_is_help=True,
    add_completion=False,
)

# Include Routers
for router in (family.router, evaluate.router, verify.router, evolve.router, identity.router):
    app.registered_commands.extend(router.registered_commands)


@app.callback()
def configure(verbose: bool = typer.Option(False, "--verbose", help="Log at DEBUG level.")) -> None:
    # stdout carries data only
    level = "DEBUG" if verbose else os.getenv("SUPEROSC_LOG_LEVEL", "WARNING")
    coloredlogs.install(level=level, stream=sys.stderr, fmt="%(asctime)s %(name)s %(levelname)s %(message)s")


if __name__ == "__main__":
    app()
