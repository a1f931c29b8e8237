# main.py
import traceback

import click

from routes import abstract, bench, check
from utils.errors import AbstractionError
from utils.logger import enable_console, logger


# Перехват ошибок команд: лог с трассировкой, строка в stderr, код выхода
class ErrorHandlingGroup(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except AbstractionError as e:
            logger.error(f"❌ {ctx.invoked_subcommand}: {type(e).__name__}: {e}\n{traceback.format_exc()}")
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except Exception as e:
            logger.error(f"❌ Unhandled error in {ctx.invoked_subcommand}: {e}\n{traceback.format_exc()}")
            click.echo(f"internal error: {e}", err=True)
            ctx.exit(1)


@click.group(cls=ErrorHandlingGroup)
@click.option("-v", "--verbose", is_flag=True, help="Mirror the log to stderr.")
def cli(verbose: bool):
    """Boolean abstraction of LTL modulo theory specifications."""
    if verbose:
        enable_console()


cli.add_command(abstract.command)
cli.add_command(check.command)
cli.add_command(bench.command)


if __name__ == "__main__":
    cli()
