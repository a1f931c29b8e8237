import click

from models import RunConfig
from services.game import GameVerdict, solve, to_pair_form
from services.spec_parser import parse_boolean_spec
from utils.logger import logger


def run_check(cfg: RunConfig) -> GameVerdict:
    with open(cfg.input_path, encoding="utf-8") as f:
        spec = parse_boolean_spec(f.read())
    verdict = solve(to_pair_form(spec))
    logger.info(f"[CHECK] {cfg.input_path}: {'realizable' if verdict.realizable else 'unrealizable'}")
    return verdict


@click.command("check")
@click.argument("boolspec_path", type=click.Path(exists=True, dir_okay=False))
def command(boolspec_path):
    """Decide realizability of a Boolean document in the G/X fragment."""
    cfg = RunConfig(command="check", input_path=boolspec_path)
    verdict = run_check(cfg)
    click.echo("realizable" if verdict.realizable else "unrealizable")
