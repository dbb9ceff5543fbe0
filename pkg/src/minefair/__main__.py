"""Allow running minefair as ``python -m minefair``."""

from minefair.cli import cli

cli()
