"""Allow `python -m muellerkit ...` as an alias for the console script."""

from .cli import entrypoint

entrypoint()
