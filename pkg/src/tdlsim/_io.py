"""Output helpers shared by the CSV writers and the CLI."""
from __future__ import annotations

import contextlib
import sys


@contextlib.contextmanager
def text_out(target):
    """Yield a text stream for a path, ``"-"`` (stdout) or an open stream."""
    if hasattr(target, "write"):
        yield target
    elif str(target) == "-":
        yield sys.stdout
    else:
        with open(target, "w", newline="\n") as fh:
            yield fh
