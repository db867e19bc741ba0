"""Plain-text report documents and atomic file output.

All floating-point values are printed with 17 significant digits so that
rerunning a command reproduces its output byte for byte.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .errors import IOFailure

FLOAT_FMT = "%.17g"


def fmt(value) -> str:
    """Render a scalar for reports and CSV cells."""
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "yes" if value else "no"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, complex):
        return "%s%s%sj" % (
            FLOAT_FMT % value.real,
            "+" if value.imag >= 0 else "-",
            FLOAT_FMT % abs(value.imag),
        )
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % float(value)
    return str(value)


def fmt_seq(values, sep: str = " ") -> str:
    return sep.join(fmt(v) for v in values)


class ReportDocument:
    """Accumulates ``[section]`` headers with ``key: value`` lines."""

    def __init__(self):
        self._lines = []

    def section(self, name: str) -> "ReportDocument":
        if self._lines:
            self._lines.append("")
        self._lines.append("[%s]" % name)
        return self

    def line(self, key: str, value) -> "ReportDocument":
        if isinstance(value, (list, tuple, np.ndarray)):
            rendered = fmt_seq(value)
        else:
            rendered = fmt(value)
        self._lines.append("%s: %s" % (key, rendered))
        return self

    def render(self) -> str:
        return "\n".join(self._lines) + "\n"


def atomic_write_text(path: str, text: str):
    """Write text through a sibling temporary file and an atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise IOFailure("cannot write %s: %s" % (path, exc)) from exc


def write_csv(path: str, header, rows):
    """Write rows of scalars as CSV with a header line, atomically."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
