"""
Classes supporting logging of learner runs. Currently, only a logger recording
every conditional independence decision of a learner to a CSV trace is
provided.
"""
import os

import pandas as pd

COLUMNS = ('run', 'x', 'y', 'conditioning', 'statistic', 'dof', 'p_value', 'independent',
           'underpowered', 'degenerate')

def conditioning2str(s):
    """Formats a conditioning set as a space separated string."""
    return ' '.join(str(v) for v in s)

class CiLogger:
    """Class for logging conditional independence decisions to a CSV file."""

    def __init__(self, path):
        """Initialize the logger to write to a specific path."""
        self._path = path
        self._rows = []
        self._vertices = None
        self._run = -1

    def initialize(self, vertices):
        """Start a new learner run over the given vertices. Several runs may be
        logged to the same file; they are numbered from 0."""
        self._vertices = tuple(vertices)
        self._run += 1

    def change(self, x, y, s, result):
        """Record one decision. Decisions arriving before :meth:`initialize`
        are rejected."""
        if self._vertices is None:
            raise RuntimeError("CiLogger has not been initialized")
        self._rows.append((self._run, x, y, conditioning2str(s), result.statistic, result.dof,
                           result.p_value, result.independent, result.underpowered, result.degenerate))

    def __len__(self):
        return len(self._rows)

    def frame(self):
        """Returns the logged decisions as a :class:`pandas.DataFrame`."""
        return pd.DataFrame(self._rows, columns=list(COLUMNS))

    def flush(self):
        """Write all decisions logged so far to the CSV file."""
        directory = os.path.dirname(self._path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.frame().to_csv(self._path, index=False)
