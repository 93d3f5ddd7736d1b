import csv
import math
from pathlib import Path

import numpy as np

from spike_slab_eb.utils import ParseError


class VectorFile:
    """
    A real vector stored as one decimal per line, or as a single-column CSV
    whose first row may be a header.
    """

    def __init__(self, path, verbose=False):
        self.path = Path(path)
        if not self.path.exists():
            raise FileNotFoundError(f"The specified path does not exist: {self.path}")
        self.verbose = verbose

    def read(self):
        """Parse the file into a float vector.

        Raises:
            ParseError: on an empty file, a row with more than one column or a
            value that is not a finite real, carrying the 1-based line number.
        """
        if self.verbose:
            print(f"Reading vector from {self.path}")
        values = []
        with open(self.path, "r", encoding="utf-8", newline="") as f:
            for line_number, row in enumerate(csv.reader(f), start=1):
                cells = [cell.strip() for cell in row]
                if not any(cells):
                    continue
                if len(cells) != 1:
                    raise ParseError(f"{self.path}:{line_number}: expected one value, found {len(cells)} columns", line_number)
                try:
                    value = float(cells[0])
                except ValueError:
                    # a non-numeric first row of a CSV is its header
                    if line_number == 1 and self.path.suffix.lower() == ".csv":
                        continue
                    raise ParseError(f"{self.path}:{line_number}: '{cells[0]}' is not a real number", line_number)
                if not math.isfinite(value):
                    raise ParseError(f"{self.path}:{line_number}: '{cells[0]}' is not finite", line_number)
                values.append(value)

        if not values:
            raise ParseError(f"{self.path} contains no values", 0)
        if self.verbose:
            print(f"\tRead {len(values)} values")
        return np.asarray(values, dtype=float)
