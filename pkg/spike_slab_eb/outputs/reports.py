import csv
import io
import math
from pathlib import Path

import yaml

from spike_slab_eb.utils import format_float


class ReportDumper(yaml.SafeDumper):
    """SafeDumper that writes every float with 17 significant digits."""


def represent_float(dumper, value):
    if math.isnan(value):
        text = ".nan"
    elif math.isinf(value):
        text = ".inf" if value > 0 else "-.inf"
    else:
        text = format_float(value)
        # YAML 1.1 only resolves a float with a dot in the mantissa
        if "." not in text and "e" in text:
            text = text.replace("e", ".0e", 1)
        elif "." not in text and "e" not in text:
            text += ".0"
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


ReportDumper.add_representer(float, represent_float)


def dump_yaml(data):
    return yaml.dump(data, Dumper=ReportDumper, sort_keys=False, default_flow_style=False, allow_unicode=True)


class ReportWriter:

    def __init__(self, out_dir=None, verbose=False):
        """
        Writes reports, vectors and CSV tables.

        Parameters:
            out_dir(str or Path): Directory for output files. When None,
                reports go to the returned text only and nothing is written.
            verbose(bool): Print each path written.
        """
        self.out_dir = Path(out_dir) if out_dir else None
        self.verbose = verbose
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, name):
        return self.out_dir / name if self.out_dir else None

    def _write(self, name, text):
        path = self.path_for(name)
        if path is None:
            return None
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        if self.verbose:
            print(f"\tWrote {path}")
        return path

    def write_report(self, record, name):
        """Write a jsonmodels record as a YAML document and return the text."""
        text = dump_yaml(record.to_dict())
        self._write(name, text)
        return text

    def write_manifest(self, manifest, name):
        """Write the run manifest next to the output it describes; returns its file name."""
        self._write(name, dump_yaml(manifest.to_dict()))
        return name

    def write_vector(self, values, name):
        text = "".join(format_float(v) + "\n" for v in values)
        return self._write(name, text)

    def write_csv(self, rows, columns, name):
        """
        Write dict rows as an RFC-4180 CSV with the given header.

        Floats are written with 17 significant digits, booleans as
        true/false and missing values as empty cells.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
        text = buffer.getvalue()
        self._write(name, text)
        return text


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)
