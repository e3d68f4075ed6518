import csv
from typing import List


def read_table(path) -> List[dict]:
    """Rows of a file written by CsvWriter, values as strings."""
    with open(path, newline="", encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.DictReader(lines))
