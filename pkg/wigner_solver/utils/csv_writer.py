import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from wigner_solver.config import get_settings
from wigner_solver.errors import OutputError


class CsvWriter:
    """
    Writes result tables: a `# manifest-hash:` comment line, a header, then rows.

    Floats go through one printf-style format so identical runs give
    byte-identical files.
    """

    def __init__(self, out_dir, manifest_hash: str = "", float_format: Optional[str] = None):
        self.out_dir = Path(out_dir)
        self.manifest_hash = manifest_hash
        self.float_format = float_format or get_settings().float_format
        self.written: List[str] = []

    def _format(self, value) -> str:
        if isinstance(value, (bool, np.bool_)):
            return str(int(value))
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return self.float_format % float(value)
        return str(value)

    def write(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        """Write <out_dir>/<name>; returns the path."""
        path = self.out_dir / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as handle:
                handle.write(f"# manifest-hash: {self.manifest_hash}\n")
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([self._format(v) for v in row])
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        self.written.append(str(path))
        return path

    def write_grid(self, name: str, x: np.ndarray, v: np.ndarray, values: np.ndarray, column: str = "W") -> Path:
        """A tensor-grid field as `x,v,<column>` rows, x outermost."""
        rows = ((xi, vj, values[i, j]) for i, xi in enumerate(x) for j, vj in enumerate(v))
        return self.write(name, ("x", "v", column), rows)

    def write_matrix(self, name: str, matrix: np.ndarray) -> Path:
        """A dense matrix as `row,col,value` rows."""
        n_rows, n_cols = matrix.shape
        rows = ((i, j, matrix[i, j]) for i in range(n_rows) for j in range(n_cols))
        return self.write(name, ("row", "col", "value"), rows)

