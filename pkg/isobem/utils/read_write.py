import csv
import json

import numpy as np

from isobem.utils.main import Pathlike


def load_json(path: Pathlike):
    with open(path, "r") as f:
        return json.load(f)


def dump_csv(rows: list[dict], path: Pathlike, header: list[str]):
    """Rows as dicts; missing values (None) written as empty fields"""
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if row.get(k) is None else row[k] for k in header})


# region Matrix dump
# 8-byte little-endian dimension header, then row-major little-endian float64
def dump_matrix(matrix: np.ndarray, path: Pathlike):
    matrix = np.asarray(matrix, dtype="<f8")
    n, m = matrix.shape
    if n != m:
        raise ValueError(f"Expected a square matrix, got {matrix.shape}")
    with open(path, "wb") as f:
        f.write(np.uint64(n).astype("<u8").tobytes())
        f.write(np.ascontiguousarray(matrix).tobytes(order="C"))


# endregion Matrix dump
