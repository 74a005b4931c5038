"""File formats: JSON model files, curve CSV + sidecar, eigenvalue CSVs."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .lsd import LsdCurve
from .mixture import Model, ModelError

CURVE_COLUMNS = ("x", "re_beta", "im_beta", "omega", "density")


def load_model(path: str | Path) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    return Model.from_json(data)


def dump_json(data, path: str | Path | None) -> str:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_curve(curve: LsdCurve, path: str | Path, extra: dict[str, np.ndarray] | None = None) -> None:
    extra = extra or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(CURVE_COLUMNS) + list(extra))
        cols = [curve.grid, curve.beta.real, curve.beta.imag, curve.omega, curve.density]
        cols += list(extra.values())
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def curve_meta(curve: LsdCurve) -> dict:
    return {
        "support": [list(iv) for iv in curve.support],
        "atom_at_zero": curve.atom_at_zero,
        "mass": curve.mass,
    }


def read_curve(path: str | Path, sidecar: str | Path | None = None) -> LsdCurve:
    """Rebuild an LsdCurve from a curve CSV and its JSON sidecar."""
    meta = json.loads(Path(sidecar or sidecar_path(path)).read_text(encoding="utf-8"))
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    col = {k: np.array([float(r[k]) for r in rows]) for k in CURVE_COLUMNS}
    return LsdCurve(
        grid=col["x"],
        beta=col["re_beta"] + 1j * col["im_beta"],
        omega=col["omega"],
        density=col["density"],
        support=[tuple(iv) for iv in meta["support"]],
        atom_at_zero=float(meta["atom_at_zero"]),
    )


def read_eigenvalues(path: str | Path) -> np.ndarray:
    """A one-column CSV of eigenvalues; an optional non-numeric header line is skipped."""
    values = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 1:
                    raise ModelError(f"{path}:{i + 1}: expected one column, got {len(row)}")
                try:
                    values.append(float(row[0]))
                except ValueError:
                    if i == 0 and not values:
                        continue
                    raise ModelError(f"{path}:{i + 1}: not a number: {row[0]!r}") from None
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc}") from exc
    arr = np.array(values)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ModelError(f"{path}: no usable eigenvalues")
    return arr


def read_matrix(path: str | Path) -> np.ndarray:
    try:
        y = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ModelError(f"cannot read data matrix {path}: {exc}") from exc
    return y


def write_rows(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
