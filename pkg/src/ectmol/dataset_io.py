"""Dataset ingestion, target transforms and feature-table files.

File formats (all little-endian):

ECT tables
    CSV with header ``mol_id,f0,...,f{D*T-1}``, or binary::

        b"ECT1" | u32 N | u32 D | u32 T | N*D*T int32 (direction-major rows)

Fingerprint matrices
    CSV with header ``mol_id,b0,...,b{F-1}``, or binary::

        b"FPM1" | u32 N | u32 F | N*F float64

Binary files carry no ids; their rows are taken in dataset order.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ectmol.errors import (
    EmptyAfterFiltering,
    IoFailure,
    MalformedFile,
    MissingColumn,
    NonPositiveTarget,
    RowCountMismatch,
    UnknownMolId,
)

ECT_MAGIC = b"ECT1"
FPM_MAGIC = b"FPM1"
TRANSFORMS = ("identity", "log10")


@dataclass(frozen=True)
class MoleculeRecord:
    smiles: str
    target: float
    row_origin: int  # 1-based line number in the source file
    mol_id: str


@dataclass(frozen=True)
class Dataset:
    records: tuple[MoleculeRecord, ...]
    name: str = ""
    transform: str = "identity"

    def __len__(self) -> int:
        return len(self.records)

    @property
    def smiles(self) -> list[str]:
        return [r.smiles for r in self.records]

    @property
    def targets(self) -> np.ndarray:
        return np.array([r.target for r in self.records], dtype=np.float64)

    @property
    def mol_ids(self) -> list[str]:
        return [r.mol_id for r in self.records]


@dataclass
class IngestReport:
    source_rows: int = 0
    kept: int = 0
    dropped: int = 0
    deduplicated: int = 0
    dropped_lines: list[int] = field(default_factory=list)
    duplicate_lines: list[int] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def _parse_target(cell: str | None) -> float | None:
    if cell is None or not cell.strip():
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(
    path: str | Path,
    smiles_column: str = "smiles",
    target_column: str = "target",
    id_column: str | None = None,
    name: str | None = None,
) -> tuple[Dataset, IngestReport]:
    """Read a SMILES/target table.

    Rows with an empty SMILES or an empty, non-numeric or non-finite target
    are dropped. Among the remaining rows an exact repeat of an earlier SMILES
    string is discarded (first occurrence wins).

    Molecule ids come from ``id_column``; if that is not given, a ``mol_id``
    column is used when present, otherwise the source line number.

    Raises:
        IoFailure: the file cannot be read.
        MissingColumn: a requested column is absent from the header.
        EmptyAfterFiltering: no rows survive.
        MalformedFile: an id repeats among kept rows.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise MissingColumn(f"{path}: no header row")
            header = [h.strip() for h in header]
            if id_column is None and "mol_id" in header:
                id_column = "mol_id"
            for col in (smiles_column, target_column, id_column):
                if col is not None and col not in header:
                    raise MissingColumn(f"{path}: column {col!r} not in header {header}")
            s_idx = header.index(smiles_column)
            t_idx = header.index(target_column)
            i_idx = header.index(id_column) if id_column else None

            report = IngestReport()
            records: list[MoleculeRecord] = []
            seen: set[str] = set()
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                line = reader.line_num
                report.source_rows += 1
                smiles = row[s_idx].strip() if s_idx < len(row) else ""
                target = _parse_target(row[t_idx] if t_idx < len(row) else None)
                if not smiles or target is None:
                    report.dropped += 1
                    report.dropped_lines.append(line)
                    continue
                if smiles in seen:
                    report.deduplicated += 1
                    report.duplicate_lines.append(line)
                    continue
                seen.add(smiles)
                if i_idx is not None:
                    mol_id = row[i_idx].strip() if i_idx < len(row) else ""
                else:
                    mol_id = str(line)
                records.append(MoleculeRecord(smiles, target, line, mol_id))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IoFailure(f"{path}: {exc}") from exc

    report.kept = len(records)
    if not records:
        raise EmptyAfterFiltering(f"{path}: no usable rows ({report.dropped} dropped)")
    ids = [r.mol_id for r in records]
    if len(set(ids)) != len(ids) or "" in ids:
        raise MalformedFile(f"{path}: molecule ids must be unique and non-empty")
    return Dataset(tuple(records), name if name is not None else path.stem), report


def save_csv(ds: Dataset, path: str | Path, smiles_column: str = "smiles",
             target_column: str = "target") -> None:
    """Write ``ds`` back out with an explicit ``mol_id`` column.

    Targets are written with ``repr`` so they reload bit-exactly.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mol_id", smiles_column, target_column])
        for r in ds.records:
            w.writerow([r.mol_id, r.smiles, repr(r.target)])


def apply_target_transform(ds: Dataset, transform: str) -> Dataset:
    """Return ``ds`` with targets mapped through ``transform``.

    Transforms compose with the one already recorded only if that one is
    ``identity``.

    Raises:
        NonPositiveTarget: ``log10`` with a target <= 0.
    """
    if transform not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    if transform == "identity":
        return ds
    if ds.transform != "identity":
        raise ValueError(f"dataset already transformed with {ds.transform!r}")
    bad = [r for r in ds.records if not r.target > 0]
    if bad:
        raise NonPositiveTarget(
            f"log10 needs positive targets; line {bad[0].row_origin} has {bad[0].target}")
    records = tuple(replace(r, target=math.log10(r.target)) for r in ds.records)
    return Dataset(records, ds.name, transform)


@dataclass(frozen=True)
class FeatureTable:
    values: np.ndarray  # (N, W)
    mol_ids: tuple[str, ...] | None = None
    blocks: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("feature table must be 2-d")
        if not self.blocks:
            object.__setattr__(self, "blocks", (("features", self.values.shape[1]),))
        if sum(w for _, w in self.blocks) != self.values.shape[1]:
            raise ValueError("block widths do not sum to table width")
        if self.mol_ids is not None and len(self.mol_ids) != self.values.shape[0]:
            raise ValueError("one id per row required")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def label(self) -> str:
        return "+".join(name for name, w in self.blocks if w > 0)


def concat_features(ect: FeatureTable, fp: np.ndarray | FeatureTable,
                    label: str = "fingerprint") -> FeatureTable:
    """Append ``fp`` to the right of ``ect``; neither block is altered.

    Raises:
        RowCountMismatch: the blocks have different row counts.
    """
    fp_values = fp.values if isinstance(fp, FeatureTable) else np.asarray(fp)
    if fp_values.ndim == 1 and fp_values.size == 0:
        fp_values = fp_values.reshape(ect.values.shape[0], 0)
    if fp_values.shape[0] != ect.values.shape[0]:
        raise RowCountMismatch(
            f"ECT table has {ect.values.shape[0]} rows, other block {fp_values.shape[0]}")
    if fp_values.shape[1] == 0:
        return ect
    values = np.hstack([ect.values.astype(np.float64), fp_values.astype(np.float64)])
    return FeatureTable(values, ect.mol_ids, ect.blocks + ((label, fp_values.shape[1]),))


# --- serialization ----------------------------------------------------------


def _write_csv_matrix(path, ids, values, prefix: str) -> None:
    ints = np.issubdtype(values.dtype, np.integer)
    with Path(path).open("w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mol_id"] + [f"{prefix}{j}" for j in range(values.shape[1])])
        for mol_id, row in zip(ids, values):
            cells = [str(int(x)) for x in row] if ints else [repr(float(x)) for x in row]
            w.writerow([mol_id] + cells)


def _read_csv_matrix(path, prefix: str) -> tuple[list[str], np.ndarray]:
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0].strip() != "mol_id":
                raise MalformedFile(f"{path}: header must start with 'mol_id'")
            expected = [f"{prefix}{j}" for j in range(len(header) - 1)]
            if [h.strip() for h in header[1:]] != expected:
                raise MalformedFile(f"{path}: columns must be {prefix}0..{prefix}N")
            ids, rows = [], []
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise MalformedFile(f"{path}: line {reader.line_num} has "
                                        f"{len(row)} cells, expected {len(header)}")
                ids.append(row[0].strip())
                rows.append([float(c) for c in row[1:]])
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return ids, values


def write_ect_csv(path, mol_ids, values: np.ndarray) -> None:
    _write_csv_matrix(path, mol_ids, np.asarray(values), "f")


def write_ect_binary(path, values: np.ndarray, directions: int, thresholds: int) -> None:
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[1] != directions * thresholds:
        raise ValueError("table width must equal directions * thresholds")
    with Path(path).open("wb") as fh:
        fh.write(struct.pack("<4sIII", ECT_MAGIC, values.shape[0], directions, thresholds))
        fh.write(values.astype("<i4").tobytes())


def read_ect_binary(path) -> tuple[np.ndarray, int, int]:
    """Returns ``(values (N, D*T) int32, D, T)``."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    if len(data) < 16 or data[:4] != ECT_MAGIC:
        raise MalformedFile(f"{path}: not an ECT1 file")
    _, n, d, t = struct.unpack_from("<4sIII", data)
    if len(data) != 16 + 4 * n * d * t:
        raise MalformedFile(f"{path}: expected {16 + 4 * n * d * t} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<i4", offset=16).reshape(n, d * t).astype(np.int32)
    return values, d, t


def _magic(path) -> bytes:
    try:
        with Path(path).open("rb") as fh:
            return fh.read(4)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def read_feature_table(path, label: str = "ect") -> FeatureTable:
    """Load an ECT table in either format (binary detected by magic bytes)."""
    if _magic(path) == ECT_MAGIC:
        values, _, _ = read_ect_binary(path)
        return FeatureTable(values, None, ((label, values.shape[1]),))
    ids, values = _read_csv_matrix(path, "f")
    return FeatureTable(values, tuple(ids), ((label, values.shape[1]),))


def write_fingerprint_matrix(path, mol_ids, values: np.ndarray, fmt: str = "csv") -> None:
    values = np.asarray(values)
    if fmt == "csv":
        _write_csv_matrix(path, mol_ids, values, "b")
    elif fmt == "bin":
        with Path(path).open("wb") as fh:
            fh.write(struct.pack("<4sII", FPM_MAGIC, values.shape[0], values.shape[1]))
            fh.write(values.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def align_rows(file_ids, values: np.ndarray, mol_ids, what: str = "file") -> np.ndarray:
    """Reorder ``values`` (keyed by ``file_ids``) into the order of ``mol_ids``.

    ``file_ids=None`` means a positional file; only the row count is checked.
    With ids, a dataset id absent from the file is reported before any
    surplus rows.
    """
    mol_ids = list(mol_ids)
    if file_ids is not None:
        position = {}
        for i, mol_id in enumerate(file_ids):
            if mol_id in position:
                raise MalformedFile(f"{what}: duplicate mol_id {mol_id!r}")
            position[mol_id] = i
        missing = [m for m in mol_ids if m not in position]
        if missing:
            raise UnknownMolId(f"{what}: no row for mol_id {missing[0]!r}")
    if values.shape[0] != len(mol_ids):
        raise RowCountMismatch(
            f"{what} has {values.shape[0]} rows, dataset has {len(mol_ids)}")
    if file_ids is None:
        return values
    return values[[position[m] for m in mol_ids]]


def load_fingerprint_matrix(path, mol_ids=None) -> np.ndarray:
    """Read an ``N x F`` fingerprint matrix.

    With ``mol_ids`` the rows are matched to those ids (CSV) or checked for
    count (binary); without, file order is returned.

    Raises:
        RowCountMismatch, UnknownMolId, MalformedFile, IoFailure
    """
    if _magic(path) == FPM_MAGIC:
        data = Path(path).read_bytes()
        if len(data) < 12:
            raise MalformedFile(f"{path}: truncated FPM1 header")
        _, n, f = struct.unpack_from("<4sII", data)
        if len(data) != 12 + 8 * n * f:
            raise MalformedFile(f"{path}: expected {12 + 8 * n * f} bytes, found {len(data)}")
        values = np.frombuffer(data, dtype="<f8", offset=12).reshape(n, f).astype(np.float64)
        file_ids = None
    else:
        file_ids, values = _read_csv_matrix(path, "b")
    if mol_ids is None:
        return values
    return align_rows(file_ids, values, mol_ids, what=str(path))
