from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from glassbox.errors import FormatError, IoFailure, MissingKey, ShapeMismatch
from glassbox.imodel import Dataset


@dataclass(frozen=True, eq=False)
class CsvTable:
    """A rectangular numeric table: UTF-8, comma separated, '.' decimal point, header row required."""

    header: Tuple[str, ...]
    rows: np.ndarray

    @classmethod
    def build(cls, header: Sequence[str], rows: Any) -> "CsvTable":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        if rows.ndim != 2 or rows.shape[1] != len(header):
            raise ShapeMismatch(f"{len(header)} column names for rows of shape {rows.shape}")
        return cls(header=tuple(header), rows=rows)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "CsvTable":
        """
        :raises IoFailure: if the file cannot be read
        :raises FormatError: if the file is empty, ragged or holds non-numeric cells
        """
        try:
            frame = pd.read_csv(path, sep=",", decimal=".", encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
        try:
            rows = frame.to_numpy(dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: every cell must be numeric ({exc})") from exc
        if np.isnan(rows).any():
            raise FormatError(f"{path}: missing cells")
        return cls.build([str(c) for c in frame.columns], rows)

    def write(self, path: Union[str, Path]) -> None:
        try:
            pd.DataFrame(self.rows, columns=list(self.header)).to_csv(path, index=False, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    def column(self, name: str) -> np.ndarray:
        if name not in self.header:
            raise MissingKey(name, "csv header")
        return self.rows[:, self.header.index(name)]

    def features(self, exclude: Optional[str] = None) -> np.ndarray:
        keep = [i for i, name in enumerate(self.header) if name != exclude]
        return self.rows[:, keep]

    def dataset(self, target: Optional[str] = None) -> Dataset:
        """Every column except `target` is a feature; without a target the dataset is unsupervised."""
        y = None if target is None else self.column(target)
        return Dataset.build(self.features(exclude=target), y)
