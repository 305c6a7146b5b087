import tempfile
from pathlib import Path
from unittest import TestCase

from glassbox.csv_table import CsvTable
from glassbox.errors import FormatError, MissingKey, ShapeMismatch
from tests.base_config import DATA_DIR


class TestCsvTable(TestCase):
    def test_read_training_file(self):
        table = CsvTable.read(DATA_DIR / "plane_train.csv")
        self.assertEqual(table.header, ("x0", "x1", "y"))
        self.assertEqual(table.rows.shape, (4, 3))
        self.assertEqual(table.column("y").tolist(), [6.0, 8.0, 9.0, 11.0])
        ds = table.dataset("y")
        self.assertEqual(ds.X.tolist(), [[1.0, 1.0], [1.0, 2.0], [2.0, 2.0], [2.0, 3.0]])
        self.assertIsNone(table.dataset().y)
        self.assertRaises(MissingKey, table.column, "z")

    def test_write_and_read_back(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out.csv"
            CsvTable.build(["prediction"], [16.0, 0.1]).write(path)
            self.assertEqual(path.read_text(encoding="utf-8").splitlines(), ["prediction", "16.0", "0.1"])
            self.assertEqual(CsvTable.read(path).rows.tolist(), [[16.0], [0.1]])

    def test_bad_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            text = Path(tmp) / "text.csv"
            text.write_text("a,b\n1,x\n", encoding="utf-8")
            self.assertRaises(FormatError, CsvTable.read, text)
            ragged = Path(tmp) / "ragged.csv"
            ragged.write_text("a,b\n1,2\n3\n", encoding="utf-8")
            self.assertRaises(FormatError, CsvTable.read, ragged)
            empty = Path(tmp) / "empty.csv"
            empty.write_text("", encoding="utf-8")
            self.assertRaises(FormatError, CsvTable.read, empty)
        self.assertRaises(ShapeMismatch, CsvTable.build, ["a"], [[1.0, 2.0]])
