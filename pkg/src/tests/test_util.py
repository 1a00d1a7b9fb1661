import unittest
import tempfile
import secrets
import os
from pathlib import Path

import numpy as np
import pandas as pd

from src.config import RunConfig, TOL_GAP
from src.errors import InvalidConfig, InvalidInput
from src.util import read_json, write_json_atomic, write_csv_atomic, matrix_from_json, parallel_map


class TestRunConfig(unittest.TestCase):

    def test_flags_override_file(self):
        filename = Path(tempfile.gettempdir()) / f"anosov-config-{secrets.token_hex(10)}.json"
        try:
            filename.write_text("{\"radius\": 12, \"tol-gap\": 1e-6, \"seed\": 5}")
            cfg = RunConfig.from_sources({"command": "domcheck", "radius": 8, "seed": None}, config_file=filename)
            self.assertEqual(8, cfg.radius)
            self.assertEqual(1e-6, cfg.tol_gap)
            self.assertEqual(5, cfg.seed)
            self.assertEqual(1, cfg.p)
        finally:
            if filename.exists():
                os.remove(filename)

    def test_defaults(self):
        cfg = RunConfig.from_sources({"command": "morse"})
        self.assertEqual(TOL_GAP, cfg.tol_gap)
        self.assertEqual("morse", cfg.to_dict()["command"])

    def test_invalid(self):
        with self.assertRaises(InvalidConfig):
            RunConfig.from_sources({})
        with self.assertRaises(InvalidConfig):
            RunConfig.from_sources({"command": "domcheck", "tol_gap": 0.})
        with self.assertRaises(InvalidConfig):
            RunConfig.from_sources({"command": "domcheck", "workers": 0})
        with self.assertRaises(InvalidConfig):
            RunConfig.from_sources({"command": "domcheck"}, config_file="/nonexistent/anosov.json")


class TestFiles(unittest.TestCase):

    def test_json(self):
        filename = Path(tempfile.gettempdir()) / f"anosov-{secrets.token_hex(10)}" / "report.json"
        try:
            write_json_atomic(filename, {"matrix": np.eye(2), "value": np.float64(.5), "ok": np.bool_(True)})
            self.assertEqual(
                {"matrix": [[1., 0.], [0., 1.]], "value": .5, "ok": True},
                read_json(filename),
            )
            # no temporary files left behind
            self.assertEqual(["report.json"], os.listdir(filename.parent))
        finally:
            if filename.exists():
                os.remove(filename)
                os.rmdir(filename.parent)

    def test_csv(self):
        filename = Path(tempfile.gettempdir()) / f"anosov-{secrets.token_hex(10)}.csv"
        try:
            write_csv_atomic(filename, [{"k": 1, "upper": .5}], columns=["k", "lower", "upper"])
            df = pd.read_csv(filename)
            self.assertEqual(["k", "lower", "upper"], list(df.columns))
            self.assertEqual(.5, df["upper"][0])
        finally:
            if filename.exists():
                os.remove(filename)

    def test_read_errors(self):
        with self.assertRaises(InvalidInput):
            read_json("/nonexistent/anosov.json")

    def test_matrix_from_json(self):
        np.testing.assert_allclose(np.eye(2), matrix_from_json([[1, 0], [0, 1]]))
        with self.assertRaises(InvalidInput):
            matrix_from_json([[1, 0]])
        with self.assertRaises(InvalidInput):
            matrix_from_json([["a", 0], [0, 1]])
        with self.assertRaises(InvalidInput):
            matrix_from_json([[float("nan"), 0], [0, 1]])

    def test_parallel_map(self):
        self.assertEqual([0, 1, 4, 9], parallel_map(lambda x: x * x, range(4), workers=3))
