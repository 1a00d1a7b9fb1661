import unittest
import tempfile
import shutil
import contextlib
import io
import json
from pathlib import Path

import pandas as pd

from anosov import main, exit_code, EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE, EXIT_UNDECIDED
from src.config import DATA_DIR
from src.errors import NotStabilized, NotDominated, BallTooLarge, InvalidConfig, NotCertified
from src.util import read_json


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.out = Path(tempfile.mkdtemp(prefix="anosov-test-"))

    def tearDown(self):
        shutil.rmtree(self.out, ignore_errors=True)

    def run_main(self, command: str, **flags) -> int:
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            return main(command=command, out=str(self.out), **flags)

    def test_exit_codes(self):
        self.assertEqual(EXIT_UNDECIDED, exit_code(NotStabilized("x")))
        self.assertEqual(EXIT_INPUT, exit_code(BallTooLarge("x")))
        self.assertEqual(EXIT_INPUT, exit_code(InvalidConfig("x")))
        self.assertEqual(EXIT_NEGATIVE, exit_code(NotDominated("x")))
        self.assertEqual(EXIT_NEGATIVE, exit_code(NotCertified("x")))

    def test_domcheck(self):
        self.assertEqual(EXIT_OK, self.run_main("domcheck", input=str(DATA_DIR / "modular-2.json")))
        report = read_json(self.out / "modular-2-domcheck.json")
        self.assertEqual("domcheck", report["command"])
        self.assertEqual(23, report["seed"])
        self.assertTrue((self.out / "modular-2-domcheck-gaps.csv").exists())

        self.assertEqual(EXIT_NEGATIVE, self.run_main("domcheck", input=str(DATA_DIR / "modular-1.json")))

    def test_domcheck_sequence(self):
        self.assertEqual(EXIT_OK, self.run_main("domcheck", input=str(DATA_DIR / "triangular-sequence.json")))
        report = read_json(self.out / "triangular-sequence-domcheck.json")
        self.assertEqual("Dominated", report["report"]["verdict"])
        self.assertGreater(report["report"]["mu_hat"], 1.)
        table = pd.read_csv(report["report"]["pair_table_csv_path"])
        self.assertEqual(["start", "length", "log_gap", "ratio", "bound"], list(table.columns))
        self.assertEqual(-10, table["start"].min())

        file = self.out / "rotations.json"
        file.write_text(json.dumps([[[0., -1.], [1., 0.]]] * 12))
        self.assertEqual(EXIT_NEGATIVE, self.run_main("domcheck", input=str(file)))

    def test_invalid_input(self):
        file = self.out / "broken.json"
        file.write_text("{\"presentation\": ")
        self.assertEqual(EXIT_INPUT, self.run_main("domcheck", input=str(file)))

        file.write_text("{\"presentation\": {\"family\": \"braid\"}, \"d\": 2, \"images\": {}}")
        self.assertEqual(EXIT_INPUT, self.run_main("domcheck", input=str(file)))

        self.assertEqual(EXIT_INPUT, self.run_main("domcheck"))
        self.assertEqual(EXIT_INPUT, self.run_main("domcheck", input=str(DATA_DIR / "modular-2.json"), p=0))

    def test_multicone_verify(self):
        family = str(DATA_DIR / "modular-family.json")
        self.assertEqual(
            EXIT_OK,
            self.run_main("multicone", mode="verify", input=str(DATA_DIR / "modular-2.json"), family=family),
        )
        report = read_json(self.out / "modular-2-multicone.json")
        self.assertEqual("Certified", report["report"]["verdict"])

        self.assertEqual(
            EXIT_NEGATIVE,
            self.run_main("multicone", mode="verify", input=str(DATA_DIR / "modular-1.json"), family=family),
        )
        self.assertEqual(
            EXIT_INPUT,
            self.run_main("multicone", mode="verify", input=str(DATA_DIR / "modular-2.json")),
        )

    def test_multicone_synth(self):
        self.assertEqual(
            EXIT_OK,
            self.run_main("multicone", mode="synth", input=str(DATA_DIR / "z-diag.json"), radius=8),
        )
        self.assertTrue((self.out / "z-diag-multicone-family.json").exists())
        self.assertTrue((self.out / "z-diag-multicone-margins.csv").exists())

    def test_conetypes(self):
        self.assertEqual(EXIT_OK, self.run_main("conetypes", input=str(DATA_DIR / "free2.json"), radius=8))
        report = read_json(self.out / "free2-conetypes.json")
        self.assertEqual(5, len(report["report"]["automaton"]["vertices"]))
        self.assertTrue((self.out / "free2-conetypes.graphml").exists())

    def test_conetypes_finite_group(self):
        file = self.out / "trivial.json"
        file.write_text("{\"family\": \"free\", \"params\": {\"rank\": 0}}")
        self.assertEqual(EXIT_INPUT, self.run_main("conetypes", input=str(file), radius=8))
        # the automaton is written before the empty recurrent part is reported
        report = read_json(self.out / "trivial-conetypes.json")
        self.assertEqual(1, len(report["report"]["automaton"]["vertices"]))
        self.assertIsNone(report["report"]["recurrent"])
        self.assertEqual("EmptyRecurrentPart", report["report"]["error"]["type"])
        self.assertTrue((self.out / "trivial-conetypes.graphml").exists())

    def test_morse(self):
        self.assertEqual(EXIT_OK, self.run_main("morse", input=str(DATA_DIR / "diagonal-orbit.json")))
        report = read_json(self.out / "diagonal-orbit-morse.json")
        self.assertTrue(report["report"]["within_target"])
        self.assertEqual(5, len(report["report"]["rows"]))

    def test_limitmap(self):
        self.assertEqual(EXIT_OK, self.run_main("limitmap", input=str(DATA_DIR / "z-diag.json")))
        report = read_json(self.out / "z-diag-limitmap.json")
        self.assertEqual(2, len(report["report"]["points"]))
        self.assertEqual(0, report["report"]["failed"])

    def test_config_file(self):
        config = self.out / "config.json"
        config.write_text("{\"input\": \"%s\", \"radius\": 3}" % (DATA_DIR / "modular-2.json"))
        # radius 3 is too small for a fit
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            self.assertEqual(EXIT_INPUT, main(config=str(config), command="domcheck", out=str(self.out)))
            self.assertEqual(EXIT_OK, main(config=str(config), command="domcheck", out=str(self.out), radius=10))
