"""
Tests all layers end to end through the command line: argument parsing,
RunConfig validation, operations, report files and exit codes.
"""
import io
import json
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from gwtrees.operations import verify as verify_operations
from gwtrees.operations.models import SuiteResult
from gwtrees.reports.lukasiewicz import read_trees
from gwtrees.reports.writer import read_rows
from main import main


def last_record(stderr: str) -> dict:
    """The failure record is the last line written to stderr."""
    return json.loads(stderr.strip().splitlines()[-1])


class _CommandTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_main(self, *argv: str) -> tuple[int, str]:
        with patch("sys.stderr", new_callable=io.StringIO) as stderr:
            code = main(list(argv))
        return code, stderr.getvalue()


class TestExactCommand(_CommandTest):
    """Test the exact subcommand"""

    def test_pair_means(self):
        out = self.dir / "pk.csv"
        code, _ = self.run_main("exact", "--offspring", "geometric", "--n", "3", "--pk", "--out", str(out))
        self.assertEqual(code, 0)
        header, rows = read_rows(out)
        self.assertEqual(header, ["n", "k", "mean_P"])
        self.assertEqual([int(r[1]) for r in rows], [1, 2])
        self.assertAlmostEqual(float(rows[0][2]), 2.0)
        self.assertAlmostEqual(float(rows[1][2]), 1.0)

    def test_k_filter_and_n_list(self):
        out = self.dir / "zk.csv"
        code, _ = self.run_main("exact", "--n-list", "3,5", "--zk", "--k", "1", "--out", str(out))
        self.assertEqual(code, 0)
        _, rows = read_rows(out)
        self.assertEqual([(r[0], r[1]) for r in rows], [("3", "1"), ("5", "1")])

    def test_json_output(self):
        out = self.dir / "y.json"
        code, _ = self.run_main(
            "exact", "--n", "3", "--y", "--lmax", "1", "--mmax", "1", "--format", "json", "--out", str(out)
        )
        self.assertEqual(code, 0)
        payload = json.loads(out.read_text())
        self.assertEqual(payload["header"], ["n", "l", "m", "mean_Y"])
        self.assertEqual(len(payload["rows"]), 4)
        self.assertEqual(payload["meta"]["config"]["command"], "exact")

    def test_span_mismatch_is_usage_error(self):
        code, stderr = self.run_main("exact", "--offspring", "binary", "--n", "4", "--pk")
        self.assertEqual(code, 2)
        self.assertEqual(last_record(stderr)["error"], "Validation Error")

    def test_two_quantities_rejected(self):
        code, _ = self.run_main("exact", "--n", "3", "--pk", "--zk")
        self.assertEqual(code, 2)

    def test_missing_n(self):
        code, _ = self.run_main("exact", "--pk")
        self.assertEqual(code, 2)

    def test_several_laws_rejected(self):
        code, stderr = self.run_main("exact", "--offspring", "geometric", "--offspring", "poisson", "--n", "3", "--pk")
        self.assertEqual(code, 2)
        record = last_record(stderr)
        self.assertEqual(record["details"]["flag"], "--offspring")
        self.assertEqual(record["details"]["values"], ["geometric", "poisson"])


class TestSampleCommand(_CommandTest):
    def test_trees_are_reproducible(self):
        first, second = self.dir / "a.csv", self.dir / "b.csv"
        for path in (first, second):
            code, _ = self.run_main("sample", "--n", "20", "--count", "5", "--seed", "3", "--out", str(path))
            self.assertEqual(code, 0)
        trees = list(read_trees(first))
        self.assertEqual(len(trees), 5)
        self.assertTrue(all(tree.n == 20 for tree in trees))
        self.assertEqual(trees, list(read_trees(second)))
        # only the timestamp line may differ
        strip = lambda p: [line for line in p.read_text().splitlines() if not line.startswith("# generated")]
        self.assertEqual(strip(first), strip(second))

    def test_statistic(self):
        out = self.dir / "z.csv"
        code, _ = self.run_main(
            "sample", "--n", "3", "--statistic", "P", "--reps", "10", "--out", str(out)
        )
        self.assertEqual(code, 0)
        header, rows = read_rows(out)
        self.assertEqual(header, ["index", "mean", "stderr", "reps"])
        self.assertAlmostEqual(float(rows[2][1]), 1.0)

    def test_unconditioned(self):
        out = self.dir / "gw.csv"
        code, _ = self.run_main(
            "sample", "--source", "unconditioned", "--max-depth", "3", "--count", "4", "--out", str(out)
        )
        self.assertEqual(code, 0)
        self.assertTrue(all(tree.height <= 3 for tree in read_trees(out)))

    def test_bad_flag_value(self):
        code, stderr = self.run_main("sample", "--n", "0")
        self.assertEqual(code, 2)
        self.assertIn("errors", last_record(stderr)["details"])

    def test_unknown_law(self):
        code, _ = self.run_main("sample", "--offspring", "zipf", "--n", "5")
        self.assertEqual(code, 2)

    def test_several_sizes_rejected(self):
        code, _ = self.run_main("sample", "--n", "5", "--n", "7")
        self.assertEqual(code, 2)


class TestOracleCommand(_CommandTest):
    def test_tree_listing(self):
        out = self.dir / "trees.csv"
        code, _ = self.run_main("oracle", "--n", "4", "--trees", "--out", str(out))
        self.assertEqual(code, 0)
        _, rows = read_rows(out)
        self.assertEqual(len(rows), 5)
        self.assertAlmostEqual(sum(float(r[3]) for r in rows), 1.0)

    def test_matches_exact(self):
        oracle_out, exact_out = self.dir / "o.csv", self.dir / "e.csv"
        self.assertEqual(self.run_main("oracle", "--offspring", "poisson", "--n", "6", "--qk", "--out", str(oracle_out))[0], 0)
        self.assertEqual(self.run_main("exact", "--offspring", "poisson", "--n", "6", "--qk", "--out", str(exact_out))[0], 0)
        _, oracle_rows = read_rows(oracle_out)
        _, exact_rows = read_rows(exact_out)
        self.assertEqual(len(oracle_rows), len(exact_rows))
        for a, b in zip(oracle_rows, exact_rows):
            self.assertAlmostEqual(float(a[2]), float(b[2]), places=10)

    def test_size_guard(self):
        code, _ = self.run_main("oracle", "--n", "13", "--pk")
        self.assertEqual(code, 2)

    def test_several_laws_rejected(self):
        code, _ = self.run_main("oracle", "--offspring", "binary", "--offspring", "poisson", "--n", "5", "--zk")
        self.assertEqual(code, 2)


class TestVerifyCommand(_CommandTest):
    def test_passing_suite(self):
        out = self.dir / "dwass.csv"
        code, _ = self.run_main("verify", "dwass", "--n", "30", "--lmax", "5", "--out", str(out))
        self.assertEqual(code, 0)
        header, rows = read_rows(out)
        self.assertEqual(header[:3], ["offspring", "l", "n"])
        self.assertEqual(len(rows), 4 * 5 * 30)

    def test_nmax(self):
        out = self.dir / "dwass.json"
        code, _ = self.run_main(
            "verify", "dwass", "--offspring", "geometric", "--lmax", "20", "--nmax", "200",
            "--format", "json", "--out", str(out),
        )
        self.assertEqual(code, 0)
        payload = json.loads(out.read_text())
        self.assertTrue(payload["meta"]["passed"])
        self.assertEqual(payload["meta"]["config"]["n"], [200])
        self.assertLessEqual(payload["meta"]["metrics"]["max_rel_diff"], 1e-12)

    def test_failing_suite(self):
        failed = SuiteResult(
            name="dwass", anchor="test anchor", passed=False,
            metrics={"observed": 0.5, "tolerance": 1e-12}, header=["x"], rows=[[1]],
        )
        with patch.dict(verify_operations.SUITES, {"dwass": lambda config: failed}):
            code, stderr = self.run_main("verify", "dwass", "--out", str(self.dir / "f.csv"))
        self.assertEqual(code, 1)
        record = last_record(stderr)
        self.assertEqual(record["check"], "dwass")
        self.assertEqual(record["anchor"], "test anchor")
        self.assertEqual(record["observed"], 0.5)
        # the table is still written
        self.assertEqual(read_rows(self.dir / "f.csv")[1], [["1"]])

    def test_unknown_suite(self):
        code, _ = self.run_main("verify", "theorem9")
        self.assertEqual(code, 2)

    def test_unexpected_error(self):
        with patch.dict(verify_operations.SUITES, {"tail": self._boom}):
            code, stderr = self.run_main("verify", "tail")
        self.assertEqual(code, 1)
        self.assertEqual(last_record(stderr)["error"], "Internal Error")

    @staticmethod
    def _boom(config):
        raise ZeroDivisionError("boom")


class TestProfileCommand(_CommandTest):
    def test_vertical(self):
        out = self.dir / "v.csv"
        code, _ = self.run_main("profile", "--n", "30", "--count", "3", "--eta", "pm1", "--out", str(out))
        self.assertEqual(code, 0)
        _, rows = read_rows(out)
        for r in range(3):
            self.assertEqual(sum(int(row[2]) for row in rows if row[0] == str(r)), 30)

    def test_normalized_grid(self):
        out = self.dir / "x.csv"
        code, _ = self.run_main("profile", "--n", "30", "--normalized", "--x=-1,0,1", "--out", str(out))
        self.assertEqual(code, 0)
        _, rows = read_rows(out)
        self.assertEqual([row[1] for row in rows], ["-1.0", "0.0", "1.0"])

    def test_exact_psi(self):
        out = self.dir / "psi.csv"
        code, _ = self.run_main("profile", "--n", "11", "--exact-psi", "--t", "0", "--t", "1.5", "--out", str(out))
        self.assertEqual(code, 0)
        _, rows = read_rows(out)
        self.assertAlmostEqual(float(rows[0][2]), 1.0)
        self.assertLess(float(rows[1][2]), 1.0)

    def test_single_size_and_label_law(self):
        code, stderr = self.run_main("profile", "--n", "10", "--n", "20", "--vertical")
        self.assertEqual(code, 2)
        self.assertEqual(last_record(stderr)["details"]["flag"], "--n")
        code, stderr = self.run_main("profile", "--n", "10", "--eta", "pm1", "--eta", "uniform3")
        self.assertEqual(code, 2)
        self.assertEqual(last_record(stderr)["details"]["flag"], "--eta")

    def test_psi_needs_reps(self):
        code, _ = self.run_main("profile", "--n", "11", "--psi", "--t", "1.0")
        self.assertEqual(code, 2)

    def test_psi(self):
        out = self.dir / "mc.csv"
        code, _ = self.run_main("profile", "--n", "20", "--psi", "--reps", "10", "--t-list", "0.5,1", "--out", str(out))
        self.assertEqual(code, 0)
        self.assertEqual(len(read_rows(out)[1]), 2)


class TestParser(_CommandTest):
    def test_no_command(self):
        with patch("sys.stdout", new_callable=io.StringIO):
            self.assertEqual(self.run_main()[0], 2)

    def test_help(self):
        with patch("sys.stdout", new_callable=io.StringIO):
            self.assertEqual(self.run_main("--help")[0], 0)
