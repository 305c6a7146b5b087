import json
import tempfile
from pathlib import Path
from unittest import TestCase

from glassbox.metrics import MetricKind
from glassbox.qc import DEFAULT_SEED, PASS_THRESHOLD, build_cases, run_qc_pipeline


def _truncate(target: str):
    def hook(model_type: str, path: Path) -> None:
        if model_type == target:
            path.write_text(path.read_text(encoding="utf-8")[:40], encoding="utf-8")

    return hook


def _shift_first_coef(model_type: str, path: Path) -> None:
    if model_type != "LinearRegression":
        return
    node = json.loads(path.read_text(encoding="utf-8"))
    coef = node["data"]["coef_"]["pymiloed-ndarray-list"]
    coef[0] = coef[0] + 0.5
    path.write_text(json.dumps(node, indent=2), encoding="utf-8")


class TestQcPipeline(TestCase):
    def test_default_seed_passes(self):
        report = run_qc_pipeline(DEFAULT_SEED)
        self.assertTrue(report.passed, report.to_text())
        self.assertEqual(report.cumulative_difference, 0.0)
        self.assertTrue(report.clusters_identical)
        self.assertEqual(len(report.failures), 0)
        self.assertTrue(report.to_text().startswith("qc seed=42: PASSED"))

    def test_case_coverage(self):
        report = run_qc_pipeline(DEFAULT_SEED)
        by_metric = {kind: [r for r in report.records if r.metric == kind] for kind in MetricKind}
        self.assertEqual({r.model_type for r in by_metric[MetricKind.mse]}, {"LinearRegression"})
        self.assertEqual({r.model_type for r in by_metric[MetricKind.hinge]}, {"LogisticRegression", "DecisionTreeClassifier", "GaussianNB"})
        self.assertEqual([r.model_type for r in by_metric[MetricKind.cluster_match]], ["KMeans"])
        self.assertEqual(by_metric[MetricKind.cluster_match][0].post, 1.0)

    def test_cases_are_seeded(self):
        first, second = build_cases(7), build_cases(7)
        self.assertEqual(len(first), 5)
        for a, b in zip(first, second):
            self.assertEqual(a.train.X.tolist(), b.train.X.tolist())
        self.assertNotEqual(build_cases(8)[0].train.X.tolist(), first[0].train.X.tolist())

    def test_report_is_deterministic(self):
        self.assertEqual(run_qc_pipeline(3).to_text(), run_qc_pipeline(3).to_text())

    def test_workdir_keeps_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = run_qc_pipeline(DEFAULT_SEED, workdir=Path(tmp))
            self.assertTrue(report.passed)
            names = sorted(p.name for p in Path(tmp).iterdir() if p.suffix == ".json")
            self.assertEqual(names, ["DecisionTreeClassifier.json", "GaussianNB.json", "KMeans.json", "LinearRegression.json", "LogisticRegression.json"])

    def test_corrupted_file_fails_the_case(self):
        with self.assertLogs("glassbox.qc", level="WARNING"):
            report = run_qc_pipeline(DEFAULT_SEED, corrupt=_truncate("GaussianNB"))
        self.assertFalse(report.passed)
        self.assertEqual([f.model_type for f in report.failures], ["GaussianNB"])
        self.assertIn("FAILED", report.to_text().splitlines()[0])
        self.assertIn("GaussianNB", report.to_text())
        # the remaining cases still ran
        self.assertIn("KMeans", {r.model_type for r in report.records})

    def test_changed_values_are_measured_as_drift(self):
        report = run_qc_pipeline(DEFAULT_SEED, corrupt=_shift_first_coef)
        self.assertEqual(len(report.failures), 0)
        self.assertFalse(report.passed)
        self.assertGreater(report.cumulative_difference, PASS_THRESHOLD)
        drifted = {r.model_type for r in report.records if r.difference > 0}
        self.assertEqual(drifted, {"LinearRegression"})
