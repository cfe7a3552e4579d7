import hashlib
import json
import logging
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import jsonschema
import pandas as pd

from kpz_integrable.core.artifacts import (
    MANIFEST_NAME,
    ArtifactWriter,
    RunManifest,
    file_sha256,
    load_trajectory_schema,
    validate_trajectory,
)
from kpz_integrable.core.dynamics import Q_WHITTAKER, DynamicsConfig, simulate

logging.disable(logging.CRITICAL)


class TestRunManifest(unittest.TestCase):
    def test_echoes_parameters_and_seed(self):
        manifest = RunManifest("tw-cdf", {"x": [-2.0, 0.0]}, seed=7)
        payload = manifest.to_dict()
        self.assertEqual(payload["subcommand"], "tw-cdf")
        self.assertEqual(payload["parameters"], {"x": [-2.0, 0.0]})
        self.assertEqual(payload["seed"], 7)
        for library in ("python", "numpy", "scipy", "pandas"):
            self.assertIn(library, payload["versions"])

    def test_errors_are_collected(self):
        manifest = RunManifest("simulate")
        manifest.add_error("simulate", "event cap reached")
        self.assertEqual(manifest.to_dict()["errors"], [{"where": "simulate", "error": "event cap reached"}])


class TestArtifactWriter(unittest.TestCase):
    def setUp(self):
        self.temp_dir = TemporaryDirectory()
        self.out_dir = Path(self.temp_dir.name) / "run"

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_table_uses_fifteen_significant_digits(self):
        with ArtifactWriter(self.out_dir, RunManifest("tw-cdf")) as writer:
            path = writer.write_table("table.csv", pd.DataFrame({"x": [1.0 / 3.0], "u": [2]}))
        self.assertEqual(path.read_text(), "x,u\n0.333333333333333,2\n")

    def test_manifest_lists_outputs_with_hashes(self):
        with ArtifactWriter(self.out_dir, RunManifest("airy")) as writer:
            path = writer.write_table("airy.csv", pd.DataFrame({"x": [0.0]}))
        manifest = json.loads((self.out_dir / MANIFEST_NAME).read_text())
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.assertEqual(manifest["outputs"]["airy.csv"]["sha256"], digest)
        self.assertEqual(file_sha256(path), digest)
        self.assertIn("total_seconds", manifest["timings"])

    def test_manifest_name_can_follow_the_output(self):
        with ArtifactWriter(self.out_dir, RunManifest("airy"), "airy.manifest.json") as writer:
            writer.write_table("airy.csv", pd.DataFrame({"x": [0.0]}))
        self.assertTrue((self.out_dir / "airy.manifest.json").exists())
        self.assertFalse((self.out_dir / MANIFEST_NAME).exists())

    def test_failed_run_still_writes_manifest(self):
        with self.assertRaises(RuntimeError):
            with ArtifactWriter(self.out_dir, RunManifest("verify")):
                raise RuntimeError("boom")
        manifest = json.loads((self.out_dir / MANIFEST_NAME).read_text())
        self.assertEqual(manifest["errors"][0]["error"], "RuntimeError: boom")

    def test_equal_payloads_give_equal_bytes(self):
        table = pd.DataFrame({"u": range(5), "p": [0.1 * k for k in range(5)]})
        hashes = []
        for name in ("first", "second"):
            with ArtifactWriter(self.out_dir / name, RunManifest("lpp-dist")) as writer:
                hashes.append(file_sha256(writer.write_table("lpp.csv", table)))
        self.assertEqual(hashes[0], hashes[1])

    def test_trajectory_is_validated(self):
        trajectory = simulate(DynamicsConfig(Q_WHITTAKER, (1.0, 2.0), q=0.3, horizon=2.0, seed=4))
        with ArtifactWriter(self.out_dir, RunManifest("simulate")) as writer:
            path = writer.write_json("trajectory.json", trajectory.to_dict(), trajectory=True)
        self.assertEqual(json.loads(path.read_text())["model"], Q_WHITTAKER)


class TestTrajectorySchema(unittest.TestCase):
    def setUp(self):
        self.payload = simulate(DynamicsConfig(Q_WHITTAKER, (1.0, 1.0), q=0.5, horizon=1.5, seed=2)).to_dict()

    def test_schema_loads(self):
        self.assertEqual(load_trajectory_schema()["type"], "object")

    def test_simulated_payload_validates(self):
        validate_trajectory(self.payload)

    def test_missing_key_is_rejected(self):
        del self.payload["final"]
        with self.assertRaises(jsonschema.ValidationError):
            validate_trajectory(self.payload)

    def test_unknown_model_is_rejected(self):
        self.payload["model"] = "tasep"
        with self.assertRaises(jsonschema.ValidationError):
            validate_trajectory(self.payload)

    def test_negative_entry_is_rejected(self):
        self.payload["final"] = [[-1], [0, 0]]
        with self.assertRaises(jsonschema.ValidationError):
            validate_trajectory(self.payload)


if __name__ == "__main__":
    unittest.main()
