import json
import math
from pathlib import Path

import numpy as np
import pytest

import tumorseg as ts
import tumorseg.harness as harness

from conftest import PHANTOM_CENTER


@pytest.fixture(scope="module")
def small_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    manifest_path = harness.generate_phantom_suite(seed=5, n=3, out_dir=out)
    return harness.load_manifest(manifest_path)


@pytest.fixture(scope="module")
def acceptance_case(tmp_path_factory, clean_phantom):
    """One manifest case around the r=20 reference phantom."""
    out = tmp_path_factory.mktemp("case20")
    volume, gt = clean_phantom
    ts.save_volume(volume, out / "p.vol.json")
    ts.save_mask(gt, out / "p.mask.vol.json")
    angles = np.linspace(0, 2 * math.pi, 24, endpoint=False)
    poly = [[PHANTOM_CENTER[0] + 20 * math.cos(a), PHANTOM_CENTER[1] + 20 * math.sin(a)]
            for a in angles]
    (out / "p.outline.json").write_text(
        json.dumps({"axis": "z", "index": 64, "polygon_mm": poly})
    )
    case = {
        "id": "reference",
        "volume_path": "p.vol.json",
        "reference_mask_path": "p.mask.vol.json",
        "outline_path": "p.outline.json",
        "seed_mm": list(PHANTOM_CENTER),
        "graph_params": {"object_mean_radius_mm": 25.0},
    }
    return case, str(out)


class TestRunCase:
    def test_reference_case_both_methods_high_dsc(self, acceptance_case):
        case, base = acceptance_case
        record = harness.run_case(case, base)
        assert not record["failed"]
        assert record["balloon"]["dsc"] >= 95.0
        assert record["graph"]["dsc"] >= 95.0
        assert record["manual_voxels"] > 0
        assert record["balloon"]["runtime_ms"] > 0
        assert record["graph"]["runtime_ms"] > 0

    def test_case_without_reference_has_no_dsc(self, acceptance_case):
        case, base = acceptance_case
        case = {k: v for k, v in case.items() if k != "reference_mask_path"}
        case["id"] = "noref"
        record = harness.run_case(case, base, methods=("graph",))
        assert not record["failed"]
        assert "dsc" not in record["graph"]
        assert record["graph"]["volume_cm3"] > 0
        assert "manual_voxels" not in record

    def test_unreadable_volume_marks_failed(self):
        record = harness.run_case(
            {"id": "broken", "volume_path": "missing.vol.json", "seed_mm": [0, 0, 0]}, "/tmp"
        )
        assert record["failed"]
        assert "error" in record

    def test_batch_continues_past_failure(self, acceptance_case):
        case, base = acceptance_case
        manifest = {
            "cases": [
                {"id": "bad", "volume_path": "nope.vol.json", "seed_mm": [0, 0, 0]},
                {**case, "id": "good"},
            ],
            "_base_dir": base,
        }
        records = harness.run_manifest(manifest, methods=("graph",))
        assert records[0]["failed"] and not records[1]["failed"]


class TestSummarize:
    def test_single_case_degenerate_stats(self):
        records = [{"id": "a", "failed": False, "graph": {"dsc": 88.0, "volume_cm3": 2.0,
                                                          "voxel_count": 2000, "runtime_ms": 5.0}}]
        s = harness.summarize(records)
        col = s["columns"]["graph_dsc"]
        assert col["min"] == col["max"] == col["mean"] == 88.0
        assert col["std"] == 0.0
        assert col["n"] == 1 and col["single_sample"]

    def test_two_case_hand_stats(self):
        records = [
            {"id": "a", "failed": False, "balloon": {"dsc": 80.0}},
            {"id": "b", "failed": False, "balloon": {"dsc": 90.0}},
        ]
        col = harness.summarize(records)["columns"]["balloon_dsc"]
        assert col["mean"] == pytest.approx(85.0)
        assert col["std"] == pytest.approx(7.0711, abs=1e-4)
        assert (col["min"], col["max"]) == (80.0, 90.0)

    def test_summary_recomputable_from_rows(self, small_suite):
        records = harness.run_manifest(small_suite)
        summary = harness.summarize(records)
        for name, path in harness._COLUMNS:
            if name not in summary["columns"]:
                continue
            values = [harness._dig(r, path) for r in records if not r.get("failed")]
            values = [float(v) for v in values if v is not None]
            col = summary["columns"][name]
            assert col["min"] == pytest.approx(min(values), abs=1e-9)
            assert col["max"] == pytest.approx(max(values), abs=1e-9)
            assert col["mean"] == pytest.approx(sum(values) / len(values), abs=1e-9)
            if len(values) > 1:
                mean = sum(values) / len(values)
                var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
                assert col["std"] == pytest.approx(math.sqrt(var), abs=1e-9)

    def test_no_successful_records_rejected(self):
        with pytest.raises(ValueError):
            harness.summarize([{"id": "x", "failed": True}])

    def test_failure_isolation_changes_single_row(self, small_suite):
        records = harness.run_manifest(small_suite, methods=("graph",))
        broken = dict(small_suite)
        broken["cases"] = [dict(c) for c in small_suite["cases"]]
        broken["cases"][1] = dict(broken["cases"][1], volume_path="gone.vol.json")
        records2 = harness.run_manifest(broken, methods=("graph",))
        assert records2[1]["failed"]
        for i in (0, 2):
            assert records[i]["graph"]["voxel_count"] == records2[i]["graph"]["voxel_count"]


class TestPhantomSuite:
    def test_deterministic_manifest(self, tmp_path):
        p1 = harness.generate_phantom_suite(9, 4, tmp_path / "a")
        p2 = harness.generate_phantom_suite(9, 4, tmp_path / "b")
        assert p1.read_text() == p2.read_text()
        for name in ("phantom_000.raw", "phantom_003.mask.raw", "phantom_002.outline.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_reference_masks_non_empty(self, small_suite):
        base = Path(small_suite["_base_dir"])
        for case in small_suite["cases"]:
            mask = ts.load_mask(base / case["reference_mask_path"])
            assert mask.bits.sum() > 0

    def test_volume_spread_at_least_10x(self, tmp_path):
        manifest = harness.load_manifest(harness.generate_phantom_suite(3, 6, tmp_path))
        base = Path(manifest["_base_dir"])
        volumes = []
        for case in manifest["cases"]:
            mask = ts.load_mask(base / case["reference_mask_path"])
            volumes.append(ts.mask_volume(mask)[1])
        assert max(volumes) / min(volumes) >= 10.0

    def test_outlines_and_seeds_usable(self, small_suite):
        base = Path(small_suite["_base_dir"])
        for case in small_suite["cases"]:
            outline = ts.OutlineInit.from_json(base / case["outline_path"])
            volume = ts.load_volume(base / case["volume_path"])
            mesh = ts.init_from_outline(outline, volume)
            assert volume.dims[2] > outline.slice_index
            assert len(case["seed_mm"]) == 3

    def test_rejects_bad_count(self, tmp_path):
        with pytest.raises(ValueError):
            harness.generate_phantom_suite(1, 0, tmp_path)


class TestReport:
    def test_report_written_sorted_and_recomputable(self, small_suite, tmp_path):
        records = harness.run_manifest(small_suite, methods=("graph",))
        report = harness.write_report(records, tmp_path / "report.json")
        on_disk = json.loads((tmp_path / "report.json").read_text())
        assert [c["id"] for c in on_disk["cases"]] == sorted(r["id"] for r in records)
        assert on_disk["summary"] == json.loads(json.dumps(report["summary"]))

    def test_render_table_structure(self, small_suite):
        records = harness.run_manifest(small_suite, methods=("graph",))
        table = harness.render_table(harness.summarize(records))
        lines = table.splitlines()
        assert "graph_dsc" in lines[0] and "graph_volume_cm3" in lines[0]
        assert [ln.split()[0] for ln in lines[1:5]] == ["min", "max", "mean", "std"]

    def test_manifest_requires_unique_ids(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"cases": [{"id": "a"}, {"id": "a"}]}))
        with pytest.raises(ValueError, match="unique"):
            harness.load_manifest(path)
