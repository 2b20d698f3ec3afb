import base64
import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

import tumorseg as ts
from tumorseg.service import SessionStore, create_app

from conftest import MEAN_BALL_MM, PHANTOM_CENTER


def canonical_body(array, spacing, dtype="float32"):
    np_dtype = {"float32": "<f4", "int16": "<i2", "uint8": "u1"}[dtype]
    payload = np.ascontiguousarray(np.asarray(array).T).astype(np_dtype).tobytes()
    return {
        "sidecar": {
            "dims": list(np.asarray(array).shape),
            "spacing_mm": list(spacing),
            "dtype": dtype,
            "data_file": "ignored.raw",
            "byte_order": "little",
        },
        "data_b64": base64.b64encode(payload).decode(),
    }


@pytest.fixture()
def client():
    return TestClient(create_app(SessionStore()))


@pytest.fixture(scope="module")
def phantom_client(clean_phantom):
    """Client with the reference phantom uploaded and its ground truth attached."""
    volume, gt = clean_phantom
    client = TestClient(create_app(SessionStore()))
    r = client.post("/sessions", json=canonical_body(volume.data, volume.spacing))
    assert r.status_code == 201
    sid = r.json()["session_id"]
    r = client.post(
        f"/sessions/{sid}/reference",
        json=canonical_body(gt.bits.astype(np.uint8), gt.spacing, dtype="uint8"),
    )
    assert r.status_code == 200
    return client, sid


class TestDefaults:
    def test_defaults_reported(self, client):
        r = client.get("/defaults")
        assert r.status_code == 200
        body = r.json()
        assert body["graph"]["delta"] == 2
        assert body["graph"]["nodes_per_ray"] == 60
        assert body["balloon"]["smooth_lambda"] == 0.2
        assert body["balloon"]["max_iterations"] == 500


class TestSessions:
    def test_create_returns_metadata(self, client):
        data = np.linspace(0, 99, 4 * 4 * 4).reshape(4, 4, 4)
        r = client.post("/sessions", json=canonical_body(data, (1, 2, 3)))
        assert r.status_code == 201
        body = r.json()
        assert body["dims"] == [4, 4, 4]
        assert body["spacing_mm"] == [1.0, 2.0, 3.0]
        assert body["intensity_range"][0] == pytest.approx(0.0)
        assert body["intensity_range"][1] == pytest.approx(99.0)
        r2 = client.get(f"/sessions/{body['session_id']}")
        assert r2.status_code == 200

    def test_truncated_payload_no_session(self, client):
        body = canonical_body(np.zeros((4, 4, 4)), (1, 1, 1))
        body["data_b64"] = body["data_b64"][: len(body["data_b64"]) // 2]
        r = client.post("/sessions", json=body)
        assert r.status_code == 400
        assert r.json()["stage"] == "upload"

    def test_two_uploads_distinct_sessions(self, client):
        body = canonical_body(np.zeros((4, 4, 4)), (1, 1, 1))
        id1 = client.post("/sessions", json=body).json()["session_id"]
        id2 = client.post("/sessions", json=body).json()["session_id"]
        assert id1 != id2

    def test_nifti_upload(self, client, tmp_path):
        from test_volume import TestNifti

        array = np.arange(8, dtype=np.float32).reshape(2, 2, 2)
        path = TestNifti.write_nii(tmp_path / "u.nii", array, (1, 1, 1))
        r = client.post(
            "/sessions",
            content=path.read_bytes(),
            headers={"content-type": "application/octet-stream"},
        )
        assert r.status_code == 201
        assert r.json()["dims"] == [2, 2, 2]

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/deadbeef").status_code == 404

    def test_idle_expiry(self, clean_phantom):
        client = TestClient(create_app(SessionStore(idle_seconds=0.05)))
        body = canonical_body(np.zeros((3, 3, 3)), (1, 1, 1))
        sid = client.post("/sessions", json=body).json()["session_id"]
        time.sleep(0.1)
        assert client.get(f"/sessions/{sid}").status_code == 404

    def test_sessions_isolated(self, client):
        a = client.post("/sessions", json=canonical_body(np.zeros((3, 3, 3)), (1, 1, 1))).json()
        b = client.post("/sessions", json=canonical_body(np.ones((3, 3, 3)), (1, 1, 1))).json()
        ra = client.get(f"/sessions/{a['session_id']}").json()
        rb = client.get(f"/sessions/{b['session_id']}").json()
        assert ra["intensity_range"] != rb["intensity_range"]


class TestSlices:
    def test_constant_volume_uniform_image(self, client):
        body = canonical_body(np.full((6, 5, 4), 42.0), (1, 1, 1))
        sid = client.post("/sessions", json=body).json()["session_id"]
        r = client.get(f"/sessions/{sid}/slice", params={"axis": "z", "index": 2})
        assert r.status_code == 200
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        assert img.shape == (5, 6)  # rows = y, cols = x for a z slice
        assert len(np.unique(img)) == 1

    def test_window_mapping_matches_oracle(self, client):
        nx, ny, nz = 8, 7, 3
        data = np.linspace(0, 100, nx * ny * nz).reshape(nx, ny, nz)
        sid = client.post("/sessions", json=canonical_body(data, (1, 1, 1))).json()["session_id"]
        wc, ww = 40.0, 60.0
        r = client.get(
            f"/sessions/{sid}/slice", params={"axis": "y", "index": 3, "wc": wc, "ww": ww}
        )
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        slc = data[:, 3, :].astype(np.float32).astype(np.float64)  # float32 storage
        want = np.clip(np.rint((slc - (wc - ww / 2)) / ww * 255.0), 0, 255).astype(np.uint8)
        assert img.shape == (nz, nx)
        assert np.array_equal(img, want.T)

    def test_monotone_gradient_on_ramp(self, client):
        data = np.broadcast_to(np.arange(16.0)[:, None, None], (16, 4, 4)).copy()
        sid = client.post("/sessions", json=canonical_body(data, (1, 1, 1))).json()["session_id"]
        r = client.get(f"/sessions/{sid}/slice", params={"axis": "z", "index": 1})
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        cols = img[0, :].astype(int)
        assert np.all(np.diff(cols) > 0)

    def test_out_of_bounds_index(self, client):
        sid = client.post(
            "/sessions", json=canonical_body(np.zeros((4, 4, 4)), (1, 1, 1))
        ).json()["session_id"]
        r = client.get(f"/sessions/{sid}/slice", params={"axis": "z", "index": 4})
        assert r.status_code == 400
        assert r.json()["stage"] == "slice"


class TestSegmentEndpoint:
    def test_graph_run_with_reference_dsc(self, phantom_client):
        client, sid = phantom_client
        r = client.post(
            f"/sessions/{sid}/segment",
            json={
                "method": "graph",
                "seed_mm": list(PHANTOM_CENTER),
                "params": {"object_mean_radius_mm": MEAN_BALL_MM},
            },
        )
        assert r.status_code == 200
        body = r.json()
        assert body["dsc"] >= 95.0
        assert body["voxel_count"] > 0
        rid = body["result_id"]
        again = client.get(f"/sessions/{sid}/results/{rid}").json()
        assert again["voxel_count"] == body["voxel_count"]

    def test_matches_direct_library_run(self, phantom_client, clean_phantom, graph_clean_result):
        client, sid = phantom_client
        r = client.post(
            f"/sessions/{sid}/segment",
            json={
                "method": "graph",
                "seed_mm": list(PHANTOM_CENTER),
                "params": {"object_mean_radius_mm": MEAN_BALL_MM},
            },
        ).json()
        assert r["voxel_count"] == graph_clean_result.voxel_count
        assert r["volume_cm3"] == pytest.approx(graph_clean_result.volume_cm3, abs=1e-12)
        assert r["diagnostics"]["cut_value_scaled"] == (
            graph_clean_result.diagnostics["cut_value_scaled"]
        )

    def test_balloon_with_seed_only_rejected(self, phantom_client):
        client, sid = phantom_client
        r = client.post(
            f"/sessions/{sid}/segment",
            json={"method": "balloon", "seed_mm": [1, 2, 3]},
        )
        assert r.status_code == 400
        assert "outline" in r.json()["detail"]

    def test_unknown_method_rejected(self, phantom_client):
        client, sid = phantom_client
        r = client.post(f"/sessions/{sid}/segment", json={"method": "watershed"})
        assert r.status_code == 400

    def test_two_delta_runs_independent(self, phantom_client):
        client, sid = phantom_client
        rids = {}
        for delta in (0, 4):
            r = client.post(
                f"/sessions/{sid}/segment",
                json={
                    "method": "graph",
                    "seed_mm": list(PHANTOM_CENTER),
                    "params": {"object_mean_radius_mm": MEAN_BALL_MM, "delta": delta},
                },
            ).json()
            rids[delta] = r["result_id"]
        assert rids[0] != rids[4]
        for delta, rid in rids.items():
            got = client.get(f"/sessions/{sid}/results/{rid}").json()
            assert got["params"]["delta"] == delta

    def test_out_of_volume_seed_is_422(self, phantom_client):
        client, sid = phantom_client
        r = client.post(
            f"/sessions/{sid}/segment",
            json={"method": "graph", "seed_mm": [-10, 0, 0]},
        )
        assert r.status_code == 422
        assert r.json()["stage"] == "segmentation"


@pytest.fixture(scope="module")
def delta0_result(phantom_client):
    client, sid = phantom_client
    r = client.post(
        f"/sessions/{sid}/segment",
        json={
            "method": "graph",
            "seed_mm": list(PHANTOM_CENTER),
            "params": {"object_mean_radius_mm": MEAN_BALL_MM, "delta": 0},
        },
    ).json()
    return client, sid, r["result_id"], r


class TestOverlay:
    @staticmethod
    def decode(overlay):
        bits = np.zeros((overlay["width"], overlay["height"]), dtype=bool)
        for v, runs in enumerate(overlay["rows"]):
            for i in range(0, len(runs), 2):
                start, length = runs[i], runs[i + 1]
                bits[start : start + length, v] = True
        return bits

    def test_dims_match_slice(self, delta0_result):
        client, sid, rid, _ = delta0_result
        overlay = client.get(
            f"/sessions/{sid}/results/{rid}/overlay", params={"axis": "y", "index": 10}
        ).json()
        assert (overlay["width"], overlay["height"]) == (128, 128)

    def test_empty_outside_region(self, delta0_result):
        client, sid, rid, _ = delta0_result
        overlay = client.get(
            f"/sessions/{sid}/results/{rid}/overlay", params={"axis": "z", "index": 2}
        ).json()
        assert all(len(runs) == 0 for runs in overlay["rows"])

    def test_delta0_center_slice_is_circle(self, delta0_result):
        client, sid, rid, meta = delta0_result
        overlay = client.get(
            f"/sessions/{sid}/results/{rid}/overlay", params={"axis": "z", "index": 64}
        ).json()
        bits = self.decode(overlay)
        b = meta["diagnostics"]["boundary_index_min"]
        assert b == meta["diagnostics"]["boundary_index_max"]
        radius = (b + 1.5) * meta["params"]["sample_spacing_mm"]
        uu, vv = np.meshgrid(np.arange(128), np.arange(128), indexing="ij")
        dist = np.hypot(uu - PHANTOM_CENTER[0], vv - PHANTOM_CENTER[1])
        assert not bits[dist > radius + 0.01].any()
        assert bits[dist <= radius - 1.0].all()

    def test_overlay_matches_mask_bits_exactly(self, delta0_result, clean_phantom):
        client, sid, rid, meta = delta0_result
        volume, _ = clean_phantom
        res = ts.run_graph(
            volume,
            PHANTOM_CENTER,
            ts.RayGraphSpec(object_mean_radius_mm=MEAN_BALL_MM, delta=0),
        )
        for index in (30, 64, 80):
            overlay = client.get(
                f"/sessions/{sid}/results/{rid}/overlay", params={"axis": "z", "index": index}
            ).json()
            assert np.array_equal(self.decode(overlay), res.mask.bits[:, :, index])

    def test_unknown_result_404(self, phantom_client):
        client, sid = phantom_client
        r = client.get(f"/sessions/{sid}/results/zzz/overlay", params={"axis": "z", "index": 0})
        assert r.status_code == 404


class TestMeshEndpoint:
    def test_off_export(self, phantom_client):
        client, sid = phantom_client
        r = client.post(
            f"/sessions/{sid}/segment",
            json={
                "method": "graph",
                "seed_mm": list(PHANTOM_CENTER),
                "params": {"object_mean_radius_mm": MEAN_BALL_MM},
            },
        ).json()
        mesh_text = client.get(f"/sessions/{sid}/results/{r['result_id']}/mesh").text
        lines = mesh_text.splitlines()
        assert lines[0] == "OFF"
        nv, nf, _ = map(int, lines[1].split())
        assert nv == 642 and nf == 1280
