"""Drive the relighting HTTP API end to end, in process.

The browser editor is a thin client of this API: it never computes the
formation math itself. Identical requests return byte-identical PNGs, so
the client can cache aggressively.

Run:  python3 demos/07_relighting_service.py
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from flashlab import dataset, formation, service

root = Path(tempfile.mkdtemp(prefix="flashlab_demo_")) / "scenes"
records = [dataset.render_synthetic(s, dataset.SynthConfig(resolution=48))
           for s in range(3)]
dataset.build_manifest(records, root, (1.0, 0.0, 0.0), seed=0)
for rec in records[:2]:  # store decompositions for two of the three
    d = formation.split_illuminations(rec.P, rec.S_A, rec.S_F, rec.ambient)
    formation.save_decomposition(d, root / rec.id / "decomp", source=rec.P)

client = TestClient(service.create_app(root))

scenes = client.get("/api/scenes").json()
print("GET /api/scenes ->")
for s in scenes:
    print(f"  {s['id']}: {s['width']}x{s['height']}, {s['kelvin']:.0f} K, "
          f"decomposition={'yes' if s['has_decomposition'] else 'no'}")

sid = scenes[0]["id"]
png = client.get(f"/api/scenes/{sid}/component/P")
print(f"GET component P -> {png.headers['content-type']}, {len(png.content)} bytes")
pfm = client.get(f"/api/scenes/{sid}/component/S_F", params={"format": "pfm"})
print(f"GET component S_F as PFM -> {len(pfm.content)} bytes (bit-exact raw floats)")

body = {"scene_id": sid, "kappa": 1.5, "alpha": 0.8, "kelvin": 3200}
r1 = client.post("/api/relight", json=body)
r2 = client.post("/api/relight", json=body)
print(f"POST /api/relight -> {len(r1.content)} byte PNG, "
      f"computed in {r1.headers['X-Compute-Ms']} ms, "
      f"idempotent={'yes' if r1.content == r2.content else 'NO'}")

bad = client.post("/api/relight", json={"scene_id": sid, "kappa": 1, "alpha": 1,
                                        "kelvin": 10001})
print(f"out-of-range kelvin -> HTTP {bad.status_code}: {bad.json()['error'][:60]}...")

no_decomp = client.post("/api/relight", json={"scene_id": scenes[2]["id"],
                                              "kappa": 1, "alpha": 1, "kelvin": 5000})
print(f"scene without decomposition -> HTTP {no_decomp.status_code}")

print("\nTo run the real server:  flashlab serve --data", root)
