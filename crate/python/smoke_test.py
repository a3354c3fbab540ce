"""Smoke test for the el_sim Python module.

Build first with `cargo build -p el-sim-py` (or `--release`), then run
`python3 python/smoke_test.py`. Set EL_SIM_LIB to point at a specific
shared library.
"""

import importlib.util
import json
import math
import os
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [os.environ.get("EL_SIM_LIB")] if os.environ.get("EL_SIM_LIB") else [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libel_sim.so", "libel_sim.dylib", "el_sim.dll")
    ]
    for path in map(Path, candidates):
        if path.exists():
            spec = importlib.util.spec_from_file_location("el_sim", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("el_sim library not found; run `cargo build -p el-sim-py` first")


def main():
    el = load_module()

    assert el.hat([0.0, 0.0, 1.0]) == [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
    assert el.vee(el.hat([1.0, 2.0, 3.0])) == [1.0, 2.0, 3.0]

    c = el.FrankConstants(1.0, 0.8, 1.2)
    k = c.coefficients
    e3 = [0.0, 0.0, 1.0]
    skew = el.hat(e3)
    assert math.isclose(c.energy_density(e3, skew), 2 * k[1] + 2 * k[3], rel_tol=1e-14)
    value, bound = c.ellipticity([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    assert value >= bound - 1e-12

    lc = el.LeslieCoefficients(1.0, -0.2, 0.7, 1.0, 0.8, 0.45, 0.5)
    assert lc.violations() == [] and lc.parodi
    assert el.LeslieCoefficients(1.0, -0.2, 0.7, -1.0, 0.8, 0.45, 0.5).violations()

    rows = el.check("gradient")
    assert [r[0] for r in rows] == ["gradient_fs", "gradient_fh", "gradient_q"]
    assert all(r[1] for r in rows)

    config = json.loads((ROOT / "configs" / "energy_law.json").read_text())
    config["grid"]["n"] = 8
    config["time"]["t_end"] = 0.01
    config["output"]["diagnostics"] = []
    text = json.dumps(config)

    sim = el.Simulation(text)
    e0 = sim.energy()["total"]
    sim.step(10)
    assert math.isclose(sim.t, 0.01, rel_tol=1e-12)
    assert sim.energy()["total"] <= e0
    assert len(sim.director()) == 8 ** 3

    with tempfile.TemporaryDirectory() as tmp:
        summary = json.loads(el.run(text, tmp))
        assert summary["steps"] == 10 and summary["energy_non_increasing"]
        assert (Path(tmp) / "energy.csv").exists()

    bad = json.loads(text)
    bad["physics"]["delta"] = -1.0
    try:
        el.Simulation(json.dumps(bad))
    except ValueError as err:
        assert "delta" in str(err)
    else:
        raise AssertionError("negative delta accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
