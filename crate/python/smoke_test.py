"""Quick check of the Python bindings.

Build first with `maturin develop -m crates/py/Cargo.toml` (or
`pip install --no-build-isolation ./crates/py`), then run this file.
"""

import math
import tempfile
from pathlib import Path

import stridephase_py as sp


def main():
    cost, path = sp.dtw_distance([0.0, 1.0, 2.0], [0.0, 2.0])
    assert cost == sp.dtw_brute_force([0.0, 1.0, 2.0], [0.0, 2.0])
    assert path[0] == (1, 1) and path[-1] == (3, 2)

    traj = sp.Trajectory.synthetic(seed=3, rate_hz=100.0)
    assert len(traj) > 100 and traj.rate_hz == 100.0
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "s.csv"
        traj.save(p)
        again = sp.Trajectory.load(p)
        assert len(again) == len(traj)

    m = sp.simulate(traj, rate_hz=50.0)
    assert m["progress_accuracy"] == 1.0, m
    sweep = sp.noise_sweep(traj, rate_hz=50.0, std_min=0.5, std_step=1.0, std_max=2.5)
    assert [round(r[0], 6) for r in sweep] == [0.5, 1.5, 2.5]

    ref = traj.thigh()[:60]
    est = sp.Estimator(ref, duration_s=0.59, rate_hz=100.0)
    last = None
    for j, v in enumerate(ref):
        out = est.update(j / 100.0, v)
        if out is not None:
            last = out
    assert last is not None and abs(last["progress_pct"] - 100.0) <= 2.0, last

    sessions = [sp.Trajectory.synthetic(seed=k, rate_hz=100.0, varied=True) for k in range(12)]
    pred = sp.Predictor.train(sessions, "dense:16:tanh:0", seed=1, max_epochs=30)
    thigh, knee = pred.predict(sessions[0])
    assert len(thigh) == len(knee) == 100 and all(math.isfinite(v) for v in thigh + knee)
    m = sp.simulate(sessions[0], rate_hz=100.0, predictor=pred)
    assert 0.0 <= m["progress_accuracy"] <= 1.0

    print("python bindings ok")


if __name__ == "__main__":
    main()
