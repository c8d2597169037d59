"""Quick check of the zeno_dimer extension module.

Build first with `pip install --no-build-isolation -e crates/python`.
"""

import math
import os
import tempfile

import zeno_dimer as zd


def main():
    p = zd.SimParams(0.25, 0.25, t_final=2.0, n_traj=400, seed=5)
    assert math.isclose(p.gamma1, 1.0) and p.n_steps == 2000

    try:
        zd.SimParams(0.25, 0.25, dt=1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("coarse dt accepted")

    ens = zd.run_ensemble(p, "gutzwiller", 24)
    h = ens.histogram
    assert h.total == 400 and h.n == 24 and len(h.counts()) == 24 * 24
    assert abs(sum(h.marginal("left")) * 2 * math.pi / 24 - 1.0) < 1e-12
    again = zd.run_ensemble(p, "gutzwiller", 24).histogram
    assert h.counts() == again.counts()

    exact = zd.run_ensemble(zd.SimParams(0.25, 0.25, t_final=1.0, n_traj=20, seed=1), "exact", 12)
    avg = exact.averages()
    assert avg["n_samples"] == 20 and avg["entropy_mean"] >= 0.0

    t = zd.run_trajectory(p, "sse", 0)
    assert -math.pi < t["theta_l"] <= math.pi

    fp = zd.fokker_planck(p, 48, 5.0, 1e-9)
    assert abs(fp.mass - 1.0) < 1e-9
    assert 0.0 <= fp.coarsen(2).tv_distance(h) <= 1.0

    classes = sorted(c for _, _, c in zd.find_fixed_points(1.25, 0.25))
    assert classes == ["saddle", "saddle", "stable", "unstable"], classes
    labels = [zd.classify_phase(*x) for x in [(0.25, 0.25), (0.25, 1.75), (1.25, 0.25)]]
    assert labels == ["ergodic", "correlated_zeno", "standard_zeno"], labels

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "h.csv")
        h.write(path)
        back = zd.Histogram.read(path)
        assert back.counts() == h.counts() and back.backend == "gutzwiller"

    print("smoke test ok:", p, "occupied", round(h.occupied_fraction(), 3))


if __name__ == "__main__":
    main()
