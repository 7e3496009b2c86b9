"""Smoke test for the fcit_py extension module.

Build the module first (see README), then run `python3 python/smoke_test.py`.
"""

import json
import math
import random

import fcit_py


def main():
    d = fcit_py.generate("lingauss", 2000, dependent=True, seed=3, dim=2)
    assert len(d.x) == 2000 and len(d.x[0]) == 2
    dep = fcit_py.fit_test(d.x, d.y, d.z, seed=1)
    assert dep.mode == "conditional"
    assert dep.p_value < 0.05, dep
    assert len(dep.mses_x) == 8
    assert json.loads(dep.json)["p_value"] == dep.p_value

    null = fcit_py.generate("lingauss", 2000, dependent=False, seed=3, dim=2)
    unc = fcit_py.fit_test(null.x, null.y, seed=1)
    assert unc.mode == "unconditional"
    assert 1e-16 <= unc.p_value <= 1 - 1e-16

    tree = fcit_py.RegressionTree([[0.0], [0.0], [1.0], [1.0]], [0.0, 0.0, 10.0, 10.0])
    assert tree.n_leaves == 2
    assert tree.predict([[0.0], [1.0]]) == [[0.0], [10.0]]
    (feature, threshold), = tree.splits()
    assert feature == 0 and 0.0 < threshold < 1.0

    assert abs(fcit_py.t_cdf(1.0, 1) - 0.75) < 1e-15
    assert fcit_py.one_tailed_p(-5.0, 0.001) == 1 - 0.0005
    rng = random.Random(0)
    ps = [rng.random() for _ in range(1000)]
    assert abs(fcit_py.aupc(ps) + sum(ps) / len(ps) - 1.0) < 1e-12
    assert 0.0 <= fcit_py.ks_uniform_p(ps) <= 1.0

    assert fcit_py.official_sweep("hybrid")[0] == "gamma=2;dim=2"
    try:
        fcit_py.generate("external", 10)
    except ValueError:
        pass
    else:
        raise AssertionError("external data cannot be generated")

    csv = fcit_py.run_sweep(json.dumps({"settings": ["chaos"], "sample_sizes": [60], "seeds": 1}))
    lines = csv.splitlines()
    assert lines[0].startswith("# config_hash=") and len(lines) == 2 + 18

    try:
        import numpy as np
    except ImportError:
        np = None
    if np is not None:
        x = np.asarray(d.x)
        out = fcit_py.fit_test(x, np.asarray(d.y), np.asarray(d.z), seed=1)
        assert out.p_value == dep.p_value
        assert not math.isnan(out.t_statistic)

    print("smoke test passed")


if __name__ == "__main__":
    main()
