"""Smoke test for the lassopath extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `maturin build -m crates/py/Cargo.toml` followed by `pip install` of
the wheel. Then run `python python/smoke.py`.
"""

import json
import math

import lassopath


def close(a, b, tol=1e-9):
    return len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    loris = lassopath.Problem.fixture("loris")
    assert (loris.m, loris.n) == (3, 3)
    assert loris.t_max == 192.0

    path = loris.solve()
    assert path.termination == "ReachedZero", path.termination
    assert path.ts[0] == 192.0 and abs(path.ts[1] - 63.0) < 1e-9
    assert close(path(192.0), [0.0, 0.0, 0.0])
    for t, u in zip(path.ts, path.us):
        assert loris.kkt_residual(t, u) <= 1e-8
    report = path.verify(samples=30)
    assert report["pass"], report["worst_t"]

    std = loris.solve(algorithm="standard")
    index, t = std.sign_inconsistency
    assert index == 0 and t == 192.0

    data = json.loads(path.to_json())
    assert data["kinks"][0]["t"] == 192.0

    inf = lassopath.Problem([[1, 1, 1, 0], [0, 0, 0, 1]], [2, 1])
    p = inf.solve()
    assert close(p.ts, [2.0, 1.0, 0.0], 1e-10)
    assert close(p.us[-1], [2 / 3, 2 / 3, 2 / 3, 1.0], 1e-10)

    g = lassopath.Problem.generate("bernoulli", 6, 12, seed=5)
    gp = g.solve()
    assert gp.verify(samples=20)["pass"]
    assert all(a > b for a, b in zip(gp.ts, gp.ts[1:]))

    try:
        lassopath.Problem.fixture("tibshirani").solve(algorithm="looping", loop_cap=1)
    except lassopath.CapExceeded:
        pass
    else:
        raise AssertionError("loop cap not enforced")

    try:
        lassopath.Problem([[1.0, 2.0]], [1.0, 2.0])
    except ValueError:
        pass
    else:
        raise AssertionError("dimension mismatch not reported")

    for name in lassopath.FIXTURE_NAMES:
        _, checks, _ = lassopath.run_fixture(name)
        assert all(ok for _, ok, _ in checks), (name, checks)

    assert not math.isnan(path.ts[-1])
    print("smoke ok")


if __name__ == "__main__":
    main()
