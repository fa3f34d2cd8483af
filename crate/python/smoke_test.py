"""Smoke test for the pynetenergy extension module.

Build and import it with either

    pip install maturin && maturin develop -m crates/python/Cargo.toml

or

    cargo build --release -p netenergy-py --features extension-module
    cp target/release/libpynetenergy.so python/pynetenergy.so

then run `python python/smoke_test.py`.
"""

import json
import math

import pynetenergy as ne


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # Edge 0 -> 1 with weight 0.5: rows[j][i] is the weight of i -> j.
    chain = ne.Network([[0.0, 0.0], [0.5, 0.0]])
    assert chain.n == 2
    assert chain.spectral_radius == 0.0

    t = ne.centralities(chain, horizon=3)
    assert t["p"] == [1.25, 1.0]
    assert t["q"] == [1.0, 1.25]
    assert t["q_tilde"] == [0.0, 0.25]
    assert t["r_diff"] == [0.25, -0.25]
    assert t["r_quot"] == [1.25, 0.8]
    assert ne.rank_nodes(chain, "rank_quot") == [0, 1]

    assert ne.select_drivers(chain, "trace_max", 1) == [0]
    met = ne.metrics(chain, [0])
    assert close(met["trace"], 1.25)
    assert met["controllable"] and close(met["lambda_min"], 0.25)
    assert ne.lambda_min_bound(chain, 1) == 0.25

    drivers, energy, state = ne.target(chain, 1, 1)
    assert drivers == [1] and close(energy, 1.0) and state[1] == 1.0

    net = ne.Network.scale_free(40, seed=3)
    assert close(net.spectral_radius, 0.9, 1e-9)
    assert len(net.strongly_connected_components()) == 1
    t = ne.centralities(net)
    assert close(sum(t["r_diff"]), 0.0, 1e-9 * sum(t["p"]))
    assert all(q >= 1.0 for q in t["q"])

    w = ne.controllability_gramian(net, list(range(40)), "inf")
    assert close(sum(w[i][i] for i in range(40)), sum(t["p"]), 1e-10)

    unstable = ne.Network([[0.0, 2.0], [2.0, 0.0]])
    assert not unstable.is_stable()
    try:
        ne.centralities(unstable, horizon="inf")
    except ArithmeticError:
        pass
    else:
        raise AssertionError("unstable network accepted with an infinite horizon")

    try:
        ne.select_drivers(chain, "nope", 1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown strategy accepted")

    cfg = {
        "generator": {"kind": "erdos_renyi", "n": 20, "edge_prob": 0.2, "seed": 0},
        "realizations": 3,
        "m_grid": [2, 5, 10],
        "strategies": ["rank_diff", "rank_quot", "trace_max", "random"],
        "base_seed": 11,
        "outputs": {"metric_sweep": True},
    }
    result = json.loads(ne.run_experiment(json.dumps(cfg)))
    assert result["realizations"] == 3
    assert len(result["sweep"]) == 12
    assert all(math.isfinite(p["mean_trace"]) for p in result["sweep"])

    print(f"pynetenergy {ne.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
