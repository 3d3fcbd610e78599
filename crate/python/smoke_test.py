"""Smoke test for the pyparaqube extension module.

Build and stage the module first:

    cargo build -p paraqube-py --release --features extension-module
    cp target/release/libpyparaqube.so python/pyparaqube.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pyparaqube as pq


def main():
    assert pq.SYSTEMS == ["H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8"]

    problem = pq.Problem("H1", 2)
    assert problem.n_vars == 8 and problem.n_bits == 16
    inst = problem.instance()
    assert inst.n_bits == 16

    energy, states = pq.brute_force(inst)
    lattice_energy, lattice_states = problem.ground_state()
    assert abs(energy - lattice_energy) < 1e-12 and states == lattice_states

    samples = pq.simulated_annealing(inst, samples=50, seed=3)
    assert sum(count for _, _, count in samples) == 50
    best_bits, best_energy, _ = samples[0]
    assert abs(best_energy - energy) < 1e-9
    assert abs(inst.energy(best_bits) - best_energy) < 1e-12
    assert samples == pq.simulated_annealing(inst, samples=50, seed=3)

    ballistic = pq.ballistic_solve(inst, samples=10, seed=1)
    assert abs(ballistic[0][1] - energy) < 1e-9

    rows = problem.decode_series(inst, best_bits)
    oracle = problem.oracle_sigma_z()
    for (t, qubit, sz, fid), (t_exact, sz_exact) in zip(rows, oracle):
        assert t == t_exact and qubit == 0
        assert abs(sz - sz_exact[0]) < 0.15 and 0.0 <= fid <= 1.0

    assert abs(pq.time_to_solution(0.5) - 6.6439) < 1e-3
    n = [8.0 * k for k in range(1, 9)]
    d, beta, r2 = pq.fit_exponential(n, [2.0 * math.exp(x / 15.0) for x in n])
    assert abs(beta - 15.0) < 1e-9 and abs(d - 2.0) < 1e-9 and abs(r2 - 1.0) < 1e-12

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "h1.qubo")
        inst.write(path)
        again = pq.Instance.read(path)
        assert again.linear == inst.linear and again.couplings == inst.couplings

    try:
        pq.Problem("H9", 2)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown system accepted")

    print("pyparaqube smoke test passed")


if __name__ == "__main__":
    main()
