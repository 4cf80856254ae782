"""Smoke test for the swapsim Python module.

Build first, e.g. `maturin develop --release -m crates/py/Cargo.toml`.
"""

import math
import sys

import swapsim


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    singlet = swapsim.State.bell("psi-minus")
    rho = singlet.density()
    assert close(rho.concurrence(), 1.0)
    assert close(rho.negativity(), 0.5)

    swap = swapsim.State.swap_input()
    assert swap.num_qubits == 4
    probs = dict(swap.bell_probabilities(1, 2))
    assert all(close(p, 0.25) for p in probs.values()), probs

    outer = swap.density().partial_trace([0, 3])
    assert close(outer.concurrence(), 0.0)
    assert close(outer.purity(), 0.25)

    config = swapsim.ExperimentConfig(trials=200_000, seed=7)
    assert config.angles == [0.0, 45.0, 22.5, 67.5]
    assert close(abs(config.exact_chsh("psi-minus")), 2 * math.sqrt(2))
    assert close(config.exact_chsh(), 0.0)
    stages = {s[0]: s for s in config.stage_report()}
    assert close(stages["pre-bsm"][2], 0.0)
    assert close(stages["post-bsm(psi-minus)"][2], 1.0)

    batch = config.run()
    assert len(batch) == 200_000
    report = batch.chsh("psi-minus")
    assert abs(report["s_abs"] - 2 * math.sqrt(2)) < 5 * report["s_std_err"], report
    unconditional = batch.chsh()
    assert unconditional["s_abs"] < 5 * unconditional["s_std_err"], unconditional

    for delta in (0.0, 22.5, 60.0):
        expected = -math.cos(2 * math.radians(delta))
        assert close(swapsim.predicted_correlation("psi-minus", 0.0, delta), expected)
        assert close(swapsim.exact_correlation(0.0, delta, "psi-minus", "pol-first"), expected)

    uniform = swapsim.run_lhv("uniform", 100_000, seed=3)
    kept, fraction = uniform.discard("pr-box")
    assert kept.chsh()["s_abs"] == 4.0
    assert abs(fraction - 0.5) < 0.01

    check = swapsim.blind_check(5, 20_000, seed=1)
    assert check["all_within_bound"]

    try:
        swapsim.ExperimentConfig(trials=10, ordering="sideways")
    except swapsim.SimulationError:
        pass
    else:
        raise AssertionError("bad ordering accepted")

    print("python smoke test: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
