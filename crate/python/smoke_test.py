"""Smoke test for the olplab Python bindings.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/olplab-*.whl
"""

import json

import olplab_py as olp


def main():
    inst = olp.Instance.generate("multi-secretary", 10_000, [0.5], seed=3)
    assert (inst.horizon, inst.m) == (10_000, 1)

    opt = inst.hindsight()
    assert abs(opt["y"][0] - 0.5) < 0.05, opt["y"]

    m1 = inst.run_subgradient()
    m2 = inst.run_two_phase("continuous")
    lad = inst.run_learner_as_decider(0.5)
    lp = inst.run_resolving()
    for name, run in [("M1", m1), ("M2", m2), ("LAD", lad), ("resolving", lp)]:
        assert len(run["x"]) == inst.horizon
        print(f"{name:>9}: regret {run['regret']:8.3f}  violation {run['violation']:8.3f}")
    assert m2["t_e"] == 465  # ceil(T^(2/3))

    tiny = olp.Instance.from_arrays([0.8, 0.5, 0.9, 0.1], [[1.0]] * 4, [0.5])
    assert tiny.hindsight()["value"] == 0.8 + 0.9

    plan = json.loads(olp.scenario("dilemma"))
    plan.update(trials=3, horizons=[100, 1000, 10000, 20000])
    trials_csv, aggregate_csv = olp.run_experiment(json.dumps(plan))
    assert trials_csv.startswith("trial_id,algo")
    rows = [line.split(",") for line in aggregate_csv.strip().splitlines()[1:]]
    m1_rows = [r for r in rows if r[0] == "M1"]
    slope = olp.loglog_slope([float(r[2]) for r in m1_rows], [float(r[6]) for r in m1_rows])
    print(f"M1 growth slope on 3 trials: {slope:.3f}")

    try:
        olp.Instance.generate("nope", 10, [0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("unknown distribution accepted")
    print("smoke test ok")


if __name__ == "__main__":
    main()
