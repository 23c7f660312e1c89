"""Smoke test for the macpir extension module.

Build with `cargo build --release -p macpir-python --features extension-module`,
copy target/release/libmacpir.so to macpir.so next to this script (or anywhere
on PYTHONPATH) and run `python3 python/smoke_test.py`.
"""

import math

import macpir


def main():
    pair = macpir.NestedLatticePair.for_power(10.0, 11, 2)
    assert abs(pair.second_moment() - 10.0) < 1e-12
    point = pair.encode([3, 7])
    assert pair.decode(point) == [3, 7]
    noisy = [x + 0.1 * pair.scale for x in point]
    assert pair.decode(pair.mod_reduce(pair.quantize_fine(noisy))) == [3, 7]

    s1, s2, g1, g2 = macpir.partition_gains([0.5, 0.9, 1.4])
    assert (s1, s2) == ([2], [0, 1]) and math.isclose(g1, 1.4) and math.isclose(g2, 1.4)

    assert abs(macpir.lower_bound_constant() - 0.0887352) < 1e-6
    (a1, a2), rate = macpir.r_cf_best(1.0, 1.0, 10.0)
    assert (a1, a2) == (1, 1) and rate > macpir.r_eq(1.0, 10.0) - 1e-12

    stats = macpir.gap_statistics(8, 10.0, 200, "exact", 1)
    assert 0.9 < stats["mean"] < 1.1

    msgs = [[i % 11 for i in range(50)], [(3 * i) % 11 for i in range(50)]]
    out = macpir.retrieve(msgs, 1, 11, 8, 100.0, scheme="spir-cr", noise=False, seed=4)
    assert out["decoded"] == msgs[1] and out["symbol_errors"] == 0

    passed, verdicts = macpir.audit_suite("pir", samples=20000, seed=1)
    assert passed and verdicts

    demo = macpir.leakage_example()
    assert demo["y_plain"] == -4.0 and demo["leaked_w2"] == 2
    assert all(abs(p - 0.2) < 1e-12 for p in demo["posterior_masked"])

    csv, ok = macpir.run_command("heatmap", "seed = 1\ngrid = 3")
    assert ok and csv.startswith("# macpir heatmap\n")

    print("smoke test passed")


if __name__ == "__main__":
    main()
