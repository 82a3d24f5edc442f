"""Writes the synthetic delta-tilde table bundled with the core crate.

The values are a smooth placeholder with the right shape (1/sqrt(2) at zero
error and full transmission, falling to 0 with error and with transmission),
not solver output. Replace with a real table via `--table` where it matters.
"""
import argparse
import json
import math


def delta_tilde(eps, eta):
    return (1 / math.sqrt(2)) * max(0.0, 1 - eps / 0.15) * min(1.0, max(0.0, (eta - 0.5) / 0.5))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="crates/core/data/delta_tilde_stub.json")
    args = ap.parse_args()
    grid = []
    for i in range(101):
        eps = round(i * 0.005, 10)
        for j in range(21):
            eta = round(j * 0.05, 10)
            grid.append({"eps_tilde": eps, "eta_tilde": eta, "delta_tilde": delta_tilde(eps, eta)})
    table = {
        "meta": {
            "npa_level": 0,
            "solver_tol": 0.0,
            "generator": "scripts/gen_stub_table.py",
            "provenance": "synthetic-stub (not solver output)",
            "formula": "(1/sqrt 2) * max(0, 1 - eps/0.15) * clamp((eta - 0.5)/0.5, 0, 1)",
        },
        "grid": grid,
    }
    with open(args.out, "w") as f:
        # one grid point per line keeps diffs readable
        f.write('{"meta": ' + json.dumps(table["meta"]) + ',\n "grid": [\n')
        f.write(",\n".join("  " + json.dumps(g) for g in grid))
        f.write("\n ]}\n")


if __name__ == "__main__":
    main()
