"""Desk-scale Monte Carlo comparison across noise setups.

Runs the simulation harness at 100 replicates on three setups: clean
standard normal noise (S1), 20 percent cell replacement by the value 25
(S2c), and standard Cauchy noise (S4). Each table row aggregates squared
bias, MSE and singular-vector dissimilarity over the replicates for one
method; the first row is the classical SVD baseline. The full-scale
study (1000 replicates) is available from the command line:

    dpdsvd simulate --setup s2c --full-scale --seed 42
"""
from dpdsvd import SimConfig, format_table, run_simulation


def main():
    for setup, seed in (("S1", 42), ("S2c", 43), ("S4", 45)):
        cfg = SimConfig(setup, replicates=100, alphas=(0.1, 1.0), seed=seed)
        print(format_table(run_simulation(cfg)))

    print("On clean noise (S1) the alpha=0.1 row tracks the baseline and")
    print("alpha=1 pays a variance premium, the price of insurance on")
    print("well-behaved data. Under heavy contamination (S2c) and Cauchy")
    print("noise (S4) the baseline MSE explodes by orders of magnitude")
    print("while the robust rows stay anchored to the true spectrum.")


if __name__ == "__main__":
    main()
