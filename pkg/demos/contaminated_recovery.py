"""Recovering a low-rank signal after planting gross cell outliers.

Builds the 10x4 rank-3 study matrix (singular values 10, 5, 3), adds
mild noise, replaces four cells with the value 25, and compares the
classical SVD with robust fits. The table reports the estimated singular
values and, per layer, the dissimilarity 1 - |<u, u_true>| averaged over
the left and right vectors (0 is perfect alignment, 1 is orthogonal).
"""
import numpy as np

from dpdsvd import SolverOptions, dissimilarity, fit_svd, make_ground_truth


def main():
    truth = make_ground_truth()
    rng = np.random.default_rng(2024)
    X = truth.X0 + 0.1 * rng.standard_normal(truth.X0.shape)

    cells = [(0, 1), (3, 2), (6, 0), (9, 3)]
    for i, j in cells:
        X[i, j] = 25.0

    print("true singular values:", truth.lambdas_true)
    print(f"planted {len(cells)} of 40 cells with the value 25\n")

    header = f"{'method':<11}{'lambda_1':>9}{'lambda_2':>9}{'lambda_3':>9}" \
             f"{'diss_1':>8}{'diss_2':>8}{'diss_3':>8}"
    print(header)
    print("-" * len(header))

    for alpha in (0.0, 0.1, 0.5):
        dec = fit_svd(X, 3, SolverOptions(alpha=alpha))
        diss = [
            0.5 * (dissimilarity(dec.U[:, k], truth.U_true[:, k])
                   + dissimilarity(dec.V[:, k], truth.V_true[:, k]))
            for k in range(3)]
        name = "svd" if alpha == 0.0 else f"alpha={alpha}"
        lam = dec.lambdas
        print(f"{name:<11}{lam[0]:>9.3f}{lam[1]:>9.3f}{lam[2]:>9.3f}"
              f"{diss[0]:>8.3f}{diss[1]:>8.3f}{diss[2]:>8.3f}")

    print("\nThe least squares fit (alpha=0) chases the planted cells: all")
    print("three singular values land near 25 and the vectors rotate away")
    print("from the truth. A modest alpha=0.1 restores the spectrum and")
    print("realigns the layers. Pushing alpha higher keeps the leading")
    print("layer sharp but starts to trim real signal from the smallest")
    print("layer, the usual robustness versus efficiency trade.")


if __name__ == "__main__":
    main()
