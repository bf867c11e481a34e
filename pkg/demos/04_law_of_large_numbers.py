"""Law of large numbers for normalised power variations.

V^n_p(1) concentrates at m_p * int_0^1 |sigma|^p ds as the step shrinks; for
unit sigma the limits are m_2 = 1 and m_4 = 3.  The mean absolute error
decays like n^(-1/2) -- the square-root rate the central limit theorem
refines.  This is a half-size version of the harness's `lln` experiment
(`shevar lln` runs the configurable one).
"""

import numpy as np

from shevar import RngStream, abs_moment
from shevar.simulate import simulate_stationary_increments_batch


def main():
    alpha = 0.5
    n_rep = 200
    print("      n    E|V^n_2 - 1|   E|V^n_4 - 3|")
    errs2 = []
    for j, log2n in enumerate((9, 10, 11, 12, 13)):
        n = 2 ** log2n
        z = simulate_stationary_increments_batch(
            alpha, n, [RngStream(11, 1000 * j + i) for i in range(n_rep)])
        v2 = np.mean(z ** 2, axis=1)
        v4 = np.mean(z ** 4, axis=1)
        e2 = float(np.mean(np.abs(v2 - abs_moment(2))))
        e4 = float(np.mean(np.abs(v4 - abs_moment(4))))
        errs2.append(e2)
        print(f"  2^{log2n:2d}    {e2:.5f}        {e4:.5f}")
    slope = np.polyfit(np.arange(9, 14), np.log2(errs2), 1)[0]
    print(f"\nfitted decay exponent for p=2: {slope:.3f}  (theory -0.5)")


if __name__ == "__main__":
    main()
