"""Central limit theorem for the quadratic variation, additive and multiplicative.

The rescaled fluctuation (V^n_2(T) - V_2(T)) / sqrt(delta_n) converges to a
mixed Gaussian whose conditional variance is the lag series
2 (1 + 2 sum_r Gamma_r^2) integrated against sigma^4(u(s, x)).  Studentizing
by that variance should produce a standard normal sample across replicates;
this demo runs a small additive study and a small linear-coefficient
(parabolic Anderson) study, where the noteworthy fact is the absence of any
centering bias despite the rough multiplicative coefficient.
"""

from shevar import default_config, run_experiment


def main():
    additive = default_config("clt").replace(**{
        "driver": "exact",
        "model.alpha": 0.5,
        "design.n": 2 ** 12,
        "replicates": 400,
        "seed": 31,
    })
    rep = run_experiment(additive)
    s = rep.summary
    print("additive (exact sampler):")
    print(f"  KS statistic {s['ks_statistic']:.4f}, p-value {s['ks_pvalue']:.3f}")
    print(f"  variance ratio {s['variance_ratio']:.3f}")
    print(f"  mean of studentized statistic {s['mean_studentized']:+.4f} "
          f"(se {s['mean_se']:.4f})")

    multiplicative = default_config("clt").replace(**{
        "driver": "spde",
        "model.sigma.kind": "linear",
        "model.sigma.sigma0": 0.5,
        "model.alpha": 0.5,
        "design.n": 512,
        "design.horizon": 0.01,
        "design.spatial_modes": 512,
        "design.oversampling": 8,
        "design.burn_in": 64,
        "replicates": 100,
        "seed": 32,
    })
    rep = run_experiment(multiplicative)
    s = rep.summary
    print("\nmultiplicative (parabolic Anderson, sigma0 = 0.5):")
    print(f"  KS statistic {s['ks_statistic']:.4f}, p-value {s['ks_pvalue']:.3f}")
    print(f"  mean of studentized statistic {s['mean_studentized']:+.4f} "
          f"(se {s['mean_se']:.4f})  <- no centering bias")
    print(f"  variance of studentized statistic {s['variance_ratio']:.3f}")


if __name__ == "__main__":
    main()
