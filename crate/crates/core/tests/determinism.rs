use mvport::diagnostics::{ResidualTransform, Statistic};
use mvport::montecarlo::{derive_seed, mc_test, Innovations, McConfig};
use mvport::varma::{catalog, simulate};

#[test]
fn mc_test_is_identical_across_worker_counts() {
    let series = simulate(&catalog("model7").unwrap(), 160, derive_seed(31, 0, 0)).unwrap();
    for (statistic, innovations, transform) in [
        (
            Statistic::Gv,
            Innovations::Gaussian,
            ResidualTransform::Identity,
        ),
        (
            Statistic::QClassic,
            Innovations::Bootstrap,
            ResidualTransform::Abs,
        ),
    ] {
        let mut cfg = McConfig::new(statistic, vec![2, 6, 12]);
        cfg.replicates = 99;
        cfg.master_seed = 77;
        cfg.innovations = innovations;
        cfg.transform = transform;
        let base = mc_test(&series, 2, &cfg).unwrap();
        for workers in [4, 8] {
            cfg.workers = workers;
            assert_eq!(mc_test(&series, 2, &cfg).unwrap(), base);
        }
        for lag in &base.lags {
            assert!(lag.p_hat >= 1.0 / 100.0 && lag.p_hat <= 1.0);
        }
    }
}

#[test]
fn different_seeds_give_different_replicates() {
    let series = simulate(&catalog("phi1").unwrap(), 200, derive_seed(5, 0, 0)).unwrap();
    let mut cfg = McConfig::new(Statistic::QModified, vec![5, 10, 20]);
    cfg.replicates = 99;
    let a = mc_test(&series, 1, &cfg).unwrap();
    cfg.master_seed = 2;
    let b = mc_test(&series, 1, &cfg).unwrap();
    assert_eq!(a.lags[0].observed, b.lags[0].observed);
    assert_ne!(
        a.lags.iter().map(|l| l.exceedances).collect::<Vec<_>>(),
        b.lags.iter().map(|l| l.exceedances).collect::<Vec<_>>()
    );
}
