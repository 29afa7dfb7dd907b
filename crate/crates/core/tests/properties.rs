use mommix::asymptotics::summarize;
use mommix::data::{read_table_from, CsvOptions, Table};
use mommix::em::{em_fit, EmOptions};
use mommix::moment;
use mommix::simulation::{generate, ScenarioKind, ScenarioSpec};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = ScenarioKind> {
    prop::sample::select(ScenarioKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn em_trace_is_monotone(kind in kind_strategy(), seed in 0u64..10_000) {
        let data = generate(&ScenarioSpec::new(kind, 400, 0.7, seed).unwrap());
        let fit = em_fit(&data, &EmOptions { seed, ..EmOptions::default() }).unwrap();
        for w in fit.loglik_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0), "{} then {}", w[0], w[1]);
        }
        prop_assert!(fit.p > 0.0 && fit.p < 1.0);
        prop_assert!(fit.sigma1_sq >= 1e-8 && fit.sigma2_sq >= 1e-8);
        let mean_r = fit.responsibilities.iter().sum::<f64>() / data.n() as f64;
        prop_assert!((mean_r - fit.p).abs() < 1e-10);
        prop_assert_eq!(fit.beta.len(), data.m());
    }

    #[test]
    fn covariate_scale_is_absorbed(kind in kind_strategy(), seed in 0u64..10_000, c in 0.05f64..20.0) {
        let data = generate(&ScenarioSpec::new(kind, 1500, 0.6, seed).unwrap());
        let a = moment::fit(&data).unwrap();
        let b = moment::fit(&data.with_scaled_covariates(c).unwrap()).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * x.abs().max(y.abs()).max(1.0);
        prop_assert!(close(a.lambda1[0], c * b.lambda1[0]));
        prop_assert!(close(a.lambda2, b.lambda2));
        prop_assert!(close(a.lambda3, b.lambda3));
        prop_assert!(close(a.p, b.p));
    }

    #[test]
    fn standard_errors_ignore_row_order(seed in 0u64..10_000, shift in 1usize..1000) {
        let data = generate(&ScenarioSpec::new(ScenarioKind::ZeroInflatedGaussian, 1000, 0.5, seed).unwrap());
        let order: Vec<usize> = (0..data.n()).map(|i| (i + shift) % data.n()).rev().collect();
        let permuted = data.resample(&order).unwrap();
        let s1 = summarize(&data, &moment::fit(&data).unwrap(), 0.95).unwrap();
        let s2 = summarize(&permuted, &moment::fit(&permuted).unwrap(), 0.95).unwrap();
        prop_assert!((s1.se_beta[0] - s2.se_beta[0]).abs() <= 1e-8 * s1.se_beta[0]);
        prop_assert!((s1.se_p - s2.se_p).abs() <= 1e-8 * s1.se_p);
    }

    #[test]
    fn csv_round_trip_is_idempotent(
        rows in prop::collection::vec((-1e9f64..1e9, prop::option::of(-1e3f64..1e3)), 1..40)
    ) {
        let mut text = String::from("a,b\n");
        for (a, b) in &rows {
            text.push_str(&format!("{a},{}\n", b.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())));
        }
        let names = vec!["a".to_string(), "b".to_string()];
        let first: Table = read_table_from(text.as_bytes(), &names, CsvOptions::default()).unwrap();
        prop_assert_eq!(first.dropped_rows, rows.iter().filter(|r| r.1.is_none()).count());
        let mut buf = Vec::new();
        first.write_csv(&mut buf, CsvOptions::default()).unwrap();
        let second = read_table_from(buf.as_slice(), &names, CsvOptions::default()).unwrap();
        prop_assert_eq!(first.columns, second.columns);
    }
}

#[test]
fn consistent_at_large_n() {
    for kind in ScenarioKind::ALL {
        let good = (0..20)
            .filter(|&r| {
                let data = generate(&ScenarioSpec::new(kind, 100_000, 0.5, 500 + r).unwrap());
                let fit = moment::fit(&data).unwrap();
                (fit.beta[0] - 1.0).abs() < 0.05 && (fit.p - 0.5).abs() < 0.05
            })
            .count();
        assert!(good >= 19, "{kind}: {good}/20 replicates within 0.05");
    }
}

#[test]
fn em_beta_always_belongs_to_covariate_component() {
    // Only component 1 has a slope; the point mass at zero must land in component 2.
    let data = generate(&ScenarioSpec::new(ScenarioKind::ZeroInflatedGaussian, 3000, 0.7, 9).unwrap());
    let fit = em_fit(&data, &EmOptions::default()).unwrap();
    assert!((fit.beta[0] - 1.0).abs() < 0.1);
    assert!(fit.mu2.abs() < 1e-3);
    assert!(fit.variance_floored);
}
