//! Property tests over the public API.

use fragmenta::config::parse_config_str;
use fragmenta::config_space::{k_transform, lp_integral, FiniteConfiguration, LatticeSpace, SiteSet};
use fragmenta::grid::{PeriodicGrid, SiteSpace};
use fragmenta::hierarchy::{GridTruncation, Storage};
use fragmenta::io::{read_truncation, write_truncation};
use fragmenta::scale::{norm_alpha, series_tail_bound, series_term_bound};
use proptest::prelude::*;

fn table(values: &[f64]) -> impl Fn(SiteSet) -> f64 + '_ {
    move |s| values[s.0 as usize % values.len()]
}

proptest! {
    #[test]
    fn lp_integral_is_linear(
        n in 1usize..7,
        w in 0.05f64..3.0,
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        f in prop::collection::vec(-1.0f64..1.0, 64),
        g in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let space = LatticeSpace::line(n, w).unwrap();
        let lhs = lp_integral(|s| a * table(&f)(s) + b * table(&g)(s), &space).unwrap();
        let rhs = a * lp_integral(table(&f), &space).unwrap() + b * lp_integral(table(&g), &space).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn lp_integral_of_one_is_binomial(n in 0usize..12, w in 0.01f64..4.0) {
        let space = LatticeSpace::line(n, w).unwrap();
        let total = lp_integral(|_| 1.0, &space).unwrap();
        let expected = (1.0 + w).powi(n as i32);
        prop_assert!((total - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn k_transform_of_empty_is_the_empty_value(v in -10.0f64..10.0, other in -10.0f64..10.0) {
        let empty = FiniteConfiguration::empty(2);
        let g = |c: &FiniteConfiguration| if c.is_empty() { v } else { other };
        prop_assert_eq!(k_transform(g, &empty).unwrap(), v);
    }

    #[test]
    fn norms_grow_with_alpha(
        values in prop::collection::vec(-3.0f64..3.0, 1 + 5 + 25),
        a in -3.0f64..2.0,
        gap in 0.0f64..2.0,
    ) {
        let grid = PeriodicGrid::new(1, 5, 5.0).unwrap();
        let orders = vec![values[..1].to_vec(), values[1..6].to_vec(), values[6..].to_vec()];
        let k = GridTruncation::from_orders(SiteSpace::Periodic(grid), Storage::Full, orders).unwrap();
        prop_assert!(norm_alpha(&k, a) <= norm_alpha(&k, a + gap));
    }

    #[test]
    fn series_tail_dominates_the_next_term(m in 0usize..200, ratio in 0.0f64..0.95) {
        prop_assert!(series_term_bound(m + 1, ratio) <= series_tail_bound(m, ratio));
        prop_assert!(series_tail_bound(m + 1, ratio) <= series_tail_bound(m, ratio));
    }

    #[test]
    fn truncations_round_trip_through_csv(
        dim in 1usize..3,
        points in 2usize..5,
        ti in any::<bool>(),
        seed in prop::collection::vec(-1e6f64..1e6, 8),
    ) {
        let grid = PeriodicGrid::new(dim, points, 3.7).unwrap();
        let storage = if ti { Storage::TranslationInvariant } else { Storage::Full };
        let k = GridTruncation::from_fn(SiteSpace::Periodic(grid), storage, 2, |n, t| {
            let i = t.iter().fold(n, |acc, s| acc * 31 + s);
            seed[i % seed.len()] / (1.0 + i as f64).sqrt()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_truncation(dir.path(), &k).unwrap();
        prop_assert_eq!(read_truncation(dir.path()).unwrap(), k);
    }

    #[test]
    fn resolved_configs_are_fixed_points(
        mortality in 0.01f64..5.0,
        density in 0.0f64..4.0,
        seed in any::<u64>(),
        t in 0.0f64..3.0,
    ) {
        let text = format!(
            r#"{{"kernel": {{"type": "pure-death", "mortality": {mortality}}}, "t_end": {t}, "seed": {seed},
                "initial": {{"type": "poisson", "density": {density}}}}}"#
        );
        let first = parse_config_str(&text).unwrap();
        let again = parse_config_str(&serde_json::to_string(&first.config).unwrap()).unwrap();
        prop_assert_eq!(&again.config, &first.config);
        prop_assert!(again.defaults_applied.is_empty());
    }
}
