use std::f64::consts::PI;

use num_rational::Rational64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crossdiff::analysis::gn::{gn_residual, gn_theta, GnExponent};
use crossdiff::io::snapshot::{decode, encode, Snapshot};
use crossdiff::norms::{lp_norm, mass};
use crossdiff::semigroup::{apply_semigroup, check_lp_lq_bound};
use crossdiff::stepper::step;
use crossdiff::{Field, Grid, LpExponent, SimParams, State, StepPolicy};

/// A few random Gaussians, all resolved on a 1D grid with L=16, n=256.
fn blobs(grid: &Grid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
        .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.5..1.5)))
        .collect();
    Field::from_fn(grid, |x| {
        specs
            .iter()
            .map(|&(m, c, s)| m / (2.0 * PI * s * s).sqrt() * (-(x[0] - c).powi(2) / (2.0 * s * s)).exp())
            .sum()
    })
}

fn grid() -> Grid {
    Grid::new(1, 16.0, 256).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn one_step_conserves_mass(seed in any::<u64>(), chi in 0.0..2.0f64, xi in 0.0..2.0f64, dt in 1e-4..1e-2f64) {
        let g = grid();
        let params = SimParams::new(chi, xi, 0.0, g.clone(), StepPolicy::default(), 1.0).unwrap();
        let s = State::new(blobs(&g, seed), blobs(&g, seed ^ 0x5eed), 0.0).unwrap();
        let next = step(&s, &params, dt).unwrap();
        prop_assert!(((mass(&next.u) - mass(&s.u)) / mass(&s.u)).abs() < 1e-12);
        prop_assert!(((mass(&next.v) - mass(&s.v)) / mass(&s.v)).abs() < 1e-12);
    }

    #[test]
    fn smoothing_ratios_stay_below_one(seed in any::<u64>(), t in 0.1..10.0f64) {
        let f = blobs(&grid(), seed);
        for (q, p) in [(1.0, 2.0), (1.0, f64::INFINITY), (2.0, 2.0), (2.0, f64::INFINITY)] {
            let ratio = check_lp_lq_bound(&f, t, LpExponent::new(p).unwrap(), LpExponent::new(q).unwrap()).unwrap();
            prop_assert!(ratio <= 1.0 + 1e-8, "q={} p={} ratio {}", q, p, ratio);
        }
    }

    #[test]
    fn semigroup_composes(seed in any::<u64>(), a in 0.0..3.0f64, b in 0.0..3.0f64) {
        let f = blobs(&grid(), seed);
        let twice = apply_semigroup(&apply_semigroup(&f, a).unwrap(), b).unwrap();
        let once = apply_semigroup(&f, a + b).unwrap();
        prop_assert!(twice.max_abs_diff(&once).unwrap() < 1e-13);
        prop_assert!(lp_norm(&once, LpExponent::INFINITY) <= lp_norm(&f, LpExponent::INFINITY) * (1.0 + 1e-12));
    }

    #[test]
    fn gn_theta_solves_the_relation(
        j in 0u32..2, extra in 1u32..3, dim in 1u32..4,
        p in (1i64..20, 1i64..6), q in (1i64..20, 1i64..6), r in (1i64..20, 1i64..6),
    ) {
        let m = j + extra;
        let ex = |(a, b): (i64, i64)| GnExponent::ratio(a + b, b);
        let (p, q, r) = (ex(p), ex(q), ex(r));
        if let Ok(theta) = gn_theta(j, m, p, q, r, dim) {
            prop_assert_eq!(gn_residual(j, m, p, q, r, dim, theta), Rational64::from_integer(0));
            prop_assert!(theta >= Rational64::new(j as i64, m as i64) && theta <= Rational64::from_integer(1));
        }
    }

    #[test]
    fn snapshot_roundtrip_is_exact(seed in any::<u64>(), t in 0.0..100.0f64, chi in 0.0..5.0f64) {
        let g = Grid::new(2, 4.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Field::new(&g, (0..64).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let v = Field::new(&g, (0..64).map(|_| rng.gen::<f64>() * 1e-300).collect()).unwrap();
        let snap = Snapshot { state: State::new(u, v, t).unwrap(), chi, xi: 0.25, epsilon: 0.0 };
        let back = decode(&encode(&snap)).unwrap();
        prop_assert_eq!(back.state.u.values(), snap.state.u.values());
        prop_assert_eq!(back.state.v.values(), snap.state.v.values());
        prop_assert_eq!(back.state.t, t);
        prop_assert_eq!(back.chi, chi);
    }
}
