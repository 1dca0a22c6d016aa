//! Randomized structural invariants.

use boxcount::arrangement::{Arrangement, Domain, Hyperplane};
use boxcount::dio::{count_system, slackify, DioSystem, Relation};
use boxcount::oracle::oracle_count_nonneg;
use boxcount::scalar::{int, rat_of, Int};
use boxcount::spline::bs_add;
use proptest::prelude::*;

fn iv(vals: &[i64]) -> Vec<Int> {
    vals.iter().map(|&v| int(v)).collect()
}

prop_compose! {
    fn arb_plane()(normal in prop::collection::vec(-3i64..=3, 2), c in -2i64..=2)
        -> Option<Hyperplane>
    {
        Hyperplane::new(iv(&normal), int(c))
    }
}

prop_compose! {
    fn arb_arrangement()(planes in prop::collection::vec(arb_plane(), 0..=3),
                         z in any::<bool>())
        -> Arrangement
    {
        let domain = if z { Domain::Z } else { Domain::N };
        Arrangement::new(2, domain, planes.into_iter().flatten().collect()).unwrap()
    }
}

prop_compose! {
    fn arb_system(max_rows: usize, max_cols: usize)
        (t in 1..=max_rows, k in 1..=max_cols)
        (matrix in prop::collection::vec(prop::collection::vec(0i64..=3, k), t),
         offsets in prop::collection::vec(0i64..=2, t),
         t in Just(t), k in Just(k))
        -> Option<DioSystem>
    {
        // reject zero columns: counts would be infinite
        if (0..k).any(|j| matrix.iter().all(|r| r[j] == 0)) {
            return None;
        }
        let m: Vec<Vec<Int>> = matrix.iter().map(|r| iv(r)).collect();
        Some(DioSystem::new(m, iv(&offsets), vec![Relation::Eq; t]).unwrap())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every in-domain point lies in exactly one enumerated region.
    #[test]
    fn region_partition(arr in arb_arrangement()) {
        let regions = arr.enumerate_regions().unwrap();
        let keys: std::collections::BTreeSet<_> =
            regions.iter().map(|r| r.sign_vector.clone()).collect();
        prop_assert_eq!(keys.len(), regions.len());
        let lo = match arr.domain() { Domain::N => 0, Domain::Z => -6 };
        for a in lo..=6i64 {
            for b in lo..=6i64 {
                let sv = arr.sign_vector_of(&iv(&[a, b])).unwrap();
                prop_assert!(keys.contains(&sv), "({}, {}) in no region", a, b);
            }
        }
    }

    /// Regions of through-origin arrangements are cones: scaling a point
    /// never changes its region.
    #[test]
    fn regions_are_cones(arr in arb_arrangement()) {
        prop_assume!(arr.is_through_origin());
        for a in -4..=4i64 {
            for b in -4..=4i64 {
                match arr.domain() {
                    Domain::N if a < 0 || b < 0 => continue,
                    _ => {}
                }
                let sv = arr.sign_vector_of(&iv(&[a, b])).unwrap();
                for lambda in 2..=3i64 {
                    let scaled = arr.sign_vector_of(&iv(&[lambda * a, lambda * b])).unwrap();
                    prop_assert_eq!(&sv, &scaled);
                }
            }
        }
    }

    /// Witnesses returned by region enumeration actually satisfy their signs.
    #[test]
    fn witnesses_match_signs(arr in arb_arrangement()) {
        for r in arr.enumerate_regions().unwrap() {
            prop_assert_eq!(arr.sign_vector_of(&r.point).unwrap(), r.sign_vector);
        }
    }

    #[test]
    fn counts_are_natural_and_match_oracle(sys in arb_system(2, 3), n in prop::collection::vec(0i64..=12, 2)) {
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        prop_assume!(sys.rows == 2);
        let f = count_system(&sys).unwrap();
        let point = iv(&n);
        let v = f.eval(&point).unwrap();
        prop_assert!(v.is_integer());
        prop_assert!(v >= rat_of(&int(0)));
        prop_assert_eq!(v, rat_of(&oracle_count_nonneg(&sys, &point).unwrap()));
    }

    /// bs_add is pointwise addition and commutative.
    #[test]
    fn addition_is_pointwise(a in arb_system(2, 2), b in arb_system(2, 2)) {
        prop_assume!(a.is_some() && b.is_some());
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assume!(a.rows == 2 && b.rows == 2);
        let fa = count_system(&a).unwrap();
        let fb = count_system(&b).unwrap();
        let sum = bs_add(&fa, &fb).unwrap();
        let mus = bs_add(&fb, &fa).unwrap();
        for x in 0..=8i64 {
            for y in 0..=8i64 {
                let p = iv(&[x, y]);
                let expect = fa.eval(&p).unwrap() + fb.eval(&p).unwrap();
                prop_assert_eq!(sum.eval(&p).unwrap(), expect.clone());
                prop_assert_eq!(mus.eval(&p).unwrap(), expect);
            }
        }
    }

    /// Slackification preserves counts row for row.
    #[test]
    fn slack_preserves_counts(sys in arb_system(2, 2), le_mask in prop::collection::vec(any::<bool>(), 2)) {
        prop_assume!(sys.is_some());
        let mut sys = sys.unwrap();
        prop_assume!(sys.rows == 2);
        for (i, &le) in le_mask.iter().enumerate() {
            if le {
                sys.relations[i] = Relation::Le;
            }
        }
        let slack = slackify(&sys);
        prop_assert!(slack.is_all_eq());
        // direct two-variable enumeration with the inequality rows relaxed
        for x in 0..=6i64 {
            for y in 0..=6i64 {
                let mut direct = 0i64;
                let mut vars = vec![0i64; sys.cols];
                'odometer: loop {
                    let ok = (0..2).all(|i| {
                        let lhs: Int = (0..sys.cols)
                            .map(|j| &sys.matrix[i][j] * vars[j])
                            .sum::<Int>()
                            + &sys.offsets[i];
                        let rhs = int([x, y][i]);
                        match sys.relations[i] {
                            Relation::Eq => lhs == rhs,
                            Relation::Le => lhs <= rhs,
                        }
                    });
                    if ok {
                        direct += 1;
                    }
                    for j in 0..=sys.cols {
                        if j == sys.cols {
                            break 'odometer;
                        }
                        vars[j] += 1;
                        if vars[j] <= 10 {
                            break;
                        }
                        vars[j] = 0;
                    }
                }
                let counted = oracle_count_nonneg(&slack, &iv(&[x, y])).unwrap();
                prop_assert_eq!(counted, int(direct), "at ({}, {})", x, y);
            }
        }
    }

    /// Box-spline JSON round trips are byte-identical.
    #[test]
    fn serialization_round_trip(sys in arb_system(2, 3)) {
        prop_assume!(sys.is_some());
        let f = count_system(&sys.unwrap()).unwrap();
        let j = serde_json::to_string(&f).unwrap();
        let back: boxcount::spline::BoxSpline = serde_json::from_str(&j).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), j);
    }
}
