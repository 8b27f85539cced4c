use gskor_core::skorokhod::flat_off_residuals;
use gskor_core::{make_band_pair, make_rho_pair, solve, solve_oracle, SampledPath, TimeGrid};
use proptest::prelude::*;

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

fn cumulative(start: f64, steps: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(steps.len() + 1);
    let mut acc = start;
    v.push(acc);
    for d in steps {
        acc += d;
        v.push(acc);
    }
    v
}

prop_compose! {
    fn walk(n: usize)(start in -3.0..3.0f64, steps in prop::collection::vec(-0.3..0.3f64, n)) -> Vec<f64> {
        cumulative(start, &steps)
    }
}

prop_compose! {
    fn band(n: usize)(
        lower in walk(n),
        gaps in prop::collection::vec(0.7..2.0f64, n + 1),
    ) -> (Vec<f64>, Vec<f64>) {
        let upper = lower.iter().zip(&gaps).map(|(l, g)| l + g).collect();
        (lower, upper)
    }
}

const N: usize = 64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn solution_matches_projection_oracle(s in walk(N), (lo, up) in band(N)) {
        let g = grid(N);
        let pair = make_band_pair(SampledPath::new(g, lo).unwrap(), SampledPath::new(g, up).unwrap()).unwrap();
        let s = SampledPath::new(g, s).unwrap();
        let a = solve(&s, &pair).unwrap();
        let b = solve_oracle(&s, &pair).unwrap();
        for (u, v) in a.x.values().iter().zip(b.x.values()) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn solution_is_contained_and_decomposed(s in walk(N), (lo, up) in band(N)) {
        let g = grid(N);
        let pair = make_band_pair(SampledPath::new(g, lo.clone()).unwrap(), SampledPath::new(g, up.clone()).unwrap()).unwrap();
        let s = SampledPath::new(g, s).unwrap();
        let sol = solve(&s, &pair).unwrap();
        prop_assert!(sol.containment_violation(&pair) <= 1e-12);
        for i in 0..=N {
            prop_assert_eq!(sol.x.values()[i], s.values()[i] + sol.k.values()[i]);
            prop_assert_eq!(sol.k.values()[i], sol.k_r.values()[i] - sol.k_l.values()[i]);
            if i > 0 {
                prop_assert!(sol.k_r.values()[i] >= sol.k_r.values()[i - 1]);
                prop_assert!(sol.k_l.values()[i] >= sol.k_l.values()[i - 1]);
            }
        }
        let (r, l) = flat_off_residuals(&sol, &pair).unwrap();
        prop_assert!(r <= 1e-9 && l <= 1e-9, "flat-off {} {}", r, l);
    }

    #[test]
    fn shifting_input_and_band_shifts_solution(s in walk(N), (lo, up) in band(N), c in -2.0..2.0f64) {
        let g = grid(N);
        let mk = |v: &[f64], c: f64| SampledPath::new(g, v.iter().map(|x| x + c).collect()).unwrap();
        let base = solve(&mk(&s, 0.0), &make_band_pair(mk(&lo, 0.0), mk(&up, 0.0)).unwrap()).unwrap();
        let moved = solve(&mk(&s, c), &make_band_pair(mk(&lo, c), mk(&up, c)).unwrap()).unwrap();
        for (a, b) in base.k.values().iter().zip(moved.k.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn inputs_inside_the_band_are_untouched(
        u in prop::collection::vec(0.05..0.95f64, N + 1),
        (lo, up) in band(N),
    ) {
        let g = grid(N);
        let s: Vec<f64> = lo.iter().zip(&up).zip(&u).map(|((l, h), w)| l + w * (h - l)).collect();
        let pair = make_band_pair(SampledPath::new(g, lo).unwrap(), SampledPath::new(g, up).unwrap()).unwrap();
        let sol = solve(&SampledPath::new(g, s.clone()).unwrap(), &pair).unwrap();
        prop_assert!(sol.k.values().iter().all(|&k| k == 0.0));
        prop_assert_eq!(sol.x.values(), &s[..]);
    }

    #[test]
    fn rho_pair_reflects_onto_inverse_obstacles(s in walk(N), (a, b) in band(N)) {
        let g = grid(N);
        let pair = make_rho_pair(SampledPath::new(g, a).unwrap(), SampledPath::new(g, b).unwrap()).unwrap();
        let s = SampledPath::new(g, s).unwrap();
        let fast = solve(&s, &pair).unwrap();
        let slow = solve_oracle(&s, &pair).unwrap();
        for (u, v) in fast.x.values().iter().zip(slow.x.values()) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn solving_is_deterministic(s in walk(N), (lo, up) in band(N)) {
        let g = grid(N);
        let pair = make_band_pair(SampledPath::new(g, lo).unwrap(), SampledPath::new(g, up).unwrap()).unwrap();
        let s = SampledPath::new(g, s).unwrap();
        prop_assert_eq!(solve(&s, &pair).unwrap(), solve(&s, &pair).unwrap());
    }
}
