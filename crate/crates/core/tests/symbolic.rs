use gdms::maps::MapFamily;
use gdms::{Alphabet, IncidenceMatrix, Interval, SystemDescriptor, Word};
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1usize..=5).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(0u8..=1, n), n))
}

/// Number of admissible words of length `len` from powers of the 0/1 matrix.
fn count_by_power(a: &[Vec<u8>], len: usize) -> u128 {
    let n = a.len();
    let mut v = vec![1u128; n];
    for _ in 1..len {
        v = (0..n).map(|i| (0..n).map(|j| a[i][j] as u128 * v[j]).sum()).collect();
    }
    v.iter().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_match_matrix_powers(a in matrix_strategy(), len in 1usize..=10) {
        let n = a.len() as u32;
        let inc = IncidenceMatrix::dense(a.clone()).unwrap();
        prop_assert_eq!(inc.count_words(len, n).unwrap(), count_by_power(&a, len));
    }

    #[test]
    fn enumeration_is_admissible_and_ordered(a in matrix_strategy(), len in 1usize..=5) {
        let n = a.len() as u32;
        let inc = IncidenceMatrix::dense(a.clone()).unwrap();
        let words: Vec<Word> = inc.enumerate_words(len, n).unwrap().collect();
        prop_assert_eq!(words.len() as u128, count_by_power(&a, len));
        for w in &words {
            prop_assert!(inc.is_admissible(w).unwrap());
        }
        prop_assert!(words.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn witness_replays(a in matrix_strategy()) {
        let n = a.len() as u32;
        let inc = IncidenceMatrix::dense(a).unwrap();
        if let Ok(w) = inc.find_irreducibility_witness(n, 4, true) {
            prop_assert!(w.verify(&inc).unwrap());
            for x in 1..=n {
                for y in 1..=n {
                    let c = w.connector(x, y, &inc).unwrap().unwrap();
                    let joined = Word::new(vec![x]).concat(c).concat(&Word::new(vec![y]));
                    prop_assert!(inc.is_admissible(&joined).unwrap());
                }
            }
        }
    }

    #[test]
    fn chain_rule_is_additive(u in proptest::collection::vec(1u32..=9, 1..5), v in proptest::collection::vec(1u32..=9, 1..5)) {
        let fam = MapFamily::continued_fraction();
        let (u, v) = (Word::new(u), Word::new(v));
        let uv = u.concat(&v);
        let whole = fam.log_deriv_over(&uv, fam.domain()).unwrap();
        let parts = fam.log_deriv_over(&u, fam.image(&v).unwrap()).unwrap() + fam.log_deriv_over(&v, fam.domain()).unwrap();
        prop_assert!(parts.widen(1e-12).encloses(&whole));
        let exact = fam.log_deriv_bracket(&uv).unwrap();
        prop_assert!(exact.gap() <= 4f64.ln() + 1e-12);
        prop_assert!(whole.widen(1e-12).contains(exact.sup_log_deriv));
        prop_assert!(whole.widen(1e-12).contains(exact.inf_log_deriv));
    }

    #[test]
    fn coding_radius_shrinks(w in proptest::collection::vec(1u32..=20, 2..12)) {
        let sys = SystemDescriptor::continued_fraction(Alphabet::Infinite);
        let w = Word::new(w);
        let mut prev = f64::INFINITY;
        let full = sys.approximate_pi(&w).unwrap();
        for k in 1..=w.len() {
            let p = sys.approximate_pi(&Word::new(w.symbols()[..k].to_vec())).unwrap();
            prop_assert!(p.radius < prev || (p.radius <= prev && prev < 1e-12));
            let outer = Interval::new(p.point_estimate - p.radius, p.point_estimate + p.radius).widen(1e-15);
            prop_assert!(outer.contains(full.point_estimate));
            prev = p.radius;
        }
    }
}
