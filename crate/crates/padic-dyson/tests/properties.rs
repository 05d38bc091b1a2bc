//! Property-based checks of the exact arithmetic layer: ring laws at shared
//! precision, ultrametric valuations, and invariance of singular numbers.

use proptest::prelude::*;

use padic_dyson::matrix::{singular_numbers, PAdicMatrix, Signature};
use padic_dyson::process::walks::{reflected_step, reflected_step_by_scan};
use padic_dyson::sampling::haar_gln_zp;
use padic_dyson::scalar::{PAdicScalar, Sum};

const PREC: usize = 10;

fn prime() -> impl Strategy<Value = u64> {
    prop_oneof![Just(2u64), Just(3), Just(5)]
}

proptest! {
    #[test]
    fn addition_commutes(p in prime(), a in 0i64..10_000, b in 0i64..10_000) {
        let x = PAdicScalar::from_integer(a, p, PREC).unwrap();
        let y = PAdicScalar::from_integer(b, p, PREC).unwrap();
        let xy = x.add(&y).unwrap();
        let yx = y.add(&x).unwrap();
        match (xy, yx) {
            (Sum::Value(u), Sum::Value(v)) => prop_assert!(u.congruent(&v)),
            (Sum::Cancelled(u), Sum::Cancelled(v)) =>
                prop_assert_eq!(u.certified_min_valuation, v.certified_min_valuation),
            _ => prop_assert!(false, "asymmetric cancellation"),
        }
    }

    #[test]
    fn add_matches_integer_arithmetic(p in prime(), a in 1i64..100_000, b in 1i64..100_000) {
        let x = PAdicScalar::from_integer(a, p, PREC).unwrap();
        let y = PAdicScalar::from_integer(b, p, PREC).unwrap();
        let z = PAdicScalar::from_integer(a + b, p, PREC).unwrap();
        match x.add(&y).unwrap() {
            Sum::Value(s) => prop_assert!(s.congruent(&z)),
            Sum::Cancelled(_) => prop_assert!(false, "sum of positives cannot vanish"),
        }
    }

    #[test]
    fn multiplication_agrees_with_integers(p in prime(), a in 1i64..3000, b in 1i64..3000) {
        let x = PAdicScalar::from_integer(a, p, PREC).unwrap();
        let y = PAdicScalar::from_integer(b, p, PREC).unwrap();
        let z = PAdicScalar::from_integer(a * b, p, PREC).unwrap();
        prop_assert!(x.mul(&y).unwrap().congruent(&z));
    }

    #[test]
    fn ultrametric_inequality(p in prime(), a in 1i64..100_000, b in 1i64..100_000) {
        let x = PAdicScalar::from_integer(a, p, PREC).unwrap();
        let y = PAdicScalar::from_integer(b, p, PREC).unwrap();
        let va = x.valuation().unwrap();
        let vb = y.valuation().unwrap();
        match x.add(&y).unwrap() {
            Sum::Value(s) => {
                let vs = s.valuation().unwrap();
                prop_assert!(vs >= va.min(vb));
                if va != vb {
                    prop_assert_eq!(vs, va.min(vb), "strict triangle when valuations differ");
                }
            }
            Sum::Cancelled(z) => prop_assert!(z.certified_min_valuation > va.min(vb)),
        }
    }

    #[test]
    fn inverse_multiplies_to_one(p in prime(), s in 0u64..1 << 16) {
        let x = PAdicScalar::from_integer((2 * s + 1) as i64, 2, PREC).unwrap();
        let _ = p; // odd integers are units in Z_2
        let one = PAdicScalar::one(2, PREC);
        prop_assert!(x.mul(&x.inv().unwrap()).unwrap().congruent(&one));
    }

    #[test]
    fn sn_invariant_under_unit_factors(p in prime(), seed in 0u64..500, k1 in 0i64..4, k2 in 0i64..4) {
        // SN(U diag(p^kappa) V) = kappa for Haar U, V
        let kappa = Signature::new(vec![k1 + k2, k1.min(k2)]).unwrap();
        let u = haar_gln_zp(seed, 0, p, 2, 14).unwrap();
        let v = haar_gln_zp(seed, 1, p, 2, 14).unwrap();
        let d = PAdicMatrix::diag_p_power(p, &kappa, 14);
        let m = u.matmul(&d.matmul(&v).unwrap()).unwrap();
        prop_assert_eq!(singular_numbers(&m).unwrap(), kappa);
    }

    #[test]
    fn reflected_step_closed_form(parts in proptest::collection::vec(0i64..6, 1..6), clock_raw in 0usize..6) {
        let mut sorted = parts;
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let kappa = Signature::new(sorted).unwrap();
        let clock = clock_raw % kappa.len() + 1;
        prop_assert_eq!(
            reflected_step(&kappa, clock).unwrap(),
            reflected_step_by_scan(&kappa, clock).unwrap()
        );
    }

    #[test]
    fn scalar_json_round_trip(p in prime(), a in 1i64..100_000) {
        let x = PAdicScalar::from_integer(a, p, PREC).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        let back: PAdicScalar = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(x, back);
    }
}
