use proptest::prelude::*;
use s4tower::steenrod::oracle::{agrees_with_normal_form, is_faithful, two_generator_composites};
use s4tower::steenrod::{adem_normalize, normalize_element, parse_element, Monomial};
use s4tower::PrimeField;

const ARITY: usize = 14;

fn field(p: u32) -> PrimeField {
    PrimeField::new(p).unwrap()
}

#[test]
fn oracle_is_faithful_through_degree_14() {
    for p in [2, 3] {
        for d in 0..=14 {
            assert!(is_faithful(field(p), d, ARITY).unwrap(), "p = {p}, degree {d}");
        }
    }
}

#[test]
fn two_generator_composites_agree_with_oracle() {
    let mut count = 0;
    for p in [2, 3] {
        for m in two_generator_composites(field(p), 14) {
            assert!(agrees_with_normal_form(&m, ARITY).unwrap(), "{m}");
            assert!(adem_normalize(&m).terms().all(|(n, _)| n.is_admissible()), "{m}");
            count += 1;
        }
    }
    // 91 pairs Sq^a Sq^b with a + b <= 14; at p = 3, bb, bP^i and P^ib for i <= 3, P1P1, P1P2, P2P1
    assert_eq!(count, 91 + 10);
}

fn word(p: u32) -> impl Strategy<Value = Monomial> {
    let max = if p == 2 { 6u32 } else { 2 };
    prop::collection::vec(0..=max, 1..4).prop_map(move |w| {
        let f = field(p);
        let w: Vec<u32> = if p == 2 {
            w.into_iter().map(|i| i.max(1)).collect()
        } else {
            w.into_iter().map(|i| if i == 0 { s4tower::steenrod::BETA } else { i }).collect()
        };
        Monomial::from_word(f, w, s4tower::steenrod::Tail::None).unwrap()
    })
}

proptest! {
    #[test]
    fn normal_form_is_idempotent_p2(m in word(2)) {
        let n = adem_normalize(&m);
        prop_assert_eq!(normalize_element(&n), n);
    }

    #[test]
    fn normal_form_is_idempotent_p3(m in word(3)) {
        let n = adem_normalize(&m);
        prop_assert_eq!(normalize_element(&n), n);
    }

    #[test]
    fn degree_is_conserved(m in word(2), k in word(3)) {
        for x in [m, k] {
            let d = x.degree();
            prop_assert!(adem_normalize(&x).terms().all(|(t, _)| t.degree() == d));
        }
    }

    #[test]
    fn products_agree_with_oracle(m in word(2)) {
        prop_assume!(m.degree() <= 12);
        prop_assert!(agrees_with_normal_form(&m, 12).unwrap());
    }
}

#[test]
fn element_normal_form_is_linear() {
    let f = field(2);
    let a = parse_element("Sq2 Sq2 + Sq4", Some(f)).unwrap();
    assert_eq!(normalize_element(&a).to_string(), "Sq3 Sq1 + Sq4");
}
