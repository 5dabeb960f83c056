mod common;

use std::collections::BTreeMap;

use common::planted_nfold;
use nfold_core::augment::{self, OptimizeOptions, Scoring};
use nfold_core::graver;
use nfold_core::int::{int, ivec, nfold_product};
use nfold_core::presentation::{aggregate, check_presentation, cost, reduce_support, type_costs};
use nfold_core::{Bimatrix, BrickType, Budgets, CompactPresentation, ExtInt, HugeNFoldInstance, Int, IntMatrix};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn huge(bits: u32, lo: u64) -> Int {
    (Int::one() << bits) + Int::from(lo)
}

fn free_instance(d: usize, w: &[Vec<i64>], counts: Vec<Int>) -> HugeNFoldInstance {
    let types = w
        .iter()
        .zip(counts)
        .map(|(w, count)| BrickType {
            w: ivec(w),
            l: vec![ExtInt::NegInf; d],
            u: vec![ExtInt::PosInf; d],
            b: vec![],
            count,
        })
        .collect();
    let a = Bimatrix::new(IntMatrix::zeros(1, d), IntMatrix::zeros(0, d)).unwrap();
    HugeNFoldInstance::new(a, types, ivec(&[0])).unwrap()
}

fn presentation_strategy() -> impl Strategy<Value = (usize, Vec<Vec<i64>>, Vec<Vec<(Vec<i64>, u32, u64)>>)> {
    (1usize..=3).prop_flat_map(|d| {
        let brick = prop::collection::vec(-4i64..=4, d);
        let entry = (brick, 0u32..=200, 1u64..1000);
        let support = prop::collection::vec(entry, 1..=12);
        let w = prop::collection::vec(prop::collection::vec(-3i64..=3, d), 1..=3);
        (Just(d), w).prop_flat_map(move |(d, w)| {
            let t = w.len();
            (Just(d), Just(w), prop::collection::vec(support.clone(), t))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduce_support_keeps_invariants((d, w, sup) in presentation_strategy()) {
        let maps: Vec<BTreeMap<_, _>> = sup
            .iter()
            .map(|s| {
                let mut m = BTreeMap::new();
                for (z, bits, lo) in s {
                    *m.entry(ivec(z)).or_insert_with(Int::zero) += huge(*bits, *lo);
                }
                m
            })
            .collect();
        let cp = CompactPresentation::from_maps(maps);
        let inst = free_instance(d, &w, cp.counts());
        let out = reduce_support(&inst, &cp).unwrap();
        prop_assert!(out.support_sizes().iter().all(|&s| s <= 1 << d));
        prop_assert_eq!(out.counts(), cp.counts());
        prop_assert_eq!(aggregate(&out, d).unwrap(), aggregate(&cp, d).unwrap());
        prop_assert_eq!(type_costs(&inst, &out).unwrap(), type_costs(&inst, &cp).unwrap());
        prop_assert!(check_presentation(&inst, &out).all_ok());
    }

    #[test]
    fn steps_change_cost_by_their_improvement(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (inst, cp) = planted_nfold(&mut r);
        let templates = graver::graver_templates_capped(inst.bimatrix(), 20_000).unwrap();
        let b = Budgets::default();
        if let Some(step) = augment::best_augmentation(&inst, &cp, &templates, &b).unwrap() {
            let next = augment::apply_step(&cp.canonical(), &step).unwrap();
            prop_assert!(check_presentation(&inst, &next).all_ok());
            prop_assert_eq!(next.counts(), cp.counts());
            prop_assert_eq!(cost(&inst, &next).unwrap() - cost(&inst, &cp).unwrap(), step.improvement);
        }
    }

    #[test]
    fn product_has_block_structure(
        r in 1usize..=2, s in 0usize..=2, d in 1usize..=3, n in 1usize..=4, seed in any::<u64>()
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = |rows: usize| {
            IntMatrix::new(rows, d, (0..rows * d).map(|_| int(rand::Rng::gen_range(&mut rng, -3..=3))).collect()).unwrap()
        };
        let a = Bimatrix::new(m(r), m(s)).unwrap();
        let p = nfold_product(&a, n).unwrap();
        prop_assert_eq!((p.rows(), p.cols()), (r + n * s, n * d));
        for k in 0..n {
            for j in 0..d {
                for i in 0..r {
                    prop_assert_eq!(p.get(i, k * d + j), a.a1().get(i, j));
                }
                for kk in 0..n {
                    for i in 0..s {
                        let want = if kk == k { a.a2().get(i, j).clone() } else { Int::zero() };
                        prop_assert_eq!(p.get(r + kk * s + i, k * d + j), &want);
                    }
                }
            }
        }
    }
}

/// Two types sharing `x1 + x2` capacity: the cheap type is filled first.
#[test]
fn optimum_with_200_bit_multiplicities() {
    let n = huge(200, 3);
    let a = Bimatrix::new(IntMatrix::from_i64(&[&[1, 1]], 2).unwrap(), IntMatrix::from_i64(&[&[1, -1]], 2).unwrap())
        .unwrap();
    let ty = |w: &[i64]| BrickType {
        w: ivec(w),
        l: vec![ExtInt::finite(0); 2],
        u: vec![ExtInt::finite(5); 2],
        b: ivec(&[0]),
        count: n.clone(),
    };
    let inst = HugeNFoldInstance::new(a, vec![ty(&[1, 1]), ty(&[2, 2])], vec![&n * 14]).unwrap();
    let start = CompactPresentation::from_maps(vec![
        BTreeMap::from([(ivec(&[2, 2]), n.clone())]),
        BTreeMap::from([(ivec(&[5, 5]), n.clone())]),
    ]);
    assert!(check_presentation(&inst, &start).all_ok());
    let templates = graver::graver_templates(inst.bimatrix()).unwrap();
    let opts = OptimizeOptions { scoring: Scoring::Bulk, ..OptimizeOptions::default() };
    let rep = augment::optimize(&inst, &start, &templates, &opts).unwrap();
    assert_eq!(rep.cost, &n * 18);
    assert!(check_presentation(&inst, &rep.cp).all_ok());
    assert!(rep.cp.support_sizes().iter().all(|&s| s <= 4));
    assert!(rep.rounds < 100, "took {} rounds", rep.rounds);
}

#[test]
fn best_augmentation_at_optimum_is_none() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let b = Budgets::default();
    for _ in 0..40 {
        let (inst, cp) = planted_nfold(&mut r);
        let templates = graver::graver_templates_capped(inst.bimatrix(), 20_000).unwrap();
        let rep = augment::optimize(&inst, &cp, &templates, &OptimizeOptions::default()).unwrap();
        assert!(augment::best_augmentation(&inst, &rep.cp, &templates, &b).unwrap().is_none());
    }
}
