use nfold_core::graver::{graver_templates_by_product, graver_templates_capped};
use nfold_core::int::int;
use nfold_core::{Bimatrix, IntMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> IntMatrix {
    IntMatrix::new(rows, cols, (0..rows * cols).map(|_| int(r.gen_range(-2..=2))).collect()).unwrap()
}

#[test]
fn structured_templates_match_product_basis() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0;
    for _ in 0..150 {
        let d = r.gen_range(2..=3);
        let (rows, srows) = (r.gen_range(1..=2), r.gen_range(0..=1));
        let a = Bimatrix::new(matrix(&mut r, rows, d), matrix(&mut r, srows, d)).unwrap();
        let Ok(slow) = graver_templates_by_product(&a, 3_000, 10_000) else { continue };
        let fast = graver_templates_capped(&a, 100_000).unwrap();
        assert_eq!(fast.g, slow.g, "{a:?}");
        assert_eq!(fast.templates, slow.templates, "{a:?}");
        compared += 1;
    }
    assert!(compared >= 60, "only {compared} bimatrices compared");
}

#[test]
fn table_bimatrices() {
    let k22 = IntMatrix::from_i64(&[&[1, 0, 1, 0], &[0, 1, 0, 1], &[1, 1, 0, 0], &[0, 0, 1, 1]], 4).unwrap();
    let a = Bimatrix::new(IntMatrix::identity(4), k22).unwrap();
    let fast = graver_templates_capped(&a, 100_000).unwrap();
    let slow = graver_templates_by_product(&a, 100_000, 10_000).unwrap();
    assert_eq!(fast, slow);
}
