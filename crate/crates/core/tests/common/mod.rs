//! Instance generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nfold_core::int::{int, ivec};
use nfold_core::oracle::{self, TableOrder};
use nfold_core::tables::{HugeTableInstance, TableType};
use nfold_core::{Bimatrix, BrickType, CompactPresentation, ExtInt, HugeNFoldInstance, Int, IntMatrix, IntVec};
use num_traits::ToPrimitive;
use rand::Rng;

pub type Layer = Vec<i64>;

/// Random `l × m` layer with all row and column sums at most `cap`.
pub fn random_layer(rng: &mut impl Rng, l: usize, m: usize, cap: i64) -> Layer {
    let mut x = vec![0i64; l * m];
    for _ in 0..rng.gen_range(0..=cap * l as i64) {
        let (i, j) = (rng.gen_range(0..l), rng.gen_range(0..m));
        let row: i64 = (0..m).map(|jj| x[jj * l + i]).sum();
        let col: i64 = (0..l).map(|ii| x[j * l + ii]).sum();
        if row < cap && col < cap {
            x[j * l + i] += 1;
        }
    }
    x
}

pub fn margins(x: &[i64], l: usize, m: usize) -> (Vec<i64>, Vec<i64>) {
    let f = (0..l).map(|i| (0..m).map(|j| x[j * l + i]).sum()).collect();
    let e = (0..m).map(|j| (0..l).map(|i| x[j * l + i]).sum()).collect();
    (f, e)
}

/// Typed table data in oracle form: flattened line sums and
/// `(rows, cols, count)` per type.
#[derive(Debug, Clone)]
pub struct SmallTable {
    pub l: usize,
    pub m: usize,
    pub g: Vec<i64>,
    pub types: Vec<(Vec<i64>, Vec<i64>, usize)>,
}

impl SmallTable {
    pub fn n(&self) -> usize {
        self.types.iter().map(|t| t.2).sum()
    }

    pub fn instance(&self) -> HugeTableInstance {
        let g: Vec<IntVec> = (0..self.l).map(|i| (0..self.m).map(|j| int(self.g[j * self.l + i])).collect()).collect();
        HugeTableInstance::new(
            self.l,
            self.m,
            IntMatrix::from_rows(&g, self.m).unwrap(),
            self.types
                .iter()
                .map(|(f, e, c)| TableType { f: ivec(f), e: ivec(e), count: int(*c as i64) })
                .collect(),
        )
        .unwrap()
    }

    pub fn oracle_feasible(&self) -> bool {
        oracle::bf_table_feasible(self.l, self.m, &self.g, &self.types, TableOrder::LayerMajor, 100_000_000)
            .unwrap()
            .is_some()
    }
}

/// Group layers with equal margins into types.
pub fn from_layers(l: usize, m: usize, layers: &[Layer], g: Vec<i64>) -> SmallTable {
    let mut types: Vec<(Vec<i64>, Vec<i64>, usize)> = Vec::new();
    for x in layers {
        let (f, e) = margins(x, l, m);
        match types.iter_mut().find(|t| t.0 == f && t.1 == e) {
            Some(t) => t.2 += 1,
            None => types.push((f, e, 1)),
        }
    }
    SmallTable { l, m, g, types }
}

/// How a random table instance is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Line sums of planted layers: always feasible.
    Planted,
    /// Planted, then one unit of line sum moved: usually infeasible.
    Perturbed,
    /// Independent layer margins and line sums with matching totals.
    Free,
}

pub fn random_table(rng: &mut impl Rng, l: usize, m: usize, n: usize, cap: i64, flavor: Flavor) -> SmallTable {
    let layers: Vec<Layer> = (0..n).map(|_| random_layer(rng, l, m, cap)).collect();
    let mut g = vec![0i64; l * m];
    for x in &layers {
        for (gc, xc) in g.iter_mut().zip(x) {
            *gc += xc;
        }
    }
    match flavor {
        Flavor::Planted => {}
        Flavor::Perturbed => {
            let (a, b) = (rng.gen_range(0..l * m), rng.gen_range(0..l * m));
            if g[a] > 0 {
                g[a] -= 1;
                g[b] += 1;
            }
        }
        Flavor::Free => {
            let total: i64 = g.iter().sum();
            g = vec![0; l * m];
            for _ in 0..total {
                g[rng.gen_range(0..l * m)] += 1;
            }
        }
    }
    from_layers(l, m, &layers, g)
}

/// Cells of a box, in lexicographic order.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for (a, b) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (*a..=*b).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: i64, hi: i64) -> IntMatrix {
    IntMatrix::new(rows, cols, (0..rows * cols).map(|_| int(rng.gen_range(lo..=hi))).collect()).unwrap()
}

fn mul(a: &IntMatrix, z: &[i64]) -> IntVec {
    a.matvec(&ivec(z)).unwrap()
}

/// A small program with finite bounds and a planted feasible point, given
/// as the instance and that point.
pub fn planted_nfold(rng: &mut impl Rng) -> (HugeNFoldInstance, CompactPresentation) {
    let d = rng.gen_range(2..=3);
    let r = rng.gen_range(1..=2);
    let s = rng.gen_range(0..=1);
    let a = Bimatrix::new(random_matrix(rng, r, d, -2, 2), random_matrix(rng, s, d, -2, 2)).unwrap();
    let t = rng.gen_range(1..=2);
    let mut types = Vec::new();
    let mut maps = Vec::new();
    let mut b0 = vec![Int::from(0); r];
    for _ in 0..t {
        let lo: Vec<i64> = (0..d).map(|_| rng.gen_range(-2..=0)).collect();
        let hi: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=2)).collect();
        let pts = box_points(&lo, &hi);
        let z0 = &pts[rng.gen_range(0..pts.len())];
        let b = mul(a.a2(), z0);
        let same: Vec<&Vec<i64>> = pts.iter().filter(|z| mul(a.a2(), z) == b).collect();
        let count = rng.gen_range(1..=3usize);
        let mut map: BTreeMap<IntVec, Int> = BTreeMap::new();
        for _ in 0..count {
            let z = same[rng.gen_range(0..same.len())];
            for (acc, v) in b0.iter_mut().zip(mul(a.a1(), z)) {
                *acc += v;
            }
            *map.entry(ivec(z)).or_insert_with(|| Int::from(0)) += 1;
        }
        maps.push(map);
        types.push(BrickType {
            w: (0..d).map(|_| int(rng.gen_range(-3..=3))).collect(),
            l: lo.iter().map(|&v| ExtInt::finite(v)).collect(),
            u: hi.iter().map(|&v| ExtInt::finite(v)).collect(),
            b,
            count: Int::from(count),
        });
    }
    (HugeNFoldInstance::new(a, types, b0).unwrap(), CompactPresentation::from_maps(maps))
}

/// A program with nonnegative blocks, bounds `0 ≤ x < ∞` and small
/// right-hand sides. With `planted`, the right-hand sides come from a
/// random nonnegative point, so the program is feasible.
pub fn slack_ready_nfold(rng: &mut impl Rng, planted: bool) -> HugeNFoldInstance {
    let d = rng.gen_range(2..=3);
    let r = rng.gen_range(1..=2);
    let s = rng.gen_range(1..=2);
    let mut a2 = random_matrix(rng, s, d, 0, 2);
    for j in 0..d {
        if (0..s).all(|i| a2.get(i, j) == &Int::from(0)) {
            a2.set(rng.gen_range(0..s), j, Int::from(1));
        }
    }
    let a = Bimatrix::new(random_matrix(rng, r, d, 0, 2), a2).unwrap();
    let t = rng.gen_range(1..=2);
    let mut b0 = vec![Int::from(0); r];
    let types = (0..t)
        .map(|_| {
            let count = rng.gen_range(1..=3i64);
            let b = if planted {
                let z: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=2)).collect();
                for (acc, v) in b0.iter_mut().zip(mul(a.a1(), &z)) {
                    *acc += v * count;
                }
                mul(a.a2(), &z)
            } else {
                (0..s).map(|_| int(rng.gen_range(0..=3))).collect()
            };
            BrickType {
                w: (0..d).map(|_| int(rng.gen_range(-3..=3))).collect(),
                l: vec![ExtInt::finite(0); d],
                u: vec![ExtInt::PosInf; d],
                b,
                count: Int::from(count),
            }
        })
        .collect();
    if !planted {
        b0 = (0..r).map(|_| int(rng.gen_range(0..=6))).collect();
    }
    HugeNFoldInstance::new(a, types, b0).unwrap()
}

pub fn to_i64(v: &Int) -> i64 {
    v.to_i64().unwrap()
}
