//! Brute-force reference implementations.
//!
//! Nothing here calls into the solver modules; only the integer helpers of
//! [`crate::int`] are used. Every search is exhaustive within its stated
//! domain and counts nodes against a budget.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::int::{self, ExtInt, Int, IntMatrix, IntVec};
use crate::presentation::HugeNFoldInstance;

struct Nodes {
    used: u64,
    limit: u64,
    what: &'static str,
}

impl Nodes {
    fn new(what: &'static str, limit: u64) -> Self {
        Nodes { used: 0, limit, what }
    }

    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.limit {
            return Err(Error::Budget { what: self.what, limit: self.limit });
        }
        Ok(())
    }
}

fn small(x: &Int) -> Result<i64> {
    x.to_i64().ok_or(Error::TooLarge { what: "oracle entry magnitude", limit: i64::MAX as u64 })
}

fn small_matrix(m: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(small).collect()).collect()
}

/// `x ⊑ y`, written out independently of the graver module.
pub fn conforms(x: &[i64], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(&a, &b)| a == 0 || (a.signum() == b.signum() && a.abs() <= b.abs()))
}

// ---------------------------------------------------------------- Graver

/// All ⊑-minimal nonzero `x` with `B x = 0` and `|x_i| ≤ bound`.
///
/// The box is scanned over the free columns of a fraction-free echelon form
/// of `B`; pivot coordinates are then forced, so every kernel point of the
/// box is visited exactly once. Complete only inside the box: an element of
/// the true Graver basis with a larger entry is missed, and a box element
/// dominated only by such an element is wrongly kept.
pub fn bf_graver(b: &IntMatrix, bound: i64, node_limit: u64) -> Result<Vec<IntVec>> {
    let n = b.cols();
    if n == 0 {
        return Err(Error::Dimension("matrix without columns".into()));
    }
    let rows: Vec<Vec<i128>> = small_matrix(b)?.into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
    let pivots = echelon(rows)?;
    let is_pivot: Vec<bool> = (0..n).map(|c| pivots.iter().any(|(pc, _)| *pc == c)).collect();
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let mut nodes = Nodes::new("oracle Graver nodes", node_limit);
    let mut kernel: Vec<Vec<i64>> = Vec::new();
    let mut x = vec![0i64; n];
    scan_free(&free, &pivots, bound, 0, &mut x, &mut kernel, &mut nodes)?;
    kernel.retain(|v| v.iter().any(|&c| c != 0));
    kernel.sort_by_key(|v| (v.iter().map(|c| c.abs()).sum::<i64>(), v.clone()));
    let mut minimal: Vec<Vec<i64>> = Vec::new();
    for v in kernel {
        if !minimal.iter().any(|m| conforms(m, &v)) {
            minimal.push(v);
        }
    }
    let mut out: Vec<IntVec> = minimal.iter().map(|v| v.iter().map(|&c| Int::from(c)).collect()).collect();
    out.sort();
    Ok(out)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fraction-free echelon form with pivots taken from the last
/// columns first. Returns `(pivot column, row)` pairs; each pivot column is
/// zero in every other returned row.
fn echelon(mut rows: Vec<Vec<i128>>) -> Result<Vec<(usize, Vec<i128>)>> {
    let n = rows.first().map_or(0, Vec::len);
    let mut done: Vec<(usize, Vec<i128>)> = Vec::new();
    for c in (0..n).rev() {
        let Some(p) = rows.iter().position(|r| r[c] != 0) else { continue };
        let prow = rows.swap_remove(p);
        let eliminate = |r: &mut Vec<i128>| -> Result<()> {
            let f = r[c];
            if f == 0 {
                return Ok(());
            }
            for (a, &b) in r.iter_mut().zip(&prow) {
                *a = a
                    .checked_mul(prow[c])
                    .and_then(|v| v.checked_sub(f.checked_mul(b)?))
                    .ok_or(Error::TooLarge { what: "oracle echelon entries", limit: i64::MAX as u64 })?;
            }
            let g = r.iter().fold(0, |g, &v| gcd(g, v));
            if g > 1 {
                r.iter_mut().for_each(|v| *v /= g);
            }
            Ok(())
        };
        for r in rows.iter_mut() {
            eliminate(r)?;
        }
        for (_, r) in done.iter_mut() {
            eliminate(r)?;
        }
        done.push((c, prow));
    }
    Ok(done)
}

fn scan_free(
    free: &[usize],
    pivots: &[(usize, Vec<i128>)],
    bound: i64,
    i: usize,
    x: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
    nodes: &mut Nodes,
) -> Result<()> {
    nodes.tick()?;
    if i == free.len() {
        for (c, row) in pivots {
            let rest: i128 = free.iter().map(|&f| row[f] * i128::from(x[f])).sum();
            if rest % row[*c] != 0 {
                return Ok(());
            }
            let v = -rest / row[*c];
            if v.abs() > i128::from(bound) {
                return Ok(());
            }
            x[*c] = v as i64;
        }
        out.push(x.clone());
        return Ok(());
    }
    for v in -bound..=bound {
        x[free[i]] = v;
        scan_free(free, pivots, bound, i + 1, x, out, nodes)?;
    }
    x[free[i]] = 0;
    Ok(())
}

// ---------------------------------------------------------------- tables

/// Margins of one layer: row sums `f` (length `l`) and column sums `e`
/// (length `m`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerMargins {
    pub f: Vec<i64>,
    pub e: Vec<i64>,
}

/// Order in which [`bf_tables`] assigns cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableOrder {
    /// Fill one layer completely before the next.
    LayerMajor,
    /// Fill one cell position across all layers before the next.
    CellMajor,
}

/// Search parameters for [`bf_tables`].
#[derive(Debug, Clone, Copy)]
pub struct TableSearch {
    pub order: TableOrder,
    /// Stop after this many tables.
    pub max_solutions: usize,
    pub node_limit: u64,
}

impl Default for TableSearch {
    fn default() -> Self {
        TableSearch { order: TableOrder::LayerMajor, max_solutions: usize::MAX, node_limit: 100_000_000 }
    }
}

/// A table found by [`bf_tables`]: one flattened layer per entry, cell
/// `(i, j)` at index `j * l + i`.
pub type Table = Vec<Vec<i64>>;

/// Enumerate `l × m × n` nonnegative integer tables with the given
/// per-layer margins and line sums `g` (flattened as above).
pub fn bf_tables(l: usize, m: usize, g: &[i64], layers: &[LayerMargins], search: TableSearch) -> Result<Vec<Table>> {
    if g.len() != l * m || layers.iter().any(|lm| lm.f.len() != l || lm.e.len() != m) {
        return Err(Error::Dimension("table oracle: margin dimensions".into()));
    }
    if g.iter().chain(layers.iter().flat_map(|lm| lm.f.iter().chain(&lm.e))).any(|&v| v < 0) {
        return Ok(Vec::new());
    }
    let n = layers.len();
    let cells = l * m;
    let mut order = Vec::with_capacity(n * cells);
    match search.order {
        TableOrder::LayerMajor => {
            for k in 0..n {
                for c in 0..cells {
                    order.push((k, c));
                }
            }
        }
        TableOrder::CellMajor => {
            for c in (0..cells).rev() {
                for k in 0..n {
                    order.push((k, c));
                }
            }
        }
    }
    // last position touching each row/column of each layer and each line
    let mut last_row = vec![vec![0usize; l]; n];
    let mut last_col = vec![vec![0usize; m]; n];
    let mut last_line = vec![0usize; cells];
    for (p, &(k, c)) in order.iter().enumerate() {
        last_row[k][c % l] = p;
        last_col[k][c / l] = p;
        last_line[c] = p;
    }
    let mut st = TableState {
        l,
        order,
        last_row,
        last_col,
        last_line,
        row: layers.iter().map(|lm| lm.f.clone()).collect(),
        col: layers.iter().map(|lm| lm.e.clone()).collect(),
        line: g.to_vec(),
        x: vec![vec![0; cells]; n],
        out: Vec::new(),
        max: search.max_solutions,
        nodes: Nodes::new("oracle table nodes", search.node_limit),
    };
    if st.max > 0 {
        st.dfs(0)?;
    }
    Ok(st.out)
}

struct TableState {
    l: usize,
    order: Vec<(usize, usize)>,
    last_row: Vec<Vec<usize>>,
    last_col: Vec<Vec<usize>>,
    last_line: Vec<usize>,
    row: Vec<Vec<i64>>,
    col: Vec<Vec<i64>>,
    line: Vec<i64>,
    x: Vec<Vec<i64>>,
    out: Vec<Table>,
    max: usize,
    nodes: Nodes,
}

impl TableState {
    fn dfs(&mut self, p: usize) -> Result<bool> {
        self.nodes.tick()?;
        if p == self.order.len() {
            self.out.push(self.x.clone());
            return Ok(self.out.len() >= self.max);
        }
        let (k, c) = self.order[p];
        let (i, j) = (c % self.l, c / self.l);
        let hi = self.row[k][i].min(self.col[k][j]).min(self.line[c]);
        let mut lo = 0;
        // a constraint closing at this position forces the value
        for (closes, rem) in [
            (self.last_row[k][i] == p, self.row[k][i]),
            (self.last_col[k][j] == p, self.col[k][j]),
            (self.last_line[c] == p, self.line[c]),
        ] {
            if closes {
                lo = lo.max(rem);
            }
        }
        if lo > hi {
            return Ok(false);
        }
        for v in lo..=hi {
            self.row[k][i] -= v;
            self.col[k][j] -= v;
            self.line[c] -= v;
            self.x[k][c] = v;
            let stop = self.dfs(p + 1)?;
            self.row[k][i] += v;
            self.col[k][j] += v;
            self.line[c] += v;
            if stop {
                self.x[k][c] = 0;
                return Ok(true);
            }
        }
        self.x[k][c] = 0;
        Ok(false)
    }
}

/// Feasibility of a typed table instance: each `(f, e, count)` contributes
/// `count` layers.
pub fn bf_table_feasible(
    l: usize,
    m: usize,
    g: &[i64],
    types: &[(Vec<i64>, Vec<i64>, usize)],
    order: TableOrder,
    node_limit: u64,
) -> Result<Option<Table>> {
    let layers: Vec<LayerMargins> = types
        .iter()
        .flat_map(|(f, e, c)| core::iter::repeat_n(LayerMargins { f: f.clone(), e: e.clone() }, *c))
        .collect();
    let found = bf_tables(l, m, g, &layers, TableSearch { order, max_solutions: 1, node_limit })?;
    Ok(found.into_iter().next())
}

// ---------------------------------------------------------------- n-fold

/// Optimal explicit solution of a small n-fold program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitOptimum {
    pub cost: Int,
    /// `n` bricks in type order.
    pub bricks: Vec<IntVec>,
}

fn finite_box(inst: &HugeNFoldInstance) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
    inst.types()
        .iter()
        .map(|t| {
            let lo: Result<Vec<i64>> = t
                .l
                .iter()
                .map(|b| match b {
                    ExtInt::Finite(v) => small(v),
                    _ => Err(Error::InvalidInstance("oracle requires finite bounds".into())),
                })
                .collect();
            let hi: Result<Vec<i64>> = t
                .u
                .iter()
                .map(|b| match b {
                    ExtInt::Finite(v) => small(v),
                    _ => Err(Error::InvalidInstance("oracle requires finite bounds".into())),
                })
                .collect();
            Ok((lo?, hi?))
        })
        .collect()
}

/// Every brick of each type, by scanning its box.
fn scan_bricks(inst: &HugeNFoldInstance, nodes: &mut Nodes) -> Result<Vec<Vec<Vec<i64>>>> {
    let a2 = small_matrix(inst.bimatrix().a2())?;
    let boxes = finite_box(inst)?;
    let mut all = Vec::new();
    for (t, (lo, hi)) in inst.types().iter().zip(&boxes) {
        let b: Vec<i64> = t.b.iter().map(small).collect::<Result<_>>()?;
        let mut found = Vec::new();
        if lo.iter().zip(hi).all(|(a, b)| a <= b) {
            let mut z = lo.clone();
            'scan: loop {
                nodes.tick()?;
                if a2.iter().zip(&b).all(|(row, rhs)| row.iter().zip(&z).map(|(a, x)| a * x).sum::<i64>() == *rhs) {
                    found.push(z.clone());
                }
                // odometer, last coordinate fastest
                for j in (0..z.len()).rev() {
                    if z[j] < hi[j] {
                        z[j] += 1;
                        continue 'scan;
                    }
                    z[j] = lo[j];
                }
                break;
            }
        }
        all.push(found);
    }
    Ok(all)
}

fn counts_small(inst: &HugeNFoldInstance) -> Result<Vec<usize>> {
    inst.types()
        .iter()
        .map(|t| t.count.to_usize().filter(|&c| c <= 64).ok_or(Error::TooLarge { what: "oracle brick count", limit: 64 }))
        .collect()
}

/// Exact optimum by depth-first search over the bricks of each type
/// (as non-decreasing index sequences) with interval pruning on `A1`.
/// Ties are broken by the first optimum found.
pub fn bf_nfold(inst: &HugeNFoldInstance, node_limit: u64) -> Result<Option<ExplicitOptimum>> {
    let mut nodes = Nodes::new("oracle n-fold nodes", node_limit);
    let bricks = scan_bricks(inst, &mut nodes)?;
    let counts = counts_small(inst)?;
    let a1 = small_matrix(inst.bimatrix().a1())?;
    let b0: Vec<i64> = inst.b0().iter().map(small).collect::<Result<_>>()?;
    let w: Vec<Vec<i64>> =
        inst.types().iter().map(|t| t.w.iter().map(small).collect()).collect::<Result<_>>()?;
    let img: Vec<Vec<Vec<i64>>> = bricks
        .iter()
        .map(|s| s.iter().map(|z| a1.iter().map(|row| row.iter().zip(z).map(|(a, x)| a * x).sum()).collect()).collect())
        .collect();
    // per type and row, min/max of A1 z
    let span: Vec<Vec<(i64, i64)>> = img
        .iter()
        .map(|s| {
            (0..a1.len())
                .map(|r| {
                    let it = s.iter().map(|v: &Vec<i64>| v[r]);
                    (it.clone().min().unwrap_or(0), it.max().unwrap_or(0))
                })
                .collect()
        })
        .collect();
    if counts.iter().zip(&bricks).any(|(&c, s)| c > 0 && s.is_empty()) {
        return Ok(None);
    }
    // slots in type order
    let slots: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| core::iter::repeat_n(k, c)).collect();
    let mut search = NFoldSearch {
        bricks: &bricks,
        img: &img,
        span: &span,
        w: &w,
        slots: &slots,
        rem: b0,
        pick: vec![0; slots.len()],
        cost: 0,
        best: None,
        nodes,
    };
    search.dfs(0)?;
    Ok(search.best.map(|(cost, pick)| ExplicitOptimum {
        cost: Int::from(cost),
        bricks: pick
            .iter()
            .zip(&slots)
            .map(|(&i, &k)| bricks[k][i].iter().map(|&v| Int::from(v)).collect())
            .collect(),
    }))
}

struct NFoldSearch<'a> {
    bricks: &'a [Vec<Vec<i64>>],
    img: &'a [Vec<Vec<i64>>],
    span: &'a [Vec<(i64, i64)>],
    w: &'a [Vec<i64>],
    slots: &'a [usize],
    rem: Vec<i64>,
    pick: Vec<usize>,
    cost: i64,
    best: Option<(i64, Vec<usize>)>,
    nodes: Nodes,
}

impl NFoldSearch<'_> {
    fn dfs(&mut self, p: usize) -> Result<()> {
        self.nodes.tick()?;
        // interval pruning: remaining slots must be able to produce rem
        for (r, &need) in self.rem.iter().enumerate() {
            let (mut lo, mut hi) = (0i64, 0i64);
            for &k in &self.slots[p..] {
                lo += self.span[k][r].0;
                hi += self.span[k][r].1;
            }
            if need < lo || need > hi {
                return Ok(());
            }
        }
        if p == self.slots.len() {
            if self.best.as_ref().is_none_or(|(c, _)| self.cost < *c) {
                self.best = Some((self.cost, self.pick.clone()));
            }
            return Ok(());
        }
        let k = self.slots[p];
        let start = if p > 0 && self.slots[p - 1] == k { self.pick[p - 1] } else { 0 };
        for i in start..self.bricks[k].len() {
            let z = &self.bricks[k][i];
            let c: i64 = self.w[k].iter().zip(z).map(|(a, b)| a * b).sum();
            for (r, v) in self.img[k][i].iter().enumerate() {
                self.rem[r] -= v;
            }
            self.cost += c;
            self.pick[p] = i;
            self.dfs(p + 1)?;
            self.cost -= c;
            for (r, v) in self.img[k][i].iter().enumerate() {
                self.rem[r] += v;
            }
        }
        Ok(())
    }
}

/// Exact optimum by plain enumeration of the full product of brick sets,
/// last brick varying slowest, checked against the materialized n-fold
/// matrix. Returns the optimal cost only; intended to cross-check
/// [`bf_nfold`] on tiny instances.
pub fn bf_nfold_product(inst: &HugeNFoldInstance, node_limit: u64) -> Result<Option<Int>> {
    let mut nodes = Nodes::new("oracle n-fold nodes", node_limit);
    let bricks = scan_bricks(inst, &mut nodes)?;
    let counts = counts_small(inst)?;
    let n: usize = counts.iter().sum();
    let big = int::nfold_product(inst.bimatrix(), n)?;
    let mut rhs = inst.b0().clone();
    let slots: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| core::iter::repeat_n(k, c)).collect();
    for &k in &slots {
        rhs.extend(inst.types()[k].b.iter().cloned());
    }
    if slots.iter().any(|&k| bricks[k].is_empty()) {
        return Ok(None);
    }
    let mut idx = vec![0usize; n];
    let mut best: Option<Int> = None;
    loop {
        nodes.tick()?;
        let x: IntVec = idx
            .iter()
            .zip(&slots)
            .flat_map(|(&i, &k)| bricks[k][i].iter().map(|&v| Int::from(v)))
            .collect();
        if big.matvec(&x)? == rhs {
            let mut c = Int::zero();
            for (p, &k) in slots.iter().enumerate() {
                let z = &x[p * inst.d()..(p + 1) * inst.d()];
                c += int::dot(&inst.types()[k].w, z)?;
            }
            if best.as_ref().is_none_or(|b| c < *b) {
                best = Some(c);
            }
        }
        // odometer with the last slot slowest
        let mut p = 0;
        loop {
            if p == n {
                return Ok(best);
            }
            idx[p] += 1;
            if idx[p] < bricks[slots[p]].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int::{ivec, Bimatrix};
    use crate::presentation::BrickType;

    #[test]
    fn graver_small_rows() {
        let b = IntMatrix::from_i64(&[&[1, -1]], 2).unwrap();
        assert_eq!(bf_graver(&b, 2, 1_000_000).unwrap(), vec![ivec(&[-1, -1]), ivec(&[1, 1])]);
        let b = IntMatrix::from_i64(&[&[1, 1, -1]], 3).unwrap();
        let got = bf_graver(&b, 3, 1_000_000).unwrap();
        let mut want = vec![
            ivec(&[1, 0, 1]),
            ivec(&[-1, 0, -1]),
            ivec(&[0, 1, 1]),
            ivec(&[0, -1, -1]),
            ivec(&[1, -1, 0]),
            ivec(&[-1, 1, 0]),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn graver_k22() {
        let b = IntMatrix::from_i64(&[&[1, 0, 1, 0], &[0, 1, 0, 1], &[1, 1, 0, 0], &[0, 0, 1, 1]], 4).unwrap();
        assert_eq!(bf_graver(&b, 2, 1_000_000).unwrap(), vec![ivec(&[-1, 1, 1, -1]), ivec(&[1, -1, -1, 1])]);
    }

    fn lm(f: &[i64], e: &[i64]) -> LayerMargins {
        LayerMargins { f: f.to_vec(), e: e.to_vec() }
    }

    #[test]
    fn tables_symmetric_2x2x4() {
        let layers = vec![lm(&[1, 1], &[1, 1]); 4];
        for order in [TableOrder::LayerMajor, TableOrder::CellMajor] {
            let all = bf_tables(2, 2, &[2, 2, 2, 2], &layers, TableSearch { order, ..Default::default() }).unwrap();
            // each layer is identity or swap; exactly two of each
            assert_eq!(all.len(), 6);
        }
    }

    #[test]
    fn tables_contradiction_and_zero() {
        let none = bf_tables(2, 2, &[0, 0, 0, 1], &[lm(&[1, 0], &[1, 0])], TableSearch::default()).unwrap();
        assert!(none.is_empty());
        let zero = bf_tables(2, 2, &[0; 4], &vec![lm(&[0, 0], &[0, 0]); 3], TableSearch::default()).unwrap();
        assert_eq!(zero, vec![vec![vec![0; 4]; 3]]);
    }

    fn box_type(w: &[i64], lo: i64, hi: i64, b: &[i64], count: i64) -> BrickType {
        BrickType {
            w: ivec(w),
            l: vec![ExtInt::finite(lo); w.len()],
            u: vec![ExtInt::finite(hi); w.len()],
            b: ivec(b),
            count: Int::from(count),
        }
    }

    #[test]
    fn nfold_unique_and_infeasible() {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1, 1]], 2).unwrap(), IntMatrix::from_i64(&[&[1, -1]], 2).unwrap())
            .unwrap();
        // bricks (v, v) with v in [0,3]; sum of 2v over 2 bricks = 12 forces v = 3 twice
        let inst = HugeNFoldInstance::new(a.clone(), vec![box_type(&[1, 0], 0, 3, &[0], 2)], ivec(&[12])).unwrap();
        let opt = bf_nfold(&inst, 1_000_000).unwrap().unwrap();
        assert_eq!(opt.bricks, vec![ivec(&[3, 3]), ivec(&[3, 3])]);
        assert_eq!(opt.cost, Int::from(6));
        assert_eq!(bf_nfold_product(&inst, 1_000_000).unwrap(), Some(Int::from(6)));
        let bad = HugeNFoldInstance::new(a, vec![box_type(&[1, 0], 0, 3, &[0], 2)], ivec(&[13])).unwrap();
        assert_eq!(bf_nfold(&bad, 1_000_000).unwrap(), None);
        assert_eq!(bf_nfold_product(&bad, 1_000_000).unwrap(), None);
    }

    #[test]
    fn budget_is_reported() {
        let b = IntMatrix::from_i64(&[&[1, 1, 1, 1, 1]], 5).unwrap();
        assert!(bf_graver(&b, 3, 100).unwrap_err().is_budget());
    }
}
