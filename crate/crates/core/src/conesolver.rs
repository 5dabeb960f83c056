//! Optimization through explicit brick sets and integer-cone membership.
//!
//! Every legal brick of every type is enumerated; a point of the huge
//! program is then a choice of nonnegative multiplicities over these sets.
//! [`cone_membership`] decides whether multiplicities exist that meet the
//! counts, the coupling constraint and an objective window, and
//! [`solve_cone`] binary-searches the window.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::budget::{Budgets, Meter};
use crate::error::{Error, Result};
use crate::graver;
use crate::int::{self, Bimatrix, ExtInt, Int, IntMatrix, IntVec};
use crate::presentation::{self, CompactPresentation, HugeNFoldInstance};

/// All legal bricks of one type, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrickSet {
    pub k: usize,
    pub elements: Vec<IntVec>,
}

impl BrickSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Counts, coupling right-hand side and objective window `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeTarget {
    pub counts: Vec<Int>,
    pub b0: IntVec,
    pub lower: Int,
    pub upper: Int,
}

type Interval = (Option<Int>, Option<Int>);

fn ext_to_opt(e: &ExtInt) -> Option<Int> {
    e.as_finite().cloned()
}

/// Tighten coordinate intervals using `A2 z = b` until nothing changes.
fn propagate(a2: &IntMatrix, b: &[Int], bx: &mut [Interval]) -> bool {
    for _ in 0..(4 * bx.len() + 4) {
        let mut changed = false;
        for i in 0..a2.rows() {
            let row = a2.row(i);
            for j in 0..row.len() {
                let aj = &row[j];
                if aj.is_zero() {
                    continue;
                }
                // a_j z_j = b_i - sum_{k != j} a_k z_k
                let (mut lo, mut hi) = (Some(b[i].clone()), Some(b[i].clone()));
                for (k, ak) in row.iter().enumerate() {
                    if k == j || ak.is_zero() {
                        continue;
                    }
                    let (zl, zu) = &bx[k];
                    // subtract a_k z_k: its range is [a_k zl, a_k zu] (swapped if a_k < 0)
                    let (tmin, tmax) =
                        if ak.is_positive() { (zl.as_ref().map(|v| ak * v), zu.as_ref().map(|v| ak * v)) } else { (zu.as_ref().map(|v| ak * v), zl.as_ref().map(|v| ak * v)) };
                    lo = match (lo, tmax) {
                        (Some(l), Some(t)) => Some(l - t),
                        _ => None,
                    };
                    hi = match (hi, tmin) {
                        (Some(h), Some(t)) => Some(h - t),
                        _ => None,
                    };
                }
                // divide by a_j
                let (nlo, nhi) = if aj.is_positive() {
                    (lo.map(|v| v.div_ceil(aj)), hi.map(|v| v.div_floor(aj)))
                } else {
                    (hi.map(|v| v.div_ceil(aj)), lo.map(|v| v.div_floor(aj)))
                };
                if let Some(v) = nlo {
                    if bx[j].0.as_ref().is_none_or(|c| v > *c) {
                        bx[j].0 = Some(v);
                        changed = true;
                    }
                }
                if let Some(v) = nhi {
                    if bx[j].1.as_ref().is_none_or(|c| v < *c) {
                        bx[j].1 = Some(v);
                        changed = true;
                    }
                }
                if let (Some(l), Some(u)) = &bx[j] {
                    if l > u {
                        return false;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

/// Whether `v` is a recession direction of `{l ≤ z ≤ u}`.
fn recedes(v: &[Int], l: &[ExtInt], u: &[ExtInt]) -> bool {
    v.iter().zip(l.iter().zip(u)).all(|(x, (lo, hi))| {
        (!x.is_positive() || !hi.is_finite()) && (!x.is_negative() || !lo.is_finite())
    })
}

/// `S = {z : A2 z = b, l ≤ z ≤ u}` in lexicographic order.
pub fn enumerate_bricks(a2: &IntMatrix, b: &[Int], l: &[ExtInt], u: &[ExtInt], cap: u64) -> Result<Vec<IntVec>> {
    let d = a2.cols();
    if b.len() != a2.rows() || l.len() != d || u.len() != d {
        return Err(Error::Dimension("brick constraints".into()));
    }
    for v in int::kernel_basis(a2) {
        if recedes(&v, l, u) || recedes(&int::neg(&v), l, u) {
            return Err(Error::InfiniteBrickSet(alloc::format!("free direction {}", int::fmt_vec(&v))));
        }
    }
    let mut bx: Vec<Interval> = l.iter().zip(u).map(|(a, b)| (ext_to_opt(a), ext_to_opt(b))).collect();
    if !propagate(a2, b, &mut bx) {
        return Ok(Vec::new());
    }
    if bx.iter().any(|(lo, hi)| lo.is_none() || hi.is_none()) {
        // a free direction exists iff some Graver element of A2 recedes
        let gb = graver::graver_basis_capped(a2, cap)?;
        if let Some(v) = gb.elements.iter().find(|v| recedes(v, l, u)) {
            return Err(Error::InfiniteBrickSet(alloc::format!("free direction {}", int::fmt_vec(v))));
        }
        return Err(Error::Internal("bounded brick set but interval propagation found no finite box".into()));
    }
    let lo: IntVec = bx.iter().map(|(a, _)| a.clone().expect("finite")).collect();
    let hi: IntVec = bx.iter().map(|(_, b)| b.clone().expect("finite")).collect();
    let rows = a2.row_vecs();
    // reach[j][i]: min/max of sum_{k >= j} a_ik z_k over the box
    let mut reach = vec![vec![(Int::zero(), Int::zero()); rows.len()]; d + 1];
    for j in (0..d).rev() {
        for (i, row) in rows.iter().enumerate() {
            let (p, q) = (&row[j] * &lo[j], &row[j] * &hi[j]);
            let (mn, mx) = if p <= q { (p, q) } else { (q, p) };
            reach[j][i] = (&reach[j + 1][i].0 + mn, &reach[j + 1][i].1 + mx);
        }
    }
    let mut out = Vec::new();
    let mut z = lo.clone();
    let mut rem: IntVec = b.to_vec();
    let mut meter = Meter::new("brick set nodes", cap.saturating_mul(64));
    enum_dfs(&rows, &reach, &lo, &hi, 0, &mut z, &mut rem, &mut out, cap, &mut meter)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enum_dfs(
    rows: &[IntVec],
    reach: &[Vec<(Int, Int)>],
    lo: &[Int],
    hi: &[Int],
    j: usize,
    z: &mut IntVec,
    rem: &mut IntVec,
    out: &mut Vec<IntVec>,
    cap: u64,
    meter: &mut Meter,
) -> Result<()> {
    meter.tick()?;
    if rem.iter().zip(&reach[j]).any(|(r, (mn, mx))| r < mn || r > mx) {
        return Ok(());
    }
    if j == z.len() {
        out.push(z.clone());
        if out.len() as u64 > cap {
            return Err(Error::Budget { what: "brick set elements", limit: cap });
        }
        return Ok(());
    }
    let mut v = lo[j].clone();
    while v <= hi[j] {
        for (i, row) in rows.iter().enumerate() {
            rem[i] -= &row[j] * &v;
        }
        z[j] = v.clone();
        let r = enum_dfs(rows, reach, lo, hi, j + 1, z, rem, out, cap, meter);
        for (i, row) in rows.iter().enumerate() {
            rem[i] += &row[j] * &v;
        }
        r?;
        v += 1;
    }
    z[j] = lo[j].clone();
    Ok(())
}

/// Brick sets of every type of `inst`.
pub fn brick_sets(inst: &HugeNFoldInstance, budgets: &Budgets) -> Result<Vec<BrickSet>> {
    inst.types()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            Ok(BrickSet { k, elements: enumerate_bricks(inst.bimatrix().a2(), &t.b, &t.l, &t.u, budgets.brick_set)? })
        })
        .collect()
}

/// `(min, max)` of `w · z` over a nonempty brick set.
pub fn brick_extremes(s: &BrickSet, w: &[Int]) -> Result<(Int, Int)> {
    let mut it = s.elements.iter().map(|z| int::dot(w, z));
    let first = it.next().ok_or_else(|| Error::InvalidInstance(alloc::format!("type {} has no legal brick", s.k)))??;
    let (mut lo, mut hi) = (first.clone(), first);
    for v in it {
        let v = v?;
        if v < lo {
            lo = v.clone();
        }
        if v > hi {
            hi = v;
        }
    }
    Ok((lo, hi))
}

/// Per-type multiplicity maps.
pub type Multiplicities = Vec<BTreeMap<IntVec, Int>>;

/// Total count up to which membership enumerates multiplicities directly.
pub const DIRECT_COUNT_LIMIT: u64 = 16;

/// Multiplicities over the brick sets meeting `target`, or `None`.
pub fn cone_membership(
    a: &Bimatrix,
    bricks: &[BrickSet],
    target: &ConeTarget,
    w: &[IntVec],
    budgets: &Budgets,
) -> Result<Option<Multiplicities>> {
    let t = bricks.len();
    if target.counts.len() != t || w.len() != t || target.b0.len() != a.r() {
        return Err(Error::Dimension("cone target dimensions".into()));
    }
    if target.lower > target.upper {
        return Ok(None);
    }
    if bricks.iter().zip(&target.counts).any(|(s, c)| s.is_empty() && c.is_positive()) {
        return Ok(None);
    }
    let prep = Prepared::new(a, bricks, w)?;
    let total: Int = target.counts.iter().sum();
    let mut meter = Meter::new("cone membership nodes", budgets.cone_nodes);
    if total <= Int::from(DIRECT_COUNT_LIMIT) {
        direct_search(&prep, target, &mut meter)
    } else {
        subset_search(&prep, a.d(), target, &mut meter)
    }
}

/// Brick data shared by both membership searches.
struct Prepared<'a> {
    bricks: &'a [BrickSet],
    /// `A1 z` per type and brick
    img: Vec<Vec<IntVec>>,
    /// `w^k · z` per type and brick
    cost: Vec<Vec<Int>>,
    /// per type and row of `A1`: min and max of `A1 z`
    span: Vec<Vec<(Int, Int)>>,
    /// per type: min and max of `w^k · z`
    cost_span: Vec<(Int, Int)>,
}

impl<'a> Prepared<'a> {
    fn new(a: &Bimatrix, bricks: &'a [BrickSet], w: &[IntVec]) -> Result<Self> {
        let img: Vec<Vec<IntVec>> =
            bricks.iter().map(|s| s.elements.iter().map(|z| a.a1().matvec(z)).collect()).collect::<Result<_>>()?;
        let cost: Vec<Vec<Int>> = bricks
            .iter()
            .zip(w)
            .map(|(s, wk)| s.elements.iter().map(|z| int::dot(wk, z)).collect())
            .collect::<Result<_>>()?;
        let span = img
            .iter()
            .map(|vs| {
                (0..a.r())
                    .map(|r| {
                        let mn = vs.iter().map(|v| &v[r]).min().cloned().unwrap_or_default();
                        let mx = vs.iter().map(|v| &v[r]).max().cloned().unwrap_or_default();
                        (mn, mx)
                    })
                    .collect()
            })
            .collect();
        let cost_span = cost
            .iter()
            .map(|cs| (cs.iter().min().cloned().unwrap_or_default(), cs.iter().max().cloned().unwrap_or_default()))
            .collect();
        Ok(Prepared { bricks, img, cost, span, cost_span })
    }

    /// Whether `rem` (coupling residual) and the cost window remain reachable
    /// with `left[k]` bricks still to place of each type.
    fn reachable(&self, rem: &[Int], cost: &Int, target: &ConeTarget, left: &[Int]) -> bool {
        for (r, need) in rem.iter().enumerate() {
            let (mut lo, mut hi) = (Int::zero(), Int::zero());
            for (k, n) in left.iter().enumerate() {
                if n.is_positive() {
                    lo += n * &self.span[k][r].0;
                    hi += n * &self.span[k][r].1;
                }
            }
            if *need < lo || *need > hi {
                return false;
            }
        }
        let (mut lo, mut hi) = (cost.clone(), cost.clone());
        for (k, n) in left.iter().enumerate() {
            if n.is_positive() {
                lo += n * &self.cost_span[k].0;
                hi += n * &self.cost_span[k].1;
            }
        }
        hi >= target.lower && lo <= target.upper
    }
}

fn direct_search(p: &Prepared, target: &ConeTarget, meter: &mut Meter) -> Result<Option<Multiplicities>> {
    let t = p.bricks.len();
    let mut st = Direct {
        p,
        target,
        meter,
        left: target.counts.clone(),
        rem: target.b0.clone(),
        cost: Int::zero(),
        chosen: vec![BTreeMap::new(); t],
    };
    if st.dfs(0, 0)? {
        Ok(Some(st.chosen))
    } else {
        Ok(None)
    }
}

struct Direct<'a, 'b> {
    p: &'a Prepared<'a>,
    target: &'a ConeTarget,
    meter: &'b mut Meter,
    left: Vec<Int>,
    rem: IntVec,
    cost: Int,
    chosen: Multiplicities,
}

impl Direct<'_, '_> {
    /// Place the next brick of type `k`, using bricks with index ≥ `from`.
    fn dfs(&mut self, k: usize, from: usize) -> Result<bool> {
        self.meter.tick()?;
        if k == self.left.len() {
            return Ok(int::is_zero_vec(&self.rem) && self.cost >= self.target.lower && self.cost <= self.target.upper);
        }
        if self.left[k].is_zero() {
            return self.dfs(k + 1, 0);
        }
        if !self.p.reachable(&self.rem, &self.cost, self.target, &self.left) {
            return Ok(false);
        }
        for i in from..self.p.bricks[k].len() {
            let z = &self.p.bricks[k].elements[i];
            int::axpy(&mut self.rem, &-Int::one(), &self.p.img[k][i]);
            self.cost += &self.p.cost[k][i];
            self.left[k] -= 1;
            *self.chosen[k].entry(z.clone()).or_insert_with(Int::zero) += 1;
            if self.dfs(k, i)? {
                return Ok(true);
            }
            let e = self.chosen[k].get_mut(z).expect("just inserted");
            *e -= 1;
            if e.is_zero() {
                self.chosen[k].remove(z);
            }
            self.left[k] += 1;
            self.cost -= &self.p.cost[k][i];
            int::axpy(&mut self.rem, &Int::one(), &self.p.img[k][i]);
        }
        Ok(false)
    }
}

/// Search over per-type support subsets of size at most
/// `min(2^d, n_k, |S^k|)`, solving each for multiplicities.
fn subset_search(p: &Prepared, d: usize, target: &ConeTarget, meter: &mut Meter) -> Result<Option<Multiplicities>> {
    let t = p.bricks.len();
    let limits: Vec<usize> = (0..t)
        .map(|k| {
            let cap = if d >= 63 { u64::MAX } else { 1u64 << d };
            let by_count = target.counts[k].to_u64().unwrap_or(u64::MAX);
            cap.min(by_count).min(p.bricks[k].len() as u64) as usize
        })
        .collect();
    // grow the total support size so that sparse solutions are found first
    let max_total: usize = limits.iter().sum();
    for total in t..=max_total {
        let mut st = Subsets { p, target, meter, limits: &limits, picks: vec![Vec::new(); t] };
        if let Some(m) = st.dfs(0, 0, total)? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

struct Subsets<'a, 'b> {
    p: &'a Prepared<'a>,
    target: &'a ConeTarget,
    meter: &'b mut Meter,
    limits: &'a [usize],
    picks: Vec<Vec<usize>>,
}

impl Subsets<'_, '_> {
    /// Choose the remaining bricks of type `k` (indices ≥ `from`); `left` is
    /// the support size still to distribute over types `k..`.
    fn dfs(&mut self, k: usize, from: usize, left: usize) -> Result<Option<Multiplicities>> {
        self.meter.tick()?;
        let t = self.picks.len();
        if k == t {
            if left != 0 {
                return Ok(None);
            }
            return solve_support(self.p, self.target, &self.picks, self.meter);
        }
        let have = self.picks[k].len();
        // types after k need at least one brick each
        let later_min = t - k - 1;
        let later_max: usize = self.limits[k + 1..].iter().sum();
        if have >= 1 && left >= later_min && left <= later_max {
            if let Some(m) = self.dfs(k + 1, 0, left)? {
                return Ok(Some(m));
            }
        }
        if have < self.limits[k] && left > later_min {
            for i in from..self.p.bricks[k].len() {
                self.picks[k].push(i);
                let r = self.dfs(k, i + 1, left - 1);
                self.picks[k].pop();
                if let Some(m) = r? {
                    return Ok(Some(m));
                }
            }
        }
        Ok(None)
    }
}

/// Positive integer multiplicities on the given supports, or `None`.
///
/// Fraction-free Gauss–Jordan elimination separates pivot from free
/// variables; free variables are enumerated inside `[1, n_k]` with interval
/// pruning on every pivot row.
fn solve_support(
    p: &Prepared,
    target: &ConeTarget,
    picks: &[Vec<usize>],
    meter: &mut Meter,
) -> Result<Option<Multiplicities>> {
    let t = picks.len();
    let r = target.b0.len();
    let vars: Vec<(usize, usize)> = picks.iter().enumerate().flat_map(|(k, v)| v.iter().map(move |&i| (k, i))).collect();
    let nv = vars.len();
    // rows: counts then coupling; last column is the right-hand side
    let mut m: Vec<IntVec> = Vec::with_capacity(t + r);
    for k in 0..t {
        let mut row: IntVec = vars.iter().map(|&(kk, _)| if kk == k { Int::one() } else { Int::zero() }).collect();
        row.push(target.counts[k].clone());
        m.push(row);
    }
    for row_i in 0..r {
        let mut row: IntVec = vars.iter().map(|&(k, i)| p.img[k][i][row_i].clone()).collect();
        row.push(target.b0[row_i].clone());
        m.push(row);
    }
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..nv {
        let Some(pr) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(rank, pr);
        for i in 0..m.len() {
            if i == rank || m[i][col].is_zero() {
                continue;
            }
            let a = m[rank][col].clone();
            let b = m[i][col].clone();
            let g = a.gcd(&b);
            let (fa, fb) = (&a / &g, &b / &g);
            let pivot_row = m[rank].clone();
            for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                *x = &*x * &fa - y * &fb;
            }
            let cg = m[i].iter().fold(Int::zero(), |acc, x| acc.gcd(x));
            if cg > Int::one() {
                for x in m[i].iter_mut() {
                    *x = &*x / &cg;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    // inconsistent rows: 0 = nonzero
    if m[rank..].iter().any(|row| !row[nv].is_zero()) {
        return Ok(None);
    }
    let is_pivot: Vec<bool> = (0..nv).map(|c| pivots.contains(&c)).collect();
    let free: Vec<usize> = (0..nv).filter(|&c| !is_pivot[c]).collect();
    let upper: Vec<Int> = vars.iter().map(|&(k, _)| target.counts[k].clone()).collect();
    let mut walk = FreeWalk { rows: &m[..rank], pivots: &pivots, free: &free, upper: &upper, nv, value: vec![Int::zero(); nv], meter };
    let mut found = None;
    walk.each(0, &mut |vals: &[Int]| {
        let mut cost = Int::zero();
        for (v, &(k, i)) in vals.iter().zip(&vars) {
            cost += v * &p.cost[k][i];
        }
        let inside = cost >= target.lower && cost <= target.upper;
        if inside {
            found = Some(vals.to_vec());
        }
        inside
    })?;
    Ok(found.map(|v| to_maps(p, t, &vars, &v)))
}

fn to_maps(p: &Prepared, t: usize, vars: &[(usize, usize)], values: &[Int]) -> Multiplicities {
    let mut out = vec![BTreeMap::new(); t];
    for (v, &(k, i)) in values.iter().zip(vars) {
        out[k].insert(p.bricks[k].elements[i].clone(), v.clone());
    }
    out
}

struct FreeWalk<'a, 'b> {
    rows: &'a [IntVec],
    pivots: &'a [usize],
    free: &'a [usize],
    upper: &'a [Int],
    nv: usize,
    value: Vec<Int>,
    meter: &'b mut Meter,
}

impl FreeWalk<'_, '_> {
    /// Whether every pivot variable can still land in `[1, n_k]` once free
    /// variables `0..f` are fixed.
    fn pivot_feasible(&self, f: usize) -> bool {
        for (ri, row) in self.rows.iter().enumerate() {
            let pc = self.pivots[ri];
            let a = &row[pc];
            // a * x_p = rhs - sum_free row[j] x_j
            let mut lo = row[self.nv].clone();
            let mut hi = row[self.nv].clone();
            for (fi, &j) in self.free.iter().enumerate() {
                let c = &row[j];
                if c.is_zero() {
                    continue;
                }
                if fi < f {
                    lo -= c * &self.value[j];
                    hi -= c * &self.value[j];
                } else {
                    let (p, q) = (c.clone(), c * &self.upper[j]);
                    let (mn, mx) = if p <= q { (p, q) } else { (q, p) };
                    lo -= mx;
                    hi -= mn;
                }
            }
            // need x_p in [1, upper] with a * x_p in [lo, hi]
            let (pl, ph) = if a.is_positive() { (lo.div_ceil(a), hi.div_floor(a)) } else { (hi.div_ceil(a), lo.div_floor(a)) };
            if ph < pl || ph < Int::one() || pl > self.upper[pc] {
                return false;
            }
        }
        true
    }

    fn each(&mut self, f: usize, visit: &mut dyn FnMut(&[Int]) -> bool) -> Result<bool> {
        self.meter.tick()?;
        if !self.pivot_feasible(f) {
            return Ok(false);
        }
        if f == self.free.len() {
            for (ri, row) in self.rows.iter().enumerate() {
                let pc = self.pivots[ri];
                let mut rhs = row[self.nv].clone();
                for &j in self.free {
                    rhs -= &row[j] * &self.value[j];
                }
                let (q, rem) = rhs.div_rem(&row[pc]);
                if !rem.is_zero() || q < Int::one() || q > self.upper[pc] {
                    return Ok(false);
                }
                self.value[pc] = q;
            }
            return Ok(visit(&self.value));
        }
        let j = self.free[f];
        let mut v = Int::one();
        while v <= self.upper[j] {
            self.value[j] = v.clone();
            if self.each(f + 1, visit)? {
                return Ok(true);
            }
            v += 1;
        }
        self.value[j] = Int::zero();
        Ok(false)
    }
}

/// Outcome of [`solve_cone`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSolution {
    pub cp: CompactPresentation,
    pub cost: Int,
    /// Membership queries issued by the binary search.
    pub queries: u64,
}

/// Exact optimum through brick enumeration and membership queries, or
/// `None` when infeasible.
pub fn solve_cone(inst: &HugeNFoldInstance, budgets: &Budgets) -> Result<Option<ConeSolution>> {
    let sets = brick_sets(inst, budgets)?;
    if sets.iter().any(BrickSet::is_empty) {
        return Ok(None);
    }
    let w: Vec<IntVec> = inst.types().iter().map(|t| t.w.clone()).collect();
    let (mut lower, mut upper) = (Int::zero(), Int::zero());
    for (s, t) in sets.iter().zip(inst.types()) {
        let (lk, uk) = brick_extremes(s, &t.w)?;
        lower += &t.count * lk;
        upper += &t.count * uk;
    }
    let counts: Vec<Int> = inst.types().iter().map(|t| t.count.clone()).collect();
    let query = |lo: &Int, hi: &Int| -> Result<Option<Multiplicities>> {
        let target = ConeTarget { counts: counts.clone(), b0: inst.b0().clone(), lower: lo.clone(), upper: hi.clone() };
        cone_membership(inst.bimatrix(), &sets, &target, &w, budgets)
    };
    let mut queries = 1;
    let Some(mut best) = query(&lower, &upper)? else { return Ok(None) };
    let cost_of = |m: &Multiplicities| presentation::cost(inst, &CompactPresentation::from_maps(m.clone()));
    let mut hi = cost_of(&best)?;
    let mut lo = lower;
    while lo < hi {
        let mid = (&lo + &hi).div_floor(&Int::from(2));
        queries += 1;
        match query(&lo, &mid)? {
            Some(m) => {
                hi = cost_of(&m)?;
                best = m;
            }
            None => lo = mid + 1,
        }
    }
    let cp = presentation::reduce_support(inst, &CompactPresentation::from_maps(best))?;
    Ok(Some(ConeSolution { cp, cost: hi, queries }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int::ivec;
    use crate::presentation::BrickType;

    fn k22() -> IntMatrix {
        IntMatrix::from_i64(&[&[1, 0, 1, 0], &[0, 1, 0, 1], &[1, 1, 0, 0], &[0, 0, 1, 1]], 4).unwrap()
    }

    fn nonneg(d: usize) -> (Vec<ExtInt>, Vec<ExtInt>) {
        (vec![ExtInt::finite(0); d], vec![ExtInt::PosInf; d])
    }

    #[test]
    fn permutation_layers() {
        let (l, u) = nonneg(4);
        let s = enumerate_bricks(&k22(), &ivec(&[1, 1, 1, 1]), &l, &u, 1000).unwrap();
        assert_eq!(s, vec![ivec(&[0, 1, 1, 0]), ivec(&[1, 0, 0, 1])]);
        let set = BrickSet { k: 0, elements: s };
        assert_eq!(brick_extremes(&set, &ivec(&[1, 0, 0, 0])).unwrap(), (Int::zero(), Int::one()));
        assert_eq!(brick_extremes(&set, &ivec(&[0, 0, 0, 0])).unwrap(), (Int::zero(), Int::zero()));
    }

    #[test]
    fn empty_and_zero_sets() {
        let (l, u) = nonneg(4);
        assert!(enumerate_bricks(&k22(), &ivec(&[-1, 1, 0, 0]), &l, &u, 1000).unwrap().is_empty());
        let zero = vec![ExtInt::finite(0); 4];
        assert_eq!(enumerate_bricks(&k22(), &ivec(&[0; 4]), &zero, &zero, 1000).unwrap(), vec![ivec(&[0; 4])]);
        assert!(brick_extremes(&BrickSet { k: 0, elements: vec![] }, &ivec(&[0; 4])).is_err());
    }

    #[test]
    fn unbounded_detected() {
        let a2 = IntMatrix::from_i64(&[&[1, -1]], 2).unwrap();
        let (l, u) = nonneg(2);
        assert!(matches!(enumerate_bricks(&a2, &ivec(&[0]), &l, &u, 1000), Err(Error::InfiniteBrickSet(_))));
    }

    fn line(count: i64, value: i64, b0: i64) -> HugeNFoldInstance {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1]], 1).unwrap(), IntMatrix::from_i64(&[&[1]], 1).unwrap()).unwrap();
        let ty = BrickType {
            w: ivec(&[1]),
            l: vec![ExtInt::finite(0)],
            u: vec![ExtInt::PosInf],
            b: ivec(&[value]),
            count: Int::from(count),
        };
        HugeNFoldInstance::new(a, vec![ty], ivec(&[b0])).unwrap()
    }

    #[test]
    fn forced_single_brick() {
        let b = Budgets::default();
        assert_eq!(solve_cone(&line(3, 2, 7), &b).unwrap(), None);
        let s = solve_cone(&line(5, 2, 10), &b).unwrap().unwrap();
        assert_eq!(s.cost, Int::from(10));
        assert_eq!(s.cp.types[0], vec![(ivec(&[2]), Int::from(5))]);
        // huge counts go through the subset search
        let big: Int = "1000000000000000000".parse().unwrap();
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1]], 1).unwrap(), IntMatrix::from_i64(&[&[1]], 1).unwrap()).unwrap();
        let ty = BrickType { w: ivec(&[1]), l: vec![ExtInt::finite(0)], u: vec![ExtInt::PosInf], b: ivec(&[2]), count: big.clone() };
        let inst = HugeNFoldInstance::new(a, vec![ty], vec![&big * 2]).unwrap();
        let s = solve_cone(&inst, &b).unwrap().unwrap();
        assert_eq!(s.cp.types[0], vec![(ivec(&[2]), big)]);
    }

    #[test]
    fn symmetric_2x2x4_membership() {
        let a = Bimatrix::new(IntMatrix::identity(4), k22()).unwrap();
        let (l, u) = nonneg(4);
        let s = enumerate_bricks(&k22(), &ivec(&[1, 1, 1, 1]), &l, &u, 1000).unwrap();
        let sets = vec![BrickSet { k: 0, elements: s }];
        let target = ConeTarget { counts: vec![Int::from(4)], b0: ivec(&[2, 2, 2, 2]), lower: Int::zero(), upper: Int::zero() };
        let m = cone_membership(&a, &sets, &target, &[ivec(&[0; 4])], &Budgets::default()).unwrap().unwrap();
        let want: BTreeMap<IntVec, Int> =
            [(ivec(&[0, 1, 1, 0]), Int::from(2)), (ivec(&[1, 0, 0, 1]), Int::from(2))].into_iter().collect();
        assert_eq!(m, vec![want.clone()]);
        // the subset search agrees
        let prep = Prepared::new(&a, &sets, &[ivec(&[0; 4])]).unwrap();
        let mut meter = Meter::new("test", 1_000_000);
        assert_eq!(subset_search(&prep, 4, &target, &mut meter).unwrap(), Some(vec![want]));
    }
}
