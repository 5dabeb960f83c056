//! Huge n-fold instances and their compactly presented solutions.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::int::{self, Bimatrix, ExtInt, Int, IntVec};

/// Default number of bricks `expand` will write out.
pub const EXPAND_THRESHOLD: u64 = 100_000;

/// One brick type: cost, bounds, right-hand side and multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrickType {
    pub w: IntVec,
    pub l: Vec<ExtInt>,
    pub u: Vec<ExtInt>,
    pub b: IntVec,
    pub count: Int,
}

impl BrickType {
    /// True iff `z` satisfies `A2 z = b` and the bounds.
    pub fn admits(&self, a: &Bimatrix, z: &[Int]) -> bool {
        z.len() == a.d()
            && a.a2().matvec(z).is_ok_and(|v| v == self.b)
            && int::in_box(z, &self.l, &self.u).unwrap_or(false)
    }
}

/// A huge n-fold program: a bimatrix, `t` brick types in order, and `b0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HugeNFoldInstance {
    a: Bimatrix,
    types: Vec<BrickType>,
    b0: IntVec,
    n: Int,
}

impl HugeNFoldInstance {
    pub fn new(a: Bimatrix, types: Vec<BrickType>, b0: IntVec) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::InvalidInstance("at least one brick type is required".into()));
        }
        if b0.len() != a.r() {
            return Err(Error::Dimension(alloc::format!("b0 has {} entries, A1 has {} rows", b0.len(), a.r())));
        }
        let d = a.d();
        for (k, t) in types.iter().enumerate() {
            if t.w.len() != d || t.l.len() != d || t.u.len() != d {
                return Err(Error::Dimension(alloc::format!("type {k}: cost/bounds must have {d} entries")));
            }
            if t.b.len() != a.s() {
                return Err(Error::Dimension(alloc::format!("type {k}: b has {} entries, A2 has {} rows", t.b.len(), a.s())));
            }
            if !t.count.is_positive() {
                return Err(Error::InvalidInstance(alloc::format!("type {k}: count must be positive")));
            }
            for (lo, hi) in t.l.iter().zip(&t.u) {
                if *lo == ExtInt::PosInf || *hi == ExtInt::NegInf {
                    return Err(Error::InvalidInstance(alloc::format!(
                        "type {k}: +inf lower bound or -inf upper bound"
                    )));
                }
                if lo > hi {
                    return Err(Error::InvalidInstance(alloc::format!("type {k}: lower bound exceeds upper bound")));
                }
            }
        }
        let n = types.iter().map(|t| &t.count).sum();
        Ok(HugeNFoldInstance { a, types, b0, n })
    }

    pub fn bimatrix(&self) -> &Bimatrix {
        &self.a
    }

    pub fn types(&self) -> &[BrickType] {
        &self.types
    }

    pub fn b0(&self) -> &IntVec {
        &self.b0
    }

    /// Total number of bricks.
    pub fn n(&self) -> &Int {
        &self.n
    }

    pub fn t(&self) -> usize {
        self.types.len()
    }

    pub fn d(&self) -> usize {
        self.a.d()
    }
}

/// Per-type multiplicity maps restricted to their supports.
///
/// Stored as raw `(brick, multiplicity)` lists so that malformed input can
/// be represented and reported by [`check_presentation`]. Every constructor
/// and operation in this crate produces lists that are sorted, duplicate
/// free and strictly positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompactPresentation {
    pub types: Vec<Vec<(IntVec, Int)>>,
}

impl CompactPresentation {
    pub fn from_maps(maps: Vec<BTreeMap<IntVec, Int>>) -> Self {
        CompactPresentation {
            types: maps
                .into_iter()
                .map(|m| m.into_iter().filter(|(_, c)| c.is_positive()).collect())
                .collect(),
        }
    }

    /// Merge duplicate bricks, drop non-positive entries and sort.
    pub fn canonical(&self) -> Self {
        Self::from_maps(self.to_maps())
    }

    pub fn to_maps(&self) -> Vec<BTreeMap<IntVec, Int>> {
        self.types
            .iter()
            .map(|sup| {
                let mut m: BTreeMap<IntVec, Int> = BTreeMap::new();
                for (z, c) in sup {
                    *m.entry(z.clone()).or_insert_with(Int::zero) += c;
                }
                m
            })
            .collect()
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.types.iter().map(Vec::len).collect()
    }

    pub fn total_support(&self) -> usize {
        self.types.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<Int> {
        self.types.iter().map(|s| s.iter().map(|(_, c)| c).sum()).collect()
    }

    /// `Σ_k Σ_z λ^k_z ‖z‖²`, the quantity support reduction decreases.
    pub fn norm_potential(&self) -> Int {
        self.types.iter().flatten().map(|(z, c)| c * int::norm2_sq(z)).sum()
    }
}

/// Outcome of [`check_presentation`]; all four flags true means the
/// presentation describes a feasible point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub structural_ok: bool,
    pub bricks_ok: bool,
    pub counts_ok: bool,
    pub aggregate_ok: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.structural_ok && self.bricks_ok && self.counts_ok && self.aggregate_ok
    }

    /// Names of the failing flags.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if !self.structural_ok {
            f.push("structural_ok");
        }
        if !self.bricks_ok {
            f.push("bricks_ok");
        }
        if !self.counts_ok {
            f.push("counts_ok");
        }
        if !self.aggregate_ok {
            f.push("aggregate_ok");
        }
        f
    }
}

/// Verify that `cp` presents a feasible point of `inst`. Work is polynomial
/// in the support sizes and bit lengths; the magnitude of `n` never matters.
pub fn check_presentation(inst: &HugeNFoldInstance, cp: &CompactPresentation) -> ValidationReport {
    let mut rep = ValidationReport {
        structural_ok: true,
        bricks_ok: true,
        counts_ok: true,
        aggregate_ok: true,
        messages: Vec::new(),
    };
    let d = inst.d();
    if cp.types.len() != inst.t() {
        rep.structural_ok = false;
        rep.bricks_ok = false;
        rep.counts_ok = false;
        rep.aggregate_ok = false;
        rep.messages.push(alloc::format!("presentation has {} types, instance has {}", cp.types.len(), inst.t()));
        return rep;
    }
    let mut total = int::zeros(d);
    let mut widths_ok = true;
    for (k, (sup, ty)) in cp.types.iter().zip(inst.types()).enumerate() {
        if sup.is_empty() {
            rep.structural_ok = false;
            rep.messages.push(alloc::format!("type {k}: empty support"));
        }
        let mut count = Int::zero();
        for (i, (z, c)) in sup.iter().enumerate() {
            if z.len() != d {
                rep.structural_ok = false;
                widths_ok = false;
                rep.messages.push(alloc::format!("type {k}: brick of width {}", z.len()));
                continue;
            }
            if !c.is_positive() {
                rep.structural_ok = false;
                rep.messages.push(alloc::format!("type {k}: non-positive multiplicity {c}"));
            }
            if sup[..i].iter().any(|(y, _)| y == z) {
                rep.structural_ok = false;
                rep.messages.push(alloc::format!("type {k}: repeated brick {}", int::fmt_vec(z)));
            }
            if !ty.admits(inst.bimatrix(), z) {
                rep.bricks_ok = false;
                rep.messages.push(alloc::format!("type {k}: brick {} is not legal", int::fmt_vec(z)));
            }
            count += c;
            int::axpy(&mut total, c, z);
        }
        if count != ty.count {
            rep.counts_ok = false;
            rep.messages.push(alloc::format!("type {k}: multiplicities sum to {count}, expected {}", ty.count));
        }
    }
    if !widths_ok {
        rep.bricks_ok = false;
        rep.aggregate_ok = false;
        return rep;
    }
    match inst.bimatrix().a1().matvec(&total) {
        Ok(v) if v == *inst.b0() => {}
        _ => {
            rep.aggregate_ok = false;
            rep.messages.push("A1 applied to the brick sum differs from b0".into());
        }
    }
    rep
}

/// Per-type sums `Σ_z λ^k_z z` and their total.
pub fn aggregate(cp: &CompactPresentation, d: usize) -> Result<(Vec<IntVec>, IntVec)> {
    let mut per_type = Vec::with_capacity(cp.types.len());
    let mut total = int::zeros(d);
    for (k, sup) in cp.types.iter().enumerate() {
        if sup.is_empty() {
            return Err(Error::InvalidInstance(alloc::format!("type {k}: empty support")));
        }
        let mut acc = int::zeros(d);
        for (z, c) in sup {
            if z.len() != d {
                return Err(Error::Dimension(alloc::format!("type {k}: brick width {}", z.len())));
            }
            int::axpy(&mut acc, c, z);
        }
        int::axpy(&mut total, &Int::one(), &acc);
        per_type.push(acc);
    }
    Ok((per_type, total))
}

/// Objective value `Σ_k Σ_z λ^k_z (w^k · z)`.
pub fn cost(inst: &HugeNFoldInstance, cp: &CompactPresentation) -> Result<Int> {
    if cp.types.len() != inst.t() {
        return Err(Error::Dimension("presentation and instance type counts differ".into()));
    }
    let mut total = Int::zero();
    for (sup, ty) in cp.types.iter().zip(inst.types()) {
        for (z, c) in sup {
            total += c * int::dot(&ty.w, z)?;
        }
    }
    Ok(total)
}

/// Per-type objective contributions.
pub fn type_costs(inst: &HugeNFoldInstance, cp: &CompactPresentation) -> Result<Vec<Int>> {
    cp.types
        .iter()
        .zip(inst.types())
        .map(|(sup, ty)| sup.iter().map(|(z, c)| Ok(c * int::dot(&ty.w, z)?)).sum())
        .collect()
}

/// Write out all `n` bricks: types in order, bricks of a type in
/// lexicographic order, each repeated by its multiplicity.
pub fn expand(inst: &HugeNFoldInstance, cp: &CompactPresentation, max_bricks: u64) -> Result<Vec<IntVec>> {
    if inst.n() > &Int::from(max_bricks) {
        return Err(Error::TooLarge { what: "expanded brick count", limit: max_bricks });
    }
    let mut out = Vec::new();
    for m in cp.to_maps() {
        for (z, c) in m {
            let c = c.to_u64().ok_or_else(|| Error::InvalidInstance("negative multiplicity".into()))?;
            if out.len() as u64 + c > max_bricks {
                return Err(Error::TooLarge { what: "expanded brick count", limit: max_bricks });
            }
            out.extend(core::iter::repeat_n(z, c as usize));
        }
    }
    Ok(out)
}

/// Bookkeeping from one [`reduce_support`] run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReductionStats {
    pub merges: u64,
}

fn parity_class(z: &[Int]) -> Vec<bool> {
    z.iter().map(|x| x.is_odd()).collect()
}

/// Shrink every support to at most one brick per coordinate-parity class
/// (hence at most `2^d` bricks) by repeatedly replacing same-parity pairs
/// with their midpoint. Counts, per-type sums and per-type costs are
/// preserved exactly.
pub fn reduce_support(inst: &HugeNFoldInstance, cp: &CompactPresentation) -> Result<CompactPresentation> {
    reduce_support_stats(inst, cp).map(|(cp, _)| cp)
}

pub fn reduce_support_stats(
    inst: &HugeNFoldInstance,
    cp: &CompactPresentation,
) -> Result<(CompactPresentation, ReductionStats)> {
    if cp.types.len() != inst.t() {
        return Err(Error::Dimension("presentation and instance type counts differ".into()));
    }
    let d = inst.d();
    let mut stats = ReductionStats::default();
    let mut out = Vec::with_capacity(cp.types.len());
    for m in cp.to_maps() {
        // merges behave like a Euclidean algorithm on the multiplicities
        let initial = m.len() as u128;
        let bits = m.values().map(|c| c.bits()).max().unwrap_or(0)
            + m.keys().flatten().map(|x| x.bits()).max().unwrap_or(0)
            + 2;
        let cap = (1u128 << d.min(100)).saturating_mul(4 * initial * initial * bits as u128).max(1);
        let mut m = m;
        let mut steps: u128 = 0;
        while let Some((y1, y2)) = smallest_same_parity_pair(&m) {
            steps += 1;
            if steps > cap {
                return Err(Error::Internal(alloc::format!("support reduction exceeded {cap} merge steps")));
            }
            let a = m[&y1].clone();
            let b = m[&y2].clone();
            let k = a.clone().min(b.clone());
            let mid: IntVec = y1.iter().zip(&y2).map(|(p, q)| (p + q) / Int::from(2)).collect();
            let bump = |m: &mut BTreeMap<IntVec, Int>, z: &IntVec, delta: Int| {
                let e = m.entry(z.clone()).or_insert_with(Int::zero);
                *e += delta;
                if e.is_zero() {
                    m.remove(z);
                }
            };
            bump(&mut m, &y1, -k.clone());
            bump(&mut m, &y2, -k.clone());
            bump(&mut m, &mid, k * Int::from(2));
            stats.merges += 1;
        }
        out.push(m.into_iter().collect());
    }
    Ok((CompactPresentation { types: out }, stats))
}

/// Lexicographically smallest pair `(y', y'')` of distinct support bricks
/// with equal coordinate parities.
fn smallest_same_parity_pair(m: &BTreeMap<IntVec, Int>) -> Option<(IntVec, IntVec)> {
    let mut first_in_class: BTreeMap<Vec<bool>, &IntVec> = BTreeMap::new();
    // Iterating in lexicographic order, the first time a class repeats gives
    // the pair whose larger element is smallest; the smallest pair overall
    // has the smallest first element, so scan all repeats.
    let mut best: Option<(&IntVec, &IntVec)> = None;
    for z in m.keys() {
        let p = parity_class(z);
        match first_in_class.get(&p) {
            None => {
                first_in_class.insert(p, z);
            }
            Some(&y) => {
                let better = match best {
                    None => true,
                    Some((b1, _)) => y < b1,
                };
                if better {
                    best = Some((y, z));
                }
            }
        }
    }
    best.map(|(a, b)| (a.clone(), b.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int::{ivec, IntMatrix};

    /// d = 1 with no constraints: A1 = [1], A2 empty.
    fn line_instance(count: i64, b0: i64) -> HugeNFoldInstance {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1]], 1).unwrap(), IntMatrix::zeros(0, 1)).unwrap();
        let ty = BrickType {
            w: ivec(&[1]),
            l: alloc::vec![ExtInt::finite(0)],
            u: alloc::vec![ExtInt::finite(10)],
            b: ivec(&[]),
            count: Int::from(count),
        };
        HugeNFoldInstance::new(a, alloc::vec![ty], ivec(&[b0])).unwrap()
    }

    fn cp1(entries: &[(&[i64], i64)]) -> CompactPresentation {
        CompactPresentation { types: alloc::vec![entries.iter().map(|(z, c)| (ivec(z), Int::from(*c))).collect()] }
    }

    #[test]
    fn midpoint_merge() {
        let inst = line_instance(2, 2);
        let out = reduce_support(&inst, &cp1(&[(&[0], 1), (&[2], 1)])).unwrap();
        assert_eq!(out, cp1(&[(&[1], 2)]));
    }

    #[test]
    fn distinct_parities_untouched() {
        let inst = line_instance(5, 7);
        let cp = cp1(&[(&[1], 2), (&[2], 3)]);
        assert_eq!(reduce_support(&inst, &cp).unwrap(), cp);
    }

    #[test]
    fn batched_merge_moves_min_multiplicity() {
        let inst = line_instance(7, 10);
        let out = reduce_support(&inst, &cp1(&[(&[0], 5), (&[4], 2)])).unwrap();
        // (0,4) x2 -> 2 x4 ; then (0,2) x3 -> 1 x6 ; then single-parity classes
        assert_eq!(out.counts(), alloc::vec![Int::from(7)]);
        let (_, total) = aggregate(&out, 1).unwrap();
        assert_eq!(total, ivec(&[8]));
        assert!(out.types[0].len() <= 2);
    }

    #[test]
    fn check_flags() {
        let inst = line_instance(3, 6);
        assert!(check_presentation(&inst, &cp1(&[(&[2], 3)])).all_ok());
        let r = check_presentation(&inst, &cp1(&[(&[2], 2)]));
        assert!(!r.counts_ok && !r.aggregate_ok && r.bricks_ok);
        let r = check_presentation(&inst, &cp1(&[(&[11], 1), (&[0], 2)]));
        assert!(!r.bricks_ok);
        let r = check_presentation(&inst, &cp1(&[(&[2], 0), (&[2], 3)]));
        assert!(!r.structural_ok);
        let r = check_presentation(&inst, &CompactPresentation { types: alloc::vec![alloc::vec![]] });
        assert!(!r.structural_ok && !r.counts_ok);
        assert!(aggregate(&CompactPresentation { types: alloc::vec![alloc::vec![]] }, 1).is_err());
    }

    #[test]
    fn expand_orders_and_guards() {
        let inst = line_instance(3, 6);
        assert_eq!(expand(&inst, &cp1(&[(&[2], 3)]), 100).unwrap(), alloc::vec![ivec(&[2]); 3]);
        let huge = line_instance(1_000_000_000, 0);
        assert!(matches!(expand(&huge, &cp1(&[(&[0], 1_000_000_000)]), EXPAND_THRESHOLD), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn cost_and_aggregate_single_brick() {
        let inst = line_instance(4, 12);
        let cp = cp1(&[(&[3], 4)]);
        assert_eq!(cost(&inst, &cp).unwrap(), Int::from(12));
        assert_eq!(aggregate(&cp, 1).unwrap().1, ivec(&[12]));
    }

    #[test]
    fn instance_validation() {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1]], 1).unwrap(), IntMatrix::zeros(0, 1)).unwrap();
        let ty = |count: i64, l: ExtInt, u: ExtInt| BrickType { w: ivec(&[0]), l: alloc::vec![l], u: alloc::vec![u], b: ivec(&[]), count: Int::from(count) };
        assert!(HugeNFoldInstance::new(a.clone(), alloc::vec![ty(0, ExtInt::finite(0), ExtInt::PosInf)], ivec(&[0])).is_err());
        assert!(HugeNFoldInstance::new(a.clone(), alloc::vec![ty(1, ExtInt::PosInf, ExtInt::PosInf)], ivec(&[0])).is_err());
        assert!(HugeNFoldInstance::new(a.clone(), alloc::vec![ty(1, ExtInt::finite(3), ExtInt::finite(2))], ivec(&[0])).is_err());
        assert!(HugeNFoldInstance::new(a.clone(), alloc::vec![], ivec(&[0])).is_err());
        let ok = HugeNFoldInstance::new(a, alloc::vec![ty(2, ExtInt::NegInf, ExtInt::PosInf), ty(3, ExtInt::finite(0), ExtInt::PosInf)], ivec(&[0])).unwrap();
        assert_eq!(ok.n(), &Int::from(5));
    }
}
