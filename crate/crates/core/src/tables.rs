//! Huge three-way tables: encoding, the slack program, and certificates.
//!
//! An `l × m × n` table is a stack of `n` layers; layer `k` has row sums
//! `f^k` and column sums `e^k`, and the `l × m` line sums `g` add all layers
//! cell by cell. Layers are bricks of the n-fold program with `A1 = I` and
//! `A2` the incidence matrix of `K_{l,m}`, cell `(i, j)` at index `j·l + i`.
//!
//! Feasibility is decided through the auxiliary slack program, which adds
//! per-brick slack for both blocks and minimizes the slack sum from a
//! trivial starting point. Zero slack yields a table; positive optimal
//! slack is an infeasibility certificate.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::augment::{self, OptimizeOptions, Scoring, SerialSearch, StepSearch};
use crate::budget::{Budgets, Meter};
use crate::conesolver;
use crate::error::{Error, Result};
use crate::graver::{self, GraverTemplates, Template};
use crate::int::{self, Bimatrix, ExtInt, Int, IntMatrix, IntVec};
use crate::presentation::{self, BrickType, CompactPresentation, HugeNFoldInstance};

/// Row sums, column sums and multiplicity of one layer type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableType {
    pub f: IntVec,
    pub e: IntVec,
    pub count: Int,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HugeTableInstance {
    pub l: usize,
    pub m: usize,
    /// `l × m` line sums.
    pub g: IntMatrix,
    pub types: Vec<TableType>,
}

/// A violated necessary condition on the margins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarginViolation {
    Negative { what: String },
    TypeBalance { k: usize, row_total: Int, col_total: Int },
    GlobalBalance { layer_total: Int, line_total: Int },
}

impl fmt::Display for MarginViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginViolation::Negative { what } => write!(f, "negative entry in {what}"),
            MarginViolation::TypeBalance { k, row_total, col_total } => {
                write!(f, "type {k}: row sums total {row_total} but column sums total {col_total}")
            }
            MarginViolation::GlobalBalance { layer_total, line_total } => {
                write!(f, "layers carry {layer_total} in total but line sums total {line_total}")
            }
        }
    }
}

/// Index of cell `(i, j)` in a flattened `l × m` layer.
pub fn cell(l: usize, i: usize, j: usize) -> usize {
    j * l + i
}

impl HugeTableInstance {
    pub fn new(l: usize, m: usize, g: IntMatrix, types: Vec<TableType>) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::Dimension("tables need l, m >= 1".into()));
        }
        if g.rows() != l || g.cols() != m {
            return Err(Error::Dimension(alloc::format!("line sums must be {l} x {m}")));
        }
        if types.is_empty() {
            return Err(Error::InvalidInstance("at least one layer type is required".into()));
        }
        for (k, t) in types.iter().enumerate() {
            if t.f.len() != l || t.e.len() != m {
                return Err(Error::Dimension(alloc::format!("type {k}: expected {l} row sums and {m} column sums")));
            }
            if !t.count.is_positive() {
                return Err(Error::InvalidInstance(alloc::format!("type {k}: count must be positive")));
            }
        }
        Ok(HugeTableInstance { l, m, g, types })
    }

    pub fn n(&self) -> Int {
        self.types.iter().map(|t| &t.count).sum()
    }

    /// Line sums in cell order.
    pub fn line_sums_flat(&self) -> IntVec {
        let mut out = int::zeros(self.l * self.m);
        for i in 0..self.l {
            for j in 0..self.m {
                out[cell(self.l, i, j)] = self.g.get(i, j).clone();
            }
        }
        out
    }

    /// The first violated sign or balance condition, if any.
    pub fn margin_violation(&self) -> Option<MarginViolation> {
        if self.line_sums_flat().iter().any(Signed::is_negative) {
            return Some(MarginViolation::Negative { what: "line sums".into() });
        }
        for (k, t) in self.types.iter().enumerate() {
            if t.f.iter().chain(&t.e).any(Signed::is_negative) {
                return Some(MarginViolation::Negative { what: alloc::format!("margins of type {k}") });
            }
        }
        for (k, t) in self.types.iter().enumerate() {
            let (row_total, col_total): (Int, Int) = (t.f.iter().sum(), t.e.iter().sum());
            if row_total != col_total {
                return Some(MarginViolation::TypeBalance { k, row_total, col_total });
            }
        }
        let layer_total: Int = self.types.iter().map(|t| &t.count * t.f.iter().sum::<Int>()).sum();
        let line_total: Int = self.line_sums_flat().iter().sum();
        if layer_total != line_total {
            return Some(MarginViolation::GlobalBalance { layer_total, line_total });
        }
        None
    }
}

/// `(I_{lm}, incidence of K_{l,m})`: row sums first, then column sums.
pub fn table_bimatrix(l: usize, m: usize) -> Result<Bimatrix> {
    let mut a2 = IntMatrix::zeros(l + m, l * m);
    for j in 0..m {
        for i in 0..l {
            a2.set(i, cell(l, i, j), Int::one());
            a2.set(l + j, cell(l, i, j), Int::one());
        }
    }
    Bimatrix::new(IntMatrix::identity(l * m), a2)
}

/// The table problem as a huge n-fold program with zero costs, zero lower
/// and infinite upper bounds.
pub fn encode_table(tbl: &HugeTableInstance) -> Result<HugeNFoldInstance> {
    if let Some(v) = tbl.margin_violation() {
        return Err(Error::InvalidInstance(alloc::format!("{v}")));
    }
    let d = tbl.l * tbl.m;
    let types = tbl
        .types
        .iter()
        .map(|t| BrickType {
            w: int::zeros(d),
            l: vec![ExtInt::finite(0); d],
            u: vec![ExtInt::PosInf; d],
            b: t.f.iter().chain(&t.e).cloned().collect(),
            count: t.count.clone(),
        })
        .collect();
    HugeNFoldInstance::new(table_bimatrix(tbl.l, tbl.m)?, types, tbl.line_sums_flat())
}

/// `C1 = [A1 | I_r | 0]`, `C2 = [A2 | 0 | I_s]`.
pub fn auxiliary_bimatrix(a: &Bimatrix) -> Result<Bimatrix> {
    let (r, s) = (a.r(), a.s());
    let c1 = IntMatrix::hstack(&[a.a1(), &IntMatrix::identity(r), &IntMatrix::zeros(r, s)])?;
    let c2 = IntMatrix::hstack(&[a.a2(), &IntMatrix::zeros(s, r), &IntMatrix::identity(s)])?;
    Bimatrix::new(c1, c2)
}

fn slack_costs(d: usize, r: usize, s: usize) -> IntVec {
    core::iter::repeat_n(Int::zero(), d).chain(core::iter::repeat_n(Int::one(), r + s)).collect()
}

fn is_zero_bound(b: &ExtInt) -> bool {
    b.as_finite().is_some_and(Zero::is_zero)
}

/// The slack program and its trivial feasible point.
///
/// Requires `b0 ≥ 0`, `b^k ≥ 0`, lower bounds `0` and upper bounds `+∞`;
/// with finite upper bounds the slack program would not be equivalent.
pub fn build_auxiliary(inst: &HugeNFoldInstance) -> Result<(HugeNFoldInstance, CompactPresentation)> {
    let a = inst.bimatrix();
    let (d, r, s) = (a.d(), a.r(), a.s());
    if inst.b0().iter().any(Signed::is_negative) {
        return Err(Error::InvalidInstance("slack program needs b0 >= 0".into()));
    }
    for (k, t) in inst.types().iter().enumerate() {
        if t.b.iter().any(Signed::is_negative) {
            return Err(Error::InvalidInstance(alloc::format!("slack program needs b >= 0 (type {k})")));
        }
        if !t.l.iter().all(is_zero_bound) || t.u.iter().any(ExtInt::is_finite) {
            return Err(Error::InvalidInstance(alloc::format!(
                "slack program needs bounds 0 <= x < inf (type {k})"
            )));
        }
    }
    let c = auxiliary_bimatrix(a)?;
    let width = d + r + s;
    let types: Vec<BrickType> = inst
        .types()
        .iter()
        .map(|t| BrickType {
            w: slack_costs(d, r, s),
            l: vec![ExtInt::finite(0); width],
            u: vec![ExtInt::PosInf; width],
            b: t.b.clone(),
            count: t.count.clone(),
        })
        .collect();
    let aux = HugeNFoldInstance::new(c, types, inst.b0().clone())?;
    let brick = |y: &[Int], b: &[Int]| -> IntVec { int::zeros(d).into_iter().chain(y.iter().cloned()).chain(b.iter().cloned()).collect() };
    let mut maps: Vec<BTreeMap<IntVec, Int>> = vec![BTreeMap::new(); inst.t()];
    for (k, t) in inst.types().iter().enumerate() {
        if k == 0 {
            *maps[0].entry(brick(inst.b0(), &t.b)).or_insert_with(Int::zero) += 1;
            let rest: Int = &t.count - 1;
            if rest.is_positive() {
                *maps[0].entry(brick(&int::zeros(r), &t.b)).or_insert_with(Int::zero) += rest;
            }
        } else {
            maps[k].insert(brick(&int::zeros(r), &t.b), t.count.clone());
        }
    }
    Ok((aux, CompactPresentation::from_maps(maps)))
}

/// Recover the original program from a slack program built by
/// [`build_auxiliary`]; fails if `aux` does not have that shape.
pub fn decode_auxiliary(aux: &HugeNFoldInstance) -> Result<HugeNFoldInstance> {
    let c = aux.bimatrix();
    let (r, s) = (c.r(), c.s());
    if c.d() <= r + s {
        return Err(Error::InvalidInstance("not a slack program: too few columns".into()));
    }
    let d = c.d() - r - s;
    let cols = |m: &IntMatrix, from: usize, to: usize| -> Result<IntMatrix> {
        let rows: Vec<IntVec> = (0..m.rows()).map(|i| m.row(i)[from..to].to_vec()).collect();
        IntMatrix::from_rows(&rows, to - from)
    };
    let a1 = cols(c.a1(), 0, d)?;
    let a2 = cols(c.a2(), 0, d)?;
    let a = Bimatrix::new(a1, a2)?;
    if auxiliary_bimatrix(&a)? != *c {
        return Err(Error::InvalidInstance("not a slack program: bimatrix shape".into()));
    }
    let w = slack_costs(d, r, s);
    let mut types = Vec::with_capacity(aux.t());
    for (k, t) in aux.types().iter().enumerate() {
        if t.w != w || !t.l.iter().all(is_zero_bound) || t.u.iter().any(ExtInt::is_finite) {
            return Err(Error::InvalidInstance(alloc::format!("not a slack program: type {k} costs or bounds")));
        }
        if t.b.iter().any(Signed::is_negative) {
            return Err(Error::InvalidInstance(alloc::format!("not a slack program: type {k} has negative b")));
        }
        types.push(BrickType {
            w: int::zeros(d),
            l: vec![ExtInt::finite(0); d],
            u: vec![ExtInt::PosInf; d],
            b: t.b.clone(),
            count: t.count.clone(),
        });
    }
    if aux.b0().iter().any(Signed::is_negative) {
        return Err(Error::InvalidInstance("not a slack program: negative b0".into()));
    }
    HugeNFoldInstance::new(a, types, aux.b0().clone())
}

/// Templates for the slack program over `a`: all of `G(C^(g))` when that is
/// computable within `budgets.aux_template_elements`, otherwise a partial
/// set of moves with up to three bricks.
///
/// The partial set is built from brick moves `x ∈ {e_j} ∪ {e_j + h : h ∈
/// G(A2), h_j < 0}` (for tables: alternating paths of odd length). Each `x`
/// gives `[x, -A1 x, -A2 x]` (slack taken from the same brick), the pair
/// `[x, 0, -A2 x], [0, -A1 x, 0]` (coupling slack taken from another brick),
/// and for every `h ∈ G(A2)` that removes a coordinate `x` adds, the triple
/// `[x, 0, -A2 x], [h, 0, 0], [0, -A1 (x + h), 0]` (another brick reroutes
/// along `h`). Only moves with negative slack change are kept.
pub fn phase_one_templates(a: &Bimatrix, budgets: &Budgets) -> Result<GraverTemplates> {
    let c = auxiliary_bimatrix(a)?;
    match graver::graver_templates_capped(&c, budgets.aux_template_elements) {
        Ok(t) => return Ok(t),
        Err(e) if e.is_budget() => {}
        Err(e) => return Err(e),
    }
    let d = a.d();
    let (r, s) = (a.r(), a.s());
    let circuits = graver::graver_basis_capped(a.a2(), budgets.graver_elements)?.elements;
    let mut moves: Vec<IntVec> = Vec::new();
    for j in 0..d {
        let mut e = int::zeros(d);
        e[j] = Int::one();
        moves.push(e);
    }
    for h in &circuits {
        for j in 0..d {
            if h[j].is_negative() {
                let mut x = h.clone();
                x[j] += 1;
                moves.push(x);
            }
        }
    }
    moves.sort();
    moves.dedup();
    let cat = |p: &[Int], q: &[Int], w: &[Int]| -> IntVec { p.iter().chain(q).chain(w).cloned().collect() };
    let coupling = |v: &[Int]| -> Result<IntVec> { Ok(cat(&int::zeros(d), &int::neg(&a.a1().matvec(v)?), &int::zeros(s))) };
    let mut templates = Vec::new();
    for x in &moves {
        let y = int::neg(&a.a1().matvec(x)?);
        let z = int::neg(&a.a2().matvec(x)?);
        let delta: Int = y.iter().chain(&z).sum();
        if !delta.is_negative() {
            continue;
        }
        templates.push(Template::new(vec![cat(x, &y, &z)]));
        if int::is_zero_vec(&y) {
            continue;
        }
        let head = cat(x, &int::zeros(r), &z);
        templates.push(Template::new(vec![head.clone(), coupling(x)?]));
        for h in &circuits {
            if !x.iter().zip(h).any(|(p, q)| p.is_positive() && q.is_negative()) {
                continue;
            }
            let rerouted = cat(h, &int::zeros(r), &int::zeros(s));
            templates.push(Template::new(vec![head.clone(), rerouted, coupling(&int::add(x, h)?)?]));
        }
    }
    let g = templates.iter().map(Template::len).max().unwrap_or(0);
    GraverTemplates::from_parts(c, g, templates)
}

/// Largest number of bricks the exact phase-one search accepts.
pub const EXACT_COUNT_LIMIT: u64 = 64;

/// Exact optimum of the slack program for small `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPhaseOne {
    pub min_slack: Int,
    /// Per type: chosen `x` parts with multiplicities.
    pub config: Vec<BTreeMap<IntVec, Int>>,
}

/// Minimum slack by branch and bound over explicit brick choices.
///
/// The slack sum equals `Σ b0 + Σ_k n_k Σ b^k − Σ_bricks (1ᵀA1 x + 1ᵀA2 x)`
/// for brick parts `x ≥ 0` with `A2 x ≤ b^k` and `A1 Σx ≤ b0`, so the search
/// maximizes the subtracted value. Needs nonnegative `A1, A2` whose columns
/// each contain a positive entry, and `n ≤ EXACT_COUNT_LIMIT`.
pub fn exact_phase_one(orig: &HugeNFoldInstance, budgets: &Budgets) -> Result<ExactPhaseOne> {
    let a = orig.bimatrix();
    let (a1, a2) = (a.a1(), a.a2());
    let d = a.d();
    let nonneg = |m: &IntMatrix| (0..m.rows()).all(|i| m.row(i).iter().all(|x| !x.is_negative()));
    if !nonneg(a1) || !nonneg(a2) {
        return Err(Error::InvalidInstance("exact phase one needs nonnegative A1 and A2".into()));
    }
    if (0..d).any(|j| (0..a2.rows()).all(|i| a2.get(i, j).is_zero()) && (0..a1.rows()).all(|i| a1.get(i, j).is_zero())) {
        return Err(Error::InvalidInstance("exact phase one needs every column bounded".into()));
    }
    let counts: Vec<u64> = orig
        .types()
        .iter()
        .map(|t| t.count.to_u64().filter(|&c| c <= EXACT_COUNT_LIMIT))
        .collect::<Option<_>>()
        .ok_or(Error::TooLarge { what: "bricks for exact phase one", limit: EXACT_COUNT_LIMIT })?;
    if counts.iter().sum::<u64>() > EXACT_COUNT_LIMIT {
        return Err(Error::TooLarge { what: "bricks for exact phase one", limit: EXACT_COUNT_LIMIT });
    }
    let mut meter = Meter::new("exact phase-one nodes", budgets.oracle_nodes);
    // candidate brick parts per type, best value first
    let mut cands: Vec<Vec<Cand>> = Vec::new();
    for t in orig.types() {
        let mut xs = Vec::new();
        let mut x = int::zeros(d);
        part_dfs(a1, a2, 0, &mut x, &mut orig.b0().clone(), &mut t.b.clone(), &mut xs, budgets.brick_set, &mut meter)?;
        let mut cs: Vec<Cand> = xs
            .into_iter()
            .map(|x| {
                let c1: Int = a1.matvec(&x).map(|v| v.iter().sum()).unwrap_or_default();
                let c2: Int = a2.matvec(&x).map(|v| v.iter().sum()).unwrap_or_default();
                let img = a1.matvec(&x).unwrap_or_default();
                Cand { value: &c1 + &c2, v1: c1, v2: c2, img, x }
            })
            .collect();
        cs.sort_by(|p, q| q.value.cmp(&p.value).then_with(|| p.x.cmp(&q.x)));
        cands.push(cs);
    }
    let slots: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| core::iter::repeat_n(k, c as usize)).collect();
    let max_v1: Vec<Int> = cands.iter().map(|c| c.iter().map(|x| x.v1.clone()).max().unwrap_or_default()).collect();
    let max_v2: Vec<Int> = cands.iter().map(|c| c.iter().map(|x| x.v2.clone()).max().unwrap_or_default()).collect();
    let mut st = Exact {
        cands: &cands,
        slots: &slots,
        max_v1: &max_v1,
        max_v2: &max_v2,
        rem: orig.b0().clone(),
        pick: vec![0; slots.len()],
        value: Int::zero(),
        best: None,
        meter,
    };
    st.dfs(0)?;
    let (best_value, pick) = st.best.expect("the zero configuration is always feasible");
    let mut config = vec![BTreeMap::new(); orig.t()];
    for (&k, &i) in slots.iter().zip(&pick) {
        *config[k].entry(cands[k][i].x.clone()).or_insert_with(Int::zero) += 1;
    }
    let total: Int = orig.b0().iter().sum::<Int>()
        + orig.types().iter().map(|t| &t.count * t.b.iter().sum::<Int>()).sum::<Int>();
    Ok(ExactPhaseOne { min_slack: total - best_value, config })
}

struct Cand {
    x: IntVec,
    img: IntVec,
    v1: Int,
    v2: Int,
    value: Int,
}

#[allow(clippy::too_many_arguments)]
fn part_dfs(
    a1: &IntMatrix,
    a2: &IntMatrix,
    j: usize,
    x: &mut IntVec,
    cap1: &mut IntVec,
    cap2: &mut IntVec,
    out: &mut Vec<IntVec>,
    limit: u64,
    meter: &mut Meter,
) -> Result<()> {
    meter.tick()?;
    if j == x.len() {
        out.push(x.clone());
        if out.len() as u64 > limit {
            return Err(Error::Budget { what: "brick parts for exact phase one", limit });
        }
        return Ok(());
    }
    // largest value of x_j keeping both capacity vectors nonnegative
    let mut ub: Option<Int> = None;
    for (m, cap) in [(a1, &*cap1), (a2, &*cap2)] {
        for i in 0..m.rows() {
            let a = m.get(i, j);
            if a.is_positive() {
                let q = &cap[i] / a;
                ub = Some(ub.map_or(q.clone(), |u: Int| u.min(q)));
            }
        }
    }
    let ub = ub.expect("columns are bounded");
    let mut v = Int::zero();
    while v <= ub {
        for i in 0..a1.rows() {
            cap1[i] -= a1.get(i, j) * &v;
        }
        for i in 0..a2.rows() {
            cap2[i] -= a2.get(i, j) * &v;
        }
        x[j] = v.clone();
        let r = part_dfs(a1, a2, j + 1, x, cap1, cap2, out, limit, meter);
        for i in 0..a1.rows() {
            cap1[i] += a1.get(i, j) * &v;
        }
        for i in 0..a2.rows() {
            cap2[i] += a2.get(i, j) * &v;
        }
        r?;
        v += 1;
    }
    x[j] = Int::zero();
    Ok(())
}

struct Exact<'a> {
    cands: &'a [Vec<Cand>],
    slots: &'a [usize],
    max_v1: &'a [Int],
    max_v2: &'a [Int],
    rem: IntVec,
    pick: Vec<usize>,
    value: Int,
    best: Option<(Int, Vec<usize>)>,
    meter: Meter,
}

impl Exact<'_> {
    fn dfs(&mut self, p: usize) -> Result<()> {
        self.meter.tick()?;
        if p == self.slots.len() {
            if self.best.as_ref().is_none_or(|(b, _)| self.value > *b) {
                self.best = Some((self.value.clone(), self.pick.clone()));
            }
            return Ok(());
        }
        if let Some((b, _)) = &self.best {
            let mut v1 = Int::zero();
            let mut v2 = Int::zero();
            for &k in &self.slots[p..] {
                v1 += &self.max_v1[k];
                v2 += &self.max_v2[k];
            }
            let room: Int = self.rem.iter().sum();
            if &self.value + v1.min(room) + v2 <= *b {
                return Ok(());
            }
        }
        let k = self.slots[p];
        let start = if p > 0 && self.slots[p - 1] == k { self.pick[p - 1] } else { 0 };
        for i in start..self.cands[k].len() {
            let c = &self.cands[k][i];
            if c.img.iter().zip(&self.rem).any(|(a, r)| a > r) {
                continue;
            }
            int::axpy(&mut self.rem, &-Int::one(), &c.img);
            self.value += &c.value;
            self.pick[p] = i;
            let r = self.dfs(p + 1);
            self.value -= &c.value;
            int::axpy(&mut self.rem, &Int::one(), &c.img);
            r?;
        }
        Ok(())
    }
}

/// Slack-program presentation of an exact configuration: every brick
/// carries its own second-block slack; the first brick of type 0 also holds
/// all coupling slack.
fn config_to_aux(orig: &HugeNFoldInstance, config: &[BTreeMap<IntVec, Int>]) -> Result<CompactPresentation> {
    let a = orig.bimatrix();
    let r = a.r();
    let mut total = int::zeros(a.d());
    for m in config {
        for (x, c) in m {
            int::axpy(&mut total, c, x);
        }
    }
    let y0 = int::sub(orig.b0(), &a.a1().matvec(&total)?)?;
    let mut maps: Vec<BTreeMap<IntVec, Int>> = vec![BTreeMap::new(); orig.t()];
    let mut first = true;
    for (k, m) in config.iter().enumerate() {
        let b = &orig.types()[k].b;
        for (x, c) in m {
            let z = int::sub(b, &a.a2().matvec(x)?)?;
            let mut c = c.clone();
            if first {
                let brick: IntVec = x.iter().chain(&y0).chain(&z).cloned().collect();
                *maps[k].entry(brick).or_insert_with(Int::zero) += 1;
                c -= 1;
                first = false;
            }
            if c.is_positive() {
                let brick: IntVec = x.iter().cloned().chain(int::zeros(r)).chain(z.iter().cloned()).collect();
                *maps[k].entry(brick).or_insert_with(Int::zero) += c;
            }
        }
    }
    Ok(CompactPresentation::from_maps(maps))
}

/// Drop the slack blocks of a zero-slack presentation.
fn strip_slack(orig: &HugeNFoldInstance, cp: &CompactPresentation) -> Result<CompactPresentation> {
    let d = orig.d();
    let maps = cp
        .to_maps()
        .into_iter()
        .map(|m| {
            let mut out: BTreeMap<IntVec, Int> = BTreeMap::new();
            for (v, c) in m {
                if !int::is_zero_vec(&v[d..]) {
                    return Err(Error::Internal("slack left in a zero-cost presentation".into()));
                }
                *out.entry(v[..d].to_vec()).or_insert_with(Int::zero) += c;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let cp = presentation::reduce_support(orig, &CompactPresentation::from_maps(maps))?;
    let rep = presentation::check_presentation(orig, &cp);
    if !rep.all_ok() {
        return Err(Error::Internal(alloc::format!("stripped presentation fails {}", rep.failures().join(", "))));
    }
    Ok(cp)
}

/// How optimality of the slack program was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofMethod {
    /// Full templates and no improving step.
    CompleteTemplates,
    /// Exact minimum by branch and bound over explicit bricks.
    Exhaustive,
}

/// What verification recomputes besides the presentation itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub method: ProofMethod,
    /// Lifting maps evaluated by the final round that found no step.
    pub final_maps: u64,
}

/// Optimal slack-program point with positive slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub aux: HugeNFoldInstance,
    pub cp: CompactPresentation,
    pub slack: Int,
    pub transcript: Transcript,
}

/// A table whose margins violate a sign or balance condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginCertificate {
    pub table: HugeTableInstance,
    pub violation: MarginViolation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Margins(MarginCertificate),
    Slack(InfeasibilityCertificate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// A feasible point of `inst`.
    Feasible { inst: HugeNFoldInstance, cp: CompactPresentation },
    Infeasible(Certificate),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Augment,
    Cone,
}

/// Which path produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    FastReject,
    Augmentation,
    /// Augmentation stalled with partial templates; the exact small-`n`
    /// search decided.
    Exhaustive,
    Cone,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub verdict: Verdict,
    pub route: Route,
    pub rounds: u64,
    pub maps_evaluated: u64,
}

/// Result of the two-phase method on a general program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NFoldOutcome {
    Optimal { cp: CompactPresentation, cost: Int },
    Infeasible(InfeasibilityCertificate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NFoldReport {
    pub outcome: NFoldOutcome,
    /// Rounds and maps over both phases.
    pub rounds: u64,
    pub maps_evaluated: u64,
}

/// Drives both strategies and caches slack-program templates per bimatrix.
pub struct TableSolver<'s> {
    pub budgets: Budgets,
    searcher: &'s (dyn StepSearch + 's),
    cache: Vec<(Bimatrix, GraverTemplates)>,
}

static SERIAL: SerialSearch = SerialSearch;

impl TableSolver<'static> {
    pub fn new(budgets: Budgets) -> Self {
        TableSolver { budgets, searcher: &SERIAL, cache: Vec::new() }
    }
}

impl<'s> TableSolver<'s> {
    pub fn with_searcher(budgets: Budgets, searcher: &'s (dyn StepSearch + 's)) -> Self {
        TableSolver { budgets, searcher, cache: Vec::new() }
    }

    /// Phase-one templates for programs over `a`.
    pub fn templates_for(&mut self, a: &Bimatrix) -> Result<&GraverTemplates> {
        if let Some(i) = self.cache.iter().position(|(b, _)| b == a) {
            return Ok(&self.cache[i].1);
        }
        let t = phase_one_templates(a, &self.budgets)?;
        self.cache.push((a.clone(), t));
        Ok(&self.cache.last().expect("just pushed").1)
    }

    fn options(&self) -> OptimizeOptions {
        OptimizeOptions { budgets: self.budgets, scoring: Scoring::Bulk, record_trace: false }
    }

    /// Minimize slack from the trivial point and turn the result into a
    /// verdict for `orig`.
    pub fn phase_one(&mut self, orig: &HugeNFoldInstance) -> Result<SolveReport> {
        let (aux, cp0) = build_auxiliary(orig)?;
        let opts = self.options();
        let searcher = self.searcher;
        let templates = self.templates_for(orig.bimatrix())?.clone();
        let rep = augment::optimize_with(&aux, &cp0, &templates, &opts, searcher)?;
        let (rounds, maps) = (rep.rounds, rep.maps_evaluated);
        let report = |verdict, route| SolveReport { verdict, route, rounds, maps_evaluated: maps };
        if rep.cost.is_zero() {
            let cp = strip_slack(orig, &rep.cp)?;
            return Ok(report(Verdict::Feasible { inst: orig.clone(), cp }, Route::Augmentation));
        }
        if templates.complete {
            let cert = InfeasibilityCertificate {
                aux,
                cp: rep.cp,
                slack: rep.cost,
                transcript: Transcript { method: ProofMethod::CompleteTemplates, final_maps: rep.final_maps },
            };
            return Ok(report(Verdict::Infeasible(Certificate::Slack(cert)), Route::Augmentation));
        }
        let exact = exact_phase_one(orig, &self.budgets).map_err(|e| match e {
            Error::TooLarge { .. } | Error::Budget { .. } => Error::Budget {
                what: "phase one stalled above zero slack and the instance is too large for the exact search",
                limit: EXACT_COUNT_LIMIT,
            },
            e => e,
        })?;
        if exact.min_slack.is_zero() {
            let aux_cp = config_to_aux(orig, &exact.config)?;
            let cp = strip_slack(orig, &aux_cp)?;
            return Ok(report(Verdict::Feasible { inst: orig.clone(), cp }, Route::Exhaustive));
        }
        let (cp, route) = if exact.min_slack == rep.cost {
            (rep.cp, Route::Augmentation)
        } else {
            let cp = presentation::reduce_support(&aux, &config_to_aux(orig, &exact.config)?)?;
            (cp, Route::Exhaustive)
        };
        let final_maps = self.final_round_maps(&aux, &cp, &templates)?;
        let cert = InfeasibilityCertificate {
            aux,
            cp,
            slack: exact.min_slack,
            transcript: Transcript { method: ProofMethod::Exhaustive, final_maps },
        };
        Ok(report(Verdict::Infeasible(Certificate::Slack(cert)), route))
    }

    fn final_round_maps(&self, aux: &HugeNFoldInstance, cp: &CompactPresentation, t: &GraverTemplates) -> Result<u64> {
        let round = self.searcher.search(aux, &cp.canonical(), t, Scoring::Single, &self.budgets)?;
        if round.best.is_some() {
            return Err(Error::Internal("optimal slack point admits an improving step".into()));
        }
        Ok(round.maps)
    }

    /// Decide a table instance.
    pub fn solve_table(&mut self, tbl: &HugeTableInstance, strategy: Strategy) -> Result<SolveReport> {
        if let Some(violation) = tbl.margin_violation() {
            let cert = MarginCertificate { table: tbl.clone(), violation };
            return Ok(SolveReport {
                verdict: Verdict::Infeasible(Certificate::Margins(cert)),
                route: Route::FastReject,
                rounds: 0,
                maps_evaluated: 0,
            });
        }
        let inst = encode_table(tbl)?;
        match strategy {
            Strategy::Augment => self.phase_one(&inst),
            Strategy::Cone => match conesolver::solve_cone(&inst, &self.budgets)? {
                Some(sol) => Ok(SolveReport {
                    verdict: Verdict::Feasible { inst, cp: sol.cp },
                    route: Route::Cone,
                    rounds: sol.queries,
                    maps_evaluated: 0,
                }),
                None => {
                    let mut rep = self.phase_one(&inst)?;
                    if rep.verdict.is_feasible() {
                        return Err(Error::Internal("cone search missed a feasible table".into()));
                    }
                    rep.route = Route::Cone;
                    Ok(rep)
                }
            },
        }
    }

    /// Two-phase augmentation for a general program with `b ≥ 0`, zero lower
    /// and infinite upper bounds: slack minimization, then optimization with
    /// the full templates of the program's own bimatrix.
    pub fn solve_nfold(&mut self, inst: &HugeNFoldInstance) -> Result<NFoldReport> {
        let first = self.phase_one(inst)?;
        let done = |outcome, rounds, maps_evaluated| Ok(NFoldReport { outcome, rounds, maps_evaluated });
        let cp = match first.verdict {
            Verdict::Feasible { cp, .. } => cp,
            Verdict::Infeasible(Certificate::Slack(c)) => {
                return done(NFoldOutcome::Infeasible(c), first.rounds, first.maps_evaluated)
            }
            Verdict::Infeasible(Certificate::Margins(_)) => {
                return Err(Error::Internal("margin certificate for a general program".into()))
            }
        };
        if inst.types().iter().all(|t| int::is_zero_vec(&t.w)) {
            let cost = presentation::cost(inst, &cp)?;
            return done(NFoldOutcome::Optimal { cp, cost }, first.rounds, first.maps_evaluated);
        }
        let templates = graver::graver_templates_capped(inst.bimatrix(), self.budgets.graver_elements)?;
        let rep = augment::optimize_with(inst, &cp, &templates, &self.options(), self.searcher)?;
        done(
            NFoldOutcome::Optimal { cp: rep.cp, cost: rep.cost },
            first.rounds + rep.rounds,
            first.maps_evaluated + rep.maps_evaluated,
        )
    }

    /// Check a certificate from scratch.
    pub fn verify(&mut self, cert: &Certificate) -> bool {
        match cert {
            Certificate::Margins(m) => m.table.margin_violation().as_ref() == Some(&m.violation),
            Certificate::Slack(c) => self.verify_slack(c).unwrap_or(false),
        }
    }

    fn verify_slack(&mut self, c: &InfeasibilityCertificate) -> Result<bool> {
        let orig = decode_auxiliary(&c.aux)?;
        if !presentation::check_presentation(&c.aux, &c.cp).all_ok() {
            return Ok(false);
        }
        if !c.slack.is_positive() || presentation::cost(&c.aux, &c.cp)? != c.slack {
            return Ok(false);
        }
        let templates = self.templates_for(orig.bimatrix())?.clone();
        let round = self.searcher.search(&c.aux, &c.cp.canonical(), &templates, Scoring::Single, &self.budgets)?;
        if round.best.is_some() || round.maps != c.transcript.final_maps {
            return Ok(false);
        }
        if templates.complete {
            return Ok(c.transcript.method == ProofMethod::CompleteTemplates);
        }
        if c.transcript.method != ProofMethod::Exhaustive {
            return Ok(false);
        }
        Ok(exact_phase_one(&orig, &self.budgets)?.min_slack == c.slack)
    }
}

/// Check a certificate with default serial search.
pub fn verify_certificate(cert: &Certificate, budgets: &Budgets) -> bool {
    TableSolver::new(*budgets).verify(cert)
}

/// Whether a slack certificate was built for exactly this table.
pub fn certificate_matches(tbl: &HugeTableInstance, cert: &Certificate) -> bool {
    match cert {
        Certificate::Margins(m) => m.table == *tbl,
        Certificate::Slack(c) => encode_table(tbl)
            .and_then(|inst| build_auxiliary(&inst))
            .is_ok_and(|(aux, _)| aux == c.aux),
    }
}

/// Layers of a feasible table presentation as `l × m` matrices with
/// multiplicities, per type.
pub fn layers(tbl: &HugeTableInstance, cp: &CompactPresentation) -> Result<Vec<Vec<(IntMatrix, Int)>>> {
    cp.types
        .iter()
        .map(|sup| {
            sup.iter()
                .map(|(z, c)| {
                    let mut layer = IntMatrix::zeros(tbl.l, tbl.m);
                    for i in 0..tbl.l {
                        for j in 0..tbl.m {
                            layer.set(i, j, z[cell(tbl.l, i, j)].clone());
                        }
                    }
                    Ok((layer, c.clone()))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int::ivec;

    fn table(l: usize, m: usize, g: &[&[i64]], types: &[(&[i64], &[i64], i64)]) -> HugeTableInstance {
        HugeTableInstance::new(
            l,
            m,
            IntMatrix::from_i64(g, m).unwrap(),
            types.iter().map(|(f, e, c)| TableType { f: ivec(f), e: ivec(e), count: Int::from(*c) }).collect(),
        )
        .unwrap()
    }

    fn symmetric() -> HugeTableInstance {
        table(2, 2, &[&[2, 2], &[2, 2]], &[(&[1, 1], &[1, 1], 4)])
    }

    #[test]
    fn encoding_shape() {
        let inst = encode_table(&symmetric()).unwrap();
        assert_eq!((inst.bimatrix().r(), inst.bimatrix().s(), inst.d()), (4, 4, 4));
        let ident = ivec(&[1, 0, 0, 1]);
        assert!(inst.types()[0].admits(inst.bimatrix(), &ident));
        let t33 = table(3, 3, &[&[0; 3], &[0; 3], &[0; 3]], &[(&[0; 3], &[0; 3], 1)]);
        let a = encode_table(&t33).unwrap();
        assert_eq!((a.bimatrix().r(), a.d(), a.bimatrix().s()), (9, 9, 6));
    }

    #[test]
    fn symmetric_check_and_aggregate() {
        let inst = encode_table(&symmetric()).unwrap();
        let good = CompactPresentation {
            types: vec![vec![(ivec(&[0, 1, 1, 0]), Int::from(2)), (ivec(&[1, 0, 0, 1]), Int::from(2))]],
        };
        assert!(presentation::check_presentation(&inst, &good).all_ok());
        let (_, total) = presentation::aggregate(&good, 4).unwrap();
        assert_eq!(total, ivec(&[2, 2, 2, 2]));
        assert_eq!(presentation::cost(&inst, &good).unwrap(), Int::zero());
        let all_ident = CompactPresentation { types: vec![vec![(ivec(&[1, 0, 0, 1]), Int::from(4))]] };
        let r = presentation::check_presentation(&inst, &all_ident);
        assert!(!r.aggregate_ok && r.counts_ok && r.bricks_ok);
        let short = CompactPresentation {
            types: vec![vec![(ivec(&[0, 1, 1, 0]), Int::from(1)), (ivec(&[1, 0, 0, 1]), Int::from(2))]],
        };
        assert!(!presentation::check_presentation(&inst, &short).counts_ok);
        let expanded = presentation::expand(&inst, &good, 100).unwrap();
        assert_eq!(expanded, vec![ivec(&[0, 1, 1, 0]), ivec(&[0, 1, 1, 0]), ivec(&[1, 0, 0, 1]), ivec(&[1, 0, 0, 1])]);
    }

    #[test]
    fn auxiliary_start() {
        let inst = encode_table(&symmetric()).unwrap();
        let (aux, cp0) = build_auxiliary(&inst).unwrap();
        assert!(presentation::check_presentation(&aux, &cp0).all_ok());
        assert_eq!(presentation::cost(&aux, &cp0).unwrap(), Int::from(24));
        assert_eq!(decode_auxiliary(&aux).unwrap(), inst);
        let single = encode_table(&table(2, 2, &[&[1, 0], &[0, 0]], &[(&[1, 0], &[1, 0], 1)])).unwrap();
        let (_, cp0) = build_auxiliary(&single).unwrap();
        assert_eq!(cp0.types[0].len(), 1);
    }

    #[test]
    fn symmetric_feasible_both_strategies() {
        let mut solver = TableSolver::new(Budgets::default());
        for strategy in [Strategy::Augment, Strategy::Cone] {
            let rep = solver.solve_table(&symmetric(), strategy).unwrap();
            let Verdict::Feasible { inst, cp } = rep.verdict else { panic!("expected feasible") };
            assert!(presentation::check_presentation(&inst, &cp).all_ok());
            assert!(cp.support_sizes().iter().all(|&s| s <= 2));
        }
    }

    #[test]
    fn contradiction_is_certified() {
        let tbl = table(2, 2, &[&[0, 0], &[0, 1]], &[(&[1, 0], &[1, 0], 1)]);
        let mut solver = TableSolver::new(Budgets::default());
        for strategy in [Strategy::Augment, Strategy::Cone] {
            let rep = solver.solve_table(&tbl, strategy).unwrap();
            let Verdict::Infeasible(cert) = rep.verdict else { panic!("expected infeasible") };
            assert!(matches!(cert, Certificate::Slack(_)));
            assert!(solver.verify(&cert));
            assert!(certificate_matches(&tbl, &cert));
        }
    }

    #[test]
    fn margin_violations_short_circuit() {
        let tbl = table(2, 2, &[&[1, 0], &[0, 0]], &[(&[1, 0], &[0, 0], 1)]);
        let rep = TableSolver::new(Budgets::default()).solve_table(&tbl, Strategy::Augment).unwrap();
        assert_eq!(rep.route, Route::FastReject);
        let Verdict::Infeasible(cert) = rep.verdict else { panic!() };
        assert!(verify_certificate(&cert, &Budgets::default()));
    }
}
