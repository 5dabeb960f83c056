//! Graver bases, Graver complexity of bimatrices and n-liftings.
//!
//! The basis is computed by completion: start from a lattice basis of the
//! kernel and its negation, add pairwise sums, reduce each sum by conformal
//! subtraction of known elements, and keep whatever does not reduce to zero.
//! The final set is filtered down to its conformally minimal elements.
//!
//! Internally vectors are `i64` with checked arithmetic; an overflow is
//! reported as an error rather than wrapping.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::int::{self, nfold_product_limited, Bimatrix, Int, IntMatrix, IntVec};

/// Default cap on the number of basis elements.
pub const ELEMENT_CAP: u64 = 1_000_000;

/// `x ⊑ y`: every coordinate has the same sign as in `y` and no larger magnitude.
pub fn conformal_leq(x: &[Int], y: &[Int]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::Dimension(alloc::format!("conformal_leq: {} vs {}", x.len(), y.len())));
    }
    Ok(x.iter().zip(y).all(|(a, b)| {
        if a.is_zero() {
            return true;
        }
        a.signum() == b.signum() && a.abs() <= b.abs()
    }))
}

/// The ⊑-minimal nonzero kernel elements of `matrix`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraverBasis {
    pub matrix: IntMatrix,
    pub elements: Vec<IntVec>,
}

impl GraverBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, v: &[Int]) -> bool {
        self.elements.binary_search_by(|e| e.as_slice().cmp(v)).is_ok()
    }

    /// Largest absolute entry over all elements.
    pub fn max_abs(&self) -> Int {
        self.elements
            .iter()
            .flat_map(|e| e.iter().map(|x| x.abs()))
            .max()
            .unwrap_or_else(Int::zero)
    }
}

/// Working vector with sign masks over all coordinates.
#[derive(Clone)]
struct Elem {
    v: Vec<i64>,
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl Elem {
    fn new(v: Vec<i64>) -> Self {
        let words = v.len().div_ceil(64).max(1);
        let mut pos = vec![0u64; words];
        let mut neg = vec![0u64; words];
        for (i, &x) in v.iter().enumerate() {
            if x > 0 {
                pos[i / 64] |= 1 << (i % 64);
            } else if x < 0 {
                neg[i / 64] |= 1 << (i % 64);
            }
        }
        Elem { v, pos, neg }
    }

    fn norm(&self, prefix: usize) -> u64 {
        self.v[..prefix].iter().fold(0u64, |acc, x| acc.saturating_add(x.unsigned_abs()))
    }
}

/// Bit masks selecting coordinate ranges.
struct Window {
    /// coordinates `[0, prefix)`
    prefix: Vec<u64>,
    /// coordinates `[0, compat)`
    compat: Vec<u64>,
    /// coordinates `[compat, prefix)`
    fresh: Vec<u64>,
    prefix_len: usize,
}

impl Window {
    fn new(words: usize, compat: usize, prefix: usize) -> Self {
        let mask = |len: usize| -> Vec<u64> {
            (0..words)
                .map(|w| {
                    let lo = w * 64;
                    if len >= lo + 64 {
                        u64::MAX
                    } else if len <= lo {
                        0
                    } else {
                        (1u64 << (len - lo)) - 1
                    }
                })
                .collect()
        };
        let p = mask(prefix);
        let c = mask(compat);
        let fresh = p.iter().zip(&c).map(|(a, b)| a & !b).collect();
        Window { prefix: p, compat: c, fresh, prefix_len: prefix }
    }

    /// `a ⊑ b` on the prefix coordinates.
    fn leq(&self, a: &Elem, b: &Elem) -> bool {
        for w in 0..self.prefix.len() {
            let m = self.prefix[w];
            if (a.pos[w] & !b.pos[w]) & m != 0 || (a.neg[w] & !b.neg[w]) & m != 0 {
                return false;
            }
        }
        a.v[..self.prefix_len]
            .iter()
            .zip(&b.v[..self.prefix_len])
            .all(|(x, y)| x.unsigned_abs() <= y.unsigned_abs())
    }

    /// Sign compatible on the already completed coordinates and clashing on
    /// some fresh coordinate: the only sums that can yield new elements.
    fn critical(&self, a: &Elem, b: &Elem) -> bool {
        let mut clash = false;
        for w in 0..self.prefix.len() {
            let opp = (a.pos[w] & b.neg[w]) | (a.neg[w] & b.pos[w]);
            if opp & self.compat[w] != 0 {
                return false;
            }
            if opp & self.fresh[w] != 0 {
                clash = true;
            }
        }
        clash
    }

    fn is_zero(&self, a: &Elem) -> bool {
        (0..self.prefix.len()).all(|w| (a.pos[w] | a.neg[w]) & self.prefix[w] == 0)
    }
}

fn checked_add(a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_add(*y).ok_or_else(|| Error::Internal("Graver entry overflow".into())))
        .collect()
}

fn checked_sub(a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_sub(*y).ok_or_else(|| Error::Internal("Graver entry overflow".into())))
        .collect()
}

fn to_i64(v: &[Int]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Internal("kernel basis entry exceeds 64 bits".into())))
        .collect()
}

/// Reduce `s` by conformal subtraction (on the window prefix) of basis elements.
fn normal_form(mut s: Elem, basis: &[Elem], win: &Window) -> Result<Elem> {
    'outer: loop {
        if win.is_zero(&s) {
            return Ok(s);
        }
        for g in basis {
            if win.leq(g, &s) {
                s = Elem::new(checked_sub(&s.v, &g.v)?);
                continue 'outer;
            }
        }
        return Ok(s);
    }
}

/// Pair checks allowed per element of the element cap.
const PAIR_CHECKS_PER_ELEMENT: u64 = 2_000;

/// Completion on coordinates `[0, prefix)`, assuming `gens` already has the
/// Graver property on `[0, compat)`.
fn complete(gens: Vec<Elem>, compat: usize, prefix: usize, cap: u64) -> Result<Vec<Elem>> {
    let words = gens.first().map_or(1, |e| e.pos.len());
    let win = Window::new(words, compat, prefix);
    let mut basis: Vec<Elem> = Vec::new();
    // bucket queue by prefix norm
    let mut queue: BTreeMap<u64, Vec<Elem>> = BTreeMap::new();
    let push = |q: &mut BTreeMap<u64, Vec<Elem>>, e: Elem| q.entry(e.norm(prefix)).or_default().push(e);
    // pending sums are bounded too, so hopeless inputs fail early
    let work_cap = cap.saturating_mul(16);
    let pair_cap = cap.saturating_mul(PAIR_CHECKS_PER_ELEMENT);
    let mut pushed = 0u64;
    let mut pairs = 0u64;
    for g in gens {
        push(&mut queue, g);
    }
    loop {
        let s = {
            let Some(mut entry) = queue.first_entry() else { break };
            let s = entry.get_mut().pop();
            if entry.get().is_empty() {
                entry.remove();
            }
            match s {
                Some(s) => s,
                None => continue,
            }
        };
        let r = normal_form(s, &basis, &win)?;
        if win.is_zero(&r) {
            continue;
        }
        pairs += basis.len() as u64;
        if pairs > pair_cap {
            return Err(Error::Budget { what: "Graver completion pairs", limit: pair_cap });
        }
        for g in &basis {
            if win.critical(&r, g) {
                push(&mut queue, Elem::new(checked_add(&r.v, &g.v)?));
                pushed += 1;
                if pushed > work_cap {
                    return Err(Error::Budget { what: "Graver completion sums", limit: work_cap });
                }
            }
        }
        basis.push(r);
        if basis.len() as u64 > cap.saturating_mul(4) {
            return Err(Error::Budget { what: "Graver basis elements", limit: cap });
        }
    }
    Ok(minimal_elements(basis, &win))
}

/// Graver basis of `b` with the default element cap.
pub fn graver_basis(b: &IntMatrix) -> Result<GraverBasis> {
    graver_basis_capped(b, ELEMENT_CAP)
}

/// Graver basis by project-and-lift: complete on a set of coordinates that
/// determines lattice points uniquely, then add the remaining coordinates
/// one at a time.
pub fn graver_basis_capped(b: &IntMatrix, cap: u64) -> Result<GraverBasis> {
    let n = b.cols();
    if n == 0 {
        return Err(Error::Dimension("Graver basis of a matrix without columns".into()));
    }
    let lattice = int::kernel_basis(b);
    if lattice.is_empty() {
        return Ok(GraverBasis { matrix: b.clone(), elements: Vec::new() });
    }
    let (ech, pivots) = int::lattice_echelon(&lattice, n)?;
    // pivots first, then the rest in natural order
    let mut order: Vec<usize> = pivots.clone();
    order.extend((0..n).filter(|c| !pivots.contains(c)));
    let permute = |v: &[Int]| -> Result<Vec<i64>> {
        let p: Vec<Int> = order.iter().map(|&c| v[c].clone()).collect();
        to_i64(&p)
    };
    let k = pivots.len();
    let mut gens = Vec::with_capacity(2 * k);
    for row in &ech {
        let v = permute(row)?;
        gens.push(Elem::new(v.iter().map(|x| -x).collect()));
        gens.push(Elem::new(v));
    }
    let mut current = complete(gens, 0, k, cap)?;
    for j in k..n {
        // negations are already present; lifting keeps the set symmetric
        current = complete(current, j, j + 1, cap)?;
    }
    if current.len() as u64 > cap {
        return Err(Error::Budget { what: "Graver basis elements", limit: cap });
    }
    let mut elements: Vec<IntVec> = current
        .into_iter()
        .map(|e| {
            let mut out = int::zeros(n);
            for (i, &c) in order.iter().enumerate() {
                out[c] = Int::from(e.v[i]);
            }
            out
        })
        .collect();
    elements.sort();
    elements.dedup();
    Ok(GraverBasis { matrix: b.clone(), elements })
}

fn minimal_elements(mut elems: Vec<Elem>, win: &Window) -> Vec<Elem> {
    let p = win.prefix_len;
    elems.sort_by(|a, b| a.norm(p).cmp(&b.norm(p)).then_with(|| a.v.cmp(&b.v)));
    elems.dedup_by(|a, b| a.v == b.v);
    let mut out: Vec<Elem> = Vec::new();
    for e in elems {
        if !out.iter().any(|m| win.leq(m, &e)) {
            out.push(e);
        }
    }
    out
}

/// Keep the ⊑-minimal nonzero vectors of a set (used by the oracle as well).
pub fn conformally_minimal(vs: &[IntVec]) -> Vec<IntVec> {
    let mut sorted: Vec<&IntVec> = vs.iter().filter(|v| !int::is_zero_vec(v)).collect();
    sorted.sort_by(|a, b| int::norm1(a).cmp(&int::norm1(b)).then_with(|| a.cmp(b)));
    sorted.dedup();
    let mut out: Vec<IntVec> = Vec::new();
    for v in sorted {
        if !out.iter().any(|m| conformal_leq(m, v).unwrap_or(false)) {
            out.push(v.clone());
        }
    }
    out.sort();
    out
}

/// The matrix whose columns are `A1 v` for every `v` in the Graver basis of `A2`.
fn complexity_matrix(a: &Bimatrix, cap: u64) -> Result<Option<IntMatrix>> {
    complexity_matrix_of(a, &graver_basis_capped(a.a2(), cap)?)
}

fn complexity_matrix_of(a: &Bimatrix, g2: &GraverBasis) -> Result<Option<IntMatrix>> {
    if g2.is_empty() {
        return Ok(None);
    }
    let cols: Vec<IntVec> = g2.elements.iter().map(|v| a.a1().matvec(v)).collect::<Result<_>>()?;
    let mut d = IntMatrix::zeros(a.r(), cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, x) in c.iter().enumerate() {
            d.set(i, j, x.clone());
        }
    }
    Ok(Some(d))
}

/// Graver complexity `g(A)`: the largest 1-norm of a Graver element of the
/// matrix with columns `A1 v`, `v` ranging over the Graver basis of `A2`;
/// zero when `A2` has trivial kernel.
pub fn graver_complexity(a: &Bimatrix) -> Result<usize> {
    graver_complexity_capped(a, ELEMENT_CAP)
}

pub fn graver_complexity_capped(a: &Bimatrix, cap: u64) -> Result<usize> {
    let Some(d) = complexity_matrix(a, cap)? else {
        return Ok(0);
    };
    let gd = graver_basis_capped(&d, cap)?;
    let max = gd.elements.iter().map(|e| int::norm1(e)).max().unwrap_or_else(Int::zero);
    max.to_usize().ok_or_else(|| Error::Internal("Graver complexity does not fit in usize".into()))
}

/// One Graver element of `A^(g)` up to brick permutation: its nonzero bricks,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Template {
    pub bricks: Vec<IntVec>,
}

impl Template {
    pub fn new(mut bricks: Vec<IntVec>) -> Self {
        bricks.retain(|b| !int::is_zero_vec(b));
        bricks.sort();
        Template { bricks }
    }

    pub fn len(&self) -> usize {
        self.bricks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bricks.is_empty()
    }

    pub fn negated(&self) -> Template {
        Template::new(self.bricks.iter().map(|b| int::neg(b)).collect())
    }
}

/// Canonical templates of a bimatrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraverTemplates {
    pub bimatrix: Bimatrix,
    /// The Graver complexity the templates were taken at.
    pub g: usize,
    pub templates: Vec<Template>,
    /// True iff `templates` is all of `G(A^(g))` up to permutation, so that
    /// the lack of an improving step proves optimality.
    pub complete: bool,
}

impl GraverTemplates {
    /// A partial template set assembled by the caller. Every template must
    /// lie in the kernel of every n-fold product it is lifted into.
    pub fn from_parts(bimatrix: Bimatrix, g: usize, mut templates: Vec<Template>) -> Result<Self> {
        for t in &templates {
            check_template(&bimatrix, t)?;
        }
        templates.sort();
        templates.dedup();
        Ok(GraverTemplates { bimatrix, g, templates, complete: false })
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

fn check_template(a: &Bimatrix, t: &Template) -> Result<()> {
    let mut sum = int::zeros(a.d());
    for b in &t.bricks {
        if b.len() != a.d() {
            return Err(Error::Dimension("template brick width".into()));
        }
        if !int::is_zero_vec(&a.a2().matvec(b)?) {
            return Err(Error::InvalidInstance("template brick outside ker A2".into()));
        }
        int::axpy(&mut sum, &Int::from(1), b);
    }
    if !int::is_zero_vec(&a.a1().matvec(&sum)?) {
        return Err(Error::InvalidInstance("template bricks do not cancel under A1".into()));
    }
    Ok(())
}

/// Split a vector of `n*d` entries into `n` bricks.
pub fn split_bricks(v: &[Int], d: usize) -> Vec<IntVec> {
    v.chunks(d).map(|c| c.to_vec()).collect()
}

/// `G(A^(g))` up to brick permutation, with `g = g(A)`.
pub fn graver_templates(a: &Bimatrix) -> Result<GraverTemplates> {
    graver_templates_capped(a, ELEMENT_CAP)
}

/// Templates assembled from the structure of the n-fold product.
///
/// Splitting every brick of a Graver element of `A^(g)` conformally into
/// elements of `G(A2)` yields a nonnegative element of `G(D)`, where `D` has
/// columns `A1 v` for `v` in `G(A2)`. So every template is a grouping of such
/// a multiset into at most `g` sign-compatible bricks; the templates are the
/// conformally minimal groupings.
pub fn graver_templates_capped(a: &Bimatrix, cap: u64) -> Result<GraverTemplates> {
    let g2 = graver_basis_capped(a.a2(), cap)?;
    let Some(dm) = complexity_matrix_of(a, &g2)? else {
        return Ok(GraverTemplates { bimatrix: a.clone(), g: 0, templates: Vec::new(), complete: true });
    };
    let gd = graver_basis_capped(&dm, cap)?;
    let g = gd
        .elements
        .iter()
        .map(|e| int::norm1(e))
        .max()
        .unwrap_or_else(Int::zero)
        .to_usize()
        .ok_or_else(|| Error::Internal("Graver complexity does not fit in usize".into()))?;
    let h: Vec<Vec<i64>> = g2.elements.iter().map(|v| to_i64(v)).collect::<Result<_>>()?;
    let mut groupings = Groupings { g, cap, seen: BTreeSet::new() };
    for lambda in gd.elements.iter().filter(|e| e.iter().all(|x| !x.is_negative())) {
        let mut items: Vec<&[i64]> = Vec::new();
        for (k, c) in lambda.iter().enumerate() {
            for _ in 0..c.to_usize().unwrap_or(0) {
                items.push(&h[k]);
            }
        }
        items.sort();
        groupings.run(&items)?;
    }
    let mut cands: Vec<Vec<Vec<i64>>> = groupings.seen.into_iter().collect();
    cands.sort_by_key(|t| t.iter().flatten().map(|x| x.unsigned_abs()).sum::<u64>());
    let norms: Vec<u64> = cands.iter().map(|t| t.iter().flatten().map(|x| x.unsigned_abs()).sum()).collect();
    let mut templates = Vec::new();
    for (i, y) in cands.iter().enumerate() {
        let reducible = (0..i).any(|j| norms[j] < norms[i] && z_below(&cands[j], y));
        if !reducible {
            templates.push(Template::new(y.iter().map(|b| b.iter().map(|&x| Int::from(x)).collect()).collect()));
        }
    }
    templates.sort();
    Ok(GraverTemplates { bimatrix: a.clone(), g, templates, complete: true })
}

/// The same set as [`graver_templates_capped`], read off the Graver basis of
/// the materialized product `A^(g)`. Much slower; kept as a cross-check.
pub fn graver_templates_by_product(a: &Bimatrix, cap: u64, max_columns: u64) -> Result<GraverTemplates> {
    let g = graver_complexity_capped(a, cap)?;
    if g == 0 {
        return Ok(GraverTemplates { bimatrix: a.clone(), g, templates: Vec::new(), complete: true });
    }
    let prod = nfold_product_limited(a, g, max_columns)?;
    let basis = graver_basis_capped(&prod, cap)?;
    let set: BTreeSet<Template> =
        basis.elements.iter().map(|e| Template::new(split_bricks(e, a.d()))).collect();
    Ok(GraverTemplates { bimatrix: a.clone(), g, templates: set.into_iter().collect(), complete: true })
}

/// Sign-compatible groupings of a multiset of bricks.
struct Groupings {
    g: usize,
    cap: u64,
    seen: BTreeSet<Vec<Vec<i64>>>,
}

impl Groupings {
    fn run(&mut self, items: &[&[i64]]) -> Result<()> {
        let mut blocks: Vec<Vec<i64>> = Vec::new();
        let mut placed = vec![0usize; items.len()];
        self.place(items, 0, &mut blocks, &mut placed)
    }

    fn place(&mut self, items: &[&[i64]], i: usize, blocks: &mut Vec<Vec<i64>>, placed: &mut [usize]) -> Result<()> {
        if i == items.len() {
            let mut t = blocks.clone();
            t.sort();
            self.seen.insert(t);
            if self.seen.len() as u64 > self.cap {
                return Err(Error::Budget { what: "Graver template candidates", limit: self.cap });
            }
            return Ok(());
        }
        let x = items[i];
        // equal items go to blocks in nondecreasing order
        let from = if i > 0 && items[i - 1] == x { placed[i - 1] } else { 0 };
        for k in from..blocks.len() {
            if blocks[k].iter().zip(x).all(|(s, v)| s.signum() * v.signum() >= 0) {
                let old = blocks[k].clone();
                blocks[k] = checked_add(&old, x)?;
                placed[i] = k;
                self.place(items, i + 1, blocks, placed)?;
                blocks[k] = old;
            }
        }
        if blocks.len() < self.g {
            blocks.push(x.to_vec());
            placed[i] = blocks.len() - 1;
            self.place(items, i + 1, blocks, placed)?;
            blocks.pop();
        }
        Ok(())
    }
}

/// Some arrangement of the bricks of `z` lies conformally below `y`.
fn z_below(z: &[Vec<i64>], y: &[Vec<i64>]) -> bool {
    if z.len() > y.len() {
        return false;
    }
    let leq = |a: &[i64], b: &[i64]| a.iter().zip(b).all(|(x, y)| *x == 0 || (x.signum() == y.signum() && x.abs() <= y.abs()));
    let adj: Vec<Vec<usize>> = z.iter().map(|a| (0..y.len()).filter(|&j| leq(a, &y[j])).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; y.len()];
    fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|o| augment(o, adj, owner, seen)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..z.len()).all(|i| augment(i, &adj, &mut owner, &mut vec![false; y.len()]))
}

/// An n-lifting: bricks placed at chosen positions of an otherwise zero
/// n-brick vector. Positions are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lifting {
    n: usize,
    d: usize,
    placed: Vec<(usize, IntVec)>,
}

impl Lifting {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn brick(&self, i: usize) -> IntVec {
        self.placed
            .iter()
            .find(|(p, _)| *p == i)
            .map(|(_, b)| b.clone())
            .unwrap_or_else(|| int::zeros(self.d))
    }

    /// Nonzero bricks with their positions.
    pub fn placed(&self) -> &[(usize, IntVec)] {
        &self.placed
    }

    /// All n bricks in order.
    pub fn bricks(&self) -> impl Iterator<Item = IntVec> + '_ {
        (0..self.n).map(move |i| self.brick(i))
    }

    /// Flattened vector of length `n*d`; only sensible for small `n`.
    pub fn to_vec(&self) -> IntVec {
        self.bricks().flatten().collect()
    }
}

/// Place the bricks of `bricks` (in order) at the strictly increasing
/// 0-based `positions` of an n-brick vector.
pub fn lift(bricks: &[IntVec], positions: &[usize], n: usize) -> Result<Lifting> {
    if bricks.len() != positions.len() {
        return Err(Error::Dimension(alloc::format!(
            "{} bricks for {} positions",
            bricks.len(),
            positions.len()
        )));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInstance("lifting positions must be strictly increasing".into()));
    }
    if positions.last().is_some_and(|&p| p >= n) {
        return Err(Error::InvalidInstance(alloc::format!("lifting position out of range for n = {n}")));
    }
    let d = bricks.first().map_or(0, |b| b.len());
    let placed = positions
        .iter()
        .zip(bricks)
        .filter(|(_, b)| !int::is_zero_vec(b))
        .map(|(&p, b)| (p, b.clone()))
        .collect();
    Ok(Lifting { n, d, placed })
}

/// Advance a strictly increasing tuple over `0..n` to its successor.
pub(crate) fn next_combination(pos: &mut [usize], n: usize) -> bool {
    let g = pos.len();
    let mut i = g;
    while i > 0 {
        i -= 1;
        if pos[i] < n - g + i {
            pos[i] += 1;
            for j in i + 1..g {
                pos[j] = pos[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Every n-lifting of every element (given as `g` ordered bricks), flattened.
/// Used to check the lifting structure on small products.
pub fn all_liftings(elements: &[Vec<IntVec>], n: usize) -> Result<BTreeSet<IntVec>> {
    let mut out = BTreeSet::new();
    for h in elements {
        let g = h.len();
        if g > n {
            return Err(Error::Dimension("lifting into fewer bricks than the element has".into()));
        }
        let mut pos: Vec<usize> = (0..g).collect();
        loop {
            out.insert(lift(h, &pos, n)?.to_vec());
            if !next_combination(&mut pos, n) {
                break;
            }
        }
    }
    Ok(out)
}
