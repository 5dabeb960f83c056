//! Graver-best augmentation over compactly presented points.
//!
//! A step lifts a template `h` by mapping each of its nonzero bricks `h^i`
//! to a support brick `z^i` of some type (a [`LiftingMap`]) and moves the
//! point by `α` times that lifting. Maps are enumerated over multisets:
//! equal consecutive template bricks receive non-decreasing slot indices.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::budget::{Budgets, Meter};
use crate::error::{Error, Result};
use crate::graver::{GraverTemplates, Template};
use crate::int::{self, ExtInt, Int, IntVec};
use crate::presentation::{self, BrickType, CompactPresentation, HugeNFoldInstance};

/// Target `(type, support brick)` for every nonzero brick of a template,
/// aligned with `Template::bricks`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LiftingMap {
    pub targets: Vec<(usize, IntVec)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentStep {
    pub template: Template,
    pub map: LiftingMap,
    pub alpha: Int,
    /// `α · Σ_i w^{k(i)} · h^i`, always negative.
    pub improvement: Int,
}

/// `copies` liftings of the same step applied at once.
///
/// A slot used by `u > 1` template bricks hands out `copies · u` of its units,
/// each moved by `α · h^i`. A slot used by a single template brick spreads
/// the copies evenly over all of its `λ` units: every unit moves by
/// `q · α · h^i` or `(q + 1) · α · h^i` with `q = copies / λ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BulkStep {
    pub step: AugmentStep,
    pub copies: Int,
}

impl BulkStep {
    pub fn improvement(&self) -> Int {
        &self.step.improvement * &self.copies
    }
}

/// Largest `α ≥ 0` keeping `z + α h` inside `[l, u]`; `None` if unbounded.
fn index_bound(l: &[ExtInt], u: &[ExtInt], z: &[Int], h: &[Int]) -> Option<Int> {
    let mut best: Option<Int> = None;
    for j in 0..h.len() {
        let q = if h[j].is_positive() {
            match &u[j] {
                ExtInt::Finite(uj) => (uj - &z[j]).div_floor(&h[j]),
                _ => continue,
            }
        } else if h[j].is_negative() {
            match &l[j] {
                ExtInt::Finite(lj) => (&z[j] - lj).div_floor(&-&h[j]),
                _ => continue,
            }
        } else {
            continue;
        };
        let q = q.max(Int::zero());
        best = Some(match best {
            Some(b) => b.min(q),
            None => q,
        });
    }
    best
}

fn multiplicity<'a>(cp: &'a CompactPresentation, k: usize, z: &[Int]) -> Option<&'a Int> {
    cp.types.get(k)?.iter().find(|(y, _)| y.as_slice() == z).map(|(_, c)| c)
}

/// Maximal step for a given template and lifting map, or `None` when the
/// direction does not improve or `α = 1` already leaves the bounds.
pub fn max_step(
    inst: &HugeNFoldInstance,
    cp: &CompactPresentation,
    h: &Template,
    phi: &LiftingMap,
) -> Result<Option<AugmentStep>> {
    if phi.targets.len() != h.len() {
        return Err(Error::Dimension("lifting map must assign every nonzero template brick".into()));
    }
    let mut uses: BTreeMap<(usize, &IntVec), u64> = BTreeMap::new();
    for (k, z) in &phi.targets {
        *uses.entry((*k, z)).or_default() += 1;
    }
    for ((k, z), u) in &uses {
        let have = multiplicity(cp, *k, z)
            .ok_or_else(|| Error::InvalidInstance(alloc::format!("type {k}: {} is not a support brick", int::fmt_vec(z))))?;
        if Int::from(*u) > *have {
            return Err(Error::InvalidInstance(alloc::format!(
                "lifting map uses {} {u} times but its multiplicity is {have}",
                int::fmt_vec(z)
            )));
        }
    }
    let mut direction = Int::zero();
    let mut alpha: Option<Int> = None;
    for (hi, (k, z)) in h.bricks.iter().zip(&phi.targets) {
        let ty = inst.types().get(*k).ok_or_else(|| Error::Dimension("type index out of range".into()))?;
        direction += int::dot(&ty.w, hi)?;
        if let Some(b) = index_bound(&ty.l, &ty.u, z, hi) {
            alpha = Some(match alpha {
                Some(a) => a.min(b),
                None => b,
            });
        }
    }
    if !direction.is_negative() {
        return Ok(None);
    }
    let alpha = alpha.ok_or(Error::Unbounded)?;
    if alpha.is_zero() {
        return Ok(None);
    }
    let improvement = &alpha * &direction;
    Ok(Some(AugmentStep { template: h.clone(), map: phi.clone(), alpha, improvement }))
}

fn bump(maps: &mut [BTreeMap<IntVec, Int>], k: usize, z: &IntVec, delta: &Int) -> Result<()> {
    let e = maps[k].entry(z.clone()).or_insert_with(Int::zero);
    *e += delta;
    if e.is_negative() {
        return Err(Error::Internal(alloc::format!("stale step: multiplicity of {} would go negative", int::fmt_vec(z))));
    }
    if e.is_zero() {
        maps[k].remove(z);
    }
    Ok(())
}

/// Move one unit from `z^i` to `z^i + α h^i` for every template brick.
pub fn apply_step(cp: &CompactPresentation, step: &AugmentStep) -> Result<CompactPresentation> {
    let mut maps = cp.to_maps();
    let one = Int::one();
    for (hi, (k, z)) in step.template.bricks.iter().zip(&step.map.targets) {
        if *k >= maps.len() {
            return Err(Error::Internal("stale step: type index".into()));
        }
        bump(&mut maps, *k, z, &-&one)?;
        let moved = int::add(z, &int::scale(&step.alpha, hi))?;
        bump(&mut maps, *k, &moved, &one)?;
    }
    Ok(CompactPresentation::from_maps(maps))
}

/// Apply a [`BulkStep`].
pub fn apply_bulk(cp: &CompactPresentation, bulk: &BulkStep) -> Result<CompactPresentation> {
    let mut maps = cp.to_maps();
    let step = &bulk.step;
    let targets = &step.map.targets;
    for (hi, (k, z)) in step.template.bricks.iter().zip(targets) {
        if *k >= maps.len() {
            return Err(Error::Internal("stale step: type index".into()));
        }
        let users = targets.iter().filter(|t| t.0 == *k && t.1 == *z).count();
        if users > 1 {
            bump(&mut maps, *k, z, &-&bulk.copies)?;
            let moved = int::add(z, &int::scale(&step.alpha, hi))?;
            bump(&mut maps, *k, &moved, &bulk.copies)?;
            continue;
        }
        let lambda = multiplicity(cp, *k, z).cloned().ok_or_else(|| Error::Internal("stale step: slot".into()))?;
        let (q, rem) = bulk.copies.div_rem(&lambda);
        for (times, units) in [(&q + 1, rem.clone()), (q.clone(), &lambda - &rem)] {
            if times.is_zero() || units.is_zero() {
                continue;
            }
            bump(&mut maps, *k, z, &-&units)?;
            let moved = int::add(z, &int::scale(&(&step.alpha * &times), hi))?;
            bump(&mut maps, *k, &moved, &units)?;
        }
    }
    Ok(CompactPresentation::from_maps(maps))
}

/// What a search ranks candidates by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scoring {
    /// A single lifting, as in the optimality argument.
    Single,
    /// As many disjoint copies of the lifting as the support and bounds
    /// allow; ranked by total improvement.
    Bulk,
}

/// A candidate found by [`search_range`], tagged with its position in the
/// canonical enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub template_index: usize,
    pub ordinal: u64,
    pub bulk: BulkStep,
    pub score: Int,
}

/// Result of evaluating a set of lifting maps.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Round {
    pub best: Option<Candidate>,
    /// Lifting maps evaluated.
    pub maps: u64,
}

/// Combine two rounds under the canonical tie-break: lower score, then
/// earlier template, then earlier map.
pub fn merge(a: Round, b: Round) -> Round {
    let maps = a.maps + b.maps;
    let best = match (a.best, b.best) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            let key = |c: &Candidate| (c.score.clone(), c.template_index, c.ordinal);
            Some(if key(&y) < key(&x) { y } else { x })
        }
    };
    Round { best, maps }
}

struct Slot<'a> {
    k: usize,
    z: &'a IntVec,
    lambda: &'a Int,
}

/// Per (template brick, slot) data: bound on α and cost contribution.
struct Entry {
    bound: Option<Int>,
    cost: Int,
}

/// Evaluate all lifting maps of templates `range` (indices into
/// `templates.templates`) and return the best candidate. `cp` must be in
/// canonical form.
pub fn search_range(
    inst: &HugeNFoldInstance,
    cp: &CompactPresentation,
    templates: &GraverTemplates,
    range: Range<usize>,
    scoring: Scoring,
    budgets: &Budgets,
) -> Result<Round> {
    if cp.types.len() != inst.t() {
        return Err(Error::Dimension("presentation and instance type counts differ".into()));
    }
    let slots: Vec<Slot> = cp
        .types
        .iter()
        .enumerate()
        .flat_map(|(k, sup)| sup.iter().map(move |(z, lambda)| Slot { k, z, lambda }))
        .collect();
    let mut meter = Meter::new("lifting maps per augmentation round", budgets.lifting_maps);
    let mut best: Option<Candidate> = None;
    for ti in range {
        let h = &templates.templates[ti];
        if h.is_empty() {
            continue;
        }
        let table: Vec<Vec<Option<Entry>>> = h
            .bricks
            .iter()
            .map(|hi| {
                slots
                    .iter()
                    .map(|s| {
                        let ty: &BrickType = &inst.types()[s.k];
                        let bound = index_bound(&ty.l, &ty.u, s.z, hi);
                        if bound.as_ref().is_some_and(Zero::is_zero) {
                            return Ok(None);
                        }
                        Ok(Some(Entry { bound, cost: int::dot(&ty.w, hi)? }))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        // cheapest completion of indices i.. for pruning
        let mut tail_min = vec![Int::zero(); h.len() + 1];
        let mut usable = true;
        for i in (0..h.len()).rev() {
            match table[i].iter().flatten().map(|e| &e.cost).min() {
                Some(c) => tail_min[i] = &tail_min[i + 1] + c,
                None => usable = false,
            }
        }
        if !usable || !tail_min[0].is_negative() {
            continue;
        }
        let mut walk = MapWalk {
            h,
            ti,
            slots: &slots,
            table: &table,
            tail_min: &tail_min,
            scoring,
            pick: vec![0; h.len()],
            uses: vec![0; slots.len()],
            ordinal: 0,
            meter: &mut meter,
            best: &mut best,
        };
        walk.dfs(0, Int::zero())?;
    }
    Ok(Round { best, maps: meter.used() })
}

struct MapWalk<'a, 'b> {
    h: &'a Template,
    ti: usize,
    slots: &'a [Slot<'a>],
    table: &'a [Vec<Option<Entry>>],
    tail_min: &'a [Int],
    scoring: Scoring,
    pick: Vec<usize>,
    uses: Vec<u64>,
    ordinal: u64,
    meter: &'b mut Meter,
    best: &'b mut Option<Candidate>,
}

impl MapWalk<'_, '_> {
    fn dfs(&mut self, i: usize, cost: Int) -> Result<()> {
        if !(&cost + &self.tail_min[i]).is_negative() {
            return Ok(());
        }
        if i == self.h.len() {
            return self.leaf(cost);
        }
        let start = if i > 0 && self.h.bricks[i] == self.h.bricks[i - 1] { self.pick[i - 1] } else { 0 };
        for s in start..self.slots.len() {
            let Some(e) = &self.table[i][s] else { continue };
            if Int::from(self.uses[s]) >= *self.slots[s].lambda {
                continue;
            }
            self.uses[s] += 1;
            self.pick[i] = s;
            let r = self.dfs(i + 1, &cost + &e.cost);
            self.uses[s] -= 1;
            r?;
        }
        Ok(())
    }

    fn leaf(&mut self, direction: Int) -> Result<()> {
        self.meter.tick()?;
        let ordinal = self.ordinal;
        self.ordinal += 1;
        let mut alpha: Option<Int> = None;
        for (i, &s) in self.pick.iter().enumerate() {
            if let Some(b) = &self.table[i][s].as_ref().expect("picked slot has an entry").bound {
                alpha = Some(match alpha {
                    Some(a) => a.min(b.clone()),
                    None => b.clone(),
                });
            }
        }
        let alpha = alpha.ok_or(Error::Unbounded)?;
        let improvement = &alpha * &direction;
        let copies = match self.scoring {
            Scoring::Single => Int::one(),
            Scoring::Bulk => self.bulk_copies(&alpha),
        };
        let score = &improvement * &copies;
        if self.best.as_ref().is_some_and(|b| b.score <= score) {
            return Ok(());
        }
        let map = LiftingMap {
            targets: self.pick.iter().map(|&s| (self.slots[s].k, self.slots[s].z.clone())).collect(),
        };
        *self.best = Some(Candidate {
            template_index: self.ti,
            ordinal,
            bulk: BulkStep { step: AugmentStep { template: self.h.clone(), map, alpha, improvement }, copies },
            score,
        });
        Ok(())
    }

    /// Largest number of copies every used slot can serve.
    fn bulk_copies(&self, alpha: &Int) -> Int {
        let mut per_slot: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &s) in self.pick.iter().enumerate() {
            per_slot.entry(s).or_default().push(i);
        }
        per_slot
            .iter()
            .filter_map(|(&s, users)| {
                let lambda = self.slots[s].lambda;
                if users.len() > 1 {
                    return Some(lambda / Int::from(users.len()));
                }
                let bound = self.table[users[0]][s].as_ref().expect("picked slot has an entry").bound.as_ref()?;
                Some(lambda * (bound / alpha))
            })
            .min()
            .unwrap_or_else(Int::one)
            .max(Int::one())
    }
}

/// The best single step over all templates and lifting maps, or `None`
/// when no improving step exists.
pub fn best_augmentation(
    inst: &HugeNFoldInstance,
    cp: &CompactPresentation,
    templates: &GraverTemplates,
    budgets: &Budgets,
) -> Result<Option<AugmentStep>> {
    let cp = cp.canonical();
    let round = search_range(inst, &cp, templates, 0..templates.len(), Scoring::Single, budgets)?;
    Ok(round.best.map(|c| c.bulk.step))
}

/// Strategy for one augmentation round; lets callers evaluate template
/// ranges concurrently.
pub trait StepSearch {
    fn search(
        &self,
        inst: &HugeNFoldInstance,
        cp: &CompactPresentation,
        templates: &GraverTemplates,
        scoring: Scoring,
        budgets: &Budgets,
    ) -> Result<Round>;
}

/// Single-threaded search in canonical order.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialSearch;

impl StepSearch for SerialSearch {
    fn search(
        &self,
        inst: &HugeNFoldInstance,
        cp: &CompactPresentation,
        templates: &GraverTemplates,
        scoring: Scoring,
        budgets: &Budgets,
    ) -> Result<Round> {
        search_range(inst, cp, templates, 0..templates.len(), scoring, budgets)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub budgets: Budgets,
    pub scoring: Scoring,
    /// Keep `(predicted, observed)` cost changes of every round.
    pub record_trace: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { budgets: Budgets::default(), scoring: Scoring::Bulk, record_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimizeReport {
    pub cp: CompactPresentation,
    pub cost: Int,
    pub rounds: u64,
    /// Lifting maps evaluated over all rounds.
    pub maps_evaluated: u64,
    /// Lifting maps evaluated by the last round, which found no step.
    pub final_maps: u64,
    pub trace: Vec<(Int, Int)>,
}

/// Augment until no template yields an improving step, reducing supports
/// after every step.
pub fn optimize(
    inst: &HugeNFoldInstance,
    cp0: &CompactPresentation,
    templates: &GraverTemplates,
    opts: &OptimizeOptions,
) -> Result<OptimizeReport> {
    optimize_with(inst, cp0, templates, opts, &SerialSearch)
}

pub fn optimize_with(
    inst: &HugeNFoldInstance,
    cp0: &CompactPresentation,
    templates: &GraverTemplates,
    opts: &OptimizeOptions,
    searcher: &dyn StepSearch,
) -> Result<OptimizeReport> {
    let report = presentation::check_presentation(inst, cp0);
    if !report.all_ok() {
        return Err(Error::InvalidInstance(alloc::format!(
            "starting point is not feasible ({})",
            report.failures().join(", ")
        )));
    }
    let mut cp = presentation::reduce_support(inst, &cp0.canonical())?;
    let mut cost = presentation::cost(inst, &cp)?;
    let mut rounds = 0u64;
    let mut maps = 0u64;
    let mut trace = Vec::new();
    let final_maps = loop {
        let round = searcher.search(inst, &cp, templates, opts.scoring, &opts.budgets)?;
        maps += round.maps;
        let Some(c) = round.best else {
            break round.maps;
        };
        rounds += 1;
        if rounds > opts.budgets.rounds {
            return Err(Error::Budget { what: "augmentation rounds", limit: opts.budgets.rounds });
        }
        let predicted = c.bulk.improvement();
        let next = apply_bulk(&cp, &c.bulk)?;
        let next = presentation::reduce_support(inst, &next)?;
        let next_cost = presentation::cost(inst, &next)?;
        if &next_cost - &cost != predicted {
            return Err(Error::Internal("applied step changed the cost by other than its prediction".into()));
        }
        if opts.record_trace {
            trace.push((predicted, &next_cost - &cost));
        }
        cp = next;
        cost = next_cost;
    };
    Ok(OptimizeReport { cp, cost, rounds, maps_evaluated: maps, final_maps, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int::{ivec, Bimatrix, IntMatrix};

    fn two_coord_instance(w: &[i64], u: &[i64]) -> HugeNFoldInstance {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1, 1]], 2).unwrap(), IntMatrix::zeros(0, 2)).unwrap();
        let ty = BrickType {
            w: ivec(w),
            l: vec![ExtInt::finite(0); 2],
            u: u.iter().map(|&x| ExtInt::finite(x)).collect(),
            b: ivec(&[]),
            count: Int::from(1),
        };
        HugeNFoldInstance::new(a, vec![ty], ivec(&[3])).unwrap()
    }

    fn cp_single(z: &[i64], c: i64) -> CompactPresentation {
        CompactPresentation { types: vec![vec![(ivec(z), Int::from(c))]] }
    }

    #[test]
    fn zero_direction_is_no_step() {
        let inst = two_coord_instance(&[1, 1], &[5, 5]);
        let h = Template::new(vec![ivec(&[-1, 1])]);
        let phi = LiftingMap { targets: vec![(0, ivec(&[3, 0]))] };
        assert_eq!(max_step(&inst, &cp_single(&[3, 0], 1), &h, &phi).unwrap(), None);
    }

    #[test]
    fn bound_rule() {
        let inst = two_coord_instance(&[2, 1], &[5, 2]);
        let h = Template::new(vec![ivec(&[-1, 1])]);
        let phi = LiftingMap { targets: vec![(0, ivec(&[3, 0]))] };
        let step = max_step(&inst, &cp_single(&[3, 0], 1), &h, &phi).unwrap().unwrap();
        assert_eq!(step.alpha, Int::from(2));
        assert_eq!(step.improvement, Int::from(-2));
        let next = apply_step(&cp_single(&[3, 0], 1), &step).unwrap();
        assert_eq!(next, cp_single(&[1, 2], 1));
    }

    #[test]
    fn capacity_violation_rejected() {
        let inst = two_coord_instance(&[2, 1], &[5, 2]);
        let h = Template::new(vec![ivec(&[-1, 1]), ivec(&[-1, 1])]);
        let phi = LiftingMap { targets: vec![(0, ivec(&[3, 0])), (0, ivec(&[3, 0]))] };
        assert!(max_step(&inst, &cp_single(&[3, 0], 1), &h, &phi).is_err());
    }

    #[test]
    fn apply_moves_units() {
        let cp = cp_single(&[3, 0], 2);
        let one = AugmentStep {
            template: Template::new(vec![ivec(&[-1, 1])]),
            map: LiftingMap { targets: vec![(0, ivec(&[3, 0]))] },
            alpha: Int::one(),
            improvement: Int::from(-1),
        };
        let next = apply_step(&cp, &one).unwrap();
        assert_eq!(next.types[0], vec![(ivec(&[2, 1]), Int::one()), (ivec(&[3, 0]), Int::one())]);
        let two = AugmentStep {
            template: Template::new(vec![ivec(&[-1, 1]), ivec(&[1, -1])]),
            map: LiftingMap { targets: vec![(0, ivec(&[3, 0])), (0, ivec(&[3, 0]))] },
            alpha: Int::one(),
            improvement: Int::from(-1),
        };
        let next = apply_step(&cp, &two).unwrap();
        assert_eq!(next.types[0], vec![(ivec(&[2, 1]), Int::one()), (ivec(&[4, -1]), Int::one())]);
        let stale = apply_step(&cp_single(&[0, 0], 1), &one);
        assert!(matches!(stale, Err(Error::Internal(_))));
    }
}
