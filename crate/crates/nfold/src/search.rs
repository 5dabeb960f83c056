//! Augmentation rounds spread over threads.

use std::thread;

use nfold_core::augment::{merge, search_range, Round, Scoring, StepSearch};
use nfold_core::graver::GraverTemplates;
use nfold_core::{Budgets, CompactPresentation, HugeNFoldInstance, Result};

/// Splits the template list into contiguous chunks, one per thread, and
/// merges the chunk results in template order. The chosen step is the same
/// as with a serial search.
#[derive(Debug, Clone, Copy)]
pub struct ThreadedSearch {
    pub threads: usize,
}

impl StepSearch for ThreadedSearch {
    fn search(
        &self,
        inst: &HugeNFoldInstance,
        cp: &CompactPresentation,
        templates: &GraverTemplates,
        scoring: Scoring,
        budgets: &Budgets,
    ) -> Result<Round> {
        let total = templates.len();
        let threads = self.threads.clamp(1, total.max(1));
        if threads == 1 {
            return search_range(inst, cp, templates, 0..total, scoring, budgets);
        }
        let chunk = total.div_ceil(threads);
        let results: Vec<Result<Round>> = thread::scope(|s| {
            let handles: Vec<_> = (0..total)
                .step_by(chunk)
                .map(|lo| {
                    let range = lo..(lo + chunk).min(total);
                    s.spawn(move || search_range(inst, cp, templates, range, scoring, budgets))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
        });
        let mut round = Round::default();
        for r in results {
            round = merge(round, r?);
        }
        Ok(round)
    }
}
