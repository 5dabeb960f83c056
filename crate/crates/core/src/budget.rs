/// Search and size limits shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Columns allowed in an explicitly materialized n-fold product.
    pub materialize_columns: u64,
    /// Maximum number of Graver basis elements before giving up.
    pub graver_elements: u64,
    /// Element cap when trying to compute full templates of an auxiliary
    /// slack bimatrix; these are usually far out of reach.
    pub aux_template_elements: u64,
    /// Candidate (template, lifting map) pairs per augmentation round.
    pub lifting_maps: u64,
    /// Augmentation rounds in one `optimize` call.
    pub rounds: u64,
    /// Bricks produced by `expand`.
    pub expand_bricks: u64,
    /// Elements of one enumerated brick set.
    pub brick_set: u64,
    /// Branch-and-bound nodes of the cone membership search.
    pub cone_nodes: u64,
    /// Nodes visited by the brute-force oracles and exhaustive fallbacks.
    pub oracle_nodes: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            materialize_columns: 10_000,
            graver_elements: 1_000_000,
            aux_template_elements: 300,
            lifting_maps: 10_000_000,
            rounds: 1_000_000,
            expand_bricks: 100_000,
            brick_set: 1_000_000,
            cone_nodes: 10_000_000,
            oracle_nodes: 100_000_000,
        }
    }
}

impl Budgets {
    /// Replace every search budget (not the size thresholds) with `nodes`.
    pub fn with_search_budget(mut self, nodes: u64) -> Self {
        self.lifting_maps = nodes;
        self.cone_nodes = nodes;
        self.oracle_nodes = nodes;
        self
    }
}

/// Countdown used inside searches.
#[derive(Debug)]
pub(crate) struct Meter {
    used: u64,
    limit: u64,
    what: &'static str,
}

impl Meter {
    pub(crate) fn new(what: &'static str, limit: u64) -> Self {
        Meter { used: 0, limit, what }
    }

    #[inline]
    pub(crate) fn tick(&mut self) -> crate::Result<()> {
        self.used += 1;
        if self.used > self.limit {
            Err(crate::Error::Budget { what: self.what, limit: self.limit })
        } else {
            Ok(())
        }
    }

    pub(crate) fn used(&self) -> u64 {
        self.used
    }
}
