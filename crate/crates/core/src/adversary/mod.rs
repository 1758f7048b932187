//! The decrease-key adversary: AI-TSD sets, evolutions, rounds and the
//! distinctness ledger.
//!
//! A run starts from one sequence of `n` inserts of 0 and executes `k`
//! rounds. Each round classifies the terminal structures (big/small), then
//! either designates the largest root as minimum (big) or designates it and
//! permutes decrease-keys on its children (small), extracts the minimum,
//! repairs every newly marked node with a decrease-key and inserts one key.

pub mod enumerate;
pub mod set;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{extract_min, AlgorithmKind};
use crate::forest::Position;
use crate::lemmas::{self, Tally};
use crate::rank::monotone::check_monotone_rank;
use crate::rank::RankParams;
use crate::vm::{Operation, PureHeap, VmError, DEFAULT_RHO};

pub use set::{
    AitsdSet, BigSmall, ChildCount, Classification, EvolutionKind, ExtractMinResult, PermuteResult, RootTarget,
    Sequence, Thresholds, TrailEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    #[default]
    Ledger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub n: usize,
    pub k: usize,
    pub algorithm: AlgorithmKind,
    pub mode: Mode,
    pub params: RankParams,
    pub rho: usize,
    /// Size of the permuted subset; `None` uses the mode default.
    pub q: Option<usize>,
    /// Constant in the ledger-mode subset size `m log n / log d`.
    pub m: f64,
    /// Largest materialized set allowed in exact mode.
    pub exact_cap: usize,
    /// Overrides `f log n` as the many-roots threshold.
    pub many_roots_limit: Option<f64>,
    /// Overrides `f log(n / (f log n))` as the small-case child threshold.
    pub small_children_limit: Option<f64>,
    /// Compare incremental ranks with a from-scratch evaluation after every
    /// mutation.
    pub audit: bool,
    /// Check the effcount and subtree-size lemmas after every evolution.
    pub check_lemmas: bool,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            n: 64,
            k: 8,
            algorithm: AlgorithmKind::TwoPass,
            mode: Mode::Ledger,
            params: RankParams::default(),
            rho: DEFAULT_RHO,
            q: None,
            m: 1.0,
            exact_cap: 100_000,
            many_roots_limit: None,
            small_children_limit: None,
            audit: false,
            check_lemmas: true,
        }
    }
}

impl AdversaryConfig {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        let bad = |m: String| Err(AdversaryError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        let needed = self.algorithm.program().registers();
        if self.rho < needed {
            return bad(format!("{} needs rho >= {needed}, got {}", self.algorithm, self.rho));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("m must be a positive number, got {}", self.m));
        }
        for (name, v) in [("many_roots_limit", self.many_roots_limit), ("small_children_limit", self.small_children_limit)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be a nonnegative number, got {v}"));
                }
            }
        }
        if self.exact_cap == 0 {
            return bad("exact_cap must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("exact-mode set grew to {size} sequences, above the cap of {cap}")]
    ExplosionGuard { size: usize, cap: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("{0} evolution attempted while a designated minimum root awaits extract-min")]
    OrderViolation(&'static str),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("extract-min evolution on an empty terminal structure")]
    EmptyForest,
    #[error("newly marked positions differ between surviving sequences: {expected:?} vs {found:?}")]
    SubdistinctViolated {
        expected: Vec<Position>,
        found: Vec<Position>,
    },
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub kind: BigSmall,
    pub classification: Classification,
    pub acem: u64,
    pub vs: u64,
    pub dc: u64,
    pub pairings: u64,
    /// `2 + dc + acem + vs`.
    pub cost: u64,
    pub sequences: usize,
    pub distinctness_delta: f64,
    pub ledger_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    /// Every sequence costs `n + sum(2 + dc + acem + vs)`.
    pub eq1_cost_identity: bool,
    /// `sum vs <= pairings / w`.
    pub eq2_violation_bound: bool,
    pub ai_preserved: bool,
    pub tsd_preserved: bool,
    /// Size `n` and no marks at every round boundary.
    pub round_invariants: bool,
    pub monotone: bool,
    /// Exact mode: `D <= log2(C_n 2^n)` after every evolution.
    pub max_distinctness: Option<bool>,
    /// Exact mode: the product of observed ratios equals the set size.
    pub count_trail_exact: Option<bool>,
    /// Exact mode: no evolution lost more than its analytic charge.
    pub analytic_dominates: Option<bool>,
    pub rank_audit_mismatches: Option<u64>,
}

impl Verdicts {
    pub fn all_passed(&self) -> bool {
        self.eq1_cost_identity
            && self.eq2_violation_bound
            && self.ai_preserved
            && self.tsd_preserved
            && self.round_invariants
            && self.monotone
            && self.max_distinctness != Some(false)
            && self.count_trail_exact != Some(false)
            && self.analytic_dominates != Some(false)
            && self.rank_audit_mismatches.unwrap_or(0) == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LemmaStats {
    pub effcount: Tally,
    pub size_bound: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryReport {
    pub config: AdversaryConfig,
    pub thresholds: Thresholds,
    pub rounds: Vec<RoundRecord>,
    pub trail: Vec<TrailEntry>,
    pub final_sequences: usize,
    pub distinctness: f64,
    pub ledger_distinctness: f64,
    pub max_distinctness: f64,
    pub total_cost: u64,
    pub total_pairings: u64,
    pub total_violations: u64,
    pub small_rounds: usize,
    pub small_fraction: f64,
    pub verdicts: Verdicts,
    pub lemmas: LemmaStats,
    /// Operation sequence of the first surviving sequence.
    pub representative_ops: Vec<Operation>,
}

struct Observer {
    on: bool,
    stats: LemmaStats,
}

impl Observer {
    fn look(&mut self, set: &AitsdSet, params: &RankParams) {
        if !self.on {
            return;
        }
        for s in &set.seqs {
            lemmas::check_effcount(s.heap.forest(), params, &mut self.stats.effcount);
            lemmas::check_size_bound(s.heap.forest(), params, &mut self.stats.size_bound);
        }
    }
}

/// One round of Algorithm 1.
pub fn run_round(set: &mut AitsdSet, params: &RankParams) -> Result<RoundRecord, AdversaryError> {
    run_round_observed(set, params, &mut Observer { on: false, stats: LemmaStats::default() })
}

fn run_round_observed(set: &mut AitsdSet, params: &RankParams, obs: &mut Observer) -> Result<RoundRecord, AdversaryError> {
    let d0 = set.distinctness();
    let l0 = set.ledger_distinctness();
    let classification = set.evolve_big_small()?;
    let (p, kind) = classification.big_small();
    let mut dc = 0;
    match (kind, p) {
        (BigSmall::Small, Some(p)) => {
            set.evolve_designated_min_root(&RootTarget::At(p))?;
            obs.look(set, params);
            dc = set.evolve_permute()?.q as u64;
        }
        (_, p) => {
            let target = p.map(RootTarget::At).unwrap_or(RootTarget::Leftmost);
            set.evolve_designated_min_root(&target)?;
        }
    }
    obs.look(set, params);
    let em = set.evolve_extract_min()?;
    obs.look(set, params);
    for v in &em.violations {
        set.evolve_decrease_key(v)?;
    }
    set.evolve_insert()?;
    obs.look(set, params);
    let vs = em.violations.len() as u64;
    Ok(RoundRecord {
        round: set.round,
        kind,
        classification,
        acem: em.acem,
        vs,
        dc,
        pairings: em.pairings,
        cost: 2 + dc + em.acem + vs,
        sequences: set.len(),
        distinctness_delta: set.distinctness() - d0,
        ledger_delta: set.ledger_distinctness() - l0,
    })
}

fn replay_is_monotone(seq: &Sequence, cfg: &AdversaryConfig) -> bool {
    let mut heap = PureHeap::new(cfg.params, cfg.rho);
    let mut program = cfg.algorithm.program();
    let report = check_monotone_rank(&mut heap, &seq.ops, |h| extract_min(h, program.as_mut()).map(|_| ()));
    matches!(report, Ok(r) if r.is_clean()) && heap.forest().structure_code() == seq.structure()
}

pub fn run_adversary(cfg: &AdversaryConfig) -> Result<AdversaryReport, AdversaryError> {
    cfg.validate()?;
    let mut set = AitsdSet::initial(cfg);
    let mut obs = Observer {
        on: cfg.check_lemmas,
        stats: LemmaStats::default(),
    };
    obs.look(&set, &cfg.params);
    let mut rounds = Vec::with_capacity(cfg.k);
    let mut round_invariants = set.sizes_are(cfg.n) && set.all_unmarked();
    let mut ai_preserved = true;
    for r in 0..cfg.k {
        set.round = r;
        rounds.push(run_round_observed(&mut set, &cfg.params, &mut obs)?);
        round_invariants &= set.sizes_are(cfg.n) && set.all_unmarked();
        ai_preserved &= set.traces_agree();
    }

    let expected_cost = cfg.n as u64 + rounds.iter().map(|r| r.cost).sum::<u64>();
    let total_pairings: u64 = rounds.iter().map(|r| r.pairings).sum();
    let total_violations: u64 = rounds.iter().map(|r| r.vs).sum();
    let max_d = enumerate::max_distinctness(cfg.n);
    let exact = cfg.mode == Mode::Exact;
    let small_rounds = rounds.iter().filter(|r| r.kind == BigSmall::Small).count();
    let verdicts = Verdicts {
        eq1_cost_identity: set.seqs.iter().all(|s| s.cost() == expected_cost),
        eq2_violation_bound: total_violations * cfg.params.w as u64 <= total_pairings,
        ai_preserved,
        tsd_preserved: set.tsd_preserved,
        round_invariants,
        monotone: set.seqs.iter().all(|s| replay_is_monotone(s, cfg)),
        max_distinctness: exact.then(|| set.trail.iter().all(|t| t.distinctness <= max_d + 1e-9)),
        count_trail_exact: exact.then(|| set.trail.iter().all(|t| t.count_trail_matches == Some(true))),
        analytic_dominates: exact.then(|| {
            set.trail
                .iter()
                .all(|t| t.observed_delta.is_some_and(|o| o >= t.analytic_delta - 1e-9))
        }),
        rank_audit_mismatches: cfg
            .audit
            .then(|| set.seqs.iter().map(|s| s.heap.audit_mismatches()).sum()),
    };
    Ok(AdversaryReport {
        config: cfg.clone(),
        thresholds: set.thresholds,
        final_sequences: set.len(),
        distinctness: set.distinctness(),
        ledger_distinctness: set.ledger_distinctness(),
        max_distinctness: max_d,
        total_cost: set.representative().cost(),
        total_pairings,
        total_violations,
        small_rounds,
        small_fraction: if rounds.is_empty() { 0.0 } else { small_rounds as f64 / rounds.len() as f64 },
        rounds,
        representative_ops: set.representative().ops.clone(),
        trail: set.trail,
        verdicts,
        lemmas: obs.stats,
    })
}

/// Result of running the same configuration in both modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub exact: AdversaryReport,
    pub ledger: AdversaryReport,
    /// Exact mode's observed-ratio product equals the set size at every step.
    pub count_trail_exact: bool,
    /// Exact mode never lost more than the analytic charge.
    pub analytic_dominates: bool,
    /// Both modes ran the same evolutions in the same order.
    pub schedules_agree: bool,
    /// Where schedules agree, ledger distinctness never exceeds the
    /// materialized one.
    pub ledger_is_lower_bound: bool,
}

impl CrossCheck {
    pub fn passed(&self) -> bool {
        self.count_trail_exact && self.analytic_dominates
    }
}

pub fn cross_check(cfg: &AdversaryConfig) -> Result<CrossCheck, AdversaryError> {
    let exact = run_adversary(&AdversaryConfig {
        mode: Mode::Exact,
        ..cfg.clone()
    })?;
    let ledger = run_adversary(&AdversaryConfig {
        mode: Mode::Ledger,
        ..cfg.clone()
    })?;
    let schedules_agree = exact.trail.len() == ledger.trail.len()
        && exact.trail.iter().zip(&ledger.trail).all(|(a, b)| a.evolution == b.evolution);
    let ledger_is_lower_bound = schedules_agree
        && exact
            .trail
            .iter()
            .zip(&ledger.trail)
            .all(|(a, b)| b.ledger_distinctness <= a.distinctness + 1e-9);
    Ok(CrossCheck {
        count_trail_exact: exact.verdicts.count_trail_exact == Some(true),
        analytic_dominates: exact.verdicts.analytic_dominates == Some(true),
        schedules_agree,
        ledger_is_lower_bound,
        exact,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds() {
        let r = run_adversary(&AdversaryConfig {
            k: 0,
            n: 10,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.distinctness, 0.0);
        assert_eq!(r.total_cost, 10);
        assert!(r.verdicts.all_passed());
    }

    #[test]
    fn ledger_run_keeps_invariants() {
        let r = run_adversary(&AdversaryConfig {
            n: 32,
            k: 6,
            audit: true,
            ..Default::default()
        })
        .unwrap();
        assert!(r.verdicts.all_passed(), "{:?}", r.verdicts);
        assert_eq!(r.rounds.len(), 6);
    }

    #[test]
    fn validation() {
        let cfg = AdversaryConfig {
            rho: 1,
            ..Default::default()
        };
        assert!(matches!(run_adversary(&cfg), Err(AdversaryError::InvalidConfig(_))));
    }
}
