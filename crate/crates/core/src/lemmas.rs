//! Finite checks of the rank lemmas, usable on any forest, and the
//! `verify-lemmas` suite built from them.

use serde::Serialize;

use crate::adversary::enumerate::{catalan, enumerate_marked_forests, DEFAULT_CAP};
use crate::adversary::{run_adversary, AdversaryConfig, AdversaryError, Mode};
use crate::algorithms::{extract_min, AlgorithmKind};
use crate::forest::Forest;
use crate::rank::monotone::{check_monotone_rank, random_monotone_sequence};
use crate::rank::{self, RankParams, ThresholdBase};
use crate::vm::{PureHeap, DEFAULT_RHO};

/// Counts of checked instances and failures for one property.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checked: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

impl Tally {
    pub fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(detail());
            }
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.checked += other.checked;
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation.clone();
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Unmarked subtree size of every live node, indexed by node id.
pub fn unmarked_sizes(forest: &Forest) -> Vec<usize> {
    let mut size = vec![0usize; forest.capacity()];
    for x in forest.postorder() {
        size[x.index()] = 1 + forest
            .children(x)
            .filter(|&c| !forest.node(c).rank.marked)
            .map(|c| size[c.index()])
            .sum::<usize>();
    }
    size
}

/// Every root with unmarked subtree size `m` and at most `f log m` unmarked
/// children has at least `g log m` efficiently linked children.
pub fn check_effcount(forest: &Forest, params: &RankParams, tally: &mut Tally) {
    let sizes = unmarked_sizes(forest);
    for r in forest.roots() {
        let m = sizes[r.index()];
        let log_m = (m as f64).log2();
        let children = rank::unmarked_child_count(forest, r);
        if children as f64 > params.f() * log_m {
            continue;
        }
        let eff = rank::count_efficient_children(forest, r, params);
        tally.record(eff as f64 >= params.g() * log_m, || {
            format!(
                "root {} m={m} unmarked children={children} efficient={eff} < g log m = {:.3}",
                forest.position_of(r),
                params.g() * log_m
            )
        });
    }
}

/// Every node of rank `k` has unmarked subtree size at most `w^k`.
pub fn check_size_bound(forest: &Forest, params: &RankParams, tally: &mut Tally) {
    let sizes = unmarked_sizes(forest);
    for x in forest.postorder() {
        let k = forest.node(x).rank.rank;
        let bound = (params.w as u128).checked_pow(k).unwrap_or(u128::MAX);
        let size = sizes[x.index()];
        tally.record(size as u128 <= bound, || {
            format!("node {} rank {k} has unmarked subtree size {size} > {bound}", forest.position_of(x))
        });
    }
}

/// The recurrence value `s_k` is at most `w^k` for every `k <= k_max`.
pub fn check_sk_bound(params: &RankParams, k_max: u32, tally: &mut Tally) {
    for k in 0..=k_max {
        let s = rank::max_unmarked_heap_size(k, params);
        let bound = (params.w as u128).checked_pow(k).unwrap_or(u128::MAX);
        tally.record(s <= bound, || {
            format!(
                "w={} W={} T={}: s_{k} = {s} > w^{k} = {bound}",
                params.w, params.window, params.threshold
            )
        });
    }
}

/// Parameter grid for the `s_k` check: `w in {3,5}`, `W in {1,2}`,
/// `T = 2^a w` with `a in {3,10}`.
pub fn sk_grid() -> Vec<RankParams> {
    let mut out = Vec::new();
    for d in [1, 2] {
        for window in [1, 2] {
            for a in [3, 10] {
                out.push(RankParams::from_exponent(d, window, a, ThresholdBase::W).expect("grid params are valid"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteConfig {
    /// Largest heap in the monotone trials and size of the adversary runs.
    pub n: usize,
    /// Number of random monotone sequences.
    pub trials: usize,
    pub seed: u64,
    pub params: RankParams,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n: 64,
            trials: 200,
            seed: 0,
            params: RankParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    #[serde(flatten)]
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.tally.passed())
    }

    pub fn check(&self, name: &str) -> Option<&Tally> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.tally)
    }
}

/// Runs every finite lemma and accounting check:
///
/// * `monotone-rank`: `trials` seeded monotonic sequences on at most `n` items
/// * `effcount`, `size-bound`, `rank-audit`: every root and node seen in
///   ledger-mode adversary runs of both algorithms at size `n`
/// * `sk-bound`: the recurrence against `w^k` on [`sk_grid`], `k <= 12`
/// * `maxdistinct`: enumeration against the Catalan recurrence for `n <= 8`
///   and the ceiling on exact-mode runs
/// * `eq1`, `eq2`, `subdistinct`: the accounting identities of every run
pub fn verify_lemmas(cfg: &SuiteConfig) -> Result<SuiteReport, AdversaryError> {
    let mut monotone = Tally::default();
    for t in 0..cfg.trials {
        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(t as u64);
        let algorithm = AlgorithmKind::ALL[t % AlgorithmKind::ALL.len()];
        let len = 4 * cfg.n.max(1);
        let ops = random_monotone_sequence(cfg.n.max(1), len, algorithm, cfg.params, seed)?;
        let mut heap = PureHeap::new(cfg.params, DEFAULT_RHO);
        let mut program = algorithm.program();
        let report = check_monotone_rank(&mut heap, &ops, |h| extract_min(h, program.as_mut()).map(|_| ()));
        match report {
            Ok(r) => monotone.record(r.is_clean(), || format!("seed {seed} ({algorithm}): {:?}", r.decreases[0])),
            Err(e) => monotone.record(false, || format!("seed {seed} ({algorithm}): {e}")),
        }
    }

    let mut effcount = Tally::default();
    let mut size_bound = Tally::default();
    let mut audit = Tally::default();
    let mut eq1 = Tally::default();
    let mut eq2 = Tally::default();
    let mut subdistinct = Tally::default();
    let mut maxdistinct = Tally::default();

    let mut runs = Vec::new();
    for algorithm in AlgorithmKind::ALL {
        runs.push(AdversaryConfig {
            n: cfg.n,
            algorithm,
            params: cfg.params,
            audit: true,
            ..Default::default()
        });
        runs.push(AdversaryConfig {
            n: cfg.n.min(10),
            k: 3,
            algorithm,
            mode: Mode::Exact,
            params: cfg.params,
            q: Some(3),
            audit: true,
            ..Default::default()
        });
    }
    for run in &runs {
        let label = format!("{} {:?} n={}", run.algorithm, run.mode, run.n);
        let report = match run_adversary(run) {
            Ok(r) => r,
            Err(e @ AdversaryError::SubdistinctViolated { .. }) => {
                subdistinct.record(false, || format!("{label}: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        subdistinct.record(true, String::new);
        effcount.merge(&report.lemmas.effcount);
        size_bound.merge(&report.lemmas.size_bound);
        let mismatches = report.verdicts.rank_audit_mismatches.unwrap_or(0);
        audit.record(mismatches == 0, || format!("{label}: {mismatches} rank cache mismatches"));
        eq1.record(report.verdicts.eq1_cost_identity, || format!("{label}: run cost differs from the round sum"));
        eq2.record(report.verdicts.eq2_violation_bound, || {
            format!(
                "{label}: {} violations x w = {} exceeds {} pairings",
                report.total_violations,
                report.total_violations * run.params.w as u64,
                report.total_pairings
            )
        });
        if let Some(ok) = report.verdicts.max_distinctness {
            maxdistinct.record(ok, || {
                format!("{label}: D = {} above {}", report.distinctness, report.max_distinctness)
            });
        }
    }

    for n in 0..=8 {
        let counted = enumerate_marked_forests(n, DEFAULT_CAP).expect("n <= 8 is under the cap");
        let expected = catalan(n) << n;
        maxdistinct.record(counted == expected, || format!("n={n}: enumerated {counted}, C_n 2^n = {expected}"));
    }

    let mut sk = Tally::default();
    for p in sk_grid() {
        check_sk_bound(&p, 12, &mut sk);
    }

    Ok(SuiteReport {
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        checks: vec![
            Check { name: "monotone-rank", tally: monotone },
            Check { name: "effcount", tally: effcount },
            Check { name: "size-bound", tally: size_bound },
            Check { name: "rank-audit", tally: audit },
            Check { name: "sk-bound", tally: sk },
            Check { name: "maxdistinct", tally: maxdistinct },
            Check { name: "eq1", tally: eq1 },
            Check { name: "eq2", tally: eq2 },
            Check { name: "subdistinct", tally: subdistinct },
        ],
    })
}
