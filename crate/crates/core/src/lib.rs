//! Pure heap model: a pointer-machine VM for extract-min programs, the rank
//! and mark analysis, the two-pass and multipass pairing algorithms, and a
//! deterministic decrease-key adversary with a distinctness ledger.

pub mod adversary;
pub mod algorithms;
pub mod config;
pub mod forest;
pub mod key;
pub mod lemmas;
pub mod rank;
pub mod trace;
pub mod vm;

pub use adversary::enumerate::{catalan, enumerate_marked_forests, max_distinctness};
pub use adversary::{cross_check, run_adversary, AdversaryConfig, AdversaryError, AdversaryReport, CrossCheck, Mode};
pub use algorithms::{extract_min, run_workload, AlgorithmKind, ExtractMinProgram, Workload, WorkloadReport};
pub use config::{ConfigError, RunConfig};
pub use forest::{Forest, NodeId, Position};
pub use key::{Delta, Key, KeyValue};
pub use lemmas::{verify_lemmas, SuiteConfig, SuiteReport, Tally};
pub use rank::{RankParams, ThresholdBase};
pub use trace::{Recording, RecordItem};
pub use vm::{Operation, PureHeap, SubopReturn, Suboperation, Trace, TraceEntry, VmError, DEFAULT_RHO};
