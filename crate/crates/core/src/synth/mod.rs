//! Synthetic corpora with known attachment kernels, and a brute-force oracle
//! for small-instance equivalence checks.

mod generator;
mod oracle;

pub use generator::{generate_team_corpus, GeneratorParams, TeamSize};
pub use oracle::{
    brute_force_metrics, OracleCohort, OracleDelta, OracleOptions, OracleReport, OracleSnapshot,
    ORACLE_PAIR_LIMIT,
};
