//! Process exit codes.

use lidar_gsa::gsa::{AttackResult, StopReason};
use lidar_gsa::Error;

pub const OK: u8 = 0;
pub const ATTACK_FAILED: u8 = 3;
pub const CONFIG: u8 = 10;
pub const ORACLE: u8 = 11;
pub const BUDGET: u8 = 12;
pub const OUTPUT: u8 = 13;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Transport(_) | Error::Protocol { .. } => ORACLE,
        Error::BudgetExhausted { .. } => BUDGET,
        _ => CONFIG,
    }
}

/// Maps errors raised while reading inputs or computing.
pub fn input(e: Error) -> Failure {
    Failure::new(code_of(&e), e.to_string())
}

/// Maps errors raised while writing results; I/O failures become `OUTPUT`.
pub fn output(e: Error) -> Failure {
    let code = match e {
        Error::Io { .. } => OUTPUT,
        ref other => code_of(other),
    };
    Failure::new(code, e.to_string())
}

pub fn for_attack(r: &AttackResult) -> u8 {
    if r.success {
        return OK;
    }
    match r.stop_reason {
        StopReason::OracleError { .. } => ORACLE,
        StopReason::BudgetExhausted => BUDGET,
        StopReason::Completed | StopReason::EarlyStop => ATTACK_FAILED,
    }
}
