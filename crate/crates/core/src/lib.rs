#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod competitors;
pub mod error;
pub mod harness;
pub mod nulldist;
pub mod randomn;
pub mod seed;
pub mod simgen;
pub mod specialfn;
pub mod statistic;
