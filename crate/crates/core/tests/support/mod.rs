//! Helpers shared by the integration suites (also included by the cli
//! acceptance target).
#![allow(dead_code)]

pub mod corpus;
pub mod fuzz;
pub mod props;
