//! HDG and WG discretizations of the mixed Poisson problem
//! `c p + grad u = 0`, `div p = f` on the unit square with `u = 0` on the
//! boundary, their conforming limit methods, parameter-dependent norms and
//! the study harnesses built on them.

#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod basis;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod linalg;
mod local;
pub mod manufactured;
pub mod mesh;
pub mod norms;
pub mod oracle;
pub mod quadrature;
pub mod selfcheck;
pub mod solution;
pub mod spaces;

pub use error::{Error, Result};
