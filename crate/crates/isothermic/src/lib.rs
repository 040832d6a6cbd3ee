// `!(a <= b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmc;
pub mod error;
pub mod grid;
pub mod oracles;
pub mod pipeline;
pub mod quat;
pub mod transforms;
