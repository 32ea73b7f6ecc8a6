pub mod budget;
pub mod compile;
pub mod decode;
pub mod ensemble;
pub mod eval;
pub mod simulate;
