pub mod compare;
pub mod error;
pub mod gen;
pub mod kalman_par;
pub mod kalman_seq;
pub mod matcore;
pub mod scan;
pub mod simhw;
