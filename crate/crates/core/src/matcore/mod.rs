//! Small dense matrix kernels generic over the scalar type, plus flop counting.

mod linalg;
mod mat;
mod scalar;

pub use linalg::{
    cholesky, cholesky_in_place, cholesky_solve_in_place, lu_factor, lu_in_place, lu_solve_in_place,
    qr_qfactor, solve, solve_spd, LuFactors, SolveRhs,
};
pub use mat::{
    mat_add, mat_add_into, mat_mul, mat_mul_into, mat_mult_into, mat_sub, mat_sub_into, mat_tmul_into,
    mat_tvec_into, mat_vec, mat_vec_into, transpose, transpose_into, vec_add_into, vec_sub_into, Mat,
    Vector, MAX_DIM,
};
pub use scalar::{charge, with_flop_counting, Flop, FlopTally, Scalar};
