//! Helpers shared by unit tests.

macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} = {a} vs {} = {b} (tol {tol})", stringify!($a), stringify!($b));
    }};
}

pub(crate) use assert_close;

use rand::Rng;

use crate::linalg::{Matrix, Vector};

pub(crate) fn rng(seed: u64) -> rand_pcg::Pcg64 {
    use rand::SeedableRng;
    rand_pcg::Pcg64::seed_from_u64(seed)
}

pub(crate) fn random_vector(rng: &mut impl Rng, dim: usize, scale: f64) -> Vector {
    Vector::from_fn(dim, |_| rng.random_range(-scale..scale))
}

pub(crate) fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub(crate) fn reference_system() -> crate::system::LtiSystem {
    let a = Matrix::from_rows(&[[1.0, 0.2, 0.0], [0.0, 1.0, 0.2], [0.2, 0.0, 1.0]])
        .unwrap()
        .scaled(1.0 / 3.6);
    let b = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
    crate::system::LtiSystem::new(a, b).unwrap()
}
