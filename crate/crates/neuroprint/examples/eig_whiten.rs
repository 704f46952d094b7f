//! Build a random SPD covariance, whiten it, and solve a generalized
//! eigenproblem between two class covariances — the linear algebra the
//! spatial filters are made of.

use ndarray::Array2;
use neuroprint::linalg::{gen_eig_sym, sym_eig, whitening, SymMatrix};
use neuroprint::rng::SplitMix64;

fn random_spd(n: usize, rng: &mut SplitMix64) -> SymMatrix {
    let r = Array2::from_shape_fn((n, n), |_| rng.next_gaussian());
    let mut c = r.dot(&r.t());
    for i in 0..n {
        c[(i, i)] += 1e-3;
    }
    SymMatrix::symmetrized(c).expect("symmetric by construction")
}

fn main() {
    let n = 6;
    let mut rng = SplitMix64::new(42);
    let c1 = random_spd(n, &mut rng);
    let c2 = random_spd(n, &mut rng);

    let eig = sym_eig(&c1).expect("eigendecomposition");
    println!("eigenvalues of C1 (descending):");
    for v in eig.values.iter() {
        println!("  {v:.6}");
    }

    // P·C̄·Pᵀ = I
    let composite = SymMatrix::symmetrized(c1.entries() + c2.entries()).expect("sum is symmetric");
    let p = whitening(&composite).expect("composite is SPD");
    let should_be_eye = p.dot(composite.entries()).dot(&p.t());
    let worst = should_be_eye
        .indexed_iter()
        .map(|((i, j), &v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0f64, f64::max)
        ;
    println!("whitening: max |P·C·Pᵀ − I| = {worst:.2e}");

    // C1·v = λ·(C1+C2)·v; the λ sorted descending are the variance
    // shares class 1 holds along each shared direction.
    let gen = gen_eig_sym(&c1, &composite).expect("generalized problem");
    println!("generalized eigenvalues (class-1 variance share per direction):");
    for &lam in gen.values.iter() {
        println!("  {lam:.4}   (class 2 holds {:.4})", 1.0 - lam);
    }
    let v0 = gen.vectors.column(0).to_owned();
    let lhs = c1.entries().dot(&v0);
    let rhs = composite.entries().dot(&v0) * gen.values[0];
    let resid = (&lhs - &rhs).iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("top eigenpair residual |C1·v − λ·(C1+C2)·v| = {resid:.2e}");
}
