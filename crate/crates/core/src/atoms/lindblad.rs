//! Full steady state of the four-level master equation, used to validate the
//! weak-probe continued fraction.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use super::ladder::{DriveFields, LadderSystem};
use crate::error::{Error, Result};

type Liouvillian = SMatrix<Complex64, 16, 16>;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub Matrix4<Complex64>);

impl DensityMatrix {
    /// Element `(j, k)` with levels numbered 1..=4.
    pub fn element(&self, j: usize, k: usize) -> Complex64 {
        self.0[(j - 1, k - 1)]
    }

    /// Probe coherence in the same convention as [`super::weak_probe_coherence`].
    pub fn probe_coherence(&self) -> Complex64 {
        self.element(1, 2)
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.0[(i, i)].re)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        // Symmetrize so the Hermitian solver sees an exactly Hermitian input.
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = h.symmetric_eigenvalues();
        [ev[0], ev[1], ev[2], ev[3]]
    }
}

fn hamiltonian(f: &DriveFields) -> Matrix4<Complex64> {
    let mut h = Matrix4::<Complex64>::zeros();
    let c = |x: f64| Complex64::new(x, 0.0);
    h[(1, 1)] = c(f.delta_p);
    h[(2, 2)] = c(f.delta_p + f.delta_c);
    h[(3, 3)] = c(f.delta_p + f.delta_c + f.delta_rf);
    for (j, omega) in [(0, f.omega_p), (1, f.omega_c), (2, f.omega_rf)] {
        h[(j, j + 1)] = c(omega / 2.0);
        h[(j + 1, j)] = c(omega / 2.0);
    }
    h
}

/// Jump operators: cascade decay k -> k-1 and pure dephasing of each excited level.
fn jump_operators(s: &LadderSystem) -> Vec<Matrix4<Complex64>> {
    let mut ops = Vec::new();
    for (k, rate) in [(1, s.big_gamma2), (2, s.big_gamma3), (3, s.big_gamma4)] {
        let mut l = Matrix4::<Complex64>::zeros();
        l[(k - 1, k)] = Complex64::new(rate.sqrt(), 0.0);
        ops.push(l);
    }
    for level in 2..=4 {
        let deph = s.dephasing(level);
        if deph > 0.0 {
            let mut l = Matrix4::<Complex64>::zeros();
            l[(level - 1, level - 1)] = Complex64::new((2.0 * deph).sqrt(), 0.0);
            ops.push(l);
        }
    }
    ops
}

/// `vec(A X B)` for row-major vectorization is `(A kron B^T) vec(X)`.
fn kron(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> Liouvillian {
    let mut out = Liouvillian::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    out[(i * 4 + k, j * 4 + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn liouvillian(s: &LadderSystem, f: &DriveFields) -> Liouvillian {
    let id = Matrix4::<Complex64>::identity();
    let h = hamiltonian(f);
    let mi = Complex64::new(0.0, -1.0);
    let mut lv = (kron(&h, &id) - kron(&id, &h.transpose())) * mi;
    let half = Complex64::new(0.5, 0.0);
    for l in jump_operators(s) {
        let ldl = l.adjoint() * l;
        lv +=
            kron(&l, &l.conjugate()) - kron(&ldl, &id) * half - kron(&id, &ldl.transpose()) * half;
    }
    lv
}

/// Steady state of `drho/dt = -i[H, rho] + D(rho)` with unit trace.
///
/// The trace condition replaces the equation for `rho11`; the system is
/// scaled by the probe decay rate before the LU solve.
pub fn lindblad_steady_state(system: &LadderSystem, fields: &DriveFields) -> Result<DensityMatrix> {
    system.validate()?;
    fields.validate()?;
    let scale = 1.0 / system.big_gamma2;
    let mut a = liouvillian(system, fields) * Complex64::new(scale, 0.0);
    let mut b = SVector::<Complex64, 16>::zeros();
    for j in 0..16 {
        a[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..4 {
        a[(0, i * 4 + i)] = Complex64::new(1.0, 0.0);
    }
    b[0] = Complex64::new(1.0, 0.0);

    let x = a
        .full_piv_lu()
        .solve(&b)
        .ok_or(Error::SingularLiouvillian)?;
    let residual = (a * x - b).norm();
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::SingularLiouvillian);
    }
    let rho = Matrix4::from_fn(|i, j| x[i * 4 + j]);
    Ok(DensityMatrix(rho))
}
