//! Optical Bloch equations of the driven two-level atom as an exact 4×4
//! propagator on the vectorised density matrix.
//!
//! Basis ordering is `(g, e)`; the density matrix is vectorised row-major as
//! `[ρ_gg, ρ_ge, ρ_eg, ρ_ee]`. The frame rotates with the drive laser, so the
//! coherently scattered field is stationary.

use crate::{EmitterParams, Error, Result, C64};
use nalgebra::{Matrix2, Matrix4, Vector4};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// σ⁻ = |g⟩⟨e|.
pub fn lowering() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ZERO, ZERO)
}

/// σ⁺ = |e⟩⟨g|.
pub fn raising() -> Matrix2<C64> {
    Matrix2::new(ZERO, ZERO, ONE, ZERO)
}

fn vec4(m: &Matrix2<C64>) -> Vector4<C64> {
    Vector4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn mat2(v: &Vector4<C64>) -> Matrix2<C64> {
    Matrix2::new(v[0], v[1], v[2], v[3])
}

/// Hamiltonian `-Δ|e⟩⟨e| + (Ω/2)(σ⁺ + σ⁻)` in the drive frame.
pub fn hamiltonian(p: &EmitterParams) -> Matrix2<C64> {
    let half = C64::from(p.rabi / 2.0);
    Matrix2::new(ZERO, half, half, C64::from(-p.delta))
}

/// 2×2 density matrix of the atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomState(pub Matrix2<C64>);

impl AtomState {
    pub fn ground() -> Self {
        AtomState(Matrix2::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn excited_population(&self) -> f64 {
        self.0[(1, 1)].re
    }

    /// ⟨σ⁻⟩ = ρ_eg.
    pub fn coherence(&self) -> C64 {
        self.0[(1, 0)]
    }

    pub fn trace(&self) -> C64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = (self.0[(0, 1)] + self.0[(1, 0)].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        mean - half_gap
    }

    /// Checks Hermiticity, unit trace and positivity to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = (self.0[(0, 1)] - self.0[(1, 0)].conj()).norm() + self.0[(0, 0)].im.abs() + self.0[(1, 1)].im.abs();
        if herm > tol {
            return Err(Error::Numerical(format!("atom state not Hermitian ({herm:e})")));
        }
        let tr = (self.trace() - ONE).norm();
        if tr > tol {
            return Err(Error::Numerical(format!("atom state trace off by {tr:e}")));
        }
        let ev = self.min_eigenvalue();
        if ev < -tol {
            return Err(Error::Numerical(format!("atom state eigenvalue {ev:e}")));
        }
        Ok(())
    }
}

/// Linear generator of the master equation on vectorised 2×2 operators.
#[derive(Debug, Clone, Copy)]
pub struct Liouvillian {
    params: EmitterParams,
    matrix: Matrix4<C64>,
}

impl Liouvillian {
    pub fn new(params: &EmitterParams) -> Result<Self> {
        params.validate()?;
        let h = hamiltonian(params);
        let sm = lowering();
        let sp = raising();
        let spsm = sp * sm;
        let decay = 2.0 * params.gamma;
        let i = C64::new(0.0, 1.0);
        let apply = |rho: &Matrix2<C64>| -> Matrix2<C64> {
            let comm = h * rho - rho * h;
            let jump = sm * rho * sp;
            let anti = spsm * rho + rho * spsm;
            -(comm * i) + (jump - anti * C64::from(0.5)) * C64::from(decay)
        };
        let mut matrix = Matrix4::zeros();
        for k in 0..4 {
            let mut e = Vector4::zeros();
            e[k] = ONE;
            let col = vec4(&apply(&mat2(&e)));
            matrix.set_column(k, &col);
        }
        Ok(Liouvillian { params: *params, matrix })
    }

    pub fn params(&self) -> &EmitterParams {
        &self.params
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    /// Exact propagator `exp(L t)` for `t >= 0`.
    pub fn propagator(&self, t: f64) -> Matrix4<C64> {
        (self.matrix * C64::from(t)).exp()
    }

    /// Propagates an arbitrary (not necessarily physical) operator.
    pub fn evolve(&self, op: &Matrix2<C64>, t: f64) -> Matrix2<C64> {
        mat2(&(self.propagator(t) * vec4(op)))
    }

    pub fn evolve_with(&self, propagator: &Matrix4<C64>, op: &Matrix2<C64>) -> Matrix2<C64> {
        mat2(&(propagator * vec4(op)))
    }

    pub fn evolve_state(&self, state: &AtomState, t: f64) -> AtomState {
        AtomState(self.evolve(&state.0, t))
    }

    /// Steady state from the null space of the generator.
    ///
    /// Solves `L ρ = 0` with the first row replaced by the trace condition.
    pub fn steady_state(&self) -> Result<AtomState> {
        let mut a = self.matrix;
        a[(0, 0)] = ONE;
        a[(0, 1)] = ZERO;
        a[(0, 2)] = ZERO;
        a[(0, 3)] = ONE;
        let b = Vector4::new(ONE, ZERO, ZERO, ZERO);
        let x = a.lu().solve(&b).ok_or_else(|| Error::Numerical("singular steady-state system".into()))?;
        let mut m = mat2(&x);
        // symmetrise away round-off
        let off = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
        m[(0, 1)] = off;
        m[(1, 0)] = off.conj();
        m[(0, 0)] = C64::from(m[(0, 0)].re);
        m[(1, 1)] = C64::from(m[(1, 1)].re);
        Ok(AtomState(m))
    }
}
