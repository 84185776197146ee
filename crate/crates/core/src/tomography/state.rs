use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Basis labels of the two-photon time-bin space, in matrix order.
pub const BASIS: [&str; 4] = ["ss", "sl", "ls", "ll"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Matrix2<C64> {
        let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        match self {
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'x' | 'X' => Ok(Pauli::X),
            'y' | 'Y' => Ok(Pauli::Y),
            'z' | 'Z' => Ok(Pauli::Z),
            _ => Err(Error::param(format!("invalid basis label `{c}`"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        }
    }

    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

/// `σ_i ⊗ σ_j` with side A as the first factor.
pub fn pauli_product(i: Pauli, j: Pauli) -> Matrix4<C64> {
    let (a, b) = (i.matrix(), j.matrix());
    a.kronecker(&b)
}

/// Two-outcome projector `(I ± σ_i⊗σ_j)/2`.
pub fn povm_element(i: Pauli, j: Pauli, sign: i8) -> Result<Matrix4<C64>> {
    let s = match sign {
        1 => 1.0,
        -1 => -1.0,
        _ => return Err(Error::param(format!("sign must be ±1, got {sign}"))),
    };
    Ok((Matrix4::identity() + pauli_product(i, j) * C64::from(s)) * C64::from(0.5))
}

/// Density matrix of the two time-bin qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(pub Matrix4<C64>);

impl DensityMatrix4 {
    pub fn from_pure(psi: [C64; 4]) -> Self {
        let v = nalgebra::Vector4::from(psi);
        let n = v.norm_squared();
        DensityMatrix4(v * v.adjoint() / C64::from(n))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix4(Matrix4::identity() * C64::from(0.25))
    }

    /// `(|s,l⟩ + |l,s⟩)/√2`.
    pub fn bell() -> Self {
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let z = C64::from(0.0);
        Self::from_pure([z, h, h, z])
    }

    pub fn expectation(&self, op: &Matrix4<C64>) -> f64 {
        (self.0 * op).trace().re
    }

    pub fn correlation(&self, i: Pauli, j: Pauli) -> f64 {
        self.expectation(&pauli_product(i, j))
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let h = (self.0 + self.0.adjoint()) * C64::from(0.5);
        let e = SymmetricEigen::new(h).eigenvalues;
        let mut v = [e[0], e[1], e[2], e[3]];
        v.sort_by(f64::total_cmp);
        v
    }

    /// Checks Hermiticity, unit trace and positivity to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = (self.0 - self.0.adjoint()).norm();
        if herm > tol {
            return Err(Error::Numerical(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = (self.0.trace() - C64::from(1.0)).norm();
        if tr > tol {
            return Err(Error::Numerical(format!("density matrix trace off by {tr:e}")));
        }
        let min = self.eigenvalues()[0];
        if min < -tol {
            return Err(Error::Numerical(format!("density matrix eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..4).map(|r| (0..4).map(|c| [self.0[(r, c)].re, self.0[(r, c)].im]).collect()).collect()
    }

    pub fn from_nested(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(Error::Format("density matrix must be 4×4".into()));
        }
        Ok(DensityMatrix4(Matrix4::from_fn(|r, c| C64::new(rows[r][c][0], rows[r][c][1]))))
    }
}

/// The 16 real parameters of a lower-triangular `T`: four real diagonal
/// entries, then `(re, im)` of the entries below the diagonal row by row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularParams(pub [f64; 16]);

/// Positions of the complex sub-diagonal entries in parameter order.
pub(crate) const LOWER: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

impl TriangularParams {
    pub fn t_matrix(&self) -> Matrix4<C64> {
        let p = &self.0;
        let mut t = Matrix4::zeros();
        for k in 0..4 {
            t[(k, k)] = C64::from(p[k]);
        }
        for (n, &(i, j)) in LOWER.iter().enumerate() {
            t[(i, j)] = C64::new(p[4 + 2 * n], p[5 + 2 * n]);
        }
        t
    }

    /// Parameters whose `T` reproduces `rho` (up to the normalisation), from
    /// a Cholesky factorisation in reversed basis order. A small multiple of
    /// the identity is mixed in so the factorisation exists.
    pub fn from_rho(rho: &DensityMatrix4) -> Result<Self> {
        let rev = Matrix4::from_fn(|r, c| rho.0[(3 - r, 3 - c)]);
        let reg = rev * C64::from(0.98) + Matrix4::identity() * C64::from(0.005);
        let l = reg.cholesky().ok_or_else(|| Error::Numerical("Cholesky factorisation failed".into()))?.l();
        // ρ = U U† with U = J L J upper triangular, so T = U† is lower triangular
        let u = Matrix4::from_fn(|r, c| l[(3 - r, 3 - c)]);
        let t = u.adjoint();
        let mut p = [0.0; 16];
        for k in 0..4 {
            p[k] = t[(k, k)].re;
        }
        for (n, &(i, j)) in LOWER.iter().enumerate() {
            p[4 + 2 * n] = t[(i, j)].re;
            p[5 + 2 * n] = t[(i, j)].im;
        }
        Ok(TriangularParams(p))
    }
}

/// `ρ = T†T / Tr(T†T)`.
pub fn rho_from_t(params: &TriangularParams) -> Result<DensityMatrix4> {
    let t = params.t_matrix();
    let a = t.adjoint() * t;
    let n = a.trace().re;
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::param("triangular parameters must not all vanish"));
    }
    Ok(DensityMatrix4(a / C64::from(n)))
}

/// Overlap with `(|s,l⟩ + |l,s⟩)/√2`.
pub fn fidelity(rho: &DensityMatrix4) -> f64 {
    let r = &rho.0;
    0.5 * (r[(1, 1)] + r[(2, 2)] + r[(1, 2)] + r[(2, 1)]).re
}

/// Correlation matrix `M_ij = Tr(ρ σ_i⊗σ_j)`.
pub fn correlation_matrix(rho: &DensityMatrix4) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rho.correlation(Pauli::ALL[i], Pauli::ALL[j]))
}

/// Maximal CHSH value attainable with the state: `2√(m₁ + m₂)` from the two
/// largest eigenvalues of `MᵀM`.
pub fn horodecki_chsh(rho: &DensityMatrix4) -> f64 {
    let m = correlation_matrix(rho);
    let mut e: Vec<f64> = SymmetricEigen::new(m.transpose() * m).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    2.0 * (e[0] + e[1]).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn identity_t_gives_maximally_mixed() {
        let mut p = [0.0; 16];
        p[..4].copy_from_slice(&[1.0; 4]);
        let rho = rho_from_t(&TriangularParams(p)).unwrap();
        assert!((rho.0 - DensityMatrix4::maximally_mixed().0).norm() < 1e-15);
    }

    #[test]
    fn single_diagonal_gives_basis_state() {
        let mut p = [0.0; 16];
        p[2] = 3.0;
        let rho = rho_from_t(&TriangularParams(p)).unwrap();
        assert!((rho.0[(2, 2)].re - 1.0).abs() < 1e-15);
        assert!(rho_from_t(&TriangularParams([0.0; 16])).is_err());
    }

    #[test]
    fn povm_properties() {
        let bell = DensityMatrix4::bell();
        assert!((bell.expectation(&povm_element(Pauli::X, Pauli::X, 1).unwrap()) - 1.0).abs() < 1e-15);
        assert!(bell.expectation(&povm_element(Pauli::Z, Pauli::Z, 1).unwrap()).abs() < 1e-15);
        for i in Pauli::ALL {
            for j in Pauli::ALL {
                let p = povm_element(i, j, 1).unwrap();
                let m = povm_element(i, j, -1).unwrap();
                assert!((p + m - Matrix4::identity()).norm() < 1e-15);
                assert!((p * p - p).norm() < 1e-15);
            }
        }
        assert!(povm_element(Pauli::X, Pauli::X, 0).is_err());
    }

    #[test]
    fn fidelity_and_horodecki_limits() {
        let bell = DensityMatrix4::bell();
        assert!((fidelity(&bell) - 1.0).abs() < 1e-15);
        assert!((horodecki_chsh(&bell) - 2.0 * SQRT_2).abs() < 1e-12);
        let mixed = DensityMatrix4::maximally_mixed();
        assert!((fidelity(&mixed) - 0.25).abs() < 1e-15);
        assert!(horodecki_chsh(&mixed).abs() < 1e-12);
    }

    #[test]
    fn werner_state_horodecki_value() {
        // p·Bell + (1−p)·I/4 has correlations (p, p, −p): S = 2√2 p
        let p = 0.8;
        let rho = DensityMatrix4(
            DensityMatrix4::bell().0 * C64::from(p) + DensityMatrix4::maximally_mixed().0 * C64::from(1.0 - p),
        );
        assert!((horodecki_chsh(&rho) - 2.0 * SQRT_2 * p).abs() < 1e-12);
    }

    #[test]
    fn cholesky_seed_reproduces_state() {
        let rho = DensityMatrix4::bell();
        let back = rho_from_t(&TriangularParams::from_rho(&rho).unwrap()).unwrap();
        assert!(fidelity(&back) > 0.97);
    }

    #[test]
    fn nested_round_trip() {
        let rho = DensityMatrix4::bell();
        assert_eq!(DensityMatrix4::from_nested(&rho.to_nested()).unwrap(), rho);
    }
}
