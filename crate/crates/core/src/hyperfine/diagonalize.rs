//! Exact diagonalization of the full hyperfine + Zeeman matrix.
//!
//! This path shares nothing with the Breit–Rabi closed form except the
//! constants, and serves as its oracle.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_field, HyperfineConstants, HyperfineError, LevelLabel, ZeemanLevel};

/// Product basis state, stored as doubled projections.
#[derive(Debug, Clone, Copy)]
struct ProductState {
    two_mj: i32,
    two_mi: i32,
}

fn product_basis(two_i: i32) -> Vec<ProductState> {
    let mut basis = Vec::with_capacity(2 * (two_i as usize + 1));
    for two_mj in [1, -1] {
        let mut two_mi = -two_i;
        while two_mi <= two_i {
            basis.push(ProductState { two_mj, two_mi });
            two_mi += 2;
        }
    }
    basis
}

/// `⟨m+1| J_+ |m⟩` for spin `j`, doubled arguments.
fn raising(two_j: i32, two_m: i32) -> f64 {
    let j = two_j as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

fn hamiltonian(c: &HyperfineConstants, b: f64, basis: &[ProductState]) -> DMatrix<f64> {
    let two_i = c.nuclear_spin_2i as i32;
    let n = basis.len();
    let mu_b = c.bohr_magneton_over_h * b;
    let mut h = DMatrix::zeros(n, n);
    for (col, s) in basis.iter().enumerate() {
        let mj = s.two_mj as f64 / 2.0;
        let mi = s.two_mi as f64 / 2.0;
        h[(col, col)] = c.hyperfine_a * mj * mi + mu_b * (c.g_j * mj + c.g_i * mi);
        // (A/2)(J+ I- + J- I+)
        for (row, t) in basis.iter().enumerate() {
            if t.two_mj == s.two_mj + 2 && t.two_mi == s.two_mi - 2 {
                let amp = raising(1, s.two_mj) * raising(two_i, t.two_mi);
                h[(row, col)] += 0.5 * c.hyperfine_a * amp;
            }
            if t.two_mj == s.two_mj - 2 && t.two_mi == s.two_mi + 2 {
                let amp = raising(1, t.two_mj) * raising(two_i, s.two_mi);
                h[(row, col)] += 0.5 * c.hyperfine_a * amp;
            }
        }
    }
    h
}

fn total_mf(basis: &[ProductState]) -> DMatrix<f64> {
    let n = basis.len();
    DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            (basis[r].two_mj + basis[r].two_mi) as f64 / 2.0
        } else {
            0.0
        }
    })
}

/// Eigenvalues of the full matrix, labelled by adiabatic continuation and
/// returned in canonical label order.
///
/// H commutes with F_z, so eigenvectors of `H + κ F_z` for a generic κ are
/// joint eigenvectors even where levels of different m_F cross (including the
/// fully degenerate B = 0 point). Energies are read back as ⟨v|H|v⟩.
pub fn level_energies_diagonalize(
    constants: &HyperfineConstants,
    b: f64,
) -> Result<Vec<ZeemanLevel>, HyperfineError> {
    constants.validate()?;
    check_field(b)?;
    let basis = product_basis(constants.nuclear_spin_2i as i32);
    let h = hamiltonian(constants, b, &basis);
    let fz = total_mf(&basis);

    let scale = constants.hyperfine_a.abs();
    for kappa in [1.0e-3 * std::f64::consts::SQRT_2, 2.7e-3 * std::f64::consts::E, 0.11] {
        let shifted = &h + &fz * (kappa * scale);
        let eig = SymmetricEigen::new(shifted);
        if let Some(levels) = label_eigenvectors(constants, b, &h, &fz, &eig.eigenvectors) {
            return Ok(levels);
        }
    }
    Err(HyperfineError::InvalidConstants(format!(
        "could not separate m_F sectors at {b} T"
    )))
}

fn label_eigenvectors(
    c: &HyperfineConstants,
    b: f64,
    h: &DMatrix<f64>,
    fz: &DMatrix<f64>,
    vectors: &DMatrix<f64>,
) -> Option<Vec<ZeemanLevel>> {
    let f_up = c.f_upper();
    // (m_F, energy) per eigenvector
    let mut sectors: Vec<(i32, f64)> = Vec::with_capacity(vectors.ncols());
    for v in vectors.column_iter() {
        let m = (v.transpose() * fz * v)[(0, 0)];
        let m_round = m.round();
        if (m - m_round).abs() > 1e-6 {
            return None;
        }
        let e = (v.transpose() * h * v)[(0, 0)];
        sectors.push((m_round as i32, e));
    }

    let mut out = Vec::with_capacity(sectors.len());
    for label in c.labels() {
        let mut energies: Vec<f64> =
            sectors.iter().filter(|(m, _)| *m == label.m_f).map(|(_, e)| *e).collect();
        energies.sort_by(|a, b| a.total_cmp(b));
        let expected = if label.m_f.abs() == f_up { 1 } else { 2 };
        if energies.len() != expected {
            return None;
        }
        // Same-m_F levels never cross; at B = 0 F = I+1/2 sits at A·I/2, i.e.
        // below F = I-1/2 when A < 0.
        let energy = if expected == 1 {
            energies[0]
        } else {
            let upper_f_is_lower_energy = c.hyperfine_a < 0.0;
            match (label.f == f_up, upper_f_is_lower_energy) {
                (true, true) | (false, false) => energies[0],
                _ => energies[1],
            }
        };
        out.push(ZeemanLevel { label: LevelLabel::new(label.f, label.m_f), energy, field: b });
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperfine::level_energies_closed_form;

    #[test]
    fn zero_field_reproduces_hyperfine_splitting() {
        for c in [
            HyperfineConstants::beryllium9(),
            HyperfineConstants { hyperfine_a: 1.0e9, nuclear_spin_2i: 5, ..HyperfineConstants::beryllium9() },
        ] {
            let levels = level_energies_diagonalize(&c, 0.0).unwrap();
            let i = c.nuclear_spin();
            for l in levels {
                let expected = if l.label.f == c.f_upper() {
                    c.hyperfine_a * i / 2.0
                } else {
                    -c.hyperfine_a * (i + 1.0) / 2.0
                };
                assert!((l.energy - expected).abs() < 1e-6 * c.hyperfine_a.abs(), "{l:?}");
            }
        }
    }

    #[test]
    fn agrees_with_closed_form_at_b0() {
        let c = HyperfineConstants::beryllium9();
        let a = level_energies_closed_form(&c, 0.01194).unwrap();
        let d = level_energies_diagonalize(&c, 0.01194).unwrap();
        for (x, y) in a.iter().zip(&d) {
            assert_eq!(x.label, y.label);
            assert!((x.energy - y.energy).abs() <= 1e-10 * x.energy.abs(), "{x:?} {y:?}");
        }
    }

    #[test]
    fn high_field_spectrum_is_nondegenerate() {
        let c = HyperfineConstants::beryllium9();
        let mut e: Vec<f64> =
            level_energies_diagonalize(&c, 0.8194).unwrap().iter().map(|l| l.energy).collect();
        e.sort_by(|a, b| a.total_cmp(b));
        for w in e.windows(2) {
            assert!(w[1] - w[0] > 1e6, "{w:?}");
        }
    }
}
