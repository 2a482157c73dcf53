//! Symplectic splitting of the twisted cover (R^{2n}, Σdp_i∧dq_i + σ).
//!
//! For a constant antisymmetric coefficient matrix `a` on Tⁿ the twisted
//! form on the cover has matrix Ω̃ = [[a, −I], [I, 0]] in (q, p) blocks.
//! With L = the q-coordinate subspace (the lattice directions) and
//! 2k = rank a, the cover splits as a symplectic direct sum
//!
//! * E = {(x, a·x) : x ∈ im a}, a 2k-dimensional symplectic subspace inside
//!   the ω-orthogonal complement of L, brought to the standard block
//!   [[0, −I_k], [I_k, 0]] by a Darboux basis, and
//! * W̃₁ = E^⊥ = Rⁿ × ker a, which contains every lattice direction and
//!   carries the translation-invariant block [[a, −Z], [Zᵀ, 0]] with Z a
//!   kernel basis of a.
//!
//! All row reduction and the Darboux completion run in exact rational
//! arithmetic (every f64 is a rational), so the congruence identity holds to
//! the roundoff of the final float conversion.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Rat = BigRational;
type RatMat = Vec<Vec<Rat>>;

/// Basis change splitting the twisted cover of a torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSplit {
    /// k, where 2k = rank of the coefficient matrix.
    pub half_rank: usize,
    /// Columns: Darboux basis of E (2k of them), then the n lattice
    /// directions, then kernel momentum directions.
    pub basis_change: Vec<Vec<f64>>,
    /// Block-diagonal target: standard symplectic 2k×2k block, then the
    /// translation-invariant W₁ block.
    pub block_form: Vec<Vec<f64>>,
}

impl SymplecticSplit {
    pub fn dim_w1(&self) -> usize {
        self.basis_change.len() - 2 * self.half_rank
    }

    pub fn basis_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.basis_change)
    }

    pub fn block_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.block_form)
    }

    /// max |Pᵀ Ω̃ P − block_form| for the twisted form of `a`.
    pub fn congruence_residual(&self, a: &DMatrix<f64>) -> f64 {
        let omega = twisted_form_matrix(a);
        let p = self.basis_matrix();
        (p.transpose() * omega * p - self.block_matrix()).amax()
    }
}

fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Ω̃ = [[a, −I], [I, 0]] in (q, p) block coordinates.
pub fn twisted_form_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            omega[(i, j)] = a[(i, j)];
        }
        omega[(i, n + i)] = -1.0;
        omega[(n + i, i)] = 1.0;
    }
    omega
}

/// Split the twisted cover of Tⁿ for the antisymmetric coefficient matrix
/// `a`.  Rejects non-square and non-antisymmetric input.
pub fn torus_split(a: &DMatrix<f64>) -> Result<SymplecticSplit> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let skew_defect = (a + a.transpose()).amax();
    if skew_defect > 1e-12 {
        return Err(Error::NotAntisymmetric(skew_defect));
    }

    let ar: RatMat = (0..n)
        .map(|i| (0..n).map(|j| rat_from(a[(i, j)])).collect())
        .collect();

    // Exact column space and kernel of a.
    let (im_basis, kernel_basis) = column_space_and_kernel(&ar, n);
    let rank = im_basis.len();
    debug_assert!(rank % 2 == 0, "antisymmetric matrices have even rank");
    let k = rank / 2;

    // E = {(x, a x) : x ∈ im a} as 2n-vectors.
    let e_raw: Vec<Vec<Rat>> = im_basis
        .iter()
        .map(|x| {
            let ax = mat_vec(&ar, x);
            x.iter().cloned().chain(ax).collect()
        })
        .collect();

    let omega = twisted_rat(&ar, n);
    let (e_a, e_b) = darboux_pairs(e_raw, &omega)?;

    // Assemble P: E pairs first, then lattice, then kernel momenta.
    let dim = 2 * n;
    let mut columns: Vec<Vec<Rat>> = Vec::with_capacity(dim);
    columns.extend(e_a);
    columns.extend(e_b);
    for i in 0..n {
        let mut e = vec![Rat::zero(); dim];
        e[i] = rat_from(1.0);
        columns.push(e);
    }
    for z in &kernel_basis {
        let mut v = vec![Rat::zero(); dim];
        for (i, zi) in z.iter().enumerate() {
            v[n + i] = zi.clone();
        }
        columns.push(v);
    }
    debug_assert_eq!(columns.len(), dim);

    // Exact congruence: block = Pᵀ Ω̃ P, then verify the required shape.
    let mut block = vec![vec![Rat::zero(); dim]; dim];
    for (bi, ci) in columns.iter().enumerate() {
        for (bj, cj) in columns.iter().enumerate() {
            block[bi][bj] = form(&omega, ci, cj);
        }
    }
    verify_block_shape(&block, k, dim)?;

    let basis_change: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| columns[j][i].to_f64().unwrap()).collect())
        .collect();
    let block_form: Vec<Vec<f64>> =
        block.iter().map(|row| row.iter().map(|v| v.to_f64().unwrap()).collect()).collect();

    Ok(SymplecticSplit { half_rank: k, basis_change, block_form })
}

fn rat_from(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

fn mat_vec(m: &RatMat, v: &[Rat]) -> Vec<Rat> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).fold(Rat::zero(), |s, t| s + t))
        .collect()
}

fn twisted_rat(ar: &RatMat, n: usize) -> RatMat {
    let one = Rat::from(BigInt::from(1));
    let mut omega = vec![vec![Rat::zero(); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            omega[i][j] = ar[i][j].clone();
        }
        omega[i][n + i] = -one.clone();
        omega[n + i][i] = one.clone();
    }
    omega
}

fn form(omega: &RatMat, u: &[Rat], v: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (i, ui) in u.iter().enumerate() {
        if ui.is_zero() {
            continue;
        }
        for (j, vj) in v.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            acc += ui * &omega[i][j] * vj;
        }
    }
    acc
}

/// Exact column-space basis (pivot columns of `m`) and kernel basis, by
/// Gaussian elimination with partial pivoting on the largest |entry|.
fn column_space_and_kernel(m: &RatMat, n: usize) -> (Vec<Vec<Rat>>, Vec<Vec<Rat>>) {
    let mut red: RatMat = m.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        // Largest remaining entry in this column.
        let best = (row..n).max_by(|&i, &j| red[i][col].abs().cmp(&red[j][col].abs()));
        let Some(pr) = best else { break };
        if red[pr][col].is_zero() {
            continue;
        }
        red.swap(row, pr);
        let inv = red[row][col].clone();
        for c in 0..n {
            red[row][c] = &red[row][c] / &inv;
        }
        for r in 0..n {
            if r != row && !red[r][col].is_zero() {
                let f = red[r][col].clone();
                for c in 0..n {
                    let sub = &f * &red[row][c];
                    red[r][c] = &red[r][c] - sub;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == n {
            break;
        }
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let im: Vec<Vec<Rat>> = pivot_cols
        .iter()
        .map(|&c| (0..n).map(|r| m[r][c].clone()).collect())
        .collect();

    let mut kernel = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let mut v = vec![Rat::zero(); n];
        v[free] = rat_from(1.0);
        for &(r, c) in &pivots {
            v[c] = -red[r][free].clone();
        }
        kernel.push(v);
    }
    (im, kernel)
}

/// Darboux basis of the span of `vecs` under `omega`: returns (a₁…a_k,
/// b₁…b_k) with ω(a_i, b_j) = −δ_ij and all other pairings zero, matching
/// the ambient [[0, −I], [I, 0]] convention.
fn darboux_pairs(mut vecs: Vec<Vec<Rat>>, omega: &RatMat) -> Result<(Vec<Vec<Rat>>, Vec<Vec<Rat>>)> {
    let mut basis_a = Vec::new();
    let mut basis_b = Vec::new();
    while vecs.len() >= 2 {
        // Partial pivot: the pair with the largest |pairing|.
        let mut best = (0usize, 1usize, Rat::zero());
        for i in 0..vecs.len() {
            for j in (i + 1)..vecs.len() {
                let w = form(omega, &vecs[i], &vecs[j]);
                if w.abs() > best.2.abs() {
                    best = (i, j, w);
                }
            }
        }
        let (i, j, w) = best;
        if w.is_zero() {
            return Err(Error::HypothesisViolated(
                "restricted form degenerated during Darboux completion".into(),
            ));
        }
        let a = vecs[i].clone();
        // Scale so that ω(a, b) = −1.
        let b: Vec<Rat> = vecs[j].iter().map(|v| -(v / &w)).collect();
        vecs.swap_remove(j.max(i));
        vecs.swap_remove(j.min(i));
        for v in vecs.iter_mut() {
            let wa = form(omega, v, &a);
            let wb = form(omega, v, &b);
            // v ← v + ω(v,b)·a − ω(v,a)·b  (with ω(a,b) = −1).
            for idx in 0..v.len() {
                let adj = &wb * &a[idx] - &wa * &b[idx];
                v[idx] = &v[idx] + adj;
            }
        }
        basis_a.push(a);
        basis_b.push(b);
    }
    if !vecs.is_empty() {
        return Err(Error::HypothesisViolated("odd-dimensional symplectic factor".into()));
    }
    Ok((basis_a, basis_b))
}

/// The exact block must be diag([[0, −I_k], [I_k, 0]], W₁) with zero
/// coupling between the factors.
fn verify_block_shape(block: &[Vec<Rat>], k: usize, dim: usize) -> Result<()> {
    let one = rat_from(1.0);
    for i in 0..2 * k {
        for j in 0..dim {
            let expect = if j < 2 * k {
                if i < k && j == i + k {
                    -one.clone()
                } else if i >= k && j == i - k {
                    one.clone()
                } else {
                    Rat::zero()
                }
            } else {
                Rat::zero()
            };
            if block[i][j] != expect || block[j][i] != -expect.clone() {
                return Err(Error::HypothesisViolated(format!(
                    "split block deviates from the standard form at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(n: usize, entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, entries)
    }

    #[test]
    fn zero_form_gives_identity_split() {
        let a = DMatrix::zeros(3, 3);
        let split = torus_split(&a).unwrap();
        assert_eq!(split.half_rank, 0);
        assert_eq!(split.dim_w1(), 6);
        assert_eq!(split.basis_matrix(), DMatrix::identity(6, 6));
        assert!(split.congruence_residual(&a) < 1e-15);
    }

    #[test]
    fn elementary_block_on_t3_leaves_a_four_dimensional_w1() {
        let a = mat(3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let split = torus_split(&a).unwrap();
        assert_eq!(split.half_rank, 1);
        assert_eq!(split.dim_w1(), 4);
        assert!(split.congruence_residual(&a) < 1e-13);

        // The W₁ columns span all three lattice directions exactly.
        let p = split.basis_matrix();
        for lattice_axis in 0..3 {
            let col = p.column(2 + lattice_axis);
            let mut expected = DMatrix::zeros(6, 1);
            expected[(lattice_axis, 0)] = 1.0;
            assert_eq!(col, expected.column(0), "lattice direction {lattice_axis}");
        }
    }

    #[test]
    fn full_rank_t4_block_form_is_standard_plus_the_original() {
        let a = mat(4, &[
            0.0, 1.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 2.0,
            0.0, 0.0, -2.0, 0.0,
        ]);
        let split = torus_split(&a).unwrap();
        assert_eq!(split.half_rank, 2);
        assert_eq!(split.dim_w1(), 4);
        let block = split.block_matrix();
        // Standard symplectic corner.
        assert_eq!(block[(0, 2)], -1.0);
        assert_eq!(block[(1, 3)], -1.0);
        assert_eq!(block[(2, 0)], 1.0);
        // W₁ block is the original a (no kernel part at full rank).
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(block[(4 + i, 4 + j)], a[(i, j)]);
            }
        }
        assert!(split.congruence_residual(&a) < 1e-13);
    }

    #[test]
    fn rejects_non_antisymmetric_input() {
        let a = mat(2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(torus_split(&a), Err(Error::NotAntisymmetric(_))));
    }

    #[test]
    fn fractional_entries_stay_exact() {
        let a = mat(2, &[0.0, 0.5, -0.5, 0.0]);
        let split = torus_split(&a).unwrap();
        assert_eq!(split.half_rank, 1);
        assert!(split.congruence_residual(&a) < 1e-15);
    }
}
