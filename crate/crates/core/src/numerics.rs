//! Small shared numerical helpers: finite-difference stencils, a
//! low-discrepancy sequence, dense matrix exponential, and log–log slope fits.

use nalgebra::{DMatrix, DVector};

/// Default step for the 4th-order stencils used on metric and field
/// coefficients.
pub const FD_STEP: f64 = 1e-5;

/// 4th-order central difference of a scalar function along one coordinate.
pub fn central_diff_4<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, axis: usize, h: f64) -> f64 {
    let mut xp = x.clone();
    let eval = |xp: &mut DVector<f64>, delta: f64| {
        xp[axis] = x[axis] + delta;
        f(xp)
    };
    let f1 = eval(&mut xp, h);
    let f_1 = eval(&mut xp, -h);
    let f2 = eval(&mut xp, 2.0 * h);
    let f_2 = eval(&mut xp, -2.0 * h);
    (-f2 + 8.0 * f1 - 8.0 * f_1 + f_2) / (12.0 * h)
}

/// 6th-order central difference, used where an independent high-accuracy
/// derivative is wanted (e.g. differentiating the Hamiltonian directly).
pub fn central_diff_6<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, axis: usize, h: f64) -> f64 {
    let mut xp = x.clone();
    let mut eval = |delta: f64| {
        xp[axis] = x[axis] + delta;
        f(&xp)
    };
    (eval(3.0 * h) - 9.0 * eval(2.0 * h) + 45.0 * eval(h) - 45.0 * eval(-h) + 9.0 * eval(-2.0 * h)
        - eval(-3.0 * h))
        / (60.0 * h)
}

/// Radical-inverse (van der Corput) value of `index` in the given base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut denom = 1.0;
    while index > 0 {
        denom *= base as f64;
        inv += (index % base) as f64 / denom;
        index /= base;
    }
    inv
}

/// Deterministic Halton point in [0,1)^dim.  The first few indices are
/// skipped to avoid the degenerate leading points of the sequence.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    const BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    assert!(dim <= BASES.len(), "halton sampler supports dim <= {}", BASES.len());
    (0..dim).map(|d| radical_inverse(index as u64 + 20, BASES[d])).collect()
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.  The
/// matrices here are tiny (n ≤ 4), so plain Taylor after scaling is exact to
/// machine precision.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax();
    let scaling = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a_scaled = a * 0.5f64.powi(scaling);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = (&term * &a_scaled) / k as f64;
        sum += &term;
    }
    for _ in 0..scaling {
        sum = &sum * &sum;
    }
    sum
}

/// Least-squares slope of log(y) against log(x).
///
/// Returns `None` when any sample is too small for a meaningful logarithm,
/// which callers report as exact agreement rather than a fitted rate.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 || ys.iter().any(|&y| y < 1e-300) || xs.iter().any(|&x| x < 1e-300) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(ly.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Serde adapter rendering a `DVector<f64>` as a plain coordinate list;
/// nalgebra's own impl frames the data with storage dimensions, which is
/// noise in report files.
pub mod vec_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
