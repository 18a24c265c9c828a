use super::WeightMatrix;
use crate::error::{OomdError, Result};

fn check_eta(w: &WeightMatrix, eta: &[f64]) -> Result<()> {
    if eta.len() != w.cols() {
        return Err(OomdError::DimensionMismatch(format!(
            "{} learning rates for {} columns",
            eta.len(),
            w.cols()
        )));
    }
    Ok(())
}

/// Weighted negative entropy `psi(w) = sum_{i,j} w(i,j) ln w(i,j) / eta(j)`.
pub fn negentropy_potential(w: &WeightMatrix, eta: &[f64]) -> Result<f64> {
    check_eta(w, eta)?;
    w.check_positive()?;
    let mut acc = 0.0;
    for r in 0..w.rows() {
        for (c, &v) in w.row(r).iter().enumerate() {
            acc += v * v.ln() / eta[c];
        }
    }
    Ok(acc)
}

/// Bregman divergence of the weighted negative entropy, `D(y, x)`.
///
/// Entries of `y` may be zero (`0 ln 0 = 0`); entries of `x` must be positive.
pub fn bregman_divergence(y: &WeightMatrix, x: &WeightMatrix, eta: &[f64]) -> Result<f64> {
    check_eta(x, eta)?;
    if y.rows() != x.rows() || y.cols() != x.cols() {
        return Err(OomdError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            y.rows(),
            y.cols(),
            x.rows(),
            x.cols()
        )));
    }
    x.check_positive()?;
    let cols = x.cols();
    let mut acc = 0.0;
    for (k, (&yv, &xv)) in y.as_slice().iter().zip(x.as_slice()).enumerate() {
        let ylny = if yv > 0.0 { yv * (yv / xv).ln() } else { 0.0 };
        acc += (ylny - yv + xv) / eta[k % cols];
    }
    Ok(acc.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExpertId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(n: usize) -> Vec<ExpertId> {
        (0..n as u64).map(ExpertId).collect()
    }

    #[test]
    fn potential_of_unit_mass_is_zero() {
        let w = WeightMatrix::filled(ids(1), 1, 1.0);
        assert_eq!(negentropy_potential(&w, &[0.37]).unwrap(), 0.0);
    }

    #[test]
    fn potential_two_halves() {
        let w = WeightMatrix::filled(ids(2), 1, 0.5);
        let v = negentropy_potential(&w, &[1.0]).unwrap();
        assert!((v + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn potential_matches_resummation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let data: Vec<f64> = (0..4).map(|_| rng.gen_range(1e-3..2.0)).collect();
            let eta = [rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)];
            let w = WeightMatrix::new(ids(2), 2, data.clone()).unwrap();
            let oracle = data[0] * data[0].ln() / eta[0]
                + data[1] * data[1].ln() / eta[1]
                + data[2] * data[2].ln() / eta[0]
                + data[3] * data[3].ln() / eta[1];
            assert!((negentropy_potential(&w, &eta).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_rejects_zero() {
        let w = WeightMatrix::new(ids(2), 1, vec![0.0, 1.0]).unwrap();
        assert!(negentropy_potential(&w, &[1.0]).is_err());
    }

    #[test]
    fn divergence_self_is_zero() {
        let x = WeightMatrix::new(ids(2), 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(bregman_divergence(&x, &x, &[0.5, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn divergence_reduces_to_kl() {
        let y = WeightMatrix::new(ids(2), 1, vec![1.0, 0.0]).unwrap();
        let x = WeightMatrix::new(ids(2), 1, vec![0.5, 0.5]).unwrap();
        let d = bregman_divergence(&y, &x, &[1.0]).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn divergence_rejects_nonpositive_reference() {
        let y = WeightMatrix::new(ids(2), 1, vec![0.5, 0.5]).unwrap();
        let x = WeightMatrix::new(ids(2), 1, vec![1.0, 0.0]).unwrap();
        assert!(bregman_divergence(&y, &x, &[1.0]).is_err());
    }

    /// D(y, x) against the definition psi(y) - psi(x) - <grad psi(x), y - x>
    /// with the gradient taken by central finite differences.
    #[test]
    fn divergence_matches_finite_difference_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let eta = [rng.gen_range(0.2..4.0), rng.gen_range(0.2..4.0)];
            let xs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
            let ys: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
            let x = WeightMatrix::new(ids(2), 2, xs.clone()).unwrap();
            let y = WeightMatrix::new(ids(2), 2, ys.clone()).unwrap();
            let psi = |v: &[f64]| {
                negentropy_potential(&WeightMatrix::new(ids(2), 2, v.to_vec()).unwrap(), &eta)
                    .unwrap()
            };
            let h = 1e-6;
            let mut inner = 0.0;
            for k in 0..4 {
                let mut up = xs.clone();
                let mut dn = xs.clone();
                up[k] += h;
                dn[k] -= h;
                let grad = (psi(&up) - psi(&dn)) / (2.0 * h);
                inner += grad * (ys[k] - xs[k]);
            }
            let oracle = psi(&ys) - psi(&xs) - inner;
            let d = bregman_divergence(&y, &x, &eta).unwrap();
            assert!(d >= 0.0);
            assert!((d - oracle).abs() < 1e-7, "d={d} oracle={oracle}");
        }
    }
}
