//! Seeded Laplace noise and the depolarizing channel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::rng_from_seed;

pub type DensityMatrix = DMatrix<Complex64>;

/// Inverse CDF of Lap(0, b) at `u` in (0, 1).
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    let c = u - 0.5;
    -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// Draws one Lap(0, b) variate. `u = 0` is rejected so the draw stays finite.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return if u == 0.5 { 0.0 } else { laplace_from_uniform(u, scale) };
        }
    }
}

/// Density (1/2b) e^{−|x|/b}.
pub fn laplace_pdf(x: f64, scale: f64) -> f64 {
    (-x.abs() / scale).exp() / (2.0 * scale)
}

/// A Laplace sampler owning its random stream.
#[derive(Debug, Clone)]
pub struct LaplaceSampler {
    scale: f64,
    rng: ChaCha8Rng,
}

impl LaplaceSampler {
    pub fn new(scale: f64, seed: u64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("Laplace scale must be positive, got {scale}")));
        }
        Ok(LaplaceSampler { scale, rng: rng_from_seed(seed) })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample(&mut self) -> f64 {
        sample_laplace(&mut self.rng, self.scale)
    }
}

/// A sequence of depolarizing channels on a `dim`-dimensional register.
#[derive(Debug, Clone, PartialEq)]
pub struct DepolarizingSpec {
    pub probs: Vec<f64>,
    pub dim: usize,
}

impl DepolarizingSpec {
    pub fn new(probs: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("depolarizing dimension must be positive".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidConfig(format!("depolarizing probability {p} outside [0, 1]")));
        }
        Ok(DepolarizingSpec { probs, dim })
    }

    /// `gates` channels of identical probability `p`.
    pub fn uniform(p: f64, gates: usize, dim: usize) -> Result<Self> {
        DepolarizingSpec::new(vec![p; gates], dim)
    }
}

/// p_tot = 1 − Π(1 − p_i).
pub fn compose_depolarizing(spec: &DepolarizingSpec) -> f64 {
    1.0 - spec.probs.iter().map(|p| 1.0 - p).product::<f64>()
}

/// D_p(ρ) = (1 − p)ρ + p I/d.
pub fn apply_depolarizing(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_density(rho)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("depolarizing probability {p} outside [0, 1]")));
    }
    let d = rho.nrows();
    let mixed = DensityMatrix::identity(d, d) * Complex64::new(p / d as f64, 0.0);
    Ok(rho * Complex64::new(1.0 - p, 0.0) + mixed)
}

fn check_density(rho: &DensityMatrix) -> Result<()> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(Error::NotDensityMatrix(format!("shape {}×{}", rho.nrows(), rho.ncols())));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-9 {
        return Err(Error::NotDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
    }
    Ok(())
}

/// ε = ln(1 + ((1 − p)/p) d τ).
pub fn depolarizing_epsilon(p: f64, dim: usize, tau: f64) -> Result<f64> {
    if p == 0.0 {
        return Err(Error::ZeroP);
    }
    if !(0.0..=1.0).contains(&p) || tau < 0.0 || dim == 0 {
        return Err(Error::InvalidConfig(format!("need p in (0, 1], tau >= 0, d >= 1 (p = {p}, tau = {tau}, d = {dim})")));
    }
    let x = ((1.0 - p) / p) * dim as f64 * tau;
    Ok(if x < 1.0 { x.ln_1p() } else { (1.0 + x).ln() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::trace_distance_bound;
    use rand::SeedableRng;

    fn pure(amps: &[Complex64]) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(amps);
        &v * v.adjoint()
    }

    #[test]
    fn inverse_cdf_points() {
        assert_eq!(laplace_from_uniform(0.5, 3.0), 0.0);
        assert!((laplace_from_uniform(0.75, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((laplace_from_uniform(0.25, 1.0) + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = LaplaceSampler::new(1.0, 9).unwrap();
        let mut b = LaplaceSampler::new(1.0, 9).unwrap();
        for _ in 0..100 {
            assert_eq!(a.sample(), b.sample());
        }
        assert!(LaplaceSampler::new(0.0, 1).is_err());
    }

    #[test]
    fn rejects_zero_uniform() {
        // a generator whose first output is exactly zero
        struct Zeros(u32, ChaCha8Rng);
        impl rand::RngCore for Zeros {
            fn next_u32(&mut self) -> u32 {
                self.next_u64() as u32
            }
            fn next_u64(&mut self) -> u64 {
                if self.0 > 0 {
                    self.0 -= 1;
                    0
                } else {
                    self.1.next_u64()
                }
            }
            fn fill_bytes(&mut self, d: &mut [u8]) {
                self.1.fill_bytes(d)
            }
            fn try_fill_bytes(&mut self, d: &mut [u8]) -> std::result::Result<(), rand::Error> {
                self.1.try_fill_bytes(d)
            }
        }
        let mut rng = Zeros(3, ChaCha8Rng::seed_from_u64(0));
        assert!(sample_laplace(&mut rng, 1.0).is_finite());
    }

    #[test]
    fn composition_examples() {
        let spec = DepolarizingSpec::new(vec![0.1, 0.1], 2).unwrap();
        assert!((compose_depolarizing(&spec) - 0.19).abs() < 1e-15);
        let spec = DepolarizingSpec::new(vec![0.37, 0.0], 2).unwrap();
        assert!((compose_depolarizing(&spec) - 0.37).abs() < 1e-15);
        assert!(DepolarizingSpec::new(vec![1.2], 2).is_err());
    }

    #[test]
    fn channel_endpoints() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = pure(&[Complex64::new(h, 0.0), Complex64::new(0.0, h)]);
        assert_eq!(apply_depolarizing(&rho, 0.0).unwrap(), rho);
        let full = apply_depolarizing(&rho, 1.0).unwrap();
        let want = DensityMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!((full - want).iter().all(|z| z.norm() < 1e-15));
        let bad = DensityMatrix::identity(2, 2);
        assert!(matches!(apply_depolarizing(&bad, 0.1), Err(Error::NotDensityMatrix(_))));
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(depolarizing_epsilon(0.3, 4, 0.0).unwrap(), 0.0);
        assert_eq!(depolarizing_epsilon(0.5, 2, 1.0).unwrap(), 3f64.ln());
        let tau = trace_distance_bound(100);
        assert!((tau - 0.141_067_359_796_658_85).abs() < 1e-15);
        let eps = depolarizing_epsilon(0.01, 16, tau).unwrap();
        assert!((eps - (1.0 + 99.0 * 16.0 * tau).ln()).abs() < 1e-12);
        assert!((eps - 224.45f64.ln()).abs() < 1e-3);
        assert!(matches!(depolarizing_epsilon(0.0, 2, 1.0), Err(Error::ZeroP)));
    }

    #[test]
    fn epsilon_monotonicity() {
        let ps = [0.01, 0.1, 0.3, 0.7, 1.0];
        for w in ps.windows(2) {
            assert!(depolarizing_epsilon(w[0], 4, 0.2).unwrap() >= depolarizing_epsilon(w[1], 4, 0.2).unwrap());
        }
        for tau in [0.0, 0.1, 0.5] {
            assert!(depolarizing_epsilon(0.2, 4, tau).unwrap() <= depolarizing_epsilon(0.2, 4, tau + 0.1).unwrap());
            assert!(depolarizing_epsilon(0.2, 4, tau).unwrap() <= depolarizing_epsilon(0.2, 8, tau).unwrap());
        }
    }
}
