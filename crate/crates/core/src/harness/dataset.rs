use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tensor::{outer_product, Dims, Tensor4};

/// Mid-gray of the 0–255 pixel scale; smooth and Gaussian samples are centered here.
pub const PIXEL_MID: f64 = 127.5;
const SMOOTH_COMPONENTS: usize = 3;
const SMOOTH_AMPLITUDE: f64 = 40.0;
const SMOOTH_NOISE: f64 = 1.0;
const GAUSSIAN_STD: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    /// Mid-gray plus a few separable low-frequency cosine patterns and small noise.
    Smooth,
    /// I.i.d. normal entries around mid-gray.
    Gaussian,
    /// Sum of `k` outer products of standard normal vectors.
    RankK(usize),
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::Smooth => f.write_str("smooth"),
            DatasetKind::Gaussian => f.write_str("gaussian"),
            DatasetKind::RankK(k) => write!(f, "rank-{k}"),
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(DatasetKind::Smooth),
            "gaussian" => Ok(DatasetKind::Gaussian),
            _ => match s.strip_prefix("rank-").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(DatasetKind::RankK(k)),
                _ => Err(Error::InvalidArgument(format!("unknown dataset kind {s:?}"))),
            },
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn smooth_sample(dims: Dims, rng: &mut ChaCha8Rng) -> Result<Tensor4<f64>> {
    let mut acc = Tensor4::filled(dims, PIXEL_MID)?;
    for c in 0..SMOOTH_COMPONENTS {
        let amp = SMOOTH_AMPLITUDE / (c + 1) as f64;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let factors: [Vec<f64>; 4] = std::array::from_fn(|j| {
            let n = dims[j];
            let freq = rng.random_range(0..=2u32) as f64;
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            (0..n).map(|i| (std::f64::consts::PI * freq * (i as f64 + 0.5) / n as f64 + phase).cos()).collect()
        });
        let p = outer_product(&factors[0], &factors[1], &factors[2], &factors[3])?;
        acc = acc.add_scaled(sign * amp, &p)?;
    }
    let noise: Vec<f64> = (0..acc.len()).map(|_| SMOOTH_NOISE * normal(rng)).collect();
    acc.add_scaled(1.0, &Tensor4::new(dims, noise)?)
}

/// `n` seeded samples of the given kind; the same arguments always give
/// bit-identical tensors.
pub fn generate_synthetic_dataset(dims: Dims, n: usize, kind: DatasetKind, seed: u64) -> Result<Vec<Tensor4<f64>>> {
    if n == 0 {
        return invalid("dataset needs at least one sample");
    }
    if dims.contains(&0) {
        return invalid("dataset extents must be positive");
    }
    if kind == DatasetKind::RankK(0) {
        return invalid("rank-k needs k >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = dims.iter().product();
    (0..n)
        .map(|_| match kind {
            DatasetKind::Smooth => smooth_sample(dims, &mut rng),
            DatasetKind::Gaussian => {
                let data = (0..len).map(|_| PIXEL_MID + GAUSSIAN_STD * normal(&mut rng)).collect();
                Tensor4::new(dims, data)
            }
            DatasetKind::RankK(k) => {
                let mut acc = Tensor4::zeros(dims)?;
                for _ in 0..k {
                    let f: [Vec<f64>; 4] = std::array::from_fn(|j| (0..dims[j]).map(|_| normal(&mut rng)).collect());
                    acc = &acc + &outer_product(&f[0], &f[1], &f[2], &f[3])?;
                }
                Ok(acc)
            }
        })
        .collect()
}
