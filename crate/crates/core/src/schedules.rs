//! Local block clocks and batch-size policies.
//!
//! A block's batch size is a function of its own clock `Gamma_i(k)`, the
//! number of times it has been selected so far. [`ClockMode::Global`] feeds
//! the global iteration counter instead.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest batch ever returned; larger requests saturate here.
pub const BATCH_SATURATION: u64 = 1 << 62;

/// `2 - sqrt(3)`, the steplength numerator that optimises the PL contraction.
pub const PL_STEP_FACTOR: f64 = 2.0 - 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockClocks {
    gamma: Vec<u64>,
    k: u64,
}

impl BlockClocks {
    pub fn new(blocks: usize) -> Self {
        Self { gamma: vec![0; blocks], k: 0 }
    }

    pub fn record_selection(&mut self, i: usize) -> Result<()> {
        let blocks = self.gamma.len();
        let g = self.gamma.get_mut(i).ok_or(Error::BlockOutOfRange { index: i, blocks })?;
        *g += 1;
        self.k += 1;
        Ok(())
    }

    pub fn gamma(&self) -> &[u64] {
        &self.gamma
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// Which counter drives the batch-size policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    /// Each block uses its own selection count.
    #[default]
    Block,
    /// All blocks use the global iteration counter `k`.
    Global,
}

impl FromStr for ClockMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(Self::Block),
            "global" => Ok(Self::Global),
            other => Err(Error::InvalidPolicy(format!("unknown clock `{other}` (expected block|global)"))),
        }
    }
}

impl fmt::Display for ClockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Block => "block",
            Self::Global => "global",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchPolicy {
    Constant(u64),
    /// `ceil(base^-Gamma)` with `base` in `(0, 1)`.
    Geometric {
        base: f64,
    },
    /// `prod_{t=1..degree} (Gamma + t)`.
    Polynomial {
        degree: u32,
    },
    /// `ceil((Gamma + 1)^(1 + delta))`.
    Power {
        delta: f64,
    },
}

impl BatchPolicy {
    pub fn constant(n: u64) -> Result<Self> {
        Self::Constant(n).validated()
    }

    pub fn geometric(base: f64) -> Result<Self> {
        Self::Geometric { base }.validated()
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        Self::Polynomial { degree }.validated()
    }

    pub fn power(delta: f64) -> Result<Self> {
        Self::Power { delta }.validated()
    }

    fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::Constant(n) => n >= 1,
            Self::Geometric { base } => base > 0.0 && base < 1.0,
            Self::Polynomial { degree } => degree >= 1,
            Self::Power { delta } => delta > 0.0 && delta.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidPolicy(match self {
                Self::Constant(_) => "constant batch must be >= 1".into(),
                Self::Geometric { base } => format!("geometric base {base} must lie in (0, 1)"),
                Self::Polynomial { .. } => "polynomial degree must be >= 1".into(),
                Self::Power { delta } => format!("power exponent delta {delta} must be > 0"),
            }))
        }
    }

    /// Batch size for a block whose clock reads `gamma`.
    pub fn batch_size(&self, gamma: u64) -> u64 {
        match *self {
            Self::Constant(n) => n.min(BATCH_SATURATION),
            Self::Geometric { base } => geometric_ceiling(base, gamma),
            Self::Polynomial { degree } => {
                let mut acc: u64 = 1;
                for t in 1..=u64::from(degree) {
                    acc = acc.saturating_mul(gamma.saturating_add(t));
                    if acc >= BATCH_SATURATION {
                        return BATCH_SATURATION;
                    }
                }
                acc
            }
            Self::Power { delta } => {
                let exponent = 1.0 + delta;
                let base = gamma as f64 + 1.0;
                if exponent * base.ln() >= 62.0 * std::f64::consts::LN_2 {
                    return BATCH_SATURATION;
                }
                if exponent.fract() == 0.0 {
                    let mut acc: u64 = 1;
                    for _ in 0..exponent as u32 {
                        acc = acc.saturating_mul(gamma + 1);
                    }
                    acc.min(BATCH_SATURATION)
                } else {
                    (base.powf(exponent).ceil() as u64).clamp(1, BATCH_SATURATION)
                }
            }
        }
    }
}

impl FromStr for BatchPolicy {
    type Err = Error;

    /// Parses `constant:N`, `geometric:b`, `polynomial:v` or `power:delta`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| Error::InvalidPolicy(format!("`{s}` is not of the form kind:value")))?;
        let bad = |what: &str| Error::InvalidPolicy(format!("`{arg}` is not a valid {what}"));
        match kind.trim() {
            "constant" => Self::constant(arg.trim().parse().map_err(|_| bad("batch size"))?),
            "geometric" => Self::geometric(arg.trim().parse().map_err(|_| bad("base"))?),
            "polynomial" => Self::polynomial(arg.trim().parse().map_err(|_| bad("degree"))?),
            "power" => Self::power(arg.trim().parse().map_err(|_| bad("exponent"))?),
            other => Err(Error::InvalidPolicy(format!("unknown batch policy `{other}`"))),
        }
    }
}

impl fmt::Display for BatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(n) => write!(f, "constant:{n}"),
            Self::Geometric { base } => write!(f, "geometric:{base}"),
            Self::Polynomial { degree } => write!(f, "polynomial:{degree}"),
            Self::Power { delta } => write!(f, "power:{delta}"),
        }
    }
}

/// How batch policies are assigned to blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    /// The same policy on every block.
    Uniform(BatchPolicy),
    /// Per-block geometric growth `b_i = 1 - q_i` with
    /// `q_i = fraction * (2 - sqrt 3)^2 mu / L_i`; needs the PL constant.
    PlGeometric { fraction: f64 },
    /// Constant batch `ceil(4 n sigma^2 L_max / (eps L_min))` for uniform selection.
    ConstantUniform { eps: f64 },
    /// Constant batch `ceil(4 n sigma^2 / eps)` for Lipschitz-proportional selection.
    ConstantLipschitz { eps: f64 },
}

impl ScheduleSpec {
    /// Resolves to one policy per block.
    pub fn resolve(&self, lipschitz: &[f64], pl_mu: Option<f64>, sigma_sq: Option<f64>) -> Result<Vec<BatchPolicy>> {
        let n = lipschitz.len();
        match *self {
            Self::Uniform(p) => Ok(vec![p; n]),
            Self::PlGeometric { fraction } => {
                let mu = pl_mu.ok_or_else(|| Error::InvalidPolicy("pl_geometric needs a problem with a PL constant".into()))?;
                lipschitz.iter().map(|&l| BatchPolicy::geometric(1.0 - pl_rate_threshold(mu, l) * fraction)).collect()
            }
            Self::ConstantUniform { eps } | Self::ConstantLipschitz { eps } => {
                let sigma_sq = sigma_sq.ok_or_else(|| Error::InvalidPolicy("constant-eps schedules need sigma_sq".into()))?;
                let batch = match self {
                    Self::ConstantUniform { .. } => {
                        let lmax = lipschitz.iter().cloned().fold(0.0, f64::max);
                        let lmin = lipschitz.iter().cloned().fold(f64::INFINITY, f64::min);
                        constant_batch_uniform(n, sigma_sq, lmax, lmin, eps)
                    }
                    _ => constant_batch_lipschitz(n, sigma_sq, eps),
                }?;
                Ok(vec![BatchPolicy::constant(batch)?; n])
            }
        }
    }

    pub fn needs_sigma(&self) -> bool {
        matches!(self, Self::ConstantUniform { .. } | Self::ConstantLipschitz { .. })
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| Error::InvalidPolicy(format!("`{s}` is not of the form kind:value")))?;
        let positive = |what: &str| -> Result<f64> {
            match arg.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
                _ => Err(Error::InvalidPolicy(format!("{what} `{arg}` must be a positive number"))),
            }
        };
        match kind.trim() {
            "pl_geometric" => {
                let fraction = positive("fraction")?;
                if fraction >= 1.0 / (PL_STEP_FACTOR * PL_STEP_FACTOR) {
                    return Err(Error::InvalidPolicy(format!("fraction {fraction} makes the growth base nonpositive")));
                }
                Ok(Self::PlGeometric { fraction })
            }
            "constant_eps" => Ok(Self::ConstantUniform { eps: positive("eps")? }),
            "constant_eps_lipschitz" => Ok(Self::ConstantLipschitz { eps: positive("eps")? }),
            _ => Ok(Self::Uniform(s.parse()?)),
        }
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform(p) => p.fmt(f),
            Self::PlGeometric { fraction } => write!(f, "pl_geometric:{fraction}"),
            Self::ConstantUniform { eps } => write!(f, "constant_eps:{eps}"),
            Self::ConstantLipschitz { eps } => write!(f, "constant_eps_lipschitz:{eps}"),
        }
    }
}

/// `(2 - sqrt 3)^2 mu / L`, the geometric growth rate below which the
/// PL contraction dominates.
pub fn pl_rate_threshold(mu: f64, lipschitz: f64) -> f64 {
    PL_STEP_FACTOR * PL_STEP_FACTOR * mu / lipschitz
}

pub fn constant_batch_uniform(n: usize, sigma_sq: f64, l_max: f64, l_min: f64, eps: f64) -> Result<u64> {
    ceil_batch(4.0 * n as f64 * sigma_sq * l_max / (eps * l_min))
}

pub fn constant_batch_lipschitz(n: usize, sigma_sq: f64, eps: f64) -> Result<u64> {
    ceil_batch(4.0 * n as f64 * sigma_sq / eps)
}

fn ceil_batch(v: f64) -> Result<u64> {
    if !(v >= 0.0) {
        return Err(Error::InvalidPolicy(format!("batch size {v} is not a valid number")));
    }
    Ok((v.ceil() as u64).clamp(1, BATCH_SATURATION))
}

/// `ceil(base^-gamma)` evaluated in double-double arithmetic.
fn geometric_ceiling(base: f64, gamma: u64) -> u64 {
    if gamma == 0 {
        return 1;
    }
    if gamma as f64 * -base.ln() > 62.0 * std::f64::consts::LN_2 + 1e-9 {
        return BATCH_SATURATION;
    }
    let inv = dd_recip(base);
    let (hi, lo) = dd_pow(inv, gamma);
    // Above 2^53 `hi` is itself an integer and `lo` may exceed one unit.
    let c = hi.ceil();
    let rest = ((hi - c) + lo).ceil();
    let total = c as i128 + rest as i128;
    total.clamp(1, i128::from(BATCH_SATURATION)) as u64
}

type DoubleDouble = (f64, f64);

#[inline]
fn two_sum_quick(a: f64, b: f64) -> DoubleDouble {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn dd_mul(a: DoubleDouble, b: DoubleDouble) -> DoubleDouble {
    let p = a.0 * b.0;
    let e = a.0.mul_add(b.0, -p) + (a.0 * b.1 + a.1 * b.0);
    two_sum_quick(p, e)
}

fn dd_recip(b: f64) -> DoubleDouble {
    let q = 1.0 / b;
    // Residual of the division is exact with a fused multiply-add.
    let r = (-b).mul_add(q, 1.0);
    two_sum_quick(q, r / b)
}

fn dd_pow(mut base: DoubleDouble, mut exp: u64) -> DoubleDouble {
    let mut acc = (1.0, 0.0);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = dd_mul(acc, base);
        }
        exp >>= 1;
        if exp > 0 {
            base = dd_mul(base, base);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    /// Exact `ceil(b^-gamma)` for the dyadic rational `b = m / 2^e`.
    fn exact_ceiling(b: f64, gamma: u32) -> BigUint {
        let bits = b.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let mantissa = (bits & ((1 << 52) - 1)) | (1 << 52);
        // b = mantissa * 2^(exp - 1075)
        let shift = (1075 - exp) as u32;
        let num = BigUint::one() << (shift as usize * gamma as usize);
        let den = BigUint::from(mantissa).pow(gamma);
        let q = &num / &den;
        if (&num % &den).is_zero() {
            q
        } else {
            q + 1u32
        }
    }

    #[test]
    fn clocks_count_selections() {
        let mut c = BlockClocks::new(2);
        assert_eq!(c.gamma(), &[0, 0]);
        assert_eq!(c.k(), 0);
        for i in [0, 0, 1] {
            c.record_selection(i).unwrap();
        }
        assert_eq!(c.gamma(), &[2, 1]);
        assert_eq!(c.k(), 3);
        let mut c3 = BlockClocks::new(3);
        assert!(matches!(c3.record_selection(5), Err(Error::BlockOutOfRange { index: 5, blocks: 3 })));
    }

    #[test]
    fn policy_examples() {
        assert_eq!(BatchPolicy::geometric(0.5).unwrap().batch_size(3), 8);
        assert_eq!(BatchPolicy::geometric(0.95).unwrap().batch_size(10), 2);
        assert_eq!(exact_ceiling(0.95, 10), BigUint::from(2u32));
        assert_eq!(BatchPolicy::polynomial(2).unwrap().batch_size(3), 20);
        assert_eq!(BatchPolicy::power(1.0).unwrap().batch_size(2), 9);
        assert_eq!(BatchPolicy::constant(7).unwrap().batch_size(100), 7);
        assert_eq!(BatchPolicy::geometric(0.5).unwrap().batch_size(0), 1);
    }

    #[test]
    fn saturation() {
        assert_eq!(BatchPolicy::geometric(0.5).unwrap().batch_size(62), BATCH_SATURATION);
        assert_eq!(BatchPolicy::geometric(0.5).unwrap().batch_size(61), 1 << 61);
        assert_eq!(BatchPolicy::geometric(0.5).unwrap().batch_size(10_000), BATCH_SATURATION);
        assert_eq!(BatchPolicy::polynomial(5).unwrap().batch_size(u64::MAX / 2), BATCH_SATURATION);
        assert_eq!(BatchPolicy::power(3.0).unwrap().batch_size(1 << 40), BATCH_SATURATION);
    }

    #[test]
    fn parse_round_trip_and_rejects() {
        for s in ["constant:50", "geometric:0.95", "polynomial:2", "power:0.5"] {
            assert_eq!(s.parse::<BatchPolicy>().unwrap().to_string(), s);
        }
        for s in ["geometric:1.5", "geometric:0", "constant:0", "polynomial:0", "power:-1", "linear:3", "geometric"] {
            assert!(s.parse::<BatchPolicy>().is_err(), "{s}");
        }
        for s in ["pl_geometric:0.5", "constant_eps:0.01", "constant_eps_lipschitz:0.1", "geometric:0.98"] {
            assert_eq!(s.parse::<ScheduleSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn pl_geometric_resolution() {
        let spec: ScheduleSpec = "pl_geometric:0.5".parse().unwrap();
        let p = spec.resolve(&[1.0, 4.0], Some(1.0), None).unwrap();
        let q0 = 0.5 * PL_STEP_FACTOR.powi(2);
        assert_eq!(p[0], BatchPolicy::Geometric { base: 1.0 - q0 });
        assert_eq!(p[1], BatchPolicy::Geometric { base: 1.0 - q0 / 4.0 });
        assert!(spec.resolve(&[1.0], None, None).is_err());
        assert!((PL_STEP_FACTOR - (2.0 - 3f64.sqrt())).abs() < 1e-16);
    }

    #[test]
    fn constant_eps_batches() {
        assert_eq!(constant_batch_uniform(2, 1.0, 4.0, 1.0, 0.5).unwrap(), 64);
        assert_eq!(constant_batch_lipschitz(2, 1.0, 0.5).unwrap(), 16);
        let spec: ScheduleSpec = "constant_eps:0.5".parse().unwrap();
        assert!(spec.resolve(&[1.0, 4.0], None, None).is_err());
        assert_eq!(spec.resolve(&[1.0, 4.0], None, Some(1.0)).unwrap(), vec![BatchPolicy::Constant(64); 2]);
    }

    proptest! {
        #[test]
        fn geometric_matches_exact_rational(base in 0.05..0.999f64, gamma in 0u32..80) {
            let exact = exact_ceiling(base, gamma);
            let got = BatchPolicy::Geometric { base }.batch_size(u64::from(gamma));
            if exact < BigUint::from(BATCH_SATURATION) {
                prop_assert_eq!(BigUint::from(got), exact);
            } else {
                prop_assert_eq!(got, BATCH_SATURATION);
            }
        }

        #[test]
        fn dyadic_bases_hit_exact_powers(k in 1u32..6, gamma in 0u32..12) {
            let base = 1.0 / f64::from(1u32 << k);
            let got = BatchPolicy::Geometric { base }.batch_size(u64::from(gamma));
            prop_assert_eq!(got, 1u64 << (k * gamma));
        }

        #[test]
        fn policies_are_monotone(gamma in 0u64..5000, base in 0.5..0.999f64, degree in 1u32..4, delta in 0.01..2.0f64) {
            for p in [BatchPolicy::Geometric { base }, BatchPolicy::Polynomial { degree }, BatchPolicy::Power { delta }, BatchPolicy::Constant(3)] {
                let a = p.batch_size(gamma);
                prop_assert!(a >= 1);
                prop_assert!(p.batch_size(gamma + 1) >= a);
            }
        }
    }
}
