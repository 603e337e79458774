//! Offspring distributions `mu` on the nonnegative integers and the shifted
//! step law `nu(k) = mu(k + 1)` of the coding walk.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Geometric, Zeta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities must sum to one within this tolerance.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Infinite supports are cut where the remaining tail mass drops below this.
pub const TRUNCATION_MASS: f64 = 1e-14;

/// Largest child count a truncated support may reach before the law is
/// declared unsuitable for exact dynamic programming.
pub const MAX_DP_SUPPORT: usize = 4096;

/// Serializable description of an offspring law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    /// Explicit probability mass function, `pmf[c] = mu(c)`.
    Finite { pmf: Vec<f64> },
    /// `mu(j) = (1 - q) q^j`; critical at `q = 1/2`.
    Geometric { q: f64 },
    /// Critical law with `mu(1) = 0` and `mu(j) = c j^-(1 + alpha)` for
    /// `j >= 2`. Lies in the domain of attraction of a spectrally positive
    /// alpha-stable law.
    PowerTail { alpha: f64 },
}

/// A validated offspring law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawKind", into = "LawKind")]
pub struct OffspringLaw {
    kind: LawKind,
    mean: f64,
    variance: f64,
    // PowerTail only: mu(j) = tail_const * j^-(1 + alpha) for j >= 2, and mu(0).
    tail_const: f64,
    p0: f64,
}

impl OffspringLaw {
    pub fn finite(pmf: Vec<f64>) -> Result<Self> {
        Self::try_from(LawKind::Finite { pmf })
    }

    pub fn geometric(q: f64) -> Result<Self> {
        Self::try_from(LawKind::Geometric { q })
    }

    pub fn power_tail(alpha: f64) -> Result<Self> {
        Self::try_from(LawKind::PowerTail { alpha })
    }

    /// `mu(0) = mu(2) = 1/2`: the step law is `nu(-1) = nu(1) = 1/2`.
    pub fn binary() -> Self {
        Self::finite(vec![0.5, 0.0, 0.5]).expect("binary law is valid")
    }

    /// Critical geometric law `mu(j) = 2^-(j + 1)`.
    pub fn critical_geometric() -> Self {
        Self::geometric(0.5).expect("geometric law is valid")
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    /// `mu(c)`.
    pub fn pmf(&self, c: u64) -> f64 {
        match &self.kind {
            LawKind::Finite { pmf } => pmf.get(c as usize).copied().unwrap_or(0.0),
            LawKind::Geometric { q } => (1.0 - q) * q.powf(c as f64),
            LawKind::PowerTail { alpha } => match c {
                0 => self.p0,
                1 => 0.0,
                _ => self.tail_const * (c as f64).powf(-1.0 - alpha),
            },
        }
    }

    /// `nu(y) = mu(y + 1)` for `y >= -1`.
    pub fn step_pmf(&self, y: i64) -> f64 {
        if y < -1 {
            0.0
        } else {
            self.pmf((y + 1) as u64)
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Offspring variance; `f64::INFINITY` for heavy-tailed laws.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Stable index of the domain of attraction when the law is heavy tailed.
    pub fn tail_index(&self) -> Option<f64> {
        match &self.kind {
            LawKind::PowerTail { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Constant `C` with `nu(k) ~ C k^-(1 + alpha)`.
    pub fn tail_constant(&self) -> Option<f64> {
        match &self.kind {
            LawKind::PowerTail { .. } => Some(self.tail_const),
            _ => None,
        }
    }

    pub fn is_critical(&self) -> bool {
        (self.mean - 1.0).abs() <= PMF_TOLERANCE
    }

    /// Largest probability of a single child count.
    pub fn max_prob(&self) -> f64 {
        match &self.kind {
            LawKind::Finite { pmf } => pmf.iter().copied().fold(0.0, f64::max),
            LawKind::Geometric { q } => 1.0 - q,
            LawKind::PowerTail { .. } => self.p0.max(self.pmf(2)),
        }
    }

    /// Whether `c` children has positive probability.
    pub fn supports(&self, c: u64) -> bool {
        match &self.kind {
            LawKind::Finite { pmf } => pmf.get(c as usize).is_some_and(|&p| p > 0.0),
            LawKind::Geometric { .. } => true,
            LawKind::PowerTail { .. } => c != 1,
        }
    }

    /// Finite pmf for dynamic programming: the exact pmf for finite laws, or
    /// the law cut where the tail mass falls below [`TRUNCATION_MASS`]. The
    /// second component is the discarded mass.
    pub fn dp_support(&self) -> Result<(Vec<f64>, f64)> {
        match &self.kind {
            LawKind::Finite { pmf } => {
                let last = pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                Ok((pmf[..=last].to_vec(), 0.0))
            }
            LawKind::Geometric { q } => {
                // tail beyond K is q^(K+1)
                let mut pmf = Vec::new();
                let mut tail = 1.0;
                let mut c = 0u64;
                while tail >= TRUNCATION_MASS {
                    let p = self.pmf(c);
                    pmf.push(p);
                    tail = q.powf((c + 1) as f64);
                    c += 1;
                    if pmf.len() > MAX_DP_SUPPORT {
                        return Err(Error::TruncationExceeded {
                            error: tail,
                            tolerance: TRUNCATION_MASS,
                        });
                    }
                }
                Ok((pmf, tail))
            }
            LawKind::PowerTail { alpha } => {
                let tail = self.tail_const * zeta_tail(1.0 + alpha, MAX_DP_SUPPORT as u64 + 1);
                Err(Error::TruncationExceeded {
                    error: tail,
                    tolerance: TRUNCATION_MASS,
                })
            }
        }
    }

    /// A sampler drawing child counts from the untruncated law.
    pub fn sampler(&self) -> OffspringSampler {
        let inner = match &self.kind {
            LawKind::Finite { pmf } => SamplerKind::Alias(
                WeightedAliasIndex::new(pmf.clone()).expect("validated pmf has positive mass"),
            ),
            LawKind::Geometric { q } => {
                SamplerKind::Geometric(Geometric::new(1.0 - q).expect("validated q"))
            }
            LawKind::PowerTail { alpha } => SamplerKind::PowerTail {
                p0: self.p0,
                zeta: Zeta::new(1.0 + alpha).expect("validated alpha"),
            },
        };
        OffspringSampler { inner }
    }
}

impl TryFrom<LawKind> for OffspringLaw {
    type Error = Error;

    fn try_from(kind: LawKind) -> Result<Self> {
        let law = match &kind {
            LawKind::Finite { pmf } => {
                if pmf.is_empty() {
                    return Err(Error::InvalidLaw("empty pmf".into()));
                }
                if let Some(p) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
                    return Err(Error::InvalidLaw(format!("negative or non-finite mass {p}")));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > PMF_TOLERANCE {
                    return Err(Error::InvalidLaw(format!("masses sum to {total}, not 1")));
                }
                let mean: f64 = pmf.iter().enumerate().map(|(c, p)| c as f64 * p).sum();
                let second: f64 = pmf.iter().enumerate().map(|(c, p)| (c * c) as f64 * p).sum();
                OffspringLaw {
                    kind: kind.clone(),
                    mean,
                    variance: second - mean * mean,
                    tail_const: 0.0,
                    p0: pmf[0],
                }
            }
            LawKind::Geometric { q } => {
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(Error::InvalidLaw(format!("geometric q = {q} not in (0, 1)")));
                }
                OffspringLaw {
                    kind: kind.clone(),
                    mean: q / (1.0 - q),
                    variance: q / ((1.0 - q) * (1.0 - q)),
                    tail_const: 0.0,
                    p0: 1.0 - q,
                }
            }
            LawKind::PowerTail { alpha } => {
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(Error::InvalidLaw(format!(
                        "power-tail index {alpha} not in (1, 2)"
                    )));
                }
                let first_moment = zeta_tail(*alpha, 2);
                let mass = zeta_tail(1.0 + alpha, 2);
                let c = 1.0 / first_moment;
                OffspringLaw {
                    kind: kind.clone(),
                    mean: 1.0,
                    variance: f64::INFINITY,
                    tail_const: c,
                    p0: 1.0 - c * mass,
                }
            }
        };
        if law.pmf(1) >= 1.0 {
            return Err(Error::InvalidLaw("mu(1) must be < 1".into()));
        }
        Ok(law)
    }
}

impl From<OffspringLaw> for LawKind {
    fn from(law: OffspringLaw) -> Self {
        law.kind
    }
}

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::Finite { pmf } => {
                let parts: Vec<String> = pmf.iter().map(|p| p.to_string()).collect();
                write!(f, "pmf:{}", parts.join(","))
            }
            LawKind::Geometric { q } => write!(f, "geometric:{q}"),
            LawKind::PowerTail { alpha } => write!(f, "power:{alpha}"),
        }
    }
}

/// Parses `binary`, `geometric`, `geometric:<q>`, `power:<alpha>`,
/// `pmf:<p0>,<p1>,...` or a bare comma-separated pmf.
impl FromStr for OffspringLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |m: &str| Error::InvalidLaw(format!("cannot parse law '{s}': {m}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
        match s.split_once(':') {
            None if s == "binary" => Ok(Self::binary()),
            None if s == "geometric" => Ok(Self::critical_geometric()),
            Some(("geometric", q)) => Self::geometric(num(q)?),
            Some(("power", a)) => Self::power_tail(num(a)?),
            Some(("pmf", list)) => Self::finite(list.split(',').map(num).collect::<Result<_>>()?),
            None if s.contains(',') || s.parse::<f64>().is_ok() => {
                Self::finite(s.split(',').map(num).collect::<Result<_>>()?)
            }
            _ => Err(bad("unknown preset")),
        }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Alias(WeightedAliasIndex<f64>),
    Geometric(Geometric),
    PowerTail { p0: f64, zeta: Zeta<f64> },
}

/// Draws child counts.
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    inner: SamplerKind,
}

impl OffspringSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.inner {
            SamplerKind::Alias(alias) => alias.sample(rng) as u64,
            SamplerKind::Geometric(g) => g.sample(rng),
            SamplerKind::PowerTail { p0, zeta } => {
                if rng.random::<f64>() < *p0 {
                    return 0;
                }
                loop {
                    let v = zeta.sample(rng);
                    if v >= 2.0 {
                        // counts this large blow through any size cap anyway
                        return if v > 1e18 { u64::MAX } else { v as u64 };
                    }
                }
            }
        }
    }
}

/// `sum_{k >= from} k^-s` for `s > 1`, by direct summation plus an
/// Euler-Maclaurin tail.
pub(crate) fn zeta_tail(s: f64, from: u64) -> f64 {
    let cut = from.max(1000);
    let head: f64 = (from..cut).map(|k| (k as f64).powf(-s)).sum();
    let n = cut as f64;
    let f = n.powf(-s);
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * f + s * f / (12.0 * n)
        - s * (s + 1.0) * (s + 2.0) * f / (720.0 * n * n * n);
    head + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_pmfs() {
        assert!(OffspringLaw::finite(vec![0.5, 0.4]).is_err());
        assert!(OffspringLaw::finite(vec![-0.1, 1.1]).is_err());
        assert!(OffspringLaw::finite(vec![0.0, 1.0]).is_err());
        assert!(OffspringLaw::finite(vec![]).is_err());
        assert!(OffspringLaw::geometric(1.0).is_err());
        assert!(OffspringLaw::power_tail(2.0).is_err());
    }

    #[test]
    fn moments() {
        let b = OffspringLaw::binary();
        assert_eq!(b.mean(), 1.0);
        assert_eq!(b.variance(), 1.0);
        let g = OffspringLaw::critical_geometric();
        assert!((g.mean() - 1.0).abs() < 1e-15);
        assert!((g.variance() - 2.0).abs() < 1e-15);
        assert_eq!(g.pmf(3), 1.0 / 16.0);
        assert_eq!(g.step_pmf(-1), 0.5);
        assert_eq!(g.step_pmf(-2), 0.0);
    }

    #[test]
    fn power_tail_is_a_critical_probability() {
        for alpha in [1.2, 1.5, 1.8] {
            let law = OffspringLaw::power_tail(alpha).unwrap();
            let head: f64 = (0..200_000u64).map(|c| law.pmf(c)).sum();
            let tail = law.tail_constant().unwrap() * zeta_tail(1.0 + alpha, 200_000);
            assert!((head + tail - 1.0).abs() < 1e-9, "alpha {alpha}: {}", head + tail);
            let mean_head: f64 = (0..200_000u64).map(|c| c as f64 * law.pmf(c)).sum();
            let mean_tail = law.tail_constant().unwrap() * zeta_tail(alpha, 200_000);
            assert!((mean_head + mean_tail - 1.0).abs() < 1e-9);
            assert!(law.is_critical());
        }
    }

    #[test]
    fn zeta_tail_matches_known_values() {
        // zeta(2) - 1
        assert!((zeta_tail(2.0, 2) - (std::f64::consts::PI.powi(2) / 6.0 - 1.0)).abs() < 1e-12);
        // zeta(4) - 1
        assert!((zeta_tail(4.0, 2) - (std::f64::consts::PI.powi(4) / 90.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn geometric_truncation() {
        let (pmf, tail) = OffspringLaw::critical_geometric().dp_support().unwrap();
        assert!(tail < TRUNCATION_MASS);
        assert!((pmf.iter().sum::<f64>() + tail - 1.0).abs() < 1e-15);
        assert!(OffspringLaw::power_tail(1.5).unwrap().dp_support().is_err());
    }

    #[test]
    fn parse_presets() {
        assert_eq!("binary".parse::<OffspringLaw>().unwrap(), OffspringLaw::binary());
        assert_eq!(
            "0.5,0,0.5".parse::<OffspringLaw>().unwrap(),
            OffspringLaw::binary()
        );
        assert_eq!(
            "geometric".parse::<OffspringLaw>().unwrap(),
            OffspringLaw::critical_geometric()
        );
        assert!("power:1.5".parse::<OffspringLaw>().is_ok());
        assert!("cauchy".parse::<OffspringLaw>().is_err());
        let law: OffspringLaw = "pmf:0.4,0.3,0.2,0.1".parse().unwrap();
        assert_eq!(law.to_string().parse::<OffspringLaw>().unwrap(), law);
    }

    #[test]
    fn serde_round_trip_validates() {
        let law = OffspringLaw::power_tail(1.5).unwrap();
        let json = serde_json::to_string(&law).unwrap();
        assert_eq!(json, r#"{"kind":"power_tail","alpha":1.5}"#);
        assert_eq!(serde_json::from_str::<OffspringLaw>(&json).unwrap(), law);
        assert!(serde_json::from_str::<OffspringLaw>(r#"{"kind":"finite","pmf":[0.2]}"#).is_err());
    }

    #[test]
    fn sampler_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for law in [
            OffspringLaw::finite(vec![0.4, 0.3, 0.2, 0.1]).unwrap(),
            OffspringLaw::critical_geometric(),
            OffspringLaw::power_tail(1.5).unwrap(),
        ] {
            let sampler = law.sampler();
            let n = 200_000;
            let mut counts = [0usize; 4];
            for _ in 0..n {
                let c = sampler.sample(&mut rng);
                if c < 4 {
                    counts[c as usize] += 1;
                }
            }
            for (c, &hits) in counts.iter().enumerate() {
                let p = law.pmf(c as u64);
                let se = (p * (1.0 - p) / n as f64).sqrt();
                let freq = hits as f64 / n as f64;
                assert!((freq - p).abs() <= 4.0 * se + 1e-12, "{law} c={c}: {freq} vs {p}");
            }
        }
    }
}
