//! Over-representation p-values.
//!
//! The p-value of observing `k` or more of `n` draws hitting one of `K`
//! marked nodes in a population of `N` is the hypergeometric right tail
//! `P(X >= k)`. [`hypergeom_sf_exact`] evaluates it directly;
//! [`hypergeom_sf_poisson`] uses the Poisson tail with `lambda = n*K/N`,
//! which is cheaper and adequate when `N` dwarfs `n` and `k`.
//!
//! Both tails are summed from whichever side of the mode is shorter. The
//! first term is evaluated in log space with Loader's saddle-point form
//! (Stirling-series error terms plus binomial deviance), so it stays
//! accurate when `N` is in the billions and the individual binomial
//! coefficients are far outside binary64 range. Subsequent terms follow
//! from the pmf ratio and are accumulated with Neumaier summation.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("invalid enrichment counts: {field} {message}")]
    Domain {
        field: &'static str,
        message: String,
    },
}

/// `(N, K, n, k)` for one enrichment test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnrichmentCounts {
    /// Nodes of the answer type in the graph.
    #[serde(rename = "N")]
    pub population: u64,
    /// Nodes of the answer type sharing the feature.
    #[serde(rename = "K")]
    pub successes: u64,
    /// Size of the lookup answer set.
    #[serde(rename = "n")]
    pub draws: u64,
    /// Answers sharing the feature.
    #[serde(rename = "k")]
    pub observed: u64,
}

impl EnrichmentCounts {
    pub fn new(
        population: u64,
        successes: u64,
        draws: u64,
        observed: u64,
    ) -> Result<Self, StatsError> {
        let counts = Self {
            population,
            successes,
            draws,
            observed,
        };
        counts.validate()?;
        Ok(counts)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let Self {
            population: n_pop,
            successes: k_pop,
            draws: n,
            observed: k,
        } = *self;
        let domain = |field, message: String| Err(StatsError::Domain { field, message });
        if k_pop > n_pop {
            return domain("K", format!("= {k_pop} exceeds N = {n_pop}"));
        }
        if n > n_pop {
            return domain("n", format!("= {n} exceeds N = {n_pop}"));
        }
        if k > n {
            return domain("k", format!("= {k} exceeds n = {n}"));
        }
        if k > k_pop {
            return domain("k", format!("= {k} exceeds K = {k_pop}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Poisson,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Poisson => "poisson",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub value: f64,
    pub method: Method,
}

/// Method selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    #[default]
    Auto,
    Exact,
    Poisson,
}

impl std::str::FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "poisson" => Ok(Self::Poisson),
            other => Err(format!(
                "unknown stats method {other:?} (expected auto, exact or poisson)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub method: MethodChoice,
    pub poisson_threshold_n: u64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            poisson_threshold_n: 100_000,
        }
    }
}

/// Poisson when forced, or under `Auto` when `N` exceeds the threshold and
/// both `n` and `k` are at most `sqrt(N)`.
pub fn select_method(counts: &EnrichmentCounts, config: &StatsConfig) -> Method {
    match config.method {
        MethodChoice::Exact => Method::Exact,
        MethodChoice::Poisson => Method::Poisson,
        MethodChoice::Auto => {
            let n_pop = counts.population as u128;
            let small = |x: u64| (x as u128) * (x as u128) <= n_pop;
            if counts.population > config.poisson_threshold_n
                && small(counts.draws)
                && small(counts.observed)
            {
                Method::Poisson
            } else {
                Method::Exact
            }
        }
    }
}

/// Right tail with the method chosen by `config`.
pub fn survival(counts: &EnrichmentCounts, config: &StatsConfig) -> Result<PValue, StatsError> {
    match select_method(counts, config) {
        Method::Exact => hypergeom_sf_exact(counts),
        Method::Poisson => hypergeom_sf_poisson(counts),
    }
}

/// `P(X >= k)` for `X ~ Hypergeometric(N, K, n)`.
pub fn hypergeom_sf_exact(counts: &EnrichmentCounts) -> Result<PValue, StatsError> {
    counts.validate()?;
    Ok(PValue {
        value: hypergeom_sf_unclamped(counts).clamp(0.0, 1.0),
        method: Method::Exact,
    })
}

/// `1 - sum_{i<k} e^-lambda lambda^i / i!` with `lambda = n*K/N`.
pub fn hypergeom_sf_poisson(counts: &EnrichmentCounts) -> Result<PValue, StatsError> {
    counts.validate()?;
    let lambda = if counts.population == 0 {
        0.0
    } else {
        counts.draws as f64 * counts.successes as f64 / counts.population as f64
    };
    Ok(PValue {
        value: poisson_sf_unclamped(counts.observed, lambda).clamp(0.0, 1.0),
        method: Method::Poisson,
    })
}

pub(crate) fn hypergeom_sf_unclamped(counts: &EnrichmentCounts) -> f64 {
    let EnrichmentCounts {
        population: big_n,
        successes: big_k,
        draws: n,
        observed: k,
    } = *counts;
    let lo = n.saturating_sub(big_n - big_k);
    let hi = n.min(big_k);
    if k <= lo {
        return 1.0;
    }
    // here 0 < n < N and lo < k <= hi
    let failures = big_n - big_k;
    let mode = ((n as u128 + 1) * (big_k as u128 + 1) / (big_n as u128 + 2)) as u64;

    if k > mode {
        // upward from k; terms shrink monotonically past the mode
        let mut term = hypergeom_pmf(k, big_k, failures, n);
        let mut sum = Neumaier::default();
        let mut i = k;
        loop {
            sum.add(term);
            if i == hi || term == 0.0 {
                break;
            }
            let ratio = ((big_k - i) as f64 * (n - i) as f64)
                / ((i + 1) as f64 * (failures + i + 1 - n) as f64);
            if ratio < 1.0 && term * ratio / (1.0 - ratio) < sum.total() * 1e-17 {
                break;
            }
            term *= ratio;
            i += 1;
        }
        sum.total()
    } else {
        // downward from k-1 and complement
        let mut term = hypergeom_pmf(k - 1, big_k, failures, n);
        let mut sum = Neumaier::default();
        let mut i = k - 1;
        loop {
            sum.add(term);
            if i == lo || term == 0.0 {
                break;
            }
            let ratio = (i as f64 * (failures + i - n) as f64)
                / ((big_k - i + 1) as f64 * (n - i + 1) as f64);
            if ratio < 1.0 && term * ratio / (1.0 - ratio) < sum.total() * 1e-17 {
                break;
            }
            term *= ratio;
            i -= 1;
        }
        1.0 - sum.total()
    }
}

pub(crate) fn poisson_sf_unclamped(k: u64, lambda: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut sum = Neumaier::default();
    if k as f64 > lambda {
        // direct right tail; avoids cancellation when the tail is tiny
        let mut term = poisson_pmf(k, lambda);
        let mut i = k;
        loop {
            sum.add(term);
            let ratio = lambda / (i + 1) as f64;
            if term == 0.0 || term * ratio / (1.0 - ratio) < sum.total() * 1e-17 {
                break;
            }
            term *= ratio;
            i += 1;
        }
        sum.total()
    } else {
        let mut term = poisson_pmf(k - 1, lambda);
        let mut i = k - 1;
        loop {
            sum.add(term);
            if i == 0 || term == 0.0 {
                break;
            }
            let ratio = i as f64 / lambda;
            if ratio < 1.0 && term * ratio / (1.0 - ratio) < sum.total() * 1e-17 {
                break;
            }
            term *= ratio;
            i -= 1;
        }
        1.0 - sum.total()
    }
}

/// `C(K, x) C(F, n-x) / C(K+F, n)` for `0 < n < K+F`.
fn hypergeom_pmf(x: u64, successes: u64, failures: u64, n: u64) -> f64 {
    let total = successes + failures;
    let p = n as f64 / total as f64;
    let q = (total - n) as f64 / total as f64;
    let log = log_binom_raw(x, successes, p, q) + log_binom_raw(n - x, failures, p, q)
        - log_binom_raw(n, total, p, q);
    log.exp()
}

/// `ln( C(n, x) p^x q^(n-x) )` evaluated without forming the coefficient.
fn log_binom_raw(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if x == 0 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        return if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
    }
    if x == n {
        let nf = n as f64;
        return if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
    }
    let (xf, nf) = (x as f64, n as f64);
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = (2.0 * PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln( lambda^x e^-lambda / x! )`, then exponentiated.
fn poisson_pmf(x: u64, lambda: f64) -> f64 {
    if x == 0 {
        return (-lambda).exp();
    }
    let xf = x as f64;
    (-stirlerr(x) - bd0(xf, lambda) - 0.5 * (2.0 * PI * xf).ln()).exp()
}

/// `ln(n!) - [ (n + 1/2) ln n - n + ln sqrt(2 pi) ]`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        if n == 0 {
            return 0.0;
        }
        // n! is exact in binary64 up to 15!
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let nf = n as f64;
        return fact.ln() - (nf + 0.5) * nf.ln() + nf - 0.5 * (2.0 * PI).ln();
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Binomial deviance `x ln(x/np) + np - x`, series form near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / np).ln() + np - x
}

/// Neumaier's variant of Kahan summation.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};
    use proptest::prelude::*;

    fn counts(big_n: u64, big_k: u64, n: u64, k: u64) -> EnrichmentCounts {
        EnrichmentCounts::new(big_n, big_k, n, k).unwrap()
    }

    fn binom(n: u64, r: u64) -> BigUint {
        if r > n {
            return BigUint::zero();
        }
        let r = r.min(n - r);
        let mut acc = BigUint::one();
        for i in 0..r {
            acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        acc
    }

    /// Right tail as an exact rational.
    fn rational_sf(big_n: u64, big_k: u64, n: u64, k: u64) -> f64 {
        let mut num = BigUint::zero();
        for i in k..=n.min(big_k) {
            num += binom(big_k, i) * binom(big_n - big_k, n - i);
        }
        let r = BigRational::new(num.into(), binom(big_n, n).into());
        r.to_f64().unwrap()
    }

    #[test]
    fn k_zero_is_one() {
        for c in [
            counts(10, 5, 4, 0),
            counts(1_000_000, 0, 0, 0),
            counts(7, 7, 7, 0),
        ] {
            assert_eq!(hypergeom_sf_exact(&c).unwrap().value, 1.0);
            assert_eq!(hypergeom_sf_poisson(&c).unwrap().value, 1.0);
        }
    }

    #[test]
    fn small_case_matches_enumeration() {
        // every 4-subset of 10 items with 5 marked: 55 of 210 hit >= 3
        let mut hits = 0;
        let mut total = 0;
        for mask in 0u32..1024 {
            if mask.count_ones() == 4 {
                total += 1;
                if (mask & 0b11111).count_ones() >= 3 {
                    hits += 1;
                }
            }
        }
        assert_eq!((hits, total), (55, 210));
        let p = hypergeom_sf_exact(&counts(10, 5, 4, 3)).unwrap();
        assert!((p.value - 55.0 / 210.0).abs() < 1e-13, "{}", p.value);
        assert_eq!(p.method, Method::Exact);
    }

    #[test]
    fn observed_above_support_is_domain_error() {
        let err = EnrichmentCounts::new(10, 5, 4, 5).unwrap_err();
        assert!(matches!(err, StatsError::Domain { field: "k", .. }));
        assert!(matches!(
            EnrichmentCounts::new(10, 11, 4, 1),
            Err(StatsError::Domain { field: "K", .. })
        ));
        assert!(matches!(
            EnrichmentCounts::new(10, 5, 11, 1),
            Err(StatsError::Domain { field: "n", .. })
        ));
        let raw = EnrichmentCounts {
            population: 10,
            successes: 2,
            draws: 4,
            observed: 3,
        };
        assert!(hypergeom_sf_exact(&raw).is_err());
        assert!(hypergeom_sf_poisson(&raw).is_err());
    }

    #[test]
    fn poisson_edge_cases() {
        // K = 0 -> lambda = 0
        assert_eq!(
            hypergeom_sf_poisson(&counts(1000, 0, 10, 0)).unwrap().value,
            1.0
        );
        let none = EnrichmentCounts {
            population: 1000,
            successes: 0,
            draws: 10,
            observed: 1,
        };
        assert_eq!(poisson_sf_unclamped(none.observed, 0.0), 0.0);
    }

    #[test]
    fn poisson_spot_value() {
        // lambda = 50 * 100 / 1e6 = 0.005
        let c = counts(1_000_000, 100, 50, 3);
        let poisson = hypergeom_sf_poisson(&c).unwrap().value;
        let exact = rational_sf(1_000_000, 100, 50, 3);
        let lambda: f64 = 0.005;
        let closed = 1.0 - (-lambda).exp() * (1.0 + lambda + lambda * lambda / 2.0);
        assert!((poisson - closed).abs() / poisson < 1e-6);
        assert!((poisson - 2.08e-8).abs() / 2.08e-8 < 0.01);
        assert!((poisson - exact).abs() / exact <= 0.10);
        assert!((hypergeom_sf_exact(&c).unwrap().value - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn large_population_matches_rational() {
        for &(big_n, big_k, n, k) in &[
            (1_000_000_000, 1_000, 50, 2),
            (1_000_000_000, 500_000_000, 100, 60),
            (1_000_000, 5_000, 200, 3),
            (1_000_000, 5_000, 200, 1),
            (50_000, 25_000, 400, 210),
        ] {
            let want = rational_sf(big_n, big_k, n, k);
            let got = hypergeom_sf_exact(&counts(big_n, big_k, n, k))
                .unwrap()
                .value;
            assert!(
                (got - want).abs() <= 1e-12,
                "{big_n} {big_k} {n} {k}: {got} vs {want}"
            );
            if want > 1e-300 {
                assert!((got - want).abs() / want < 1e-9, "relative {got} vs {want}");
            }
        }
    }

    #[test]
    fn method_selection() {
        let cfg = StatsConfig::default();
        assert_eq!(
            select_method(&counts(1_000, 10, 10, 2), &cfg),
            Method::Exact
        );
        assert_eq!(
            select_method(&counts(1_000_000, 100, 50, 3), &cfg),
            Method::Poisson
        );
        assert_eq!(
            select_method(&counts(1_000_000, 5_000, 2_000, 3), &cfg),
            Method::Exact
        );
        assert_eq!(
            select_method(&counts(100_000, 100, 50, 3), &cfg),
            Method::Exact
        );
        let forced = StatsConfig {
            method: MethodChoice::Poisson,
            ..cfg
        };
        assert_eq!(
            select_method(&counts(10, 5, 4, 3), &forced),
            Method::Poisson
        );
        let forced = StatsConfig {
            method: MethodChoice::Exact,
            ..cfg
        };
        assert_eq!(
            select_method(&counts(1_000_000, 100, 50, 3), &forced),
            Method::Exact
        );
        assert_eq!(
            survival(&counts(1_000_000, 100, 50, 3), &cfg)
                .unwrap()
                .method,
            Method::Poisson
        );
    }

    fn arb_counts(max_n: u64) -> impl Strategy<Value = EnrichmentCounts> {
        (0..=max_n)
            .prop_flat_map(|big_n| (Just(big_n), 0..=big_n, 0..=big_n))
            .prop_flat_map(|(big_n, big_k, n)| {
                (Just(big_n), Just(big_k), Just(n), 0..=n.min(big_k))
            })
            .prop_map(|(a, b, c, d)| EnrichmentCounts::new(a, b, c, d).unwrap())
    }

    proptest! {
        #[test]
        fn monotone_in_observed(c in arb_counts(3_000)) {
            let next = |c: &EnrichmentCounts| EnrichmentCounts { observed: c.observed + 1, ..*c };
            if c.observed < c.draws.min(c.successes) {
                let a = hypergeom_sf_exact(&c).unwrap().value;
                let b = hypergeom_sf_exact(&next(&c)).unwrap().value;
                prop_assert!(b <= a + 1e-15);
                let a = hypergeom_sf_poisson(&c).unwrap().value;
                let b = hypergeom_sf_poisson(&next(&c)).unwrap().value;
                prop_assert!(b <= a + 1e-15);
            }
        }

        #[test]
        fn monotone_in_successes(c in arb_counts(3_000)) {
            if c.successes < c.population {
                let a = hypergeom_sf_exact(&c).unwrap().value;
                let b = hypergeom_sf_exact(&EnrichmentCounts { successes: c.successes + 1, ..c }).unwrap().value;
                prop_assert!(b + 1e-15 >= a);
            }
        }

        #[test]
        fn overshoot_is_tiny(c in arb_counts(1_000_000)) {
            let raw = hypergeom_sf_unclamped(&c);
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&raw), "{raw}");
            let lambda = if c.population == 0 { 0.0 } else { c.draws as f64 * c.successes as f64 / c.population as f64 };
            let raw = poisson_sf_unclamped(c.observed, lambda);
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&raw), "{raw}");
        }

        #[test]
        fn agrees_with_rational(c in arb_counts(400)) {
            let want = rational_sf(c.population, c.successes, c.draws, c.observed);
            let got = hypergeom_sf_exact(&c).unwrap().value;
            prop_assert!((got - want).abs() <= 1e-12, "{:?}: {} vs {}", c, got, want);
        }
    }
}
