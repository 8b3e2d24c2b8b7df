//! Selection models, inclusion probabilities and result containers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tolerance::VARIANCE_CLAMP;
use crate::{Error, Result};

/// Independent per-point inclusion probabilities, aligned with the point set.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliModel {
    probs: Vec<f64>,
}

impl BernoulliModel {
    /// Every probability must lie strictly inside `(0, 1)`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p < 1.0))
        {
            return Err(Error::InvalidProbability { index, value });
        }
        Ok(BernoulliModel { probs })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// `π(Q)`: probability that every point of `Q` is selected.
    pub fn pi_product(&self, q: &[usize]) -> f64 {
        q.iter().map(|&i| self.probs[i]).product()
    }

    /// `π̄(Q)`: probability that no point of `Q` is selected.
    pub fn pibar_product(&self, q: &[usize]) -> f64 {
        q.iter().map(|&i| 1.0 - self.probs[i]).product()
    }
}

/// How the random subset is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Bernoulli(BernoulliModel),
    /// A uniformly random subset of exactly `s` points.
    FixedSize { s: usize },
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Bernoulli(_) => "bernoulli",
            Distribution::FixedSize { .. } => "fixed",
        }
    }

    pub fn fixed_size(&self) -> Option<usize> {
        match self {
            Distribution::FixedSize { s } => Some(*s),
            Distribution::Bernoulli(_) => None,
        }
    }

    /// Checks the model against a point set of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Distribution::Bernoulli(m) if m.len() != n => Err(Error::InvalidArgument(format!(
                "{} probabilities for {n} points",
                m.len()
            ))),
            Distribution::FixedSize { s } if *s > n => Err(Error::InvalidArgument(format!(
                "subset size {s} exceeds the number of points {n}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Largest `n` for which binomial coefficients are tabulated exactly.
const EXACT_BINOMIAL_LIMIT: usize = 120;

/// Binomial ratios for a fixed population size `n`.
///
/// `inclusion_ratio(k, s) = C(n-k, s-k) / C(n, s)` is the probability that
/// `k` fixed points all land in a uniform `s`-subset. It is tabulated for
/// `k <= 4` as a telescoping product. General ratios `C(m, j) / C(n, s)` use
/// exact integer coefficients for small `n` and log-factorials otherwise.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    n: usize,
    inclusion: [Vec<f64>; 5],
    ln_fact: Vec<f64>,
    exact: Option<Vec<Vec<f64>>>,
}

impl BinomialTable {
    pub fn new(n: usize) -> Self {
        let inclusion = std::array::from_fn(|k| {
            (0..=n)
                .map(|s| {
                    if s < k || n < k {
                        0.0
                    } else {
                        (0..k).map(|i| (s - i) as f64 / (n - i) as f64).product()
                    }
                })
                .collect()
        });
        let mut ln_fact = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        ln_fact.push(0.0);
        for i in 1..=n {
            acc += (i as f64).ln();
            ln_fact.push(acc);
        }
        let exact = (n <= EXACT_BINOMIAL_LIMIT).then(|| {
            let mut rows: Vec<Vec<u128>> = vec![vec![1]];
            for m in 1..=n {
                let prev = &rows[m - 1];
                let mut row = vec![1u128; m + 1];
                for j in 1..m {
                    row[j] = prev[j - 1] + prev[j];
                }
                rows.push(row);
            }
            rows.into_iter()
                .map(|r| r.into_iter().map(|c| c as f64).collect())
                .collect()
        });
        BinomialTable { n, inclusion, ln_fact, exact }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `C(n-k, s-k) / C(n, s)`; zero when `s < k`.
    pub fn inclusion_ratio(&self, k: usize, s: usize) -> f64 {
        assert!(k <= 4, "inclusion ratios are tabulated for k <= 4");
        self.inclusion[k].get(s).copied().unwrap_or(0.0)
    }

    /// `C(m, j) / C(n, s)` for `m <= n`; zero when `j > m`.
    pub fn choose_ratio(&self, m: usize, j: usize, s: usize) -> f64 {
        if j > m || s > self.n {
            return 0.0;
        }
        match &self.exact {
            Some(rows) => rows[m][j] / rows[self.n][s],
            None => {
                let lf = &self.ln_fact;
                let ln_num = lf[m] - lf[j] - lf[m - j];
                let ln_den = lf[self.n] - lf[s] - lf[self.n - s];
                (ln_num - ln_den).exp()
            }
        }
    }
}

/// Which engine produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Approx,
    Sample,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
            Method::Sample => "sample",
            Method::Oracle => "oracle",
        }
    }
}

/// One row of a per-subset-size table, serialized as `[s, mean, variance]`
/// or `[s, mean]` when the variance is not computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeRow {
    pub s: usize,
    pub mean: f64,
    pub variance: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SizeRowRepr {
    Full(usize, f64, f64),
    MeanOnly(usize, f64),
}

impl Serialize for SizeRow {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self.variance {
            Some(v) => SizeRowRepr::Full(self.s, self.mean, v),
            None => SizeRowRepr::MeanOnly(self.s, self.mean),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SizeRow {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Ok(match SizeRowRepr::deserialize(de)? {
            SizeRowRepr::Full(s, mean, v) => SizeRow { s, mean, variance: Some(v) },
            SizeRowRepr::MeanOnly(s, mean) => SizeRow { s, mean, variance: None },
        })
    }
}

/// Mean, optional variance and optional per-`s` table of one measure.
///
/// Field order is the serialized JSON order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub measure: String,
    pub distribution: String,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_s: Option<Vec<SizeRow>>,
    pub elapsed_ms: f64,
    /// Set when a slightly negative variance was rounded up to zero.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub variance_clamped: bool,
    /// Command line that reproduces this result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

impl MomentResult {
    pub fn new(measure: &str, dist: &Distribution, method: Method, n: usize, d: usize) -> Self {
        MomentResult {
            measure: measure.to_string(),
            distribution: dist.name().to_string(),
            method,
            n,
            d,
            s: dist.fixed_size(),
            epsilon: None,
            samples: None,
            seed: None,
            mean: 0.0,
            variance: None,
            per_s: None,
            elapsed_ms: 0.0,
            variance_clamped: false,
            command: None,
        }
    }

    /// A fixed-size result carrying a per-`s` table. The top-level mean and
    /// variance repeat the last row.
    pub fn from_table(measure: &str, method: Method, n: usize, d: usize, rows: Vec<SizeRow>) -> Self {
        let mut r = MomentResult::new(measure, &Distribution::FixedSize { s: n }, method, n, d);
        r.s = None;
        if let Some(last) = rows.last() {
            r.mean = last.mean;
            r.variance = last.variance;
        }
        r.per_s = Some(rows);
        r
    }

    /// Narrows a table result to the single subset size `s`.
    pub fn select(mut self, s: usize) -> Result<Self> {
        let row = *self.row(s).ok_or_else(|| {
            Error::InvalidArgument(format!("no table row for subset size s = {s}"))
        })?;
        self.s = Some(s);
        self.mean = row.mean;
        self.variance = row.variance;
        self.per_s = None;
        Ok(self)
    }

    /// Looks up the table row for subset size `s`.
    pub fn row(&self, s: usize) -> Option<&SizeRow> {
        self.per_s.as_ref()?.iter().find(|r| r.s == s)
    }
}

/// `E[X^2] - E[X]^2`, with round-off negatives clamped to zero. The flag is
/// set when clamping happened.
pub fn variance_from_moments(second: f64, mean: f64) -> (f64, bool) {
    let v = second - mean * mean;
    if v >= 0.0 {
        (v, false)
    } else {
        debug_assert!(
            v >= -VARIANCE_CLAMP * second.abs().max(f64::MIN_POSITIVE),
            "variance {v} far below zero (second moment {second})"
        );
        (0.0, true)
    }
}

/// Draws subsets under a [`Distribution`] with a reusable scratch buffer.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    perm: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(n: usize) -> Self {
        SubsetSampler { perm: (0..n).collect() }
    }

    /// Fills `out` with the indices of one random subset. Bernoulli flips
    /// an independent coin per point; fixed-size runs a partial Fisher-Yates
    /// shuffle over the scratch permutation.
    pub fn sample<R: Rng + ?Sized>(&mut self, dist: &Distribution, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        match dist {
            Distribution::Bernoulli(m) => {
                out.extend((0..m.len()).filter(|&i| rng.random::<f64>() < m.prob(i)));
            }
            Distribution::FixedSize { s } => {
                let n = self.perm.len();
                for i in 0..*s {
                    let j = rng.random_range(i..n);
                    self.perm.swap(i, j);
                }
                out.extend_from_slice(&self.perm[..*s]);
            }
        }
    }
}

/// One random subset of `0..n`; see [`SubsetSampler::sample`].
pub fn sample_subset<R: Rng + ?Sized>(n: usize, dist: &Distribution, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::new();
    SubsetSampler::new(n).sample(dist, rng, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pi_products() {
        let m = BernoulliModel::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(m.pi_product(&[]), 1.0);
        assert_eq!(m.pi_product(&[0, 1]), 0.25);
        let m = BernoulliModel::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((m.pi_product(&[1, 2]) - 0.15).abs() < 1e-15);
        assert_eq!(m.pibar_product(&[]), 1.0);
        assert!((m.pibar_product(&[0, 1]) - 0.56).abs() < 1e-15);
        let m = BernoulliModel::new(vec![0.5]).unwrap();
        assert_eq!(m.pibar_product(&[0]), 0.5);
    }

    #[test]
    fn endpoint_probabilities_rejected() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                BernoulliModel::new(vec![0.5, bad]),
                Err(Error::InvalidProbability { index: 1, .. })
            ));
        }
    }

    #[test]
    fn product_over_all_subsets_sums_to_one() {
        let probs: Vec<f64> = (0..12).map(|i| 0.05 + 0.07 * i as f64).collect();
        let m = BernoulliModel::new(probs).unwrap();
        let n = m.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| mask & (1 << i) != 0);
            total += m.pi_product(&inside) * m.pibar_product(&outside);
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inclusion_ratio_examples() {
        let t = BinomialTable::new(4);
        assert!((t.inclusion_ratio(2, 2) - 1.0 / 6.0).abs() < 1e-15);
        let t = BinomialTable::new(5);
        for s in 0..=5 {
            assert_eq!(t.inclusion_ratio(0, s), 1.0);
        }
        let t = BinomialTable::new(6);
        assert!((t.inclusion_ratio(3, 4) - 0.2).abs() < 1e-15);
        assert_eq!(t.inclusion_ratio(3, 2), 0.0);
    }

    #[test]
    fn choose_ratio_exact_and_log_paths_agree() {
        let small = BinomialTable::new(100);
        let mut big = BinomialTable::new(100);
        big.exact = None;
        for (m, j, s) in [(50, 10, 20), (99, 49, 50), (10, 3, 5), (100, 50, 50)] {
            let a = small.choose_ratio(m, j, s);
            let b = big.choose_ratio(m, j, s);
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300), "{m} {j} {s}: {a} vs {b}");
        }
        assert_eq!(small.choose_ratio(3, 4, 5), 0.0);
    }

    #[test]
    fn inclusion_ratio_matches_choose_ratio() {
        let t = BinomialTable::new(30);
        for k in 0..=4 {
            for s in k..=30 {
                let a = t.inclusion_ratio(k, s);
                let b = t.choose_ratio(30 - k, s - k, s);
                assert!((a - b).abs() <= 1e-13 * a.max(1e-300));
            }
        }
    }

    #[test]
    fn sampler_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let full = sample_subset(6, &Distribution::FixedSize { s: 6 }, &mut rng);
        let mut sorted = full.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
        assert!(sample_subset(6, &Distribution::FixedSize { s: 0 }, &mut rng).is_empty());

        let dist = Distribution::Bernoulli(BernoulliModel::uniform(10, 0.5).unwrap());
        let a = sample_subset(10, &dist, &mut ChaCha8Rng::seed_from_u64(7));
        let b = sample_subset(10, &dist, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_size_frequencies_match_ratios() {
        let (n, s, draws) = (9, 4, 100_000);
        let table = BinomialTable::new(n);
        let dist = Distribution::FixedSize { s };
        let mut sampler = SubsetSampler::new(n);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut out = Vec::new();
        let mut marginal = vec![0usize; n];
        let mut contains = [0usize; 5];
        for _ in 0..draws {
            sampler.sample(&dist, &mut rng, &mut out);
            for &i in &out {
                marginal[i] += 1;
            }
            for (k, c) in contains.iter_mut().enumerate() {
                if (0..k).all(|i| out.contains(&i)) {
                    *c += 1;
                }
            }
        }
        let within = |count: usize, p: f64| {
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            (count as f64 / draws as f64 - p).abs() <= 3.0 * se.max(1e-12)
        };
        for (k, &c) in contains.iter().enumerate() {
            assert!(within(c, table.inclusion_ratio(k, s)), "k = {k}");
        }
        for &m in &marginal {
            assert!(within(m, s as f64 / n as f64));
        }
    }

    #[test]
    fn size_row_serialization() {
        let rows = vec![
            SizeRow { s: 2, mean: 1.5, variance: Some(0.25) },
            SizeRow { s: 3, mean: 0.1, variance: None },
        ];
        let json = serde_json::to_string(&rows).unwrap();
        assert_eq!(json, "[[2,1.5,0.25],[3,0.1]]");
        let back: Vec<SizeRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rows);
    }
}
