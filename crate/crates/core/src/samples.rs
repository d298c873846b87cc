//! Disturbance samples: file ingestion, grid-bucket clustering, support
//! learning and the ground-truth distributions used to generate and simulate.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major N×d matrix of disturbance draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::Parse(format!("{} values cannot form rows of width {dim}", data.len())));
        }
        Ok(Samples { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Samples::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// First `n` rows; used to build nested sample sets.
    pub fn prefix(&self, n: usize) -> Samples {
        Samples { dim: self.dim, data: self.data[..n.min(self.len()) * self.dim].to_vec() }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
        for r in self.rows() {
            w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Read a headerless CSV with one sample per row and `dim` columns.
pub fn load_samples(path: &Path, dim: usize) -> Result<Samples> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut data = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rec.len() });
        }
        for f in rec.iter() {
            let v: f64 = f.parse().map_err(|_| Error::Parse(format!("line {}: `{f}` is not a number", line + 1)))?;
            data.push(v);
        }
    }
    if data.is_empty() {
        return Err(Error::Parse(format!("{}: no samples", path.display())));
    }
    Samples::new(dim, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Vec<f64>,
    pub diameter: f64,
    pub count: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn cmp_rows(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Grid-bucket clustering: split the bounding box of the samples into
/// `k` equal buckets per axis for k = 1, 2, ... and stop at the first k whose
/// nonempty-bucket count reaches `target`. If `target` is at least the number
/// of distinct samples every distinct value becomes its own cluster.
pub fn cluster_samples(s: &Samples, target: usize) -> Vec<Cluster> {
    let d = s.dim();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| cmp_rows(s.row(a), s.row(b)).then(a.cmp(&b)));
    let mut ids = vec![0u128; s.len()];
    let mut distinct = 0u128;
    for w in 0..order.len() {
        if w > 0 && cmp_rows(s.row(order[w - 1]), s.row(order[w])).is_ne() {
            distinct += 1;
        }
        ids[order[w]] = distinct;
    }
    let target = target.max(1);
    if s.is_empty() || target as u128 > distinct {
        return clusters_from_ids(s, &ids);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in s.rows() {
        for j in 0..d {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    // normalized coordinates in [0, 1]
    let unit: Vec<f64> = s
        .rows()
        .flat_map(|r| {
            (0..d).map(|j| if hi[j] > lo[j] { (r[j] - lo[j]) / (hi[j] - lo[j]) } else { 0.0 }).collect::<Vec<_>>()
        })
        .collect();
    let key = |t: &[f64], k: usize| -> u128 {
        t.iter().fold(0u128, |acc, &v| acc * k as u128 + ((v * k as f64).floor() as u128).min(k as u128 - 1))
    };
    let mut k = 1usize;
    let mut dense: Vec<bool> = Vec::new();
    loop {
        let cells = (k as f64).powi(d as i32);
        let mut count = 0usize;
        if cells <= (1u64 << 24) as f64 {
            dense.clear();
            dense.resize(cells as usize, false);
            for t in unit.chunks_exact(d) {
                let b = key(t, k) as usize;
                if !dense[b] {
                    dense[b] = true;
                    count += 1;
                    if count >= target {
                        break;
                    }
                }
            }
        } else {
            let mut seen = std::collections::HashSet::new();
            for t in unit.chunks_exact(d) {
                if seen.insert(key(t, k)) && seen.len() >= target {
                    break;
                }
            }
            count = seen.len();
        }
        if count >= target || k >= 1 << 20 {
            let ids: Vec<u128> = unit.chunks_exact(d).map(|t| key(t, k)).collect();
            return clusters_from_ids(s, &ids);
        }
        k += 1;
    }
}

fn clusters_from_ids(s: &Samples, ids: &[u128]) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by_key(|&i| (ids[i], i));
    let mut out = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && ids[order[end]] == ids[order[start]] {
            end += 1;
        }
        out.push(make_cluster(s, &order[start..end]));
        start = end;
    }
    out
}

fn make_cluster(s: &Samples, idx: &[usize]) -> Cluster {
    let d = s.dim();
    let mut sum = vec![0.0; d];
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in idx {
        for (j, &v) in s.row(i).iter().enumerate() {
            sum[j] += v;
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    // centroid, exact on axes where all members agree
    let c: Vec<f64> = (0..d).map(|j| if lo[j] == hi[j] { lo[j] } else { (sum[j] / idx.len() as f64).clamp(lo[j], hi[j]) }).collect();
    let r = idx.iter().map(|&i| dist(s.row(i), &c)).fold(0.0, f64::max);
    Cluster { center: c, diameter: 2.0 * r, count: idx.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    /// Largest sample norm.
    pub radius: f64,
    /// Samples needed for the radius to hold with the requested confidence.
    pub required_n: u64,
    pub satisfied: bool,
}

/// Number of samples after which the empirical max-norm ball holds all but
/// `eps_c` of the mass with confidence `1 - beta_c`.
pub fn support_sample_count(eps_c: f64, beta_c: f64) -> u64 {
    // relative slack absorbs rounding when inverting `smallest_support_eps`
    ((1.0 / beta_c).ln() / -(-eps_c).ln_1p() * (1.0 - 1e-12)).ceil() as u64
}

/// Smallest mass outside the learned support that `n` samples certify.
pub fn smallest_support_eps(n: usize, beta_c: f64) -> f64 {
    -(beta_c.ln() / n as f64).exp_m1()
}

pub fn learn_support(s: &Samples, eps_c: f64, beta_c: f64) -> SupportEstimate {
    let radius = s.rows().map(norm).fold(0.0, f64::max);
    let required_n = support_sample_count(eps_c, beta_c);
    SupportEstimate { radius, required_n, satisfied: s.len() as u64 >= required_n }
}

/// Samples with their clustering and learned support.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub samples: Samples,
    pub clusters: Vec<Cluster>,
    pub support: SupportEstimate,
    pub eps_c: f64,
    pub beta_c: f64,
}

impl NoiseModel {
    pub fn new(samples: Samples, target_clusters: usize, eps_c: f64, beta_c: f64) -> Self {
        let clusters = cluster_samples(&samples, target_clusters);
        let support = learn_support(&samples, eps_c, beta_c);
        NoiseModel { samples, clusters, support, eps_c, beta_c }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    None,
    /// Componentwise bounds.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball around the mean.
    Ball { radius: f64 },
}

/// Independent Gaussian components, optionally truncated by rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDistribution {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    #[serde(default = "no_truncation")]
    pub truncation: Truncation,
}

fn no_truncation() -> Truncation {
    Truncation::None
}

impl NoiseDistribution {
    pub fn gaussian(mean: Vec<f64>, std: Vec<f64>) -> Self {
        NoiseDistribution { mean, std, truncation: Truncation::None }
    }

    pub fn truncated_box(mean: Vec<f64>, std: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        NoiseDistribution { mean, std, truncation: Truncation::Box { lower, upper } }
    }

    pub fn truncated_ball(mean: Vec<f64>, std: Vec<f64>, radius: f64) -> Self {
        NoiseDistribution { mean, std, truncation: Truncation::Ball { radius } }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn accepts(&self, w: &[f64]) -> bool {
        match &self.truncation {
            Truncation::None => true,
            Truncation::Box { lower, upper } => w.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| l <= v && v <= u),
            Truncation::Ball { radius } => dist(w, &self.mean) <= *radius,
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        loop {
            for j in 0..self.dim() {
                let z: f64 = StandardNormal.sample(rng);
                out[j] = self.mean[j] + self.std[j] * z;
            }
            if self.accepts(out) {
                return;
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Samples {
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        for row in data.chunks_exact_mut(d) {
            self.sample_into(rng, row);
        }
        Samples { dim: d, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn tmp(name: &str, body: &str) -> std::path::PathBuf {
        let p = std::env::temp_dir().join(format!("umdp-samples-{}-{name}", std::process::id()));
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_single_column() {
        let p = tmp("ok.csv", "0.1\n0.1\n0.1\n");
        let s = load_samples(&p, 1).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(2), &[0.1]);
    }

    #[test]
    fn empty_file_is_parse_error() {
        let p = tmp("empty.csv", "");
        assert!(matches!(load_samples(&p, 1), Err(Error::Parse(_))));
    }

    #[test]
    fn width_mismatch() {
        let p = tmp("wide.csv", "0.1,0.2\n0.3,0.4\n");
        assert!(matches!(load_samples(&p, 1), Err(Error::DimensionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn support_counts() {
        assert_eq!(support_sample_count(0.01, 0.01), 459);
        assert_eq!(support_sample_count(0.5, 0.5), 1);
        let s = Samples::from_rows(&[vec![0.3, 0.4], vec![0.95, 0.0], vec![-0.1, 0.2]]).unwrap();
        let est = learn_support(&s, 0.5, 0.5);
        assert_eq!(est.radius, 0.95);
        assert!(est.satisfied);
        let eps = smallest_support_eps(459, 0.01);
        assert!(eps <= 0.01 && support_sample_count(eps, 0.01) <= 459);
    }

    #[test]
    fn singleton_and_degenerate_clusters() {
        let s = Samples::from_rows(&[vec![0.1], vec![0.5], vec![-0.3]]).unwrap();
        let c = cluster_samples(&s, 3);
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|c| c.diameter == 0.0 && c.count == 1));
        let same = Samples::from_rows(&vec![vec![0.2, 0.2]; 10]).unwrap();
        for t in [1, 4, 50] {
            let c = cluster_samples(&same, t);
            assert_eq!(c.len(), 1);
            assert_eq!(c[0].diameter, 0.0);
            assert_eq!(c[0].count, 10);
        }
    }

    proptest! {
        #[test]
        fn clusters_cover_samples(seed in 0u64..500, n in 1usize..200, target in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = NoiseDistribution::gaussian(vec![0.0, 1.0], vec![1.0, 0.5]);
            let s = dist.draw(&mut rng, n);
            let cl = cluster_samples(&s, target);
            prop_assert_eq!(cl.iter().map(|c| c.count).sum::<usize>(), n);
            for r in s.rows() {
                prop_assert!(cl.iter().any(|c| dist_ok(r, c)));
            }
        }

        #[test]
        fn required_n_monotone(e in 0.001f64..0.5, b in 0.001f64..0.5, de in 0.0f64..0.4, db in 0.0f64..0.4) {
            let e2 = e * (1.0 - de);
            let b2 = b * (1.0 - db);
            prop_assert!(support_sample_count(e2, b2) >= support_sample_count(e, b));
        }
    }

    fn dist_ok(r: &[f64], c: &Cluster) -> bool {
        dist(r, &c.center) <= c.diameter / 2.0 + 1e-12
    }

    #[test]
    fn truncation_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = NoiseDistribution::truncated_box(vec![0.0], vec![1.0], vec![-0.5], vec![0.5]);
        let s = d.draw(&mut rng, 2000);
        assert!(s.rows().all(|r| r[0].abs() <= 0.5));
        let b = NoiseDistribution::truncated_ball(vec![0.4, 0.0], vec![1.0, 1.0], 1.0);
        let s = b.draw(&mut rng, 2000);
        assert!(s.rows().all(|r| dist(r, &[0.4, 0.0]) <= 1.0));
    }
}
