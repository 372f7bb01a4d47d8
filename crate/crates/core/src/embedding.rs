//! Bag-of-words embedding: a k-means codebook over leaf descriptors, word
//! histograms per graph and a k-nearest-neighbor classifier.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::features::DESCRIPTOR_LEN;
use crate::graph::Arsrg;
use crate::kmeans::{kmeans, nearest, KMeansConfig};

const FORMAT: &str = "ARSRG-CB";
const VERSION: u32 = 1;
const MAX_ITER: usize = 100;
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    /// `k * 128` row-major.
    centers: Vec<f64>,
    seed: u64,
}

impl Codebook {
    pub fn from_centers(centers: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidParam("codebook needs at least one center".into()));
        }
        for (i, c) in centers.iter().enumerate() {
            if c.len() != DESCRIPTOR_LEN {
                return Err(Error::DimensionMismatch {
                    expected: DESCRIPTOR_LEN,
                    actual: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParam(format!("center {i} has a non-finite entry")));
            }
        }
        Ok(Self {
            k: centers.len(),
            centers: centers.concat(),
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * DESCRIPTOR_LEN..(i + 1) * DESCRIPTOR_LEN]
    }

    /// Nearest word for a descriptor; ties go to the lowest index.
    pub fn assign(&self, descriptor: &[f32]) -> usize {
        let point: Vec<f64> = descriptor.iter().map(|&v| f64::from(v)).collect();
        nearest(&point, &self.centers, DESCRIPTOR_LEN).0
    }

    pub fn to_json(&self) -> Vec<u8> {
        let doc = CodebookDoc {
            format: FORMAT.into(),
            version: VERSION,
            k: self.k,
            seed: self.seed,
            centers: self.centers.chunks_exact(DESCRIPTOR_LEN).map(<[f64]>::to_vec).collect(),
        };
        let mut out = serde_json::to_vec_pretty(&doc).expect("codebook is always serializable");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let doc: CodebookDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::field(path, e.into_inner().to_string())
        })?;
        if doc.format != FORMAT {
            return Err(Error::field("format", format!("expected `{FORMAT}`, got `{}`", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::field("version", format!("unsupported version {}", doc.version)));
        }
        if doc.k != doc.centers.len() {
            return Err(Error::field("k", format!("{} declared, {} centers given", doc.k, doc.centers.len())));
        }
        Codebook::from_centers(doc.centers, doc.seed).map_err(|e| Error::field("centers", e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Codebook::from_json(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookDoc {
    format: String,
    version: u32,
    k: usize,
    seed: u64,
    centers: Vec<Vec<f64>>,
}

pub fn build_codebook(training: &[Arsrg], k: usize, seed: u64) -> Result<Codebook> {
    build_codebook_traced(training, k, seed).map(|(cb, _)| cb)
}

/// Like [`build_codebook`], also returning the k-means objective after every
/// assignment step.
pub fn build_codebook_traced(training: &[Arsrg], k: usize, seed: u64) -> Result<(Codebook, Vec<f64>)> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let points: Vec<f64> = training
        .iter()
        .flat_map(|g| g.leaves())
        .flat_map(|kp| kp.descriptor.as_slice().iter().map(|&v| f64::from(v)))
        .collect();
    let n = points.len() / DESCRIPTOR_LEN;
    if n < k {
        return Err(Error::InsufficientData(format!("{n} training descriptors for {k} words")));
    }
    let cfg = KMeansConfig {
        k,
        max_iter: MAX_ITER,
        tol: TOL,
        seed,
    };
    let result = kmeans(&points, &vec![1.0; n], DESCRIPTOR_LEN, &cfg);
    Ok((
        Codebook {
            k,
            centers: result.centers,
            seed,
        },
        result.objective,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<f64>,
    pub normalized: bool,
}

impl Histogram {
    pub fn mass(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Hard-assignment word histogram over all leaves of `a`. An empty graph
/// yields a zero, unnormalized histogram.
pub fn embed(a: &Arsrg, cb: &Codebook, normalize: bool) -> Histogram {
    let mut counts = vec![0.0; cb.k];
    for kp in a.leaves() {
        counts[cb.assign(kp.descriptor.as_slice())] += 1.0;
    }
    let n = a.leaves().len();
    let normalized = normalize && n > 0;
    if normalized {
        for c in &mut counts {
            *c /= n as f64;
        }
    }
    Histogram { counts, normalized }
}

pub fn embed_batch(mode: ExecMode, graphs: &[Arsrg], cb: &Codebook, normalize: bool) -> Vec<Histogram> {
    exec::map_slice(mode, graphs, |g| embed(g, cb, normalize))
}

fn hist_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.counts.len() != b.counts.len() {
        return Err(Error::DimensionMismatch {
            expected: a.counts.len(),
            actual: b.counts.len(),
        });
    }
    Ok(a.counts.iter().zip(&b.counts).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Majority label among the `k_nn` nearest training histograms. Vote ties
/// go to the tied label with the nearest member; distance ties keep
/// training order.
pub fn knn_classify<L: Clone + PartialEq>(query: &Histogram, train: &[(Histogram, L)], k_nn: usize) -> Result<L> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if k_nn == 0 {
        return Err(Error::InvalidParam("k_nn must be at least 1".into()));
    }
    let mut dists = train
        .iter()
        .enumerate()
        .map(|(i, (h, _))| hist_distance(query, h).map(|d| (d, i)))
        .collect::<Result<Vec<_>>>()?;
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dists.truncate(k_nn);

    let mut votes: Vec<(&L, usize)> = Vec::new();
    for &(_, i) in &dists {
        let label = &train[i].1;
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some(v) => v.1 += 1,
            None => votes.push((label, 1)),
        }
    }
    let top = votes.iter().map(|v| v.1).max().unwrap_or(0);
    // `votes` is in order of first (nearest) appearance.
    let winner = votes.iter().find(|v| v.1 == top).expect("at least one vote");
    Ok(winner.0.clone())
}

/// `image_id,c0,...,c(k-1)` rows.
pub fn write_embeddings_csv(rows: &[(String, Histogram)]) -> Result<String> {
    let k = rows.first().map_or(0, |r| r.1.counts.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["image_id".to_string()];
    header.extend((0..k).map(|i| format!("c{i}")));
    w.write_record(&header).expect("in-memory write");
    for (id, h) in rows {
        if h.counts.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: h.counts.len(),
            });
        }
        let mut rec = vec![id.clone()];
        rec.extend(h.counts.iter().map(f64::to_string));
        w.write_record(&rec).expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8"))
}

/// Parse the output of [`write_embeddings_csv`]. The `normalized` flag is
/// not stored and comes back as `false`.
pub fn parse_embeddings_csv(text: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Format(format!("line 1: {e}")))?.clone();
    let k = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("image_id".into()).chain((0..k).map(|i| format!("c{i}"))).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Format("line 1: expected header `image_id,c0,...`".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| Error::Format(format!("line {line}: bad count `{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        out.push((rec[0].to_string(), values));
    }
    Ok(out)
}
