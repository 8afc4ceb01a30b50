//! Dataset schemas, CSV ingestion, similar sub-populations and seed selection.
//!
//! Every attribute occupies exactly one feature coordinate: categorical values
//! are encoded by their position in the declared value list, then all
//! attributes are min-max normalized to `[0, 1]`.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::nncore::{BatchScratch, DenseNetwork, PartialInput};

/// Default bound on the size of a similar sub-population.
pub const DEFAULT_COUNTERPART_CAP: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    NonSensitive,
    Sensitive,
    Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Categories(Vec<String>),
    /// Inclusive integer range.
    Range([i64; 2]),
}

impl Domain {
    pub fn size(&self) -> usize {
        match self {
            Domain::Categories(values) => values.len(),
            Domain::Range([lo, hi]) => (hi - lo + 1).max(0) as usize,
        }
    }

    fn natural_bounds(&self) -> (f64, f64) {
        match self {
            Domain::Categories(values) => (0.0, values.len().saturating_sub(1) as f64),
            Domain::Range([lo, hi]) => (*lo as f64, *hi as f64),
        }
    }

    /// Raw (encoded, unnormalized) value of the `i`-th domain member.
    fn member(&self, i: usize) -> f64 {
        match self {
            Domain::Categories(_) => i as f64,
            Domain::Range([lo, _]) => (*lo + i as i64) as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub domain: Domain,
    /// Optional normalization bounds overriding the domain's natural ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    /// Column position; assigned from declaration order.
    #[serde(skip)]
    pub index: usize,
}

impl AttributeSpec {
    pub fn bounds(&self) -> (f64, f64) {
        match self.bounds {
            Some([lo, hi]) => (lo, hi),
            None => self.domain.natural_bounds(),
        }
    }

    fn normalize_raw(&self, raw: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if hi > lo {
            (raw - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    fn denormalize_raw(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        lo + x * (hi - lo)
    }

    /// Encode a CSV cell; `row` is only used for error context.
    pub fn encode(&self, cell: &str, row: usize) -> Result<f64> {
        let cell = cell.trim();
        let err = |message: String| Error::Data {
            row,
            column: self.name.clone(),
            message,
        };
        let raw = match &self.domain {
            Domain::Categories(values) => values
                .iter()
                .position(|v| v == cell)
                .ok_or_else(|| err(format!("unknown categorical value `{cell}`")))?
                as f64,
            Domain::Range([lo, hi]) => {
                let x: f64 = cell
                    .parse()
                    .map_err(|_| err(format!("`{cell}` is not numeric")))?;
                if !x.is_finite() || x < *lo as f64 || x > *hi as f64 {
                    return Err(err(format!("value {cell} outside declared range [{lo}, {hi}]")));
                }
                x
            }
        };
        Ok(self.normalize_raw(raw))
    }

    /// Decode a normalized coordinate to the nearest domain member's text.
    pub fn decode(&self, x: f64) -> String {
        let raw = self.denormalize_raw(x);
        match &self.domain {
            Domain::Categories(values) => {
                let i = raw.round().clamp(0.0, (values.len() - 1) as f64) as usize;
                values[i].clone()
            }
            Domain::Range([lo, hi]) => {
                let v = raw.round().clamp(*lo as f64, *hi as f64) as i64;
                v.to_string()
            }
        }
    }

    /// Normalized coordinate of each domain member, in declaration order.
    pub fn normalized_members(&self) -> Vec<f64> {
        (0..self.domain.size())
            .map(|i| self.normalize_raw(self.domain.member(i)))
            .collect()
    }
}

#[derive(Deserialize, Serialize)]
struct SchemaFile {
    #[serde(default)]
    name: String,
    attributes: Vec<AttributeSpec>,
}

/// Attribute declarations in column order.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSchema {
    pub name: String,
    attributes: Vec<AttributeSpec>,
    label: usize,
    /// Column index of each feature coordinate.
    features: Vec<usize>,
}

impl DatasetSchema {
    pub fn new(name: impl Into<String>, mut attributes: Vec<AttributeSpec>) -> Result<Self> {
        let mut label = None;
        let mut features = Vec::new();
        for (i, attr) in attributes.iter_mut().enumerate() {
            attr.index = i;
            if attr.domain.size() == 0 {
                return Err(Error::Schema(format!("attribute `{}` has an empty domain", attr.name)));
            }
            let (lo, hi) = attr.bounds();
            if !(lo.is_finite() && hi.is_finite()) || hi < lo || (hi == lo && attr.domain.size() > 1) {
                return Err(Error::Schema(format!(
                    "attribute `{}` needs bounds with min < max",
                    attr.name
                )));
            }
            match attr.kind {
                AttributeKind::Label => {
                    if label.replace(i).is_some() {
                        return Err(Error::Schema("schema declares more than one label".into()));
                    }
                    if attr.domain.size() != 2 {
                        return Err(Error::Schema(format!(
                            "label `{}` must have exactly two values",
                            attr.name
                        )));
                    }
                }
                _ => features.push(i),
            }
        }
        let label = label.ok_or_else(|| Error::Schema("schema declares no label attribute".into()))?;
        let mut seen = HashMap::new();
        for attr in &attributes {
            if seen.insert(attr.name.as_str(), ()).is_some() {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
        }
        Ok(DatasetSchema {
            name: name.into(),
            attributes,
            label,
            features,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SchemaFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        DatasetSchema::new(file.name, file.attributes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: SchemaFile = io::read_json(path)?;
        DatasetSchema::new(file.name, file.attributes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(
            path,
            &SchemaFile {
                name: self.name.clone(),
                attributes: self.attributes.clone(),
            },
        )
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn label(&self) -> &AttributeSpec {
        &self.attributes[self.label]
    }

    pub fn feature_dim(&self) -> usize {
        self.features.len()
    }

    /// Attribute behind feature coordinate `i`.
    pub fn feature(&self, i: usize) -> &AttributeSpec {
        &self.attributes[self.features[i]]
    }

    pub fn features(&self) -> impl Iterator<Item = &AttributeSpec> {
        self.features.iter().map(|&c| &self.attributes[c])
    }

    /// `true` at every sensitive feature coordinate.
    pub fn sensitive_mask(&self) -> Vec<bool> {
        self.features()
            .map(|a| a.kind == AttributeKind::Sensitive)
            .collect()
    }

    pub fn sensitive_positions(&self) -> Vec<usize> {
        self.features()
            .enumerate()
            .filter(|(_, a)| a.kind == AttributeKind::Sensitive)
            .map(|(i, _)| i)
            .collect()
    }

    /// Decode a normalized feature vector into domain text per feature.
    pub fn decode_features(&self, features: &[f64]) -> Vec<String> {
        self.features().zip(features).map(|(a, x)| a.decode(*x)).collect()
    }

    pub fn decode_label(&self, label: u8) -> String {
        self.label().decode(f64::from(label))
    }
}

/// A normalized feature vector with its ground-truth label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: f64,
}

impl Instance {
    pub fn new(features: Vec<f64>, label: f64) -> Self {
        Instance { features, label }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Global,
    Local,
    Fgsm,
    Pgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    FF,
    TB,
    FB,
    LossAscent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub phase: Phase,
    pub direction: Direction,
    /// Index of the originating seed.
    pub seed_id: usize,
    pub iteration: usize,
    /// The perturbation direction was all zeros, so the instance equals its source.
    #[serde(default)]
    pub degenerate: bool,
}

/// A perturbed feature vector with its approximated (or carried-over) label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub features: Vec<f64>,
    pub approx_label: f64,
    pub provenance: Provenance,
}

/// Read a CSV whose header names the schema's attributes (extra columns are
/// ignored). Error rows are numbered from 1, counting data records only.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<Vec<Instance>> {
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column_of = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column `{name}`", path.display())))
    };
    let feature_cols = schema
        .features()
        .map(|a| column_of(&a.name))
        .collect::<Result<Vec<_>>>()?;
    let label_col = column_of(&schema.label().name)?;

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(csv_err)?;
        let cell = |c: usize, name: &str| {
            record.get(c).ok_or_else(|| Error::Data {
                row,
                column: name.to_string(),
                message: "missing cell".into(),
            })
        };
        let features = schema
            .features()
            .zip(&feature_cols)
            .map(|(a, &c)| a.encode(cell(c, &a.name)?, row))
            .collect::<Result<Vec<_>>>()?;
        let label_attr = schema.label();
        let label = label_attr.encode(cell(label_col, &label_attr.name)?, row)?;
        out.push(Instance::new(features, label));
    }
    Ok(out)
}

/// Clamp every coordinate into `[0, 1]`; NaN coordinates are an error.
pub fn clip_to_domain(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    clip_in_place(&mut out)?;
    Ok(out)
}

pub fn clip_in_place(v: &mut [f64]) -> Result<()> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric { term: "feature coordinate (NaN)" });
    }
    v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    Ok(())
}

/// The similar sub-population of an instance: every joint assignment of the
/// sensitive attributes, with non-sensitive coordinates held fixed.
///
/// Members are identified by their mixed-radix index into the Cartesian
/// product (first sensitive attribute most significant).
#[derive(Clone, Debug)]
pub struct SimilarPopulation {
    positions: Vec<usize>,
    values: Vec<Vec<f64>>,
    size: usize,
    cap: usize,
}

impl SimilarPopulation {
    pub fn new(schema: &DatasetSchema, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Config("counterpart cap must be at least 1".into()));
        }
        let positions = schema.sensitive_positions();
        if positions.is_empty() {
            return Err(Error::Config("schema declares no sensitive attributes".into()));
        }
        let values: Vec<Vec<f64>> = positions
            .iter()
            .map(|&p| schema.feature(p).normalized_members())
            .collect();
        let size = values
            .iter()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
            .ok_or_else(|| Error::Config("sensitive domain product overflows".into()))?;
        Ok(SimilarPopulation {
            positions,
            values,
            size,
            cap,
        })
    }

    /// Size of the full Cartesian product of sensitive domains.
    pub fn product_size(&self) -> usize {
        self.size
    }

    /// Number of members actually returned per instance.
    pub fn member_count(&self) -> usize {
        self.size.min(self.cap)
    }

    pub fn is_exhaustive(&self) -> bool {
        self.size <= self.cap
    }

    pub fn sensitive_positions(&self) -> &[usize] {
        &self.positions
    }

    /// Product index of `v`'s own sensitive assignment (nearest domain member
    /// per attribute).
    pub fn index_of(&self, v: &[f64]) -> usize {
        self.positions
            .iter()
            .zip(&self.values)
            .fold(0, |acc, (&p, vals)| {
                let nearest = vals
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - v[p]).abs().total_cmp(&(b.1 - v[p]).abs()))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                acc * vals.len() + nearest
            })
    }

    /// Overwrite the sensitive coordinates of `buf` with member `index`.
    #[inline]
    pub fn write_member(&self, mut index: usize, buf: &mut [f64]) {
        for (&p, vals) in self.positions.iter().zip(&self.values).rev() {
            buf[p] = vals[index % vals.len()];
            index /= vals.len();
        }
    }

    /// Append member `index`'s sensitive values, in position order.
    pub fn push_member_values(&self, mut index: usize, out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + self.positions.len(), 0.0);
        for (slot, vals) in out[start..].iter_mut().zip(&self.values).rev() {
            *slot = vals[index % vals.len()];
            index /= vals.len();
        }
    }

    /// Member indices for `v`: the whole product in enumeration order when it
    /// fits within the cap, otherwise `v`'s own index followed by `cap − 1`
    /// distinct other members sampled without replacement (sorted).
    pub fn members<R: Rng + ?Sized>(&self, v: &[f64], rng: &mut R) -> Vec<usize> {
        if self.is_exhaustive() {
            return (0..self.size).collect();
        }
        let own = self.index_of(v);
        let mut sampled: Vec<usize> = index::sample(rng, self.size - 1, self.cap - 1)
            .into_iter()
            .map(|k| if k < own { k } else { k + 1 })
            .collect();
        sampled.sort_unstable();
        std::iter::once(own).chain(sampled).collect()
    }

    pub fn counterparts<R: Rng + ?Sized>(&self, v: &[f64], rng: &mut R) -> Vec<Vec<f64>> {
        self.members(v, rng)
            .into_iter()
            .map(|m| {
                let mut c = v.to_vec();
                self.write_member(m, &mut c);
                c
            })
            .collect()
    }

    /// Position (within `members`) of the member whose score differs most
    /// from `score_v`; ties go to the earliest. Writes that member into `buf`.
    pub(crate) fn max_diff_member(
        &self,
        net: &DenseNetwork,
        v: &[f64],
        score_v: f64,
        members: &[usize],
        scratch: &mut BatchScratch,
        buf: &mut Vec<f64>,
    ) -> usize {
        let mut partial = PartialInput::default();
        net.partial_input(v, &self.positions, &mut partial);
        let mut values = Vec::with_capacity(members.len() * self.positions.len());
        for &m in members {
            self.push_member_values(m, &mut values);
        }
        let mut scores = Vec::with_capacity(members.len());
        net.forward_partial_batch(&partial, &values, members.len(), scratch, &mut scores);
        let mut best = (0, f64::NEG_INFINITY);
        for (pos, score) in scores.iter().enumerate() {
            let diff = (score - score_v).abs();
            if diff > best.1 {
                best = (pos, diff);
            }
        }
        buf.clear();
        buf.extend_from_slice(v);
        self.write_member(members[best.0], buf);
        best.0
    }
}

/// I(x, a) for `v` under `schema`, bounded by `cap`.
pub fn similar_counterparts<R: Rng + ?Sized>(
    v: &Instance,
    schema: &DatasetSchema,
    cap: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let population = SimilarPopulation::new(schema, cap)?;
    Ok(population.counterparts(&v.features, rng))
}

/// Counterpart whose score is farthest from `f(v)`; ties resolve to the
/// lowest index.
pub fn max_diff_counterpart<'a>(net: &DenseNetwork, v: &[f64], counterparts: &'a [Vec<f64>]) -> Result<&'a [f64]> {
    if counterparts.is_empty() {
        return Err(Error::Precondition("empty counterpart list".into()));
    }
    let score_v = net.forward(v)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in counterparts.iter().enumerate() {
        let diff = (net.forward(c)? - score_v).abs();
        if diff > best.1 {
            best = (i, diff);
        }
    }
    Ok(&counterparts[best.0])
}

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

/// Lloyd's algorithm with Forgy initialization (k distinct points drawn from
/// `rng`). A cluster that empties is re-seeded at the point farthest from its
/// assigned centroid.
pub fn kmeans<P: AsRef<[f64]>, R: Rng + ?Sized>(points: &[P], k: usize, rng: &mut R) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].as_ref().len();
    let mut centroids: Vec<Vec<f64>> = index::sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i].as_ref().to_vec())
        .collect();
    let mut assignments = vec![0; points.len()];
    let mut iterations = 0;

    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest(p.as_ref(), &centroids);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (a, p) in assignments.iter().zip(points) {
            counts[*a] += 1;
            for (s, x) in sums[*a].iter_mut().zip(p.as_ref()) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&i, &j| {
                        let di = sq_dist(points[i].as_ref(), &centroids[assignments[i]]);
                        let dj = sq_dist(points[j].as_ref(), &centroids[assignments[j]]);
                        di.total_cmp(&dj).then(j.cmp(&i))
                    })
                    .unwrap_or(0);
                assignments[far] = c;
                points[far].as_ref().to_vec()
            } else {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            };
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest(p.as_ref(), &centroids);
    }
    Ok(KMeans {
        centroids,
        assignments,
        iterations,
    })
}

/// Indices of `n_seeds` points sampled evenly across `k` K-Means clusters:
/// `⌊n_seeds/k⌋` per cluster, the remainder from the largest clusters, and any
/// shortfall from small clusters made up from the largest ones with members
/// left. Sampling is without replacement.
pub fn kmeans_seed_indices<P: AsRef<[f64]>, R: Rng + ?Sized>(
    points: &[P],
    k: usize,
    n_seeds: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n_seeds > points.len() {
        return Err(Error::Config(format!(
            "cannot draw {n_seeds} seeds from {} instances",
            points.len()
        )));
    }
    let clustering = kmeans(points, k, rng)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in clustering.assignments.iter().enumerate() {
        members[c].push(i);
    }
    for m in &mut members {
        m.shuffle(rng);
    }

    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
    let mut quota = vec![n_seeds / k; k];
    for &c in by_size.iter().take(n_seeds % k) {
        quota[c] += 1;
    }
    let mut take: Vec<usize> = (0..k).map(|c| quota[c].min(members[c].len())).collect();
    let mut missing = n_seeds - take.iter().sum::<usize>();
    while missing > 0 {
        let mut progressed = false;
        for &c in &by_size {
            if missing > 0 && take[c] < members[c].len() {
                take[c] += 1;
                missing -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Ok((0..k)
        .flat_map(|c| members[c][..take[c]].iter().copied())
        .collect())
}

pub fn kmeans_seeds<R: Rng + ?Sized>(
    data: &[Instance],
    k: usize,
    n_seeds: usize,
    rng: &mut R,
) -> Result<Vec<Instance>> {
    let points: Vec<&[f64]> = data.iter().map(|d| d.features.as_slice()).collect();
    Ok(kmeans_seed_indices(&points, k, n_seeds, rng)?
        .into_iter()
        .map(|i| data[i].clone())
        .collect())
}
