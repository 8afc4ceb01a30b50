//! Adversarial instance generation: fairness-confusion-directed global and
//! local search, plus FGSM and PGD baselines.
//!
//! Randomness only enters through counterpart sampling (when the similar
//! sub-population is capped) and pool truncation. Every random draw comes
//! from a stream keyed by the configured seed and the item being processed,
//! so outputs do not depend on processing order.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{
    clip_in_place, DatasetSchema, Direction, GeneratedInstance, Instance, Phase, Provenance, SimilarPopulation,
    DEFAULT_COUNTERPART_CAP,
};
use crate::error::{Error, Result};
use crate::nncore::{BatchScratch, DenseNetwork, Scratch};
use crate::perturb::{direction_into, ground_truth_from_scores};

const FAIRNESS_DIRECTIONS: [Direction; 3] = [Direction::FF, Direction::TB, Direction::FB];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub n_seeds: usize,
    pub global_iter: usize,
    pub local_iter: usize,
    /// Step size in normalized feature units.
    pub step: f64,
    pub pgd_eps: f64,
    pub pgd_alpha: f64,
    pub pgd_steps: usize,
    pub rng_seed: u64,
    /// K-Means clusters used for seed selection.
    pub clusters: usize,
    pub counterpart_cap: usize,
    /// Upper bound on each global round's seed pool; `None` disables it.
    pub max_pool: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_seeds: 200,
            global_iter: 5,
            local_iter: 5,
            step: 0.05,
            pgd_eps: 0.3,
            pgd_alpha: 0.05,
            pgd_steps: 25,
            rng_seed: 0,
            clusters: 4,
            counterpart_cap: DEFAULT_COUNTERPART_CAP,
            max_pool: None,
        }
    }
}

/// Pool cap used when truncation is switched on.
pub const DEFAULT_MAX_POOL: usize = 50_000;

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("seeds", self.n_seeds),
            ("global iterations", self.global_iter),
            ("local iterations", self.local_iter),
            ("PGD steps", self.pgd_steps),
            ("clusters", self.clusters),
            ("counterpart cap", self.counterpart_cap),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, value) in [("step", self.step), ("eps", self.pgd_eps), ("alpha", self.pgd_alpha)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be a positive number")));
            }
        }
        if self.max_pool == Some(0) {
            return Err(Error::Config("max pool must be positive".into()));
        }
        Ok(())
    }

    /// Local iterations actually usable with `non_sensitive` attributes.
    pub fn effective_local_iter(&self, non_sensitive: usize) -> usize {
        self.local_iter.min(non_sensitive)
    }

    /// Upper bound on |R_G| for the configured seeds and rounds.
    pub fn global_bound(&self) -> u128 {
        let per_seed: u128 = (1..=self.global_iter as u32).map(|i| 3u128.pow(i)).sum();
        per_seed * self.n_seeds as u128
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Input-gradient computations.
    pub gradient_evaluations: u64,
    /// Forward passes, including those inside gradient computations.
    pub forward_evaluations: u64,
    /// Instances emitted.
    pub emitted: u64,
    /// Whether a pool was cut down to `max_pool`.
    pub truncated: bool,
}

impl SearchStats {
    pub fn merge(&self, other: &SearchStats) -> SearchStats {
        SearchStats {
            gradient_evaluations: self.gradient_evaluations + other.gradient_evaluations,
            forward_evaluations: self.forward_evaluations + other.forward_evaluations,
            emitted: self.emitted + other.emitted,
            truncated: self.truncated || other.truncated,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GenerationOutput {
    pub instances: Vec<GeneratedInstance>,
    pub stats: SearchStats,
}

/// Output of the two-phase search; evaluation uses `global ∪ local`.
#[derive(Clone, Debug, Default)]
pub struct RobustFairOutput {
    pub global: GenerationOutput,
    pub local: GenerationOutput,
}

impl RobustFairOutput {
    pub fn stats(&self) -> SearchStats {
        self.global.stats.merge(&self.local.stats)
    }

    pub fn into_instances(self) -> Vec<GeneratedInstance> {
        let mut all = self.global.instances;
        all.extend(self.local.instances);
        all
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream for item `item` of stage `stage`.
pub fn stream_rng(rng_seed: u64, stage: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(rng_seed, stage));
    rng.set_stream(item);
    rng
}

const STAGE_GLOBAL: u64 = 1;
const STAGE_LOCAL: u64 = 2;
const STAGE_TRUNCATE: u64 = 3;

/// Per-instance buffers for one search step.
struct Workspace {
    scratch: Scratch,
    batch: BatchScratch,
    g: Vec<f64>,
    g_cf: Vec<f64>,
    counterpart: Vec<f64>,
    dirs: [Vec<f64>; 3],
    perturbed: Vec<f64>,
}

impl Workspace {
    fn new(net: &DenseNetwork) -> Self {
        let d = net.input_dim();
        Workspace {
            scratch: net.scratch(),
            batch: BatchScratch::default(),
            g: vec![0.0; d],
            g_cf: vec![0.0; d],
            counterpart: Vec::with_capacity(d),
            dirs: [vec![0.0; d], vec![0.0; d], vec![0.0; d]],
            perturbed: vec![0.0; d],
        }
    }
}

pub struct Generator<'a> {
    net: &'a DenseNetwork,
    population: SimilarPopulation,
    mask: Vec<bool>,
    cfg: SearchConfig,
}

impl<'a> Generator<'a> {
    pub fn new(net: &'a DenseNetwork, schema: &DatasetSchema, cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        if net.input_dim() != schema.feature_dim() {
            return Err(Error::Shape {
                expected: schema.feature_dim(),
                actual: net.input_dim(),
            });
        }
        Ok(Generator {
            net,
            population: SimilarPopulation::new(schema, cfg.counterpart_cap)?,
            mask: schema.sensitive_mask(),
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.cfg
    }

    pub fn population(&self) -> &SimilarPopulation {
        &self.population
    }

    pub fn sensitive_mask(&self) -> &[bool] {
        &self.mask
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.net.input_dim() {
            return Err(Error::Shape {
                expected: self.net.input_dim(),
                actual: v.len(),
            });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Numeric { term: "seed feature" });
        }
        Ok(())
    }

    /// Find the most divergent counterpart, both loss gradients and the three
    /// fairness-confusion directions for `(v, y)`. Returns `f(v)`.
    fn expand(&self, ws: &mut Workspace, v: &[f64], y: f64, rng: &mut ChaCha8Rng, stats: &mut SearchStats) -> f64 {
        let members = self.population.members(v, rng);
        let score_v = self.net.forward_with(v, &mut ws.scratch);
        self.population
            .max_diff_member(self.net, v, score_v, &members, &mut ws.batch, &mut ws.counterpart);
        self.net.input_gradient_with(v, y, &mut ws.scratch, &mut ws.g);
        self.net
            .input_gradient_with(&ws.counterpart, y, &mut ws.scratch, &mut ws.g_cf);
        for (kind, dir) in FAIRNESS_DIRECTIONS.iter().zip(ws.dirs.iter_mut()) {
            direction_into(*kind, &ws.g, &ws.g_cf, &self.mask, dir);
        }
        stats.forward_evaluations += 1 + members.len() as u64 + 2;
        stats.gradient_evaluations += 2;
        score_v
    }

    /// Write `v + step · dir` (clipped) into the workspace and approximate its
    /// label from the expansion around `v`.
    fn emit(
        &self,
        ws: &mut Workspace,
        v: &[f64],
        y: f64,
        score_v: f64,
        step_dir: impl Fn(usize) -> f64,
        stats: &mut SearchStats,
    ) -> Result<(Vec<f64>, f64)> {
        for (i, p) in ws.perturbed.iter_mut().enumerate() {
            *p = v[i] + self.cfg.step * step_dir(i);
        }
        clip_in_place(&mut ws.perturbed)?;
        let score_p = self.net.forward_with(&ws.perturbed, &mut ws.scratch);
        stats.forward_evaluations += 1;
        stats.emitted += 1;
        let y_p = ground_truth_from_scores(y, score_v, &ws.g, v, &ws.perturbed, score_p)?;
        Ok((ws.perturbed.clone(), y_p))
    }

    /// Breadth phase: every round fans each pool member out along the three
    /// directions, and the round's emissions become the next pool.
    pub fn global_generation(&self, seeds: &[Instance]) -> Result<GenerationOutput> {
        if seeds.is_empty() {
            return Err(Error::Precondition("no seeds for global generation".into()));
        }
        for s in seeds {
            self.check(&s.features)?;
        }
        let mut ws = Workspace::new(self.net);
        let mut stats = SearchStats::default();
        let mut out = Vec::new();
        // (features, label, seed id)
        let mut pool: Vec<(Vec<f64>, f64, usize)> = seeds
            .iter()
            .enumerate()
            .map(|(i, s)| (s.features.clone(), s.label, i))
            .collect();
        let mut processed: u64 = 0;

        for round in 0..self.cfg.global_iter {
            let mut next = Vec::with_capacity(pool.len() * 3);
            for (v, y, seed_id) in &pool {
                let mut rng = stream_rng(self.cfg.rng_seed, STAGE_GLOBAL, processed);
                processed += 1;
                let score_v = self.expand(&mut ws, v, *y, &mut rng, &mut stats);
                for (k, kind) in FAIRNESS_DIRECTIONS.iter().enumerate() {
                    let degenerate = ws.dirs[k].iter().all(|d| *d == 0.0);
                    let dir = ws.dirs[k].clone();
                    let (features, y_p) = self.emit(&mut ws, v, *y, score_v, |i| dir[i], &mut stats)?;
                    out.push(GeneratedInstance {
                        features: features.clone(),
                        approx_label: y_p,
                        provenance: Provenance {
                            phase: Phase::Global,
                            direction: *kind,
                            seed_id: *seed_id,
                            iteration: round,
                            degenerate,
                        },
                    });
                    next.push((features, y_p, *seed_id));
                }
            }
            if round + 1 < self.cfg.global_iter {
                if let Some(cap) = self.cfg.max_pool.filter(|cap| next.len() > *cap) {
                    let mut rng = stream_rng(self.cfg.rng_seed, STAGE_TRUNCATE, round as u64);
                    let mut keep = index::sample(&mut rng, next.len(), cap).into_vec();
                    keep.sort_unstable();
                    let mut slots: Vec<Option<_>> = next.into_iter().map(Some).collect();
                    next = keep.into_iter().filter_map(|i| slots[i].take()).collect();
                    stats.truncated = true;
                }
            }
            pool = next;
        }
        Ok(GenerationOutput { instances: out, stats })
    }

    /// Depth phase: around each global emission, perturb one attribute at a
    /// time, taking attributes in ascending order of |direction| (zero
    /// entries skipped).
    pub fn local_generation(&self, global: &[GeneratedInstance]) -> Result<GenerationOutput> {
        if global.is_empty() {
            return Err(Error::Precondition("no global instances for local generation".into()));
        }
        let mut ws = Workspace::new(self.net);
        let mut stats = SearchStats::default();
        let mut out = Vec::new();
        let mut ranked: Vec<usize> = Vec::with_capacity(self.net.input_dim());

        for (n, source) in global.iter().enumerate() {
            let v = &source.features;
            self.check(v)?;
            let y = source.approx_label;
            let mut rng = stream_rng(self.cfg.rng_seed, STAGE_LOCAL, n as u64);
            let score_v = self.expand(&mut ws, v, y, &mut rng, &mut stats);
            for (k, kind) in FAIRNESS_DIRECTIONS.iter().enumerate() {
                let dir = ws.dirs[k].clone();
                ranked.clear();
                ranked.extend((0..dir.len()).filter(|&i| dir[i] != 0.0));
                ranked.sort_by(|&a, &b| dir[a].abs().total_cmp(&dir[b].abs()).then(a.cmp(&b)));
                for (i, &attr) in ranked.iter().take(self.cfg.local_iter).enumerate() {
                    let step = dir[attr];
                    let (features, y_p) =
                        self.emit(&mut ws, v, y, score_v, |j| if j == attr { step } else { 0.0 }, &mut stats)?;
                    out.push(GeneratedInstance {
                        features,
                        approx_label: y_p,
                        provenance: Provenance {
                            phase: Phase::Local,
                            direction: *kind,
                            seed_id: source.provenance.seed_id,
                            iteration: i,
                            degenerate: false,
                        },
                    });
                }
            }
        }
        Ok(GenerationOutput { instances: out, stats })
    }

    /// Global generation followed by local generation over its output.
    pub fn robustfair(&self, seeds: &[Instance]) -> Result<RobustFairOutput> {
        let global = self.global_generation(seeds)?;
        let local = self.local_generation(&global.instances)?;
        Ok(RobustFairOutput { global, local })
    }

    /// Masked gradient sign of the loss at `v`; sensitive coordinates are 0.
    fn signed_gradient(&self, ws: &mut Workspace, v: &[f64], y: f64, stats: &mut SearchStats) {
        self.net.input_gradient_with(v, y, &mut ws.scratch, &mut ws.g);
        stats.gradient_evaluations += 1;
        stats.forward_evaluations += 1;
        for (g, sensitive) in ws.g.iter_mut().zip(&self.mask) {
            *g = if *sensitive || *g == 0.0 { 0.0 } else { g.signum() };
        }
    }

    /// One signed-gradient step of size `eps` per sample; labels carried over.
    pub fn fgsm(&self, samples: &[Instance], eps: f64) -> Result<GenerationOutput> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config("FGSM eps must be non-negative".into()));
        }
        let mut ws = Workspace::new(self.net);
        let mut stats = SearchStats::default();
        let mut out = Vec::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            self.check(&s.features)?;
            self.signed_gradient(&mut ws, &s.features, s.label, &mut stats);
            let mut features: Vec<f64> = s.features.iter().zip(&ws.g).map(|(x, g)| x + eps * g).collect();
            clip_in_place(&mut features)?;
            stats.emitted += 1;
            out.push(GeneratedInstance {
                features,
                approx_label: s.label,
                provenance: Provenance {
                    phase: Phase::Fgsm,
                    direction: Direction::LossAscent,
                    seed_id: i,
                    iteration: 0,
                    degenerate: ws.g.iter().all(|g| *g == 0.0),
                },
            });
        }
        Ok(GenerationOutput { instances: out, stats })
    }

    /// Projected gradient-sign ascent inside the ℓ∞ ball of radius `pgd_eps`
    /// around each seed; every iterate is emitted with the seed's label.
    pub fn pgd(&self, seeds: &[Instance]) -> Result<GenerationOutput> {
        let (eps, alpha) = (self.cfg.pgd_eps, self.cfg.pgd_alpha);
        let mut ws = Workspace::new(self.net);
        let mut stats = SearchStats::default();
        let mut out = Vec::with_capacity(seeds.len() * self.cfg.pgd_steps);
        for (i, s) in seeds.iter().enumerate() {
            self.check(&s.features)?;
            let mut v = s.features.clone();
            for t in 0..self.cfg.pgd_steps {
                self.signed_gradient(&mut ws, &v, s.label, &mut stats);
                for ((x, g), origin) in v.iter_mut().zip(&ws.g).zip(&s.features) {
                    *x = (*x + alpha * g).clamp(origin - eps, origin + eps);
                }
                clip_in_place(&mut v)?;
                stats.emitted += 1;
                out.push(GeneratedInstance {
                    features: v.clone(),
                    approx_label: s.label,
                    provenance: Provenance {
                        phase: Phase::Pgd,
                        direction: Direction::LossAscent,
                        seed_id: i,
                        iteration: t,
                        degenerate: ws.g.iter().all(|g| *g == 0.0),
                    },
                });
            }
        }
        Ok(GenerationOutput { instances: out, stats })
    }
}

/// `count` draws with replacement, for budget-matched FGSM sampling.
pub fn sample_with_replacement<R: Rng + ?Sized>(data: &[Instance], count: usize, rng: &mut R) -> Result<Vec<Instance>> {
    if data.is_empty() {
        return Err(Error::Precondition("cannot sample from an empty dataset".into()));
    }
    Ok((0..count).map(|_| data[rng.gen_range(0..data.len())].clone()).collect())
}
