use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::folds::{split_folds, Fold};
use crate::encoder::VolumeTensor;
use crate::error::{config_err, Result};
use crate::rng::{self, DetRng};

/// Number of derived regional-volume covariates per subject.
pub const N_REGIONS: usize = 123;
/// Template cells per axis; `CELLS^3 >= N_REGIONS`.
pub const CELLS: usize = 5;
/// Regions whose volumes enter the planted nonlinear score term as
/// `z[a] * z[b] + z[c] * z[d]`.
pub const SIGNAL_REGIONS: [usize; 4] = [7, 58, 91, 114];

/// Categorical vocabularies. The first entry of each is the reference level
/// dropped by one-hot encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabularies {
    pub site: Vec<String>,
    pub sex: Vec<String>,
    pub ethnicity: Vec<String>,
    pub marital_status: Vec<String>,
}

impl Default for Vocabularies {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            site: v(&["site01", "site02", "site03", "site04"]),
            sex: v(&["F", "M"]),
            ethnicity: v(&["white", "black", "hispanic", "asian", "other"]),
            marital_status: v(&["married", "separated", "never_married"]),
        }
    }
}

/// Ordinal scales are coded 1..=N.
pub const EDUCATION_LEVELS: u8 = 5;
pub const INCOME_LEVELS: u8 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Volume edge `S`.
    pub volume_size: usize,
    /// Score noise standard deviation; image noise uses `0.05 * noise`.
    pub noise: f64,
    /// Weight of the planted nonlinear regional term in the raw score.
    pub signal: f64,
    /// Per-field probability that a train/validation demographic is missing.
    pub missing_rate: f64,
    pub seed: u64,
    pub vocab: Vocabularies,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_train: 200,
            n_val: 40,
            n_test: 100,
            volume_size: 24,
            noise: 1.0,
            signal: 4.0,
            missing_rate: 0.02,
            seed: 17,
            vocab: Vocabularies::default(),
        }
    }
}

impl CohortConfig {
    pub fn n_subjects(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(config_err!("fold counts must be >= 1, got {}/{}/{}", self.n_train, self.n_val, self.n_test));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(config_err!("noise must be finite and >= 0"));
        }
        if !self.signal.is_finite() {
            return Err(config_err!("signal must be finite"));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(config_err!("missing_rate must be in [0, 1)"));
        }
        let vocab = &self.vocab;
        for (name, v) in [
            ("site", &vocab.site),
            ("sex", &vocab.sex),
            ("ethnicity", &vocab.ethnicity),
            ("marital_status", &vocab.marital_status),
        ] {
            if v.is_empty() {
                return Err(config_err!("vocabulary {name} is empty"));
            }
            if v.iter().any(|s| s.is_empty() || s.contains([',', '"', '\n'])) {
                return Err(config_err!("vocabulary {name} has an empty or unprintable level"));
            }
        }
        RegionTemplate::new(self.volume_size).map(|_| ())
    }
}

/// Demographic covariates; any field may be missing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemographicCovariates {
    pub brain_volume: Option<f64>,
    pub site: Option<String>,
    pub age_months: Option<f64>,
    pub sex: Option<String>,
    pub ethnicity: Option<String>,
    pub parental_education: Option<u8>,
    pub parental_income: Option<u8>,
    pub marital_status: Option<String>,
}

impl DemographicCovariates {
    pub fn is_complete(&self) -> bool {
        self.brain_volume.is_some()
            && self.site.is_some()
            && self.age_months.is_some()
            && self.sex.is_some()
            && self.ethnicity.is_some()
            && self.parental_education.is_some()
            && self.parental_income.is_some()
            && self.marital_status.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    /// Volume file path relative to the cohort directory.
    pub volume_path: String,
    /// Voxel count of each region.
    pub derived: Vec<u32>,
    pub demographics: DemographicCovariates,
    pub raw_score: f64,
    pub residual_score: Option<f64>,
    pub fold: Fold,
}

impl SubjectRecord {
    pub fn derived_f64(&self) -> Vec<f64> {
        self.derived.iter().map(|&c| f64::from(c)).collect()
    }
}

/// Placement of the 123 regions: region `j` lives in template cell
/// `(j % 5, (j / 5) % 5, j / 25)` (x, y, z), each cell an `edge`-voxel cube,
/// the 5x5x5 lattice centred in the volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTemplate {
    pub volume_size: usize,
    pub cell: usize,
    pub offset: usize,
}

impl RegionTemplate {
    pub fn new(volume_size: usize) -> Result<Self> {
        let cell = volume_size / CELLS;
        if cell < 3 {
            return Err(config_err!(
                "region template needs a volume edge of at least {}, got {volume_size}",
                3 * CELLS
            ));
        }
        Ok(Self { volume_size, cell, offset: (volume_size - CELLS * cell) / 2 })
    }

    /// Cell origin (x, y, z) of region `j`.
    pub fn origin(&self, j: usize) -> [usize; 3] {
        let c = [j % CELLS, (j / CELLS) % CELLS, j / (CELLS * CELLS)];
        c.map(|i| self.offset + i * self.cell)
    }

    /// Region whose cell contains voxel `(x, y, z)`, if any.
    pub fn region_at(&self, x: usize, y: usize, z: usize) -> Option<usize> {
        let span = CELLS * self.cell;
        let cell = |v: usize| (v >= self.offset && v < self.offset + span).then(|| (v - self.offset) / self.cell);
        let j = cell(x)? + CELLS * cell(y)? + CELLS * CELLS * cell(z)?;
        (j < N_REGIONS).then_some(j)
    }

    /// Radius of an axis for blend parameter `t` in [0, 1]; never exceeds half a cell.
    fn radius(&self, t: f64) -> f64 {
        self.cell as f64 * (0.25 + 0.25 * t)
    }

    /// Voxels of the ellipsoid with the given radii centred in region `j`'s
    /// cell, its centre moved by `shift` voxels per axis. Voxels outside the
    /// cell are clipped.
    fn ellipsoid(&self, j: usize, radii: [f64; 3], shift: [f64; 3]) -> impl Iterator<Item = [usize; 3]> + '_ {
        let origin = self.origin(j);
        let mid = (self.cell as f64 - 1.0) * 0.5;
        let c = self.cell;
        (0..c * c * c).filter_map(move |i| {
            let (dx, dy, dz) = (i % c, (i / c) % c, i / (c * c));
            let q = [dx, dy, dz]
                .iter()
                .zip(&radii)
                .zip(&shift)
                .map(|((&d, &r), &sh)| {
                    let u = (d as f64 - mid - sh) / r;
                    u * u
                })
                .sum::<f64>();
            (q <= 1.0).then_some([origin[0] + dx, origin[1] + dy, origin[2] + dz])
        })
    }

    /// Voxel count at the middle of the radius range, the reference for
    /// the standardized region volume used by the planted score term.
    pub fn reference_count(&self) -> u32 {
        let r = self.radius(0.5);
        self.ellipsoid(0, [r, r, r], [0.0; 3]).count() as u32
    }
}

/// Tissue class (1 = gray matter, 2 = white matter, 3 = CSF) of region `j`.
pub fn tissue_class(j: usize) -> u8 {
    1 + (j % 3) as u8
}

const CLASS_INTENSITY: [f64; 4] = [0.0, 0.55, 0.85, 0.25];

/// Deterministic generator of one synthetic cohort. Subject `i` draws
/// everything from its own ChaCha stream, so subjects can be produced in any
/// order or in parallel.
#[derive(Debug, Clone)]
pub struct CohortGenerator {
    cfg: CohortConfig,
    template: RegionTemplate,
    reference: f64,
    folds: Vec<Fold>,
}

impl CohortGenerator {
    pub fn new(cfg: CohortConfig) -> Result<Self> {
        cfg.validate()?;
        let template = RegionTemplate::new(cfg.volume_size)?;
        let folds = split_folds(cfg.n_subjects(), &cfg)?;
        let reference = f64::from(template.reference_count());
        Ok(Self { cfg, template, reference, folds })
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn config(&self) -> &CohortConfig {
        &self.cfg
    }

    pub fn template(&self) -> &RegionTemplate {
        &self.template
    }

    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn subject_id(i: usize) -> String {
        alloc::format!("sub{:04}", i + 1)
    }

    /// Record and dual-channel volume of subject `i`.
    pub fn subject(&self, i: usize) -> (SubjectRecord, VolumeTensor) {
        let cfg = &self.cfg;
        let s = cfg.volume_size;
        let mut rng = rng::stream(cfg.seed, rng::streams::SUBJECT_BASE + i as u64);
        let fold = self.folds[i];

        // Region geometry: a subject-wide size factor plus per-region and per-axis jitter.
        let global: f64 = rng.random();
        let mut labels = vec![0u8; s * s * s];
        let mut derived = vec![0u32; N_REGIONS];
        for (j, count) in derived.iter_mut().enumerate() {
            let shared: f64 = rng.random();
            let radii: [f64; 3] = core::array::from_fn(|_| {
                let axis: f64 = rng.random();
                self.template.radius(0.5 * global + 0.4 * shared + 0.1 * axis)
            });
            let shift: [f64; 3] = core::array::from_fn(|_| rng.random::<f64>() - 0.5);
            for [x, y, z] in self.template.ellipsoid(j, radii, shift) {
                labels[(z * s + y) * s + x] = tissue_class(j);
                *count += 1;
            }
        }

        // Smooth bias field + tissue contrast + noise, rounded through f32 so
        // the in-memory volume equals what the 32-bit container stores.
        let amp = 0.1 * rng.random::<f64>();
        let phase = 2.0 * PI * rng.random::<f64>();
        let image_noise = 0.05 * cfg.noise;
        let mut data = vec![0.0; 2 * s * s * s];
        let (intensity, label_ch) = data.split_at_mut(s * s * s);
        for z in 0..s {
            for y in 0..s {
                for x in 0..s {
                    let v = (z * s + y) * s + x;
                    let field = amp
                        * (libm::sin(2.0 * PI * x as f64 / s as f64 + phase)
                            + libm::cos(2.0 * PI * (y + z) as f64 / s as f64));
                    let eps: f64 = rng.sample(StandardNormal);
                    let value = CLASS_INTENSITY[labels[v] as usize] + field + image_noise * eps;
                    intensity[v] = f64::from(value as f32);
                    label_ch[v] = f64::from(labels[v]);
                }
            }
        }
        let volume = VolumeTensor::new([2, s, s, s], data).expect("finite synthetic volume");

        let pick = |rng: &mut DetRng, v: &[String]| v[rng.random_range(0..v.len())].clone();
        let brain_volume = f64::from(derived.iter().sum::<u32>());
        let truth = DemographicCovariates {
            brain_volume: Some(brain_volume),
            site: Some(pick(&mut rng, &cfg.vocab.site)),
            age_months: Some(rng.random_range(108.0..132.0)),
            sex: Some(pick(&mut rng, &cfg.vocab.sex)),
            ethnicity: Some(pick(&mut rng, &cfg.vocab.ethnicity)),
            parental_education: Some(rng.random_range(1..=EDUCATION_LEVELS)),
            parental_income: Some(rng.random_range(1..=INCOME_LEVELS)),
            marital_status: Some(pick(&mut rng, &cfg.vocab.marital_status)),
        };
        let score_eps: f64 = rng.sample(StandardNormal);
        let raw_score = planted_score(&truth, &derived, self.reference, cfg) + cfg.noise * score_eps;

        let mut demographics = truth;
        let mut missing = [false; 8];
        for m in &mut missing {
            *m = rng.random::<f64>() < cfg.missing_rate;
        }
        if fold != Fold::Test {
            let d = &mut demographics;
            if missing[0] {
                d.brain_volume = None;
            }
            if missing[1] {
                d.site = None;
            }
            if missing[2] {
                d.age_months = None;
            }
            if missing[3] {
                d.sex = None;
            }
            if missing[4] {
                d.ethnicity = None;
            }
            if missing[5] {
                d.parental_education = None;
            }
            if missing[6] {
                d.parental_income = None;
            }
            if missing[7] {
                d.marital_status = None;
            }
        }

        let subject_id = Self::subject_id(i);
        let record = SubjectRecord {
            volume_path: alloc::format!("volumes/{subject_id}.vvol"),
            subject_id,
            derived,
            demographics,
            raw_score,
            residual_score: None,
            fold,
        };
        (record, volume)
    }
}

fn level_effect(vocab: &[String], value: &str, scale: f64, shift: f64) -> f64 {
    let i = vocab.iter().position(|v| v == value).unwrap_or(0);
    scale * libm::sin(1.3 * i as f64 + shift)
}

/// Noise-free score: linear in every demographic plus
/// `signal * (z_a * z_b + z_c * z_d)` over standardized region volumes
/// `z_j = (count_j - reference) / reference`.
pub fn planted_score(d: &DemographicCovariates, derived: &[u32], reference: f64, cfg: &CohortConfig) -> f64 {
    let vocab = &cfg.vocab;
    let z = |j: usize| (f64::from(derived[j]) - reference) / reference;
    let [a, b, c, e] = SIGNAL_REGIONS;
    let linear = 100.0
        + 0.004 * d.brain_volume.unwrap_or(0.0)
        + 0.08 * (d.age_months.unwrap_or(120.0) - 120.0)
        + level_effect(&vocab.site, d.site.as_deref().unwrap_or(""), 1.5, 0.0)
        + level_effect(&vocab.sex, d.sex.as_deref().unwrap_or(""), 1.2, 0.4)
        + level_effect(&vocab.ethnicity, d.ethnicity.as_deref().unwrap_or(""), 0.9, 1.1)
        + level_effect(&vocab.marital_status, d.marital_status.as_deref().unwrap_or(""), 0.8, 2.0)
        + 0.9 * f64::from(d.parental_education.unwrap_or(0))
        + 0.35 * f64::from(d.parental_income.unwrap_or(0));
    linear + cfg.signal * (z(a) * z(b) + z(c) * z(e))
}

/// In-memory cohort.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub records: Vec<SubjectRecord>,
    pub volumes: Vec<VolumeTensor>,
}

pub fn generate_cohort(cfg: &CohortConfig) -> Result<Cohort> {
    let generator = CohortGenerator::new(cfg.clone())?;
    let (records, volumes) = (0..generator.len()).map(|i| generator.subject(i)).unzip();
    Ok(Cohort { records, volumes })
}
