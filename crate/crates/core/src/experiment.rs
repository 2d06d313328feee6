//! Monte Carlo harness: sampled circuit runs with per-shot fidelity records,
//! Wilson-interval threshold statistics, and the displacement optimizer used
//! to prepare Yurke–Stoler inputs.
//!
//! Runs are deterministic: every shot's randomness comes from a ChaCha stream
//! derived from the experiment seed and the shot's chunk index, so records are
//! bit-identical across reruns and thread counts, and chunk summaries merge
//! associatively.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    modmeas_reference, tele_reference, FrameTag, ModMeas, ModMeasOptions, TeleCorrect, TeleParams,
    YsRail,
};
use crate::error::{Error, Result};
use crate::fock::{default_cutoff, fidelity, FockVector};
use crate::measure::HeterodyneModel;
use crate::states::{
    cat_state, displaced_ys, logical_state, modular_subspace_probability, ys_state, CatParams,
    YsParams,
};

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.9, 0.95, 0.99];
pub const DEFAULT_CHUNK: usize = 256;

/// Declarative single-rail state descriptor (also the CLI `state` vocabulary).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Coherent { alpha: f64 },
    Cat { alpha: f64, distance: usize, mu: usize },
    Logical { alpha: f64, components: usize, c0_re: f64, c0_im: f64, c1_re: f64, c1_im: f64 },
    Plus { alpha: f64, components: usize },
    Minus { alpha: f64, components: usize },
    Ys { alpha: f64, components: usize },
    DisplacedYs { alpha: f64, components: usize, sigma_re: f64, sigma_im: f64 },
}

impl StateSpec {
    pub fn build(&self, cutoff: usize) -> Result<FockVector> {
        match *self {
            StateSpec::Coherent { alpha } => crate::fock::coherent_state(C64::new(alpha, 0.0), cutoff),
            StateSpec::Cat { alpha, distance, mu } => {
                cat_state(&CatParams::new(alpha, distance, mu)?, cutoff)
            }
            StateSpec::Logical { alpha, components, c0_re, c0_im, c1_re, c1_im } => logical_state(
                C64::new(c0_re, c0_im),
                C64::new(c1_re, c1_im),
                alpha,
                components,
                cutoff,
            ),
            StateSpec::Plus { alpha, components } => crate::states::cat_plus(alpha, components, cutoff),
            StateSpec::Minus { alpha, components } => crate::states::cat_minus(alpha, components, cutoff),
            StateSpec::Ys { alpha, components } => ys_state(&YsParams::new(alpha, components)?, cutoff),
            StateSpec::DisplacedYs { alpha, components, sigma_re, sigma_im } => {
                displaced_ys(alpha, components, C64::new(sigma_re, sigma_im), cutoff)
            }
        }
    }

    /// Cutoff from the standard policy, padded for displacements.
    pub fn policy_cutoff(&self) -> usize {
        default_cutoff(self.max_amplitude())
    }

    /// Largest coherent-component amplitude the state reaches.
    pub fn max_amplitude(&self) -> f64 {
        match *self {
            StateSpec::Coherent { alpha } => alpha.abs(),
            StateSpec::Cat { alpha, .. }
            | StateSpec::Logical { alpha, .. }
            | StateSpec::Plus { alpha, .. }
            | StateSpec::Minus { alpha, .. }
            | StateSpec::Ys { alpha, .. } => alpha.abs(),
            StateSpec::DisplacedYs { alpha, sigma_re, sigma_im, .. } => {
                alpha.abs() + C64::new(sigma_re, sigma_im).norm()
            }
        }
    }

    /// Number of visible coherent components.
    pub fn components(&self) -> usize {
        match *self {
            StateSpec::Coherent { .. } => 1,
            StateSpec::Cat { distance, .. } => 2 * distance,
            StateSpec::Logical { components, .. } => components,
            StateSpec::Plus { components, .. } | StateSpec::Minus { components, .. } => {
                components / 2
            }
            StateSpec::Ys { components, .. } | StateSpec::DisplacedYs { components, .. } => {
                components
            }
        }
    }

    /// Logical (c₀, c₁) content assumed for tele-correction references.
    fn reference_coefficients(&self) -> (C64, C64) {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            StateSpec::Cat { mu, .. } => {
                if mu == 0 {
                    (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
                } else {
                    (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
                }
            }
            StateSpec::Logical { c0_re, c0_im, c1_re, c1_im, .. } => {
                (C64::new(c0_re, c0_im), C64::new(c1_re, c1_im))
            }
            StateSpec::Minus { .. } => (C64::new(inv, 0.0), C64::new(-inv, 0.0)),
            // coherent / plus / YS preparations all target |+⟩
            _ => (C64::new(inv, 0.0), C64::new(inv, 0.0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Ideal,
    FiniteLo { beta: f64 },
}

impl ModelConfig {
    pub fn build(&self, max_amplitude: f64, component_spacing: Option<f64>) -> Result<HeterodyneModel> {
        match *self {
            ModelConfig::Ideal => Ok(HeterodyneModel::ideal(max_amplitude, component_spacing)),
            ModelConfig::FiniteLo { beta } => HeterodyneModel::finite_lo(beta, max_amplitude),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub theta: f64,
    pub losses: usize,
}

impl From<FrameConfig> for FrameTag {
    fn from(f: FrameConfig) -> Self {
        FrameTag::new(f.theta, f.losses)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YsRailConfig {
    #[default]
    None,
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "circuit", rename_all = "snake_case")]
pub enum CircuitConfig {
    /// Modular photon-number measurement: `bins` phase bins (projection mod
    /// bins/2) with the probe rail heterodyned.
    ModMeas {
        target: StateSpec,
        probe: StateSpec,
        bins: usize,
        correct_ys_phases: bool,
    },
    /// Full tele-correction; code component counts per rail.
    TeleCorrect {
        input: StateSpec,
        anc1: StateSpec,
        anc2: StateSpec,
        input_code: usize,
        mid_code: usize,
        out_code: usize,
        #[serde(default)]
        ys_rail: YsRailConfig,
        #[serde(default)]
        anc1_frame: FrameConfig,
        #[serde(default)]
        anc2_frame: FrameConfig,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub circuit: CircuitConfig,
    pub model: ModelConfig,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_thresholds")]
    pub fidelity_thresholds: Vec<f64>,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
}

fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

fn default_chunk() -> usize {
    DEFAULT_CHUNK
}

impl ExperimentConfig {
    /// Validate and normalize: thresholds are made strictly increasing and
    /// always include the standard 0.9 / 0.95 / 0.99 set.
    pub fn validated(mut self) -> Result<Self> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk_size must be >= 1".into()));
        }
        let mut t = self.fidelity_thresholds.clone();
        t.extend_from_slice(&DEFAULT_THRESHOLDS);
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if t.iter().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::InvalidParameter(
                "fidelity thresholds must lie in (0,1)".into(),
            ));
        }
        self.fidelity_thresholds = t;
        match &self.circuit {
            CircuitConfig::ModMeas { bins, probe, .. } => {
                if bins % 2 != 0 || *bins < 2 {
                    return Err(Error::InvalidParameter("bins must be even and >= 2".into()));
                }
                if probe.components() == 0 {
                    return Err(Error::InvalidParameter("probe needs components".into()));
                }
            }
            CircuitConfig::TeleCorrect { input_code, mid_code, out_code, ys_rail, anc1, .. } => {
                for (label, v) in [("input_code", input_code), ("mid_code", mid_code), ("out_code", out_code)] {
                    if *v % 2 != 0 || *v < 2 {
                        return Err(Error::InvalidParameter(format!(
                            "{label} must be even and >= 2"
                        )));
                    }
                }
                if *ys_rail == YsRailConfig::Second && *mid_code != 2 * anc1.components() {
                    return Err(Error::InvalidParameter(
                        "ys_rail=second needs mid_code = 2 x anc1 components".into(),
                    ));
                }
            }
        }
        Ok(self)
    }
}

/// One shot's record: outcome indices, fidelity against the outcome-keyed
/// reference, and a compact code for which reference frame was used
/// (mod-meas: the loss exponent; tele: bit0 = k parity, bit1 = k′ parity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub shot: usize,
    pub indices: Vec<usize>,
    pub fidelity: f64,
    pub frame: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStat {
    pub threshold: f64,
    pub successes: usize,
    pub probability: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Aggregated run statistics. Merging is associative and commutative, so
/// chunked runs reduce cleanly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub samples: usize,
    pub index_counts: BTreeMap<String, usize>,
    pub thresholds: Vec<ThresholdStat>,
    pub mean_fidelity: f64,
}

impl HistogramSummary {
    fn empty(thresholds: &[f64]) -> Self {
        Self {
            samples: 0,
            index_counts: BTreeMap::new(),
            thresholds: thresholds
                .iter()
                .map(|&t| ThresholdStat {
                    threshold: t,
                    successes: 0,
                    probability: 0.0,
                    wilson_low: 0.0,
                    wilson_high: 0.0,
                })
                .collect(),
            mean_fidelity: 0.0,
        }
    }

    fn add(&mut self, record: &SampleRecord) {
        self.samples += 1;
        let key = record
            .indices
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",");
        *self.index_counts.entry(key).or_insert(0) += 1;
        // mean_fidelity holds the running sum until finalize()
        self.mean_fidelity += record.fidelity;
        for stat in &mut self.thresholds {
            if record.fidelity > stat.threshold {
                stat.successes += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &HistogramSummary) {
        self.samples += other.samples;
        for (k, v) in &other.index_counts {
            *self.index_counts.entry(k.clone()).or_insert(0) += v;
        }
        for (a, b) in self.thresholds.iter_mut().zip(&other.thresholds) {
            a.successes += b.successes;
        }
        self.mean_fidelity += other.mean_fidelity;
    }

    fn finalize(mut self) -> Result<Self> {
        if self.samples > 0 {
            self.mean_fidelity /= self.samples as f64;
            for stat in &mut self.thresholds {
                stat.probability = stat.successes as f64 / self.samples as f64;
                let (lo, hi) = wilson_interval(stat.successes, self.samples, 1.96)?;
                stat.wilson_low = lo;
                stat.wilson_high = hi;
            }
        }
        Ok(self)
    }

    pub fn probability_above(&self, threshold: f64) -> Option<&ThresholdStat> {
        self.thresholds
            .iter()
            .find(|s| (s.threshold - threshold).abs() < 1e-9)
    }
}

/// Wilson score interval for a binomial proportion at critical value `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("wilson interval needs trials >= 1".into()));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Fidelity of a mod-meas output against the most likely final cat state for
/// bin `k`: â^{(K/2−k) mod K/2}|+⟩_K at the target amplitude.
pub fn fidelity_vs_target(output: &FockVector, k: usize, bins: usize, alpha_target: f64) -> Result<f64> {
    if k >= bins {
        return Err(Error::InvalidParameter(format!("index {k} out of {bins} bins")));
    }
    let reference = modmeas_reference(k, bins, alpha_target, output.cutoff())?;
    fidelity(output, &reference)
}

enum PreparedCircuit {
    ModMeas {
        run: ModMeas,
        references: Vec<FockVector>,
        bins: usize,
    },
    Tele {
        run: TeleCorrect,
        /// references[k%2][k'%2], output frame already applied
        references: [[FockVector; 2]; 2],
    },
}

struct PreparedExperiment {
    circuit: PreparedCircuit,
}

impl PreparedExperiment {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let circuit = match &config.circuit {
            CircuitConfig::ModMeas { target, probe, bins, correct_ys_phases } => {
                let target_state = target.build(target.policy_cutoff())?;
                let probe_state = probe.build(probe.policy_cutoff())?;
                let spacing = component_spacing(probe.max_amplitude(), *bins);
                let model = config.model.build(
                    target.max_amplitude().max(probe.max_amplitude()),
                    spacing,
                )?;
                let ys_probe = matches!(probe, StateSpec::Ys { .. } | StateSpec::DisplacedYs { .. });
                let opts = ModMeasOptions {
                    bins: *bins,
                    probe_components: probe.components(),
                    correct_ys_phases: *correct_ys_phases,
                    probe_angle_offset: if ys_probe { PI } else { 0.0 },
                };
                let run = ModMeas::prepare(&target_state, &probe_state, opts, &model)?;
                let references = (0..*bins)
                    .map(|k| modmeas_reference(k, *bins, target.max_amplitude(), target_state.cutoff()))
                    .collect::<Result<Vec<_>>>()?;
                PreparedCircuit::ModMeas { run, references, bins: *bins }
            }
            CircuitConfig::TeleCorrect {
                input,
                anc1,
                anc2,
                input_code,
                mid_code,
                out_code,
                ys_rail,
                anc1_frame,
                anc2_frame,
            } => {
                let input_state = input.build(input.policy_cutoff())?;
                let anc1_state = build_framed(anc1, (*anc1_frame).into())?;
                let anc2_state = build_framed(anc2, (*anc2_frame).into())?;
                let ys = match ys_rail {
                    YsRailConfig::None => YsRail::None,
                    YsRailConfig::First => YsRail::First,
                    YsRailConfig::Second => YsRail::Second { components: anc1.components() },
                };
                let params = TeleParams::new(*input_code, *mid_code, *out_code)
                    .with_ys_rail(ys)
                    .with_anc1_frame((*anc1_frame).into())
                    .with_anc2_frame((*anc2_frame).into());
                let max_amp = input
                    .max_amplitude()
                    .max(anc1.max_amplitude())
                    .max(anc2.max_amplitude());
                let spacing = component_spacing(input.max_amplitude(), *input_code);
                let model = config.model.build(max_amp, spacing)?;
                let run = TeleCorrect::prepare(&input_state, &anc1_state, &anc2_state, params, &model)?;
                let (c0, c1) = input.reference_coefficients();
                let frame = run.output_frame();
                let build_ref = |k: usize, kp: usize| -> Result<FockVector> {
                    let base = tele_reference(
                        k,
                        kp,
                        c0,
                        c1,
                        anc2.max_amplitude(),
                        *out_code,
                        anc2_state.cutoff(),
                    )?;
                    if frame.is_clean() {
                        Ok(base)
                    } else {
                        crate::circuit::apply_frame(&base, &frame)
                    }
                };
                let references = [
                    [build_ref(0, 0)?, build_ref(0, 1)?],
                    [build_ref(1, 0)?, build_ref(1, 1)?],
                ];
                PreparedCircuit::Tele { run, references }
            }
        };
        Ok(Self { circuit })
    }

    fn shot(&self, shot: usize, rng: &mut ChaCha8Rng) -> Result<SampleRecord> {
        match &self.circuit {
            PreparedCircuit::ModMeas { run, references, bins } => {
                let out = run.shot(rng)?;
                let k = out.indices[0];
                let f = fidelity(&out.output, &references[k])?;
                let half = (bins / 2) as i64;
                let frame = (half - k as i64).rem_euclid(half) as u32;
                Ok(SampleRecord { shot, indices: out.indices, fidelity: f, frame })
            }
            PreparedCircuit::Tele { run, references } => {
                let out = run.shot(rng)?;
                let (k, kp) = (out.indices[0], out.indices[1]);
                let f = fidelity(&out.output, &references[k % 2][kp % 2])?;
                let frame = ((k % 2) | ((kp % 2) << 1)) as u32;
                Ok(SampleRecord { shot, indices: out.indices, fidelity: f, frame })
            }
        }
    }
}

fn build_framed(spec: &StateSpec, frame: FrameTag) -> Result<FockVector> {
    let state = spec.build(spec.policy_cutoff())?;
    if frame.is_clean() {
        Ok(state)
    } else {
        crate::circuit::apply_frame(&state, &frame)
    }
}

fn component_spacing(alpha: f64, components: usize) -> Option<f64> {
    (components > 1).then(|| 2.0 * alpha * (PI / components as f64).sin())
}

/// Run an experiment, feeding each record to `sink` in shot order.
///
/// Shots are processed in chunks with independently derived seed streams;
/// chunks run in parallel but are emitted in order, so output is identical
/// regardless of thread count.
pub fn run_experiment_streaming(
    config: &ExperimentConfig,
    mut sink: impl FnMut(&SampleRecord),
) -> Result<HistogramSummary> {
    let config = config.clone().validated()?;
    let prepared = PreparedExperiment::new(&config)?;
    let mut summary = HistogramSummary::empty(&config.fidelity_thresholds);

    let chunk = config.chunk_size;
    let chunks = config.samples.div_ceil(chunk);
    let window = rayon::current_num_threads().max(1) * 2;
    let mut next = 0;
    while next < chunks {
        let batch: Vec<usize> = (next..chunks.min(next + window)).collect();
        let results: Vec<Result<Vec<SampleRecord>>> = batch
            .par_iter()
            .map(|&c| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(c as u64 + 1);
                let lo = c * chunk;
                let hi = config.samples.min(lo + chunk);
                (lo..hi).map(|s| prepared.shot(s, &mut rng)).collect()
            })
            .collect();
        for chunk_records in results {
            for record in chunk_records? {
                summary.add(&record);
                sink(&record);
            }
        }
        next += window;
    }
    summary.finalize()
}

/// Run an experiment and collect all records.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<SampleRecord>, HistogramSummary)> {
    let mut records = Vec::with_capacity(config.samples);
    let summary = run_experiment_streaming(config, |r| records.push(r.clone()))?;
    Ok((records, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementObjective {
    /// Maximize the largest modular-subspace probability (modulus = component
    /// count) of the displaced state.
    ModularMass,
    /// Maximize |⟨+|ψ⟩|²/(|⟨+|ψ⟩|²+|⟨−|ψ⟩|²) with |±⟩ taken in the displaced
    /// frame, isolating the phase alignment from the displacement cost.
    PlusVsMinus,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub radial_steps: usize,
    pub angular_steps: usize,
    /// Search radius; defaults to 3N/α.
    pub max_radius: Option<f64>,
    pub refine_tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            radial_steps: 60,
            angular_steps: 24,
            max_radius: None,
            refine_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DisplacementOpt {
    pub sigma: C64,
    pub value: f64,
    /// False when no grid point beat σ = 0 and the origin was returned.
    pub improved: bool,
}

/// Optimize the displacement applied to an N-component YS state: coarse polar
/// grid, then pattern-search refinement. Deterministic for a given config.
pub fn optimize_displacement(
    alpha: f64,
    components: usize,
    objective: DisplacementObjective,
    search: &SearchConfig,
) -> Result<DisplacementOpt> {
    if components < 2 {
        return Err(Error::InvalidParameter(
            "displacement optimization needs N >= 2".into(),
        ));
    }
    if objective == DisplacementObjective::PlusVsMinus && components % 2 != 0 {
        return Err(Error::InvalidParameter(
            "plus-vs-minus objective needs an even component count".into(),
        ));
    }
    let max_radius = search
        .max_radius
        .unwrap_or(3.0 * components as f64 / alpha.max(1e-9));
    let cutoff = default_cutoff(alpha + max_radius);

    let eval = |sigma: C64| -> Result<f64> {
        match objective {
            DisplacementObjective::ModularMass => {
                let state = displaced_ys(alpha, components, sigma, cutoff)?;
                Ok((0..components)
                    .map(|r| modular_subspace_probability(&state, components, r))
                    .fold(0.0, f64::max))
            }
            DisplacementObjective::PlusVsMinus => {
                let state = displaced_ys(alpha, components, sigma, cutoff)?;
                let mut plus = vec![C64::new(0.0, 0.0); cutoff];
                let mut minus = vec![C64::new(0.0, 0.0); cutoff];
                for m in 0..components {
                    let beta = -C64::from_polar(alpha, 2.0 * PI * m as f64 / components as f64);
                    let comp = crate::fock::coherent_state(beta + sigma, cutoff)?;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    for ((p, q), c) in plus.iter_mut().zip(minus.iter_mut()).zip(comp.amplitudes()) {
                        *p += c;
                        *q += sign * c;
                    }
                }
                let plus = FockVector::from_amplitudes(plus, cutoff)?;
                let minus = FockVector::from_amplitudes(minus, cutoff)?;
                let a = fidelity(&plus, &state)?;
                let b = fidelity(&minus, &state)?;
                Ok(a / (a + b))
            }
        }
    };

    let origin_value = eval(C64::new(0.0, 0.0))?;
    let mut best = (C64::new(0.0, 0.0), origin_value);
    for i in 0..=search.radial_steps {
        let r = max_radius * i as f64 / search.radial_steps as f64;
        if r == 0.0 {
            continue;
        }
        for j in 0..search.angular_steps {
            let sigma = C64::from_polar(r, 2.0 * PI * j as f64 / search.angular_steps as f64);
            let v = eval(sigma)?;
            if v > best.1 {
                best = (sigma, v);
            }
        }
    }
    if best.1 <= origin_value + 1e-12 {
        return Ok(DisplacementOpt {
            sigma: C64::new(0.0, 0.0),
            value: origin_value,
            improved: false,
        });
    }

    // pattern search on (Re σ, Im σ)
    let mut step = max_radius / search.radial_steps as f64;
    let (mut x, mut y) = (best.0.re, best.0.im);
    let mut value = best.1;
    while step > search.refine_tolerance {
        let mut moved = false;
        for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let v = eval(C64::new(x + dx, y + dy))?;
            if v > value {
                x += dx;
                y += dy;
                value = v;
                moved = true;
                break;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok(DisplacementOpt {
        sigma: C64::new(x, y),
        value,
        improved: true,
    })
}

/// Paper-figure presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig3Left,
    Fig3Right,
    Fig5Left,
    Fig5Right,
    Fig4Inset,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig3-left" => Ok(Figure::Fig3Left),
            "fig3-right" => Ok(Figure::Fig3Right),
            "fig5-left" => Ok(Figure::Fig5Left),
            "fig5-right" => Ok(Figure::Fig5Right),
            "fig4-inset" => Ok(Figure::Fig4Inset),
            other => Err(Error::InvalidParameter(format!(
                "unknown figure preset '{other}' (expected fig3-left, fig3-right, \
                 fig5-left, fig5-right, or fig4-inset)"
            ))),
        }
    }
}

/// What a figure preset runs: a sampled experiment or the Fig. 4 optimizer table.
pub enum FigureRun {
    Sampled(ExperimentConfig),
    Fig4Table { alpha: f64, component_counts: Vec<usize> },
}

/// Displacement used to prepare a YS tele-correction input: the modular-mass
/// optimum, which parks the population in one modular subspace.
pub fn prepared_input_sigma(alpha: f64, components: usize) -> Result<C64> {
    Ok(optimize_displacement(
        alpha,
        components,
        DisplacementObjective::ModularMass,
        &SearchConfig::default(),
    )?
    .sigma)
}

pub fn figure_config(figure: Figure, samples: usize, seed: u64) -> Result<FigureRun> {
    let run = match figure {
        Figure::Fig3Left => FigureRun::Sampled(ExperimentConfig {
            circuit: CircuitConfig::ModMeas {
                target: StateSpec::Coherent { alpha: 8.0 },
                probe: StateSpec::Cat { alpha: 4.0, distance: 1, mu: 0 },
                bins: 4,
                correct_ys_phases: false,
            },
            model: ModelConfig::FiniteLo { beta: 6.0 },
            samples,
            seed,
            fidelity_thresholds: default_thresholds(),
            chunk_size: DEFAULT_CHUNK,
        }),
        Figure::Fig3Right => FigureRun::Sampled(ExperimentConfig {
            circuit: CircuitConfig::ModMeas {
                target: StateSpec::Coherent { alpha: 24.0 },
                probe: StateSpec::Cat { alpha: 12.0, distance: 2, mu: 0 },
                bins: 8,
                correct_ys_phases: false,
            },
            model: ModelConfig::FiniteLo { beta: 8.0 },
            samples,
            seed,
            fidelity_thresholds: default_thresholds(),
            chunk_size: DEFAULT_CHUNK,
        }),
        Figure::Fig5Left => {
            let sigma = prepared_input_sigma(3.0, 2)?;
            FigureRun::Sampled(ExperimentConfig {
                circuit: CircuitConfig::TeleCorrect {
                    input: StateSpec::DisplacedYs {
                        alpha: 3.0,
                        components: 2,
                        sigma_re: sigma.re,
                        sigma_im: sigma.im,
                    },
                    anc1: StateSpec::Plus { alpha: 3.0, components: 4 },
                    anc2: StateSpec::Plus { alpha: 3.0, components: 4 },
                    input_code: 4,
                    mid_code: 4,
                    out_code: 4,
                    ys_rail: YsRailConfig::First,
                    anc1_frame: FrameConfig::default(),
                    anc2_frame: FrameConfig::default(),
                },
                model: ModelConfig::FiniteLo { beta: 10.0 },
                samples,
                seed,
                fidelity_thresholds: default_thresholds(),
                chunk_size: DEFAULT_CHUNK,
            })
        }
        Figure::Fig5Right => {
            let sigma = prepared_input_sigma(4.0, 4)?;
            FigureRun::Sampled(ExperimentConfig {
                circuit: CircuitConfig::TeleCorrect {
                    input: StateSpec::DisplacedYs {
                        alpha: 4.0,
                        components: 4,
                        sigma_re: sigma.re,
                        sigma_im: sigma.im,
                    },
                    anc1: StateSpec::Plus { alpha: 4.0, components: 8 },
                    anc2: StateSpec::Plus { alpha: 4.0, components: 8 },
                    input_code: 8,
                    mid_code: 8,
                    out_code: 8,
                    ys_rail: YsRailConfig::First,
                    anc1_frame: FrameConfig::default(),
                    anc2_frame: FrameConfig::default(),
                },
                model: ModelConfig::FiniteLo { beta: 10.0 },
                samples,
                seed,
                fidelity_thresholds: default_thresholds(),
                chunk_size: DEFAULT_CHUNK,
            })
        }
        Figure::Fig4Inset => FigureRun::Fig4Table {
            alpha: 10.0,
            component_counts: vec![2, 3, 4, 6, 8],
        },
    };
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_boundaries_and_value() {
        let (lo, _) = wilson_interval(0, 50, 1.96).unwrap();
        assert_eq!(lo, 0.0);
        let (_, hi) = wilson_interval(50, 50, 1.96).unwrap();
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(985, 1000, 1.96).unwrap();
        assert!((lo - 0.97539880520839754).abs() < 1e-12);
        assert!((hi - 0.99088910316280365).abs() < 1e-12);
        // spec quotes ≈ (0.9756, 0.9911)
        assert!((lo - 0.9756).abs() < 2.5e-3);
        assert!((hi - 0.9911).abs() < 2.5e-3);
        assert!(wilson_interval(1, 0, 1.96).is_err());
        assert!(wilson_interval(5, 4, 1.96).is_err());
    }

    #[test]
    fn wilson_coverage_sanity() {
        // 95% interval must contain p in at least 93% of seeded meta-trials
        use rand::Rng;
        let p = 0.3;
        let n = 1000;
        let trials = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut covered = 0;
        for _ in 0..trials {
            let successes = (0..n).filter(|_| rng.gen::<f64>() < p).count();
            let (lo, hi) = wilson_interval(successes, n, 1.96).unwrap();
            if lo <= p && p <= hi {
                covered += 1;
            }
        }
        assert!(covered as f64 / trials as f64 >= 0.93, "covered {covered}");
    }

    #[test]
    fn single_sample_run_is_degenerate() {
        let config = ExperimentConfig {
            circuit: CircuitConfig::ModMeas {
                target: StateSpec::Coherent { alpha: 3.0 },
                probe: StateSpec::Cat { alpha: 2.0, distance: 1, mu: 0 },
                bins: 4,
                correct_ys_phases: false,
            },
            model: ModelConfig::FiniteLo { beta: 4.0 },
            samples: 1,
            seed: 99,
            fidelity_thresholds: default_thresholds(),
            chunk_size: DEFAULT_CHUNK,
        };
        let (records, summary) = run_experiment(&config).unwrap();
        assert_eq!(records.len(), 1);
        for stat in &summary.thresholds {
            assert!(stat.probability == 0.0 || stat.probability == 1.0);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let config = ExperimentConfig {
            circuit: CircuitConfig::ModMeas {
                target: StateSpec::Coherent { alpha: 3.0 },
                probe: StateSpec::Cat { alpha: 2.0, distance: 1, mu: 0 },
                bins: 4,
                correct_ys_phases: false,
            },
            model: ModelConfig::FiniteLo { beta: 4.0 },
            samples: 300,
            seed: 42,
            fidelity_thresholds: default_thresholds(),
            chunk_size: 64,
        };
        let (r1, s1) = run_experiment(&config).unwrap();
        let (r2, s2) = run_experiment(&config).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn threshold_monotonicity() {
        let config = ExperimentConfig {
            circuit: CircuitConfig::ModMeas {
                target: StateSpec::Coherent { alpha: 4.0 },
                probe: StateSpec::Cat { alpha: 2.0, distance: 1, mu: 0 },
                bins: 4,
                correct_ys_phases: false,
            },
            model: ModelConfig::FiniteLo { beta: 4.0 },
            samples: 400,
            seed: 7,
            fidelity_thresholds: vec![0.5, 0.8],
            chunk_size: 128,
        };
        let (_, summary) = run_experiment(&config).unwrap();
        for pair in summary.thresholds.windows(2) {
            assert!(pair[0].threshold < pair[1].threshold);
            assert!(pair[0].probability >= pair[1].probability);
        }
        // defaults folded in
        assert!(summary.probability_above(0.99).is_some());
    }

    #[test]
    fn optimizer_finds_phase_correcting_displacement() {
        // plus-vs-minus for N=2 peaks where the chirp phase is corrected:
        // |σ*| ≈ π/(4α)
        let alpha = 10.0;
        let opt = optimize_displacement(
            alpha,
            2,
            DisplacementObjective::PlusVsMinus,
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(opt.improved);
        let expect = PI / (4.0 * alpha);
        assert!(
            (opt.sigma.norm() - expect).abs() / expect < 0.2,
            "|σ*| = {} vs {expect}",
            opt.sigma.norm()
        );
    }

    #[test]
    fn invalid_configs_rejected_before_sampling() {
        let config = ExperimentConfig {
            circuit: CircuitConfig::ModMeas {
                target: StateSpec::Coherent { alpha: 3.0 },
                probe: StateSpec::Cat { alpha: 2.0, distance: 1, mu: 0 },
                bins: 3,
                correct_ys_phases: false,
            },
            model: ModelConfig::FiniteLo { beta: 4.0 },
            samples: 10,
            seed: 1,
            fidelity_thresholds: default_thresholds(),
            chunk_size: DEFAULT_CHUNK,
        };
        assert!(matches!(
            run_experiment(&config),
            Err(Error::InvalidParameter(_))
        ));
    }
}
