//! The three tele-correction circuits and qudit frame tracking.
//!
//! Rails are numbered as drawn: tele-correction couples rail 1→2 and 2→3 with
//! controlled rotations e^{iχ n̂ n̂}, then phase-measures rails 1 and 2; the
//! Hadamard gadget is the single-stage version; the modular photon-number
//! measurement couples a probe to a target and phase-measures the probe.
//! All gate strengths follow one rule: χ = 4π/(A·B) where A and B are the
//! component counts associated with the two rails (1 for a coherent rail).
//!
//! Component counts K, M, N name the *code* spaces: the |+⟩ ancilla of an
//! M-component code has M/2 visible coherent components, and the modular
//! measurement with K bins projects its target onto photon classes mod K/2.
//!
//! Known ancilla anomalies e^{iθn̂} â^m are never corrected physically:
//! rotations move decision lines, loss exponents commute through the gates as
//! known partner rotations, and whatever reaches the output rail is reported
//! as a frame tag for the fidelity reference.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{fidelity, DiagonalPhase, FockVector, ModeRegister};
use crate::measure::{
    coherent_bra, phase_bin, HeterodyneModel, HeterodynePovm, MeasurementContext, PhaseBinning,
};
use crate::states::{cat_plus, logical_state};

/// Accumulated known anomaly on a rail: rotation angle and loss exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameTag {
    pub theta: f64,
    pub losses: usize,
}

impl FrameTag {
    pub fn new(theta: f64, losses: usize) -> Self {
        Self { theta, losses }
    }

    /// Frame composition is additive in both components.
    pub fn compose(&self, other: &FrameTag) -> FrameTag {
        FrameTag {
            theta: self.theta + other.theta,
            losses: self.losses + other.losses,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.theta == 0.0 && self.losses == 0
    }
}

/// Frame bookkeeping for one tagged rail coupled through a controlled
/// rotation of strength `chi`: the rail's own decision lines rotate by
/// `tag.theta`, and each partner acquires the known rotation `chi·tag.losses`
/// (with sign −, from e^{iχn̂₁n̂₂} â₁ = â₁ e^{−iχn̂₂} e^{iχn̂₁n̂₂}), so partner
/// decision lines are rotated by minus the returned value.
pub fn frame_update(tag: &FrameTag, chi: f64) -> (f64, f64) {
    (tag.theta, chi * tag.losses as f64)
}

/// Apply a frame tag to a reference state: â^m then e^{iθn̂}, renormalized.
pub fn apply_frame(state: &FockVector, frame: &FrameTag) -> Result<FockVector> {
    let lossy = state.annihilate_pow(frame.losses)?;
    Ok(lossy.apply_diagonal(&DiagonalPhase::rotation(frame.theta)))
}

/// One circuit execution: measured bin indices, raw heterodyne points, the
/// surviving output state, and its frame tag.
#[derive(Clone, Debug)]
pub struct CircuitOutcome {
    pub indices: Vec<usize>,
    pub raw_outcomes: Vec<C64>,
    pub output: FockVector,
    pub frames: Vec<FrameTag>,
}

/// Bin `theta` into `segments` bins of width `period/segments`, returning the
/// unwrapped bin index, the wrapped index, and the bin-center angle on the
/// same branch as `theta`.
fn modular_bin(theta: f64, segments: usize, period: f64, offset: f64) -> (i64, usize, f64) {
    let width = period / segments as f64;
    let u = (theta - offset).rem_euclid(period);
    let raw = (u / width + 0.5).floor() as i64;
    let k = raw.rem_euclid(segments as i64) as usize;
    let snapped = theta - u + raw as f64 * width;
    (raw, k, snapped)
}

/// Most likely post-measurement cat state for bin `k` of a K-bin modular
/// measurement: â^{(K/2−k) mod (K/2)} |+⟩_K, renormalized.
pub fn modmeas_reference(k: usize, bins: usize, alpha: f64, cutoff: usize) -> Result<FockVector> {
    if bins < 2 || bins % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "bin count {bins} must be even and >= 2"
        )));
    }
    let half = (bins / 2) as i64;
    let exponent = (half - k as i64).rem_euclid(half) as usize;
    let plus = cat_plus(alpha, bins, cutoff)?;
    plus.annihilate_pow(exponent)
}

/// Expected tele-correction output for outcome indices (k, k′) and input
/// logical content (c₀, c₁):
/// (c₀ + c₁ e^{−iπk})|+⟩_N + e^{−iπk′}(c₀ − c₁ e^{−iπk})|−⟩_N, normalized.
pub fn tele_reference(
    k: usize,
    k_prime: usize,
    c0: C64,
    c1: C64,
    alpha: f64,
    out_code: usize,
    cutoff: usize,
) -> Result<FockVector> {
    let sk = if k % 2 == 0 { 1.0 } else { -1.0 };
    let skp = if k_prime % 2 == 0 { 1.0 } else { -1.0 };
    let plus_coeff = c0 + c1 * sk;
    let minus_coeff = (c0 - c1 * sk) * skp;
    // p|+⟩ + m|−⟩ = ((p+m)|0⟩ + (p−m)|1⟩)/√2
    logical_state(
        plus_coeff + minus_coeff,
        plus_coeff - minus_coeff,
        alpha,
        out_code,
        cutoff,
    )
}

/// Expected Hadamard-gadget output for bin k:
/// c₀|+⟩_M + c₁ e^{−iπk} R(2π/M)|+⟩_M, normalized.
pub fn hadamard_reference(
    k: usize,
    c0: C64,
    c1: C64,
    alpha: f64,
    mid_code: usize,
    cutoff: usize,
) -> Result<FockVector> {
    let plus = cat_plus(alpha, mid_code, cutoff)?;
    let rotated = plus.apply_diagonal(&DiagonalPhase::rotation(2.0 * PI / mid_code as f64));
    let sk = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut amps = vec![C64::new(0.0, 0.0); cutoff];
    for ((dst, a), b) in amps.iter_mut().zip(plus.amplitudes()).zip(rotated.amplitudes()) {
        *dst = c0 * a + c1 * sk * b;
    }
    FockVector::from_amplitudes(amps, cutoff)
}

/// Options for the modular photon-number measurement circuit.
#[derive(Clone, Copy, Debug)]
pub struct ModMeasOptions {
    /// Number of phase bins K; the target is projected mod K/2.
    pub bins: usize,
    /// Probe component count N (1 for a coherent probe).
    pub probe_components: usize,
    /// Remove the chirp phases a YS probe writes onto the target.
    pub correct_ys_phases: bool,
    /// Angle of the probe's m=0 component (π for YS probes, 0 for cat/coherent).
    pub probe_angle_offset: f64,
}

/// Prepared modular photon-number measurement: the post-gate joint state and
/// probe-rail outcome distribution are fixed across shots.
pub struct ModMeas {
    register: ModeRegister,
    povm: HeterodynePovm,
    target_cutoff: usize,
    probe_cutoff: usize,
    chi: f64,
    opts: ModMeasOptions,
}

impl ModMeas {
    pub fn prepare(
        target: &FockVector,
        probe: &FockVector,
        opts: ModMeasOptions,
        model: &HeterodyneModel,
    ) -> Result<Self> {
        if opts.bins < 2 || opts.bins % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "bin count {} must be even and >= 2",
                opts.bins
            )));
        }
        if opts.probe_components == 0 {
            return Err(Error::InvalidParameter("probe needs >= 1 component".into()));
        }
        let chi = 4.0 * PI / (opts.bins * opts.probe_components) as f64;
        let register = ModeRegister::from_rails(&[target, probe])?.controlled_rotation(0, 1, chi)?;
        let ctx = MeasurementContext::new(model, probe.cutoff());
        let (psi, _, rest) = register.rail_matrix(1)?;
        let povm = ctx.povm(&psi, rest)?;
        Ok(Self {
            register,
            povm,
            target_cutoff: target.cutoff(),
            probe_cutoff: probe.cutoff(),
            chi,
            opts,
        })
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CircuitOutcome> {
        let (_, gamma) = self.povm.sample(rng);
        let period = 4.0 * PI / self.opts.probe_components as f64;
        let (_, k, snapped) = modular_bin(
            gamma.arg(),
            self.opts.bins,
            period,
            self.opts.probe_angle_offset,
        );
        let bra = coherent_bra(gamma, self.probe_cutoff);
        let (_, collapsed) = self.register.project_rail(1, &bra)?;
        let mut output = collapsed.into_single()?;
        if self.opts.correct_ys_phases {
            let bins = self.opts.bins as f64;
            let quad = 4.0 * PI / (bins * bins * self.opts.probe_components as f64);
            let lambda = (2.0 / bins) * (2.0 * PI - snapped);
            output = output.apply_diagonal(&DiagonalPhase::from_fn(move |n| {
                let n = n as f64;
                -(quad * n * n) - lambda * n
            }));
        }
        debug_assert_eq!(output.cutoff(), self.target_cutoff);
        Ok(CircuitOutcome {
            indices: vec![k],
            raw_outcomes: vec![gamma],
            output,
            frames: vec![FrameTag::default()],
        })
    }

    pub fn gate_strength(&self) -> f64 {
        self.chi
    }
}

/// Modular photon-number measurement (Fig. 1c): couple `probe` to `target`
/// with χ = 4π/(K·N), heterodyne the probe, bin into K segments modulo 4π/N,
/// and return the collapsed target.
pub fn mod_photon_measure<R: Rng + ?Sized>(
    target: &FockVector,
    probe: &FockVector,
    bins: usize,
    probe_components: usize,
    model: &HeterodyneModel,
    correct_ys_phases: bool,
    rng: &mut R,
) -> Result<CircuitOutcome> {
    let opts = ModMeasOptions {
        bins,
        probe_components,
        correct_ys_phases,
        probe_angle_offset: if correct_ys_phases { PI } else { 0.0 },
    };
    ModMeas::prepare(target, probe, opts, model)?.shot(rng)
}

/// Prepared projective Hadamard gadget (Fig. 1b): one controlled rotation,
/// one phase measurement of the input rail; the ancilla rail is the output.
pub struct HadamardGadget {
    register: ModeRegister,
    povm: HeterodynePovm,
    input_cutoff: usize,
    binning: PhaseBinning,
}

impl HadamardGadget {
    pub fn prepare(
        input: &FockVector,
        input_code: usize,
        ancilla: &FockVector,
        mid_code: usize,
        model: &HeterodyneModel,
    ) -> Result<Self> {
        let chi = 4.0 * PI / (input_code * mid_code) as f64;
        let register =
            ModeRegister::from_rails(&[input, ancilla])?.controlled_rotation(0, 1, chi)?;
        let ctx = MeasurementContext::new(model, input.cutoff());
        let (psi, _, rest) = register.rail_matrix(0)?;
        let povm = ctx.povm(&psi, rest)?;
        Ok(Self {
            register,
            povm,
            input_cutoff: input.cutoff(),
            binning: PhaseBinning::new(input_code, 0.0),
        })
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CircuitOutcome> {
        let (_, gamma) = self.povm.sample(rng);
        let k = phase_bin(gamma, &self.binning)?;
        let bra = coherent_bra(gamma, self.input_cutoff);
        let (_, collapsed) = self.register.project_rail(0, &bra)?;
        Ok(CircuitOutcome {
            indices: vec![k],
            raw_outcomes: vec![gamma],
            output: collapsed.into_single()?,
            frames: vec![FrameTag::default()],
        })
    }
}

pub fn hadamard_gadget<R: Rng + ?Sized>(
    input: &FockVector,
    input_code: usize,
    ancilla: &FockVector,
    mid_code: usize,
    model: &HeterodyneModel,
    rng: &mut R,
) -> Result<CircuitOutcome> {
    HadamardGadget::prepare(input, input_code, ancilla, mid_code, model)?.shot(rng)
}

/// Which rail, if any, carries a Yurke–Stoler state into tele-correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum YsRail {
    None,
    /// The data rail: its chirp phases are assumed repaired by displacement.
    First,
    /// The middle ancilla: the cross-Kerr correction is applied before
    /// measurement and the residual known rotation after.
    Second { components: usize },
}

/// Tele-correction parameters: code component counts per rail, the YS rail
/// marker, and the known anomaly frames of the three input states.
#[derive(Clone, Copy, Debug)]
pub struct TeleParams {
    pub input_code: usize,
    pub mid_code: usize,
    pub out_code: usize,
    pub ys_rail: YsRail,
    pub input_frame: FrameTag,
    pub anc1_frame: FrameTag,
    pub anc2_frame: FrameTag,
}

impl TeleParams {
    pub fn new(input_code: usize, mid_code: usize, out_code: usize) -> Self {
        Self {
            input_code,
            mid_code,
            out_code,
            ys_rail: YsRail::None,
            input_frame: FrameTag::default(),
            anc1_frame: FrameTag::default(),
            anc2_frame: FrameTag::default(),
        }
    }

    pub fn with_ys_rail(mut self, ys_rail: YsRail) -> Self {
        self.ys_rail = ys_rail;
        self
    }

    pub fn with_anc1_frame(mut self, frame: FrameTag) -> Self {
        self.anc1_frame = frame;
        self
    }

    pub fn with_anc2_frame(mut self, frame: FrameTag) -> Self {
        self.anc2_frame = frame;
        self
    }
}

/// Prepared tele-correction circuit (Fig. 1a).
///
/// The joint post-gate state and the first-rail outcome distribution are
/// computed once; each shot samples rail 1, collapses, builds the conditional
/// rail-2 distribution, samples it, and returns the rail-3 output.
pub struct TeleCorrect {
    register: ModeRegister,
    povm1: HeterodynePovm,
    ctx2: MeasurementContext,
    cutoffs: [usize; 3],
    binning1: PhaseBinning,
    binning2: PhaseBinning,
    output_frame: FrameTag,
    chi23: f64,
    params: TeleParams,
}

impl TeleCorrect {
    pub fn prepare(
        input: &FockVector,
        anc1: &FockVector,
        anc2: &FockVector,
        params: TeleParams,
        model: &HeterodyneModel,
    ) -> Result<Self> {
        let (k, m, n) = (params.input_code, params.mid_code, params.out_code);
        for (label, v) in [("K", k), ("M", m), ("N", n)] {
            if v == 0 || v % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "code component count {label}={v} must be even"
                )));
            }
        }
        let chi12 = 4.0 * PI / (k * m) as f64;
        let chi23 = 4.0 * PI / (m * n) as f64;
        let mut register = ModeRegister::from_rails(&[input, anc1, anc2])?
            .controlled_rotation(0, 1, chi12)?
            .controlled_rotation(1, 2, chi23)?;

        if let YsRail::Second { components } = params.ys_rail {
            if m != 2 * components {
                return Err(Error::InvalidParameter(format!(
                    "ys_rail=second: middle code M={m} must equal twice the YS component \
                     count {components} (mislabeled ancilla?)"
                )));
            }
            let nys = components as f64;
            let (kf, nf) = (k as f64, n as f64);
            register = register
                .apply_diagonal_on(0, &DiagonalPhase::self_kerr(-4.0 * PI / (kf * kf * nys)))?
                .apply_diagonal_on(2, &DiagonalPhase::self_kerr(-4.0 * PI / (nf * nf * nys)))?
                .controlled_rotation(0, 2, -8.0 * PI / (kf * nf * nys))?;
        }

        // Decision-line offsets and the output frame, from commuting the known
        // anomalies through the gates.
        let offset1 = params.input_frame.theta - chi12 * params.anc1_frame.losses as f64;
        let mut offset2 = params.anc1_frame.theta
            - chi12 * params.input_frame.losses as f64
            - chi23 * params.anc2_frame.losses as f64;
        if matches!(params.ys_rail, YsRail::Second { .. }) {
            offset2 += PI; // YS components sit opposite the cat convention
        }
        let output_frame = FrameTag::new(
            params.anc2_frame.theta - chi23 * params.anc1_frame.losses as f64,
            params.anc2_frame.losses,
        );

        let ctx1 = MeasurementContext::new(model, input.cutoff());
        let (psi, _, rest) = register.rail_matrix(0)?;
        let povm1 = ctx1.povm(&psi, rest)?;
        let ctx2 = MeasurementContext::new(model, anc1.cutoff());
        Ok(Self {
            register,
            povm1,
            ctx2,
            cutoffs: [input.cutoff(), anc1.cutoff(), anc2.cutoff()],
            binning1: PhaseBinning::new(k, offset1),
            binning2: PhaseBinning::new(m, offset2),
            output_frame,
            chi23,
            params,
        })
    }

    pub fn params(&self) -> &TeleParams {
        &self.params
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CircuitOutcome> {
        let (_, gamma1) = self.povm1.sample(rng);
        let k = phase_bin(gamma1, &self.binning1)?;
        let bra1 = coherent_bra(gamma1, self.cutoffs[0]);
        let (_, rest) = self.register.project_rail(0, &bra1)?;

        let (psi, _, rest_dim) = rest.rail_matrix(0)?;
        let povm2 = self.ctx2.povm(&psi, rest_dim)?;
        let (_, gamma2) = povm2.sample(rng);
        let k_prime = phase_bin(gamma2, &self.binning2)?;
        let bra2 = coherent_bra(gamma2, self.cutoffs[1]);
        let (_, collapsed) = rest.project_rail(0, &bra2)?;
        let mut output = collapsed.into_single()?;

        if let YsRail::Second { components } = self.params.ys_rail {
            // Undo the known linear chirp remnant using the snapped angle of
            // the middle-rail outcome, as in the modular measurement.
            let (_, _, snapped) = modular_bin(
                gamma2.arg(),
                self.params.mid_code,
                2.0 * PI,
                self.binning2.frame_offset,
            );
            let _ = components;
            let lambda = (2.0 / self.params.out_code as f64) * (2.0 * PI - snapped);
            output = output.apply_diagonal(&DiagonalPhase::from_fn(move |n| -lambda * n as f64));
        }

        Ok(CircuitOutcome {
            indices: vec![k, k_prime],
            raw_outcomes: vec![gamma1, gamma2],
            output,
            frames: vec![self.output_frame],
        })
    }

    pub fn output_frame(&self) -> FrameTag {
        self.output_frame
    }

    pub fn second_gate_strength(&self) -> f64 {
        self.chi23
    }
}

/// Tele-correction (Fig. 1a): two controlled rotations, phase measurements of
/// rails 1 and 2, output on rail 3.
#[allow(clippy::too_many_arguments)]
pub fn tele_correct<R: Rng + ?Sized>(
    input: &FockVector,
    anc1: &FockVector,
    anc2: &FockVector,
    params: TeleParams,
    model: &HeterodyneModel,
    rng: &mut R,
) -> Result<CircuitOutcome> {
    TeleCorrect::prepare(input, anc1, anc2, params, model)?.shot(rng)
}

/// Fidelity of a circuit output against a reference carrying a known frame.
pub fn frame_fidelity(output: &FockVector, reference: &FockVector, frame: &FrameTag) -> Result<f64> {
    if frame.is_clean() {
        fidelity(output, reference)
    } else {
        fidelity(output, &apply_frame(reference, frame)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, default_cutoff};
    use crate::states::{cat_state, ys_state, CatParams, YsParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modular_bin_snaps_to_lattice() {
        let (raw, k, snapped) = modular_bin(0.1, 4, 2.0 * PI, 0.0);
        assert_eq!((raw, k), (0, 0));
        assert!((snapped - 0.0).abs() < 1e-12);
        let (_, k, snapped) = modular_bin(PI / 2.0 + 0.2, 4, 2.0 * PI, 0.0);
        assert_eq!(k, 1);
        assert!((snapped - PI / 2.0).abs() < 1e-12);
        // wrap-around: just below 2π snaps to bin 0 on the next branch
        let (raw, k, snapped) = modular_bin(2.0 * PI - 0.05, 4, 2.0 * PI, 0.0);
        assert_eq!((raw, k), (4, 0));
        assert!((snapped - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn frame_update_values() {
        let (offset, partner) = frame_update(&FrameTag::new(0.0, 0), 1.0);
        assert_eq!((offset, partner), (0.0, 0.0));
        let (offset, partner) = frame_update(&FrameTag::new(0.1, 0), 1.0);
        assert_eq!((offset, partner), (0.1, 0.0));
        let chi = 4.0 * PI / 8.0;
        let (_, partner) = frame_update(&FrameTag::new(0.0, 1), chi);
        assert!((partner - chi).abs() < 1e-15);
    }

    #[test]
    fn loss_commutes_through_controlled_rotation() {
        // e^{iχn̂₁n̂₂} â₁ = â₁ e^{−iχn̂₂} e^{iχn̂₁n̂₂}, checked on a dense register.
        let chi = 0.37;
        let a = coherent_state(C64::new(1.2, 0.0), 12).unwrap();
        let b = coherent_state(C64::new(0.0, 0.9), 12).unwrap();
        let reg = ModeRegister::from_rails(&[&a, &b]).unwrap();

        let lhs = {
            let dropped = a.annihilate_pow(1).unwrap();
            ModeRegister::from_rails(&[&dropped, &b])
                .unwrap()
                .controlled_rotation(0, 1, chi)
                .unwrap()
        };
        let rhs = {
            let rotated = reg.controlled_rotation(0, 1, chi).unwrap();
            // apply â₁ on the flat amplitudes, then the compensating e^{−iχn̂₂}
            let (dim, rest) = (12usize, 12usize);
            let src = rotated.amplitudes();
            let mut amps = vec![C64::new(0.0, 0.0); dim * rest];
            for n in 0..dim - 1 {
                let fac = ((n + 1) as f64).sqrt();
                for r in 0..rest {
                    amps[n * rest + r] = src[(n + 1) * rest + r] * fac;
                }
            }
            ModeRegister::from_flat(vec![dim, rest], amps)
                .unwrap()
                .apply_diagonal_on(1, &DiagonalPhase::rotation(-chi))
                .unwrap()
        };
        let ov = lhs.inner(&rhs).unwrap();
        assert!((ov.norm() - 1.0).abs() < 1e-10, "overlap {ov}");
    }

    #[test]
    fn modmeas_cat_target_is_deterministic() {
        let alpha = 3.0;
        let bins = 4;
        let cutoff = default_cutoff(alpha);
        for mu in [0usize, 1] {
            let target = cat_state(&CatParams::new(alpha, 2, mu).unwrap(), cutoff).unwrap();
            let probe = cat_state(&CatParams::new(3.0, 1, 0).unwrap(), cutoff).unwrap();
            let model = HeterodyneModel::ideal(3.0, Some(2.0 * 3.0));
            let run = ModMeas::prepare(
                &target,
                &probe,
                ModMeasOptions {
                    bins,
                    probe_components: 2,
                    correct_ys_phases: false,
                    probe_angle_offset: 0.0,
                },
                &model,
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..6 {
                let out = run.shot(&mut rng).unwrap();
                // residue class of the bin must match the target's support
                assert_eq!(out.indices[0] % 2, mu * 2 % 2);
                assert!(
                    fidelity(&out.output, &target).unwrap() >= 1.0 - 1e-6,
                    "collapse must leave a residue eigenstate unchanged"
                );
            }
        }
    }

    #[test]
    fn ys_probe_matches_cat_probe_statistics() {
        // Small-scale paired runs: fidelity distributions should agree.
        let model = HeterodyneModel::finite_lo(6.0, 2.0).unwrap();
        let target = coherent_state(C64::new(4.0, 0.0), default_cutoff(4.0)).unwrap();
        let cat_probe =
            cat_state(&CatParams::new(2.0, 1, 0).unwrap(), default_cutoff(2.0)).unwrap();
        let ys_probe = ys_state(&YsParams::new(2.0, 2).unwrap(), default_cutoff(2.0)).unwrap();
        let shots = 400;
        let mut high = [0usize; 2];
        for (which, (probe, correct)) in [(&cat_probe, false), (&ys_probe, true)].iter().enumerate()
        {
            let run = ModMeas::prepare(
                &target,
                probe,
                ModMeasOptions {
                    bins: 4,
                    probe_components: 2,
                    correct_ys_phases: *correct,
                    probe_angle_offset: if *correct { PI } else { 0.0 },
                },
                &model,
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..shots {
                let out = run.shot(&mut rng).unwrap();
                let reference =
                    modmeas_reference(out.indices[0], 4, 4.0, target.cutoff()).unwrap();
                if fidelity(&out.output, &reference).unwrap() > 0.99 {
                    high[which] += 1;
                }
            }
        }
        let diff = (high[0] as f64 - high[1] as f64).abs() / shots as f64;
        assert!(
            diff < 0.05,
            "cat {} vs ys {} high-fidelity shots",
            high[0],
            high[1]
        );
    }

    #[test]
    fn tele_second_rail_requires_matching_counts() {
        let cutoff = default_cutoff(2.0);
        let state = cat_state(&CatParams::new(2.0, 1, 0).unwrap(), cutoff).unwrap();
        let params = TeleParams::new(4, 4, 4).with_ys_rail(YsRail::Second { components: 3 });
        let model = HeterodyneModel::finite_lo(6.0, 2.0).unwrap();
        let err = TeleCorrect::prepare(&state, &state, &state, params, &model);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }
}
