//! Heterodyne measurement models, phase binning, modular projection, and the
//! closed-form distinguishability analytics.
//!
//! Heterodyne outcomes are sampled from the Husimi Q density
//! Q(γ) = ‖(⟨γ|⊗I)|Ψ⟩‖²/π discretized on a square lattice. In `finite_lo`
//! mode the lattice pitch is fixed to 1/(2β) (the discrete outcome lattice of
//! a weak local oscillator); in `ideal` mode the pitch is fine enough to act
//! as continuous sampling. Lattice masses are evaluated through the
//! eigendecomposition of the measured rail's reduced density matrix, which
//! keeps the cost at `O(points × rank × cutoff)` instead of
//! `O(points × cutoff × rest)` — the circuits here have small Schmidt rank
//! across any single rail.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::fock::{FockVector, ModeRegister};
use crate::states::modular_subspace_probability;

/// Fraction of outcome probability the lattice must cover.
pub const COVERAGE_REQUIRED: f64 = 1.0 - 1e-6;
/// Eigenvalue mass allowed to be dropped when compressing the reduced state.
const EIGEN_DROP: f64 = 1e-9;
/// Byte budget above which the per-point coherent bras are not cached.
const BRAS_CACHE_LIMIT: usize = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LoMode {
    /// Continuous-sampling limit; pitch chosen well below component spacing.
    Ideal,
    /// Weak local oscillator of amplitude β; outcome lattice pitch 1/(2β).
    FiniteLo { beta: f64 },
}

/// Heterodyne measurement configuration: mode plus the square outcome grid.
#[derive(Clone, Copy, Debug)]
pub struct HeterodyneModel {
    pub mode: LoMode,
    pub grid_spacing: f64,
    pub grid_radius: f64,
}

impl HeterodyneModel {
    /// Ideal model: pitch min(0.02, spacing/50) where `component_spacing` is
    /// the smallest distance between coherent components being resolved.
    pub fn ideal(max_amplitude: f64, component_spacing: Option<f64>) -> Self {
        let spacing = component_spacing.map_or(0.02, |s| (s / 50.0).min(0.02));
        Self {
            mode: LoMode::Ideal,
            grid_spacing: spacing,
            grid_radius: default_radius(max_amplitude),
        }
    }

    /// Finite local oscillator of amplitude β: pitch 1/(2β).
    pub fn finite_lo(beta: f64, max_amplitude: f64) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(
                "local-oscillator amplitude must be positive".into(),
            ));
        }
        Ok(Self {
            mode: LoMode::FiniteLo { beta },
            grid_spacing: 1.0 / (2.0 * beta),
            grid_radius: default_radius(max_amplitude),
        })
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.grid_radius = radius;
        self
    }
}

/// Default grid radius: largest component amplitude plus six Q-function
/// standard widths (σ_Q = 1/√2 per quadrature).
pub fn default_radius(max_amplitude: f64) -> f64 {
    max_amplitude + 6.0 / std::f64::consts::SQRT_2
}

/// The square outcome lattice of a heterodyne model.
#[derive(Clone, Debug)]
pub struct OutcomeLattice {
    pub spacing: f64,
    pub points: Vec<C64>,
}

impl OutcomeLattice {
    pub fn new(model: &HeterodyneModel) -> Self {
        let spacing = model.grid_spacing;
        let m = (model.grid_radius / spacing).floor() as i64;
        let mut points = Vec::with_capacity(((2 * m + 1) * (2 * m + 1)) as usize);
        for i in -m..=m {
            for j in -m..=m {
                points.push(C64::new(i as f64 * spacing, j as f64 * spacing));
            }
        }
        Self { spacing, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Unnormalized truncated coherent amplitudes e^{−|γ|²/2} γ^n/√n!.
///
/// Deliberately skips the construction tail check: as a measurement bra the
/// truncation must match the lattice weights exactly, not be renormalized.
pub fn coherent_bra(gamma: C64, cutoff: usize) -> Vec<C64> {
    let mut amps = vec![C64::new(0.0, 0.0); cutoff];
    let mut c = C64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for n in 1..cutoff {
        c *= gamma / C64::new((n as f64).sqrt(), 0.0);
        amps[n] = c;
    }
    amps
}

/// Shared per-run measurement state: the lattice and (size permitting) the
/// conjugated coherent amplitudes of every lattice point.
pub struct MeasurementContext {
    pub lattice: Arc<OutcomeLattice>,
    cutoff: usize,
    /// bras[g*cutoff + n] = conj(γ_g)^n/√n! · e^{−|γ_g|²/2}
    bras: Option<Vec<C64>>,
}

impl MeasurementContext {
    pub fn new(model: &HeterodyneModel, cutoff: usize) -> Self {
        let lattice = Arc::new(OutcomeLattice::new(model));
        let bytes = lattice.len() * cutoff * std::mem::size_of::<C64>();
        let bras = (bytes <= BRAS_CACHE_LIMIT).then(|| {
            let mut bras = Vec::with_capacity(lattice.len() * cutoff);
            for &g in &lattice.points {
                bras.extend(coherent_bra(g.conj(), cutoff));
            }
            bras
        });
        Self { lattice, cutoff, bras }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Outcome distribution for measuring a rail whose state (as a
    /// `[cutoff × rest]` matrix) is `psi`.
    pub fn povm(&self, psi: &[C64], rest: usize) -> Result<HeterodynePovm> {
        let dim = self.cutoff;
        debug_assert_eq!(psi.len(), dim * rest);
        let modes = compress_reduced_state(psi, dim, rest);

        let cell = self.lattice.spacing * self.lattice.spacing / PI;
        let n_points = self.lattice.len();
        let mut probs = vec![0.0f64; n_points];
        let mut scratch = vec![C64::new(0.0, 0.0); dim];
        for (g, p) in probs.iter_mut().enumerate() {
            let bra: &[C64] = match &self.bras {
                Some(b) => &b[g * dim..(g + 1) * dim],
                None => {
                    let gamma = self.lattice.points[g];
                    fill_coherent_bra(gamma.conj(), &mut scratch);
                    &scratch
                }
            };
            let mut q = 0.0;
            for mode in &modes {
                let mut dot = C64::new(0.0, 0.0);
                for (c, u) in bra[..mode.vector.len()].iter().zip(&mode.vector) {
                    dot += c * u;
                }
                q += mode.weight * dot.norm_sqr();
            }
            *p = cell * q;
        }

        let total: f64 = probs.iter().sum();
        if total < COVERAGE_REQUIRED {
            let radius = self
                .lattice
                .points
                .last()
                .map_or(0.0, |p| p.re.max(p.im.abs()));
            return Err(Error::GridCoverage {
                coverage: total,
                required: COVERAGE_REQUIRED,
                suggested_radius: radius + 3.0,
            });
        }
        let mut cum = Vec::with_capacity(n_points);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        Ok(HeterodynePovm {
            lattice: self.lattice.clone(),
            probs,
            cum,
            total,
        })
    }
}

fn fill_coherent_bra(gamma: C64, out: &mut [C64]) {
    let mut c = C64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0);
    out[0] = c;
    for n in 1..out.len() {
        c *= gamma / C64::new((n as f64).sqrt(), 0.0);
        out[n] = c;
    }
}

struct ReducedMode {
    weight: f64,
    /// Eigenvector trimmed to its numerical support.
    vector: Vec<C64>,
}

/// Eigendecomposition of ρ = ψψ† via the real-symmetric embedding
/// [[Re ρ, −Im ρ], [Im ρ, Re ρ]], whose eigenpairs each carry half the weight
/// of the corresponding Hermitian eigenpair.
fn compress_reduced_state(psi: &[C64], dim: usize, rest: usize) -> Vec<ReducedMode> {
    let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let mut acc = C64::new(0.0, 0.0);
            let (ri, rj) = (&psi[i * rest..(i + 1) * rest], &psi[j * rest..(j + 1) * rest]);
            for (a, b) in ri.iter().zip(rj) {
                acc += a * b.conj();
            }
            rho[i * dim + j] = acc;
            rho[j * dim + i] = acc.conj();
        }
    }
    let mut embed = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = rho[i * dim + j];
            embed[(i, j)] = v.re;
            embed[(i + dim, j + dim)] = v.re;
            embed[(i + dim, j)] = v.im;
            embed[(i, j + dim)] = -v.im;
        }
    }
    let eig = embed.symmetric_eigen();
    let mut pairs: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &w)| (w.max(0.0), i))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let total: f64 = pairs.iter().map(|(w, _)| w).sum();
    let mut kept = 0.0;
    let mut modes = Vec::new();
    for (w, idx) in pairs {
        if kept >= total * (1.0 - EIGEN_DROP) && !modes.is_empty() {
            break;
        }
        kept += w;
        let col = eig.eigenvectors.column(idx);
        let mut vector: Vec<C64> = (0..dim).map(|n| C64::new(col[n], col[n + dim])).collect();
        let support = vector
            .iter()
            .rposition(|a| a.norm_sqr() > 1e-24)
            .map_or(0, |p| p + 1);
        vector.truncate(support.max(1));
        modes.push(ReducedMode { weight: w / 2.0, vector });
    }
    modes
}

/// Discretized heterodyne outcome distribution for one rail of a register.
pub struct HeterodynePovm {
    lattice: Arc<OutcomeLattice>,
    probs: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl HeterodynePovm {
    /// Total lattice mass (coverage); ≥ [`COVERAGE_REQUIRED`] by construction.
    pub fn coverage(&self) -> f64 {
        self.total
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn points(&self) -> &[C64] {
        &self.lattice.points
    }

    /// Draw one outcome from the renormalized lattice distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, C64) {
        let u: f64 = rng.gen::<f64>() * self.total;
        let idx = self.cum.partition_point(|&c| c < u).min(self.probs.len() - 1);
        (idx, self.lattice.points[idx])
    }
}

/// Sample one heterodyne outcome on `rail` and collapse the register.
///
/// The collapsed register is the renormalized partial projection onto the
/// (truncated) coherent bra at the sampled outcome, with the rail removed.
pub fn heterodyne_sample<R: Rng + ?Sized>(
    register: &ModeRegister,
    rail: usize,
    model: &HeterodyneModel,
    rng: &mut R,
) -> Result<(C64, ModeRegister)> {
    let (psi, dim, rest) = register.rail_matrix(rail)?;
    let ctx = MeasurementContext::new(model, dim);
    let povm = ctx.povm(&psi, rest)?;
    let (_, gamma) = povm.sample(rng);
    let bra = coherent_bra(gamma, dim);
    let (_, collapsed) = register.project_rail(rail, &bra)?;
    Ok((gamma, collapsed))
}

/// Decision-line configuration: K bins over [0, 2π), bin k centered on
/// 2πk/K + frame_offset.
#[derive(Clone, Copy, Debug)]
pub struct PhaseBinning {
    pub segments: usize,
    pub frame_offset: f64,
}

impl PhaseBinning {
    pub fn new(segments: usize, frame_offset: f64) -> Self {
        Self { segments, frame_offset }
    }
}

/// Nearest-component bin index k = round(K(arg γ − offset)/2π) mod K, exact
/// ties resolved toward the smaller final index.
pub fn phase_bin(gamma: C64, binning: &PhaseBinning) -> Result<usize> {
    if gamma.norm_sqr() == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let k = binning.segments as f64;
    let x = k * (gamma.arg() - binning.frame_offset) / (2.0 * PI);
    let lo = x.floor();
    let frac = x - lo;
    let seg = binning.segments as i64;
    let wrap = |v: f64| -> usize { (v as i64).rem_euclid(seg) as usize };
    if (frac - 0.5).abs() <= 1e-9 {
        Ok(wrap(lo).min(wrap(lo + 1.0)))
    } else {
        Ok(wrap(x.round()))
    }
}

/// Project onto photon numbers ≡ k (mod K): returns the outcome probability
/// and the renormalized restriction.
pub fn modular_project(state: &FockVector, modulus: usize, residue: usize) -> Result<(f64, FockVector)> {
    if residue >= modulus {
        return Err(Error::InvalidParameter(format!(
            "residue {residue} must be below modulus {modulus}"
        )));
    }
    let probability = modular_subspace_probability(state, modulus, residue);
    if probability < 1e-15 {
        return Err(Error::ImpossibleOutcome { residue, modulus });
    }
    let amps: Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, a)| if n % modulus == residue { *a } else { C64::new(0.0, 0.0) })
        .collect();
    Ok((probability, FockVector::from_amplitudes(amps, state.cutoff())?))
}

/// Total variation distance and single-trial error for two equal-variance
/// Gaussians: TVD = erf(|μ₁−μ₂|/(2√2 σ)), p_err = (1 − TVD)/2.
pub fn tvd_gaussian(mu1: f64, mu2: f64, sigma: f64) -> Result<(f64, f64)> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let tvd = erf((mu1 - mu2).abs() / (2.0 * std::f64::consts::SQRT_2 * sigma));
    Ok((tvd, (1.0 - tvd) / 2.0))
}

/// Cat-code component distinguishability: exact erf form and its first-order
/// Bürmann approximation, for neighbouring components separated by
/// 2|α| sin(π/2D).
pub fn tvd_cat(alpha: f64, distance: usize) -> Result<(f64, f64)> {
    if distance == 0 {
        return Err(Error::InvalidParameter("distance must be >= 1".into()));
    }
    let x = std::f64::consts::SQRT_2 * alpha.abs() * (PI / (2.0 * distance as f64)).sin();
    let exact = erf(x);
    let approx = 1.0 - (-x * x).exp();
    Ok((exact, approx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, default_cutoff, fidelity};
    use crate::states::{cat_state, CatParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phase_bin_examples() {
        let b = PhaseBinning::new(6, 0.0);
        assert_eq!(phase_bin(C64::from_polar(1.0, 0.1), &b).unwrap(), 0);
        assert_eq!(
            phase_bin(C64::from_polar(1.0, 2.0 * PI / 6.0 + 0.05), &b).unwrap(),
            1
        );
        // exact boundary π/6 between bins 0 and 1 → smaller index
        assert_eq!(phase_bin(C64::from_polar(1.0, PI / 6.0), &b).unwrap(), 0);
        // boundary between last bin and bin 0 → 0
        assert_eq!(phase_bin(C64::from_polar(1.0, -PI / 6.0), &b).unwrap(), 0);
        assert!(matches!(
            phase_bin(C64::new(0.0, 0.0), &b),
            Err(Error::UndefinedPhase)
        ));
    }

    #[test]
    fn phase_bin_frame_covariance() {
        let gamma = C64::from_polar(1.3, 0.4);
        for theta in [0.0, 0.3, 1.7, -2.2] {
            let base = phase_bin(gamma, &PhaseBinning::new(5, 0.1)).unwrap();
            let rotated = phase_bin(
                gamma * C64::from_polar(1.0, theta),
                &PhaseBinning::new(5, 0.1 + theta),
            )
            .unwrap();
            assert_eq!(base, rotated);
        }
    }

    #[test]
    fn modular_project_examples() {
        let cutoff = default_cutoff(3.0);
        let cat = cat_state(&CatParams::new(3.0, 2, 0).unwrap(), cutoff).unwrap();
        let (p, collapsed) = modular_project(&cat, 4, 0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((fidelity(&collapsed, &cat).unwrap() - 1.0).abs() < 1e-12);

        let coh = coherent_state(C64::new(2.0, 0.0), 40).unwrap();
        let (p, collapsed) = modular_project(&coh, 2, 0).unwrap();
        assert!((p - 0.50016773131395126).abs() < 1e-10);
        let even = cat_state(&CatParams::new(2.0, 1, 0).unwrap(), 40).unwrap();
        assert!(fidelity(&collapsed, &even).unwrap() >= 1.0 - 1e-10);

        let three = FockVector::fock(3, 12).unwrap();
        assert!(matches!(
            modular_project(&three, 2, 0),
            Err(Error::ImpossibleOutcome { .. })
        ));
    }

    #[test]
    fn tvd_gaussian_examples() {
        let (t, p) = tvd_gaussian(1.0, 1.0, 2.0).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p, 0.5);
        let (t, p) = tvd_gaussian(0.0, 4.0, 1.0).unwrap();
        assert!((t - 0.95449973610364159).abs() < 1e-12);
        assert!((p - 0.022750131948179207).abs() < 1e-12);
        let (t, _) = tvd_gaussian(0.0, 1e6, 1.0).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tvd_cat_examples() {
        let (exact, approx) = tvd_cat(4.0, 2).unwrap();
        assert!((exact - 0.9999999845827421).abs() < 1e-12);
        assert!((approx - 0.99999988746482528).abs() < 1e-12);
        assert!((exact - approx - 9.711791682e-8).abs() < 1e-12);
        let (exact, _) = tvd_cat(4.0, 1).unwrap();
        assert!((1.0 - exact).abs() < 1e-14); // erf(4√2) = 1 − 1.24e−15
        let (exact, approx) = tvd_cat(1e-8, 3).unwrap();
        assert!(exact < 1e-7 && approx < 1e-7);
    }

    #[test]
    fn burmann_is_lower_bound_for_separated_components() {
        for alpha in [1.5, 2.0, 3.0, 4.0, 8.0] {
            for d in 1..=3 {
                let x = std::f64::consts::SQRT_2 * alpha * (PI / (2.0 * d as f64)).sin();
                if x < 1.0 {
                    continue;
                }
                let (exact, approx) = tvd_cat(alpha, d).unwrap();
                assert!(approx <= exact + 1e-12, "alpha={alpha} d={d}");
            }
        }
    }

    #[test]
    fn povm_covers_coherent_state() {
        let alpha = C64::new(2.0, 0.0);
        let state = coherent_state(alpha, default_cutoff(2.0)).unwrap();
        let model = HeterodyneModel::finite_lo(4.0, 2.0).unwrap();
        let ctx = MeasurementContext::new(&model, state.cutoff());
        let povm = ctx.povm(state.amplitudes(), 1).unwrap();
        assert!(povm.coverage() >= COVERAGE_REQUIRED);
        // distribution mean ≈ α (Q function is centered on the amplitude)
        let mean: C64 = povm
            .points()
            .iter()
            .zip(povm.probabilities())
            .map(|(g, p)| g * *p)
            .sum();
        assert!((mean / povm.coverage() - alpha).norm() < 0.02);
    }

    #[test]
    fn povm_coverage_error_names_radius() {
        let state = coherent_state(C64::new(3.0, 0.0), default_cutoff(3.0)).unwrap();
        let model = HeterodyneModel::finite_lo(4.0, 3.0).unwrap().with_radius(1.0);
        let ctx = MeasurementContext::new(&model, state.cutoff());
        match ctx.povm(state.amplitudes(), 1) {
            Err(Error::GridCoverage { suggested_radius, .. }) => {
                assert!(suggested_radius > 1.0)
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn product_state_collapse_has_no_back_action() {
        let a = coherent_state(C64::new(1.5, 0.0), 40).unwrap();
        let b = coherent_state(C64::new(0.0, -1.0), 30).unwrap();
        let reg = ModeRegister::from_rails(&[&a, &b]).unwrap();
        let model = HeterodyneModel::finite_lo(3.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let (_, collapsed) = heterodyne_sample(&reg, 0, &model, &mut rng).unwrap();
            let rest = collapsed.into_single().unwrap();
            assert!((fidelity(&rest, &b).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
