//! Truncated Fock-space linear algebra for a single bosonic mode and small
//! multi-rail registers.
//!
//! States are plain complex amplitude vectors indexed by photon number. All
//! values are immutable after construction; operations return new values.
//! Unitary operations preserve the norm exactly (diagonal phases) or to
//! truncation accuracy (displacements), and constructors renormalize
//! numerically rather than trusting analytic prefactors at finite cutoff.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Squared-norm tolerance for the normalization invariant.
pub const NORM_TOL: f64 = 1e-9;
/// Tail-mass bound enforced at construction: |amp[cutoff-1]|^2 must stay below this.
pub const TAIL_LIMIT: f64 = 1e-12;
/// Looser tail bound applied after a displacement re-truncation.
pub const DISPLACE_TAIL_LIMIT: f64 = 1e-10;

/// Photon-number cutoff policy: `ceil(|amp|^2 + 8|amp| + 10)`.
///
/// Every experiment derives its truncations from this single function so runs
/// are reproducible from their configuration alone.
pub fn default_cutoff(amplitude: f64) -> usize {
    let a = amplitude.abs();
    (a * a + 8.0 * a + 10.0).ceil() as usize
}

/// A truncated single-mode pure state: amplitudes over photon numbers
/// `0..cutoff`, normalized to 1.
#[derive(Clone, Debug)]
pub struct FockVector {
    amps: Vec<C64>,
}

impl FockVector {
    /// Normalize and validate a raw amplitude vector.
    ///
    /// Fails if the vector is numerically zero or if the population at the
    /// top truncation level exceeds [`TAIL_LIMIT`]; `required_cutoff` is the
    /// cutoff suggested in that error.
    pub fn from_amplitudes(amps: Vec<C64>, required_cutoff: usize) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("empty amplitude vector".into()));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < 1e-250 {
            return Err(Error::DegenerateState("zero-norm amplitude vector".into()));
        }
        let scale = norm_sqr.sqrt().recip();
        let amps: Vec<C64> = amps.into_iter().map(|a| a * scale).collect();
        let tail = amps[amps.len() - 1].norm_sqr();
        if tail >= TAIL_LIMIT {
            return Err(Error::CutoffTooSmall {
                cutoff: amps.len(),
                required: required_cutoff.max(amps.len() + 1),
                tail,
                limit: TAIL_LIMIT,
            });
        }
        Ok(Self { amps })
    }

    /// Basis state |n⟩.
    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::InvalidParameter(format!(
                "photon number {n} does not fit cutoff {cutoff}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff];
        amps[n] = C64::new(1.0, 0.0);
        Self::from_amplitudes(amps, n + 2)
    }

    pub fn vacuum(cutoff: usize) -> Result<Self> {
        Self::fock(0, cutoff)
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amps.get(n).copied().unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Zero-pad (or error on shrink) to a larger cutoff.
    pub fn padded(&self, cutoff: usize) -> Result<Self> {
        if cutoff < self.amps.len() {
            return Err(Error::InvalidParameter(format!(
                "padded cutoff {cutoff} smaller than current {}",
                self.amps.len()
            )));
        }
        let mut amps = self.amps.clone();
        amps.resize(cutoff, C64::new(0.0, 0.0));
        Ok(Self { amps })
    }

    /// Multiply each amplitude by `e^{i f(n)}`. Exactly norm-preserving.
    pub fn apply_diagonal(&self, phase: &DiagonalPhase) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(n, a)| a * C64::from_polar(1.0, phase.eval(n)))
            .collect();
        Self { amps }
    }

    /// Apply the displacement operator D(sigma).
    ///
    /// Built as the dense matrix exponential of `sigma a† − sigma* a` at a
    /// padded internal cutoff, then truncated back; errors if the truncated
    /// tail exceeds [`DISPLACE_TAIL_LIMIT`].
    pub fn displace(&self, sigma: C64) -> Result<Self> {
        let cutoff = self.amps.len();
        let s = sigma.norm();
        let pad = (2.0 * (s * s + 8.0 * s)).ceil() as usize;
        let work = cutoff + pad.max(4);
        let op = displacement_matrix(sigma, work);
        let mut padded = DMatrix::<C64>::zeros(work, 1);
        for (n, a) in self.amps.iter().enumerate() {
            padded[(n, 0)] = *a;
        }
        let displaced = op * padded;
        let amps: Vec<C64> = (0..cutoff).map(|n| displaced[(n, 0)]).collect();
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let tail = 1.0 - kept + amps[cutoff - 1].norm_sqr();
        if tail >= DISPLACE_TAIL_LIMIT {
            return Err(Error::CutoffTooSmall {
                cutoff,
                required: default_cutoff(self.mean_amplitude_bound() + s),
                tail,
                limit: DISPLACE_TAIL_LIMIT,
            });
        }
        Self::from_amplitudes(amps, cutoff + pad)
    }

    /// Apply `a^m` (m-photon loss) and renormalize.
    pub fn annihilate_pow(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Ok(self.clone());
        }
        let cutoff = self.amps.len();
        let mut amps = vec![C64::new(0.0, 0.0); cutoff];
        for n in 0..cutoff.saturating_sub(m) {
            // sqrt((n+m)!/n!) accumulated in place
            let mut fac = 1.0;
            for j in 1..=m {
                fac *= ((n + j) as f64).sqrt();
            }
            amps[n] = self.amps[n + m] * fac;
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < 1e-250 {
            return Err(Error::DegenerateState(format!(
                "a^{m} annihilates the state (no support above {} photons)",
                m - 1
            )));
        }
        Self::from_amplitudes(amps, cutoff)
    }

    /// Photon-number distribution |amp[n]|^2.
    pub fn photon_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Rough |amplitude| bound from the mean photon number, used in error hints.
    fn mean_amplitude_bound(&self) -> f64 {
        let mean: f64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum();
        mean.sqrt()
    }
}

/// Inner product ⟨a|b⟩, conjugate-linear in the first argument.
pub fn inner(a: &FockVector, b: &FockVector) -> Result<C64> {
    if a.cutoff() != b.cutoff() {
        return Err(Error::DimensionMismatch(a.cutoff(), b.cutoff()));
    }
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Fidelity |⟨a|b⟩|^2. States are compared this way throughout; global phase
/// is unspecified everywhere.
pub fn fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr())
}

/// Coherent state |alpha⟩ with amplitudes `e^{−|α|²/2} α^n/√n!`, renormalized.
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<FockVector> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter("zero cutoff".into()));
    }
    let mut amps = vec![C64::new(0.0, 0.0); cutoff];
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for n in 1..cutoff {
        c *= alpha / C64::new((n as f64).sqrt(), 0.0);
        amps[n] = c;
    }
    FockVector::from_amplitudes(amps, default_cutoff(alpha.norm()))
}

/// Number-diagonal phase profile n ↦ f(n), applied as `e^{i f(n)}`.
#[derive(Clone)]
pub struct DiagonalPhase {
    f: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl DiagonalPhase {
    pub fn from_fn(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// Rotation e^{iθ n̂}: f(n) = θ n.
    pub fn rotation(theta: f64) -> Self {
        Self::from_fn(move |n| theta * n as f64)
    }

    /// Self-Kerr phase e^{iχ n̂²}: f(n) = χ n².
    pub fn self_kerr(chi: f64) -> Self {
        Self::from_fn(move |n| chi * (n * n) as f64)
    }

    /// The Kerr-Hamiltonian phase at t = π/(λN): f(n) = −π n²/N (free-evolution
    /// frame dropped).
    pub fn kerr_at_ys_time(components: usize) -> Self {
        Self::self_kerr(-PI / components as f64)
    }

    pub fn negated(&self) -> Self {
        let f = self.f.clone();
        Self::from_fn(move |n| -f(n))
    }

    pub fn eval(&self, n: usize) -> f64 {
        (self.f)(n)
    }
}

impl std::fmt::Debug for DiagonalPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DiagonalPhase(f(1)={:.6})", self.eval(1))
    }
}

/// Dense matrix of D(sigma) = exp(sigma a† − sigma* a) at the given dimension.
pub fn displacement_matrix(sigma: C64, dim: usize) -> DMatrix<C64> {
    let mut gen = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim - 1 {
        let r = ((n + 1) as f64).sqrt();
        gen[(n + 1, n)] = sigma * r;
        gen[(n, n + 1)] = -sigma.conj() * r;
    }
    gen.exp()
}

/// An ordered multi-rail pure state over the product of per-rail truncations.
///
/// Flat index layout is row-major with rail 0 slowest: for cutoffs
/// `(c0, c1, c2)` the index of `(n0, n1, n2)` is `(n0 c1 + n1) c2 + n2`.
#[derive(Clone, Debug)]
pub struct ModeRegister {
    cutoffs: Vec<usize>,
    amps: Vec<C64>,
}

impl ModeRegister {
    /// Tensor product of single-rail states.
    pub fn from_rails(rails: &[&FockVector]) -> Result<Self> {
        if rails.is_empty() {
            return Err(Error::InvalidParameter("register needs at least one rail".into()));
        }
        let cutoffs: Vec<usize> = rails.iter().map(|r| r.cutoff()).collect();
        let mut amps = vec![C64::new(1.0, 0.0)];
        for rail in rails {
            let mut next = Vec::with_capacity(amps.len() * rail.cutoff());
            for a in &amps {
                for b in rail.amplitudes() {
                    next.push(a * b);
                }
            }
            amps = next;
        }
        Ok(Self { cutoffs, amps })
    }

    /// Build a register from a flat amplitude vector over the product index
    /// space (rail 0 slowest), normalizing it.
    pub fn from_flat(cutoffs: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let dim: usize = cutoffs.iter().product();
        if dim != amps.len() || dim == 0 {
            return Err(Error::DimensionMismatch(dim, amps.len()));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < 1e-250 {
            return Err(Error::DegenerateState("zero-norm register".into()));
        }
        let scale = norm_sqr.sqrt().recip();
        let amps = amps.into_iter().map(|a| a * scale).collect();
        Ok(Self { cutoffs, amps })
    }

    pub fn rail_count(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_rail(&self, rail: usize) -> Result<()> {
        if rail >= self.cutoffs.len() {
            return Err(Error::RailOutOfRange {
                rail,
                count: self.cutoffs.len(),
            });
        }
        Ok(())
    }

    /// Strides for (block before `rail`, rail dimension, block after `rail`).
    fn split(&self, rail: usize) -> (usize, usize, usize) {
        let before: usize = self.cutoffs[..rail].iter().product();
        let dim = self.cutoffs[rail];
        let after: usize = self.cutoffs[rail + 1..].iter().product();
        (before, dim, after)
    }

    /// Two-rail gate e^{iχ n̂_a n̂_b}; exactly norm-preserving.
    pub fn controlled_rotation(&self, rail_a: usize, rail_b: usize, chi: f64) -> Result<Self> {
        self.check_rail(rail_a)?;
        self.check_rail(rail_b)?;
        if rail_a == rail_b {
            return Err(Error::InvalidParameter(
                "controlled rotation needs two distinct rails".into(),
            ));
        }
        let strides = self.strides();
        let mut amps = self.amps.clone();
        for (idx, a) in amps.iter_mut().enumerate() {
            let na = (idx / strides[rail_a]) % self.cutoffs[rail_a];
            let nb = (idx / strides[rail_b]) % self.cutoffs[rail_b];
            *a *= C64::from_polar(1.0, chi * (na * nb) as f64);
        }
        Ok(Self {
            cutoffs: self.cutoffs.clone(),
            amps,
        })
    }

    /// Apply a number-diagonal phase on one rail.
    pub fn apply_diagonal_on(&self, rail: usize, phase: &DiagonalPhase) -> Result<Self> {
        self.check_rail(rail)?;
        let strides = self.strides();
        let dim = self.cutoffs[rail];
        let factors: Vec<C64> = (0..dim)
            .map(|n| C64::from_polar(1.0, phase.eval(n)))
            .collect();
        let mut amps = self.amps.clone();
        for (idx, a) in amps.iter_mut().enumerate() {
            *a *= factors[(idx / strides[rail]) % dim];
        }
        Ok(Self {
            cutoffs: self.cutoffs.clone(),
            amps,
        })
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.cutoffs.len()];
        for i in (0..self.cutoffs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cutoffs[i + 1];
        }
        strides
    }

    /// View the register as the matrix psi[n_rail][rest], row-major, together
    /// with its shape `(rail_dim, rest_dim)`.
    pub fn rail_matrix(&self, rail: usize) -> Result<(Vec<C64>, usize, usize)> {
        self.check_rail(rail)?;
        let (before, dim, after) = self.split(rail);
        let rest = before * after;
        let mut psi = vec![C64::new(0.0, 0.0); dim * rest];
        for b in 0..before {
            for n in 0..dim {
                let src = (b * dim + n) * after;
                let dst = n * rest + b * after;
                psi[dst..dst + after].copy_from_slice(&self.amps[src..src + after]);
            }
        }
        Ok((psi, dim, rest))
    }

    /// Project `rail` onto the given bra amplitudes and drop it.
    ///
    /// Returns the outcome weight ‖(⟨bra|⊗I)|Ψ⟩‖² and the renormalized
    /// register on the remaining rails. The bra need not be normalized (this
    /// is what keeps truncated coherent bras consistent with the outcome
    /// lattice they were sampled from). Projecting the last rail leaves an
    /// empty register.
    pub fn project_rail(&self, rail: usize, bra: &[C64]) -> Result<(f64, ModeRegister)> {
        self.check_rail(rail)?;
        let (before, dim, after) = self.split(rail);
        if bra.len() != dim {
            return Err(Error::DimensionMismatch(bra.len(), dim));
        }
        let mut out = vec![C64::new(0.0, 0.0); before * after];
        for b in 0..before {
            for n in 0..dim {
                let c = bra[n].conj();
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = (b * dim + n) * after;
                let dst = b * after;
                for a in 0..after {
                    out[dst + a] += c * self.amps[src + a];
                }
            }
        }
        let weight: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        if weight < 1e-250 {
            return Err(Error::DegenerateState(
                "projection outcome has zero probability".into(),
            ));
        }
        let scale = weight.sqrt().recip();
        for a in &mut out {
            *a *= scale;
        }
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.remove(rail);
        Ok((weight, ModeRegister { cutoffs, amps: out }))
    }

    /// Collapse a single-rail register into a [`FockVector`].
    pub fn into_single(self) -> Result<FockVector> {
        if self.cutoffs.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "register still has {} rails",
                self.cutoffs.len()
            )));
        }
        FockVector::from_amplitudes(self.amps, self.cutoffs[0])
    }

    /// Inner product ⟨a|b⟩ over the full product space.
    pub fn inner(&self, other: &ModeRegister) -> Result<C64> {
        if self.cutoffs != other.cutoffs {
            return Err(Error::DimensionMismatch(self.amps.len(), other.amps.len()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(x, y)| x.conj() * y)
            .sum())
    }
}
