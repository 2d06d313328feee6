//! Cat code states, logical superpositions, and Yurke–Stoler states.
//!
//! Cat codewords |μ⟩ for radius α and distance D live on photon numbers
//! n ≡ μD (mod 2D). Yurke–Stoler states are the N-component circular
//! superpositions produced by self-Kerr evolution of a coherent state; their
//! relative phases follow the chirp closed form rather than the code-space
//! phases, so they have no modular photon-number structure until displaced
//! or corrected.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{coherent_state, default_cutoff, DiagonalPhase, FockVector};

/// Cat code parameters: radius, distance (2D coherent components), logical index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatParams {
    pub alpha: f64,
    pub distance: usize,
    pub mu: usize,
}

impl CatParams {
    pub fn new(alpha: f64, distance: usize, mu: usize) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::InvalidParameter("cat radius must be >= 0".into()));
        }
        if distance == 0 {
            return Err(Error::InvalidParameter("code distance must be >= 1".into()));
        }
        if mu > 1 {
            return Err(Error::InvalidParameter("logical index must be 0 or 1".into()));
        }
        if mu == 1 && alpha == 0.0 {
            return Err(Error::DegenerateState(
                "mu=1 cat state at alpha=0 has zero norm".into(),
            ));
        }
        Ok(Self { alpha, distance, mu })
    }
}

/// Yurke–Stoler parameters: radius and component count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YsParams {
    pub alpha: f64,
    pub components: usize,
}

impl YsParams {
    pub fn new(alpha: f64, components: usize) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidParameter("component count must be >= 1".into()));
        }
        Ok(Self { alpha, components })
    }
}

/// Normalization constant N_{μ,α,D} = e^{−|α|²} Σ_m |α|^{2(2m+μ)D}/((2m+μ)D)!.
///
/// The series is summed until an additional term falls below 1e−18 of the
/// running sum.
pub fn cat_normalization(params: &CatParams) -> Result<f64> {
    let CatParams { alpha, distance, mu } = *params;
    let a2 = alpha * alpha;
    let d = distance;
    // first term: |α|^{2 μ D} / (μ D)!, scaled by e^{−|α|²}
    let mut term = (-a2).exp();
    for j in 1..=(mu * d) {
        term *= a2 / j as f64;
    }
    let mut sum = term;
    let mut n = mu * d;
    loop {
        // multiply by |α|^{4D} / ((n+1)(n+2)...(n+2D))
        let mut ratio = 1.0;
        for j in 1..=(2 * d) {
            ratio *= a2 / (n + j) as f64;
        }
        term *= ratio;
        n += 2 * d;
        sum += term;
        if term < 1e-18 * sum || term == 0.0 {
            break;
        }
    }
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::DegenerateState(
            "cat normalization sum vanished".into(),
        ));
    }
    Ok(sum)
}

/// Cat codeword |μ_{α,D}⟩: the coherent amplitude profile restricted to
/// photon numbers n ≡ μD (mod 2D), renormalized.
pub fn cat_state(params: &CatParams, cutoff: usize) -> Result<FockVector> {
    let CatParams { alpha, distance, mu } = *params;
    if mu == 1 && alpha == 0.0 {
        return Err(Error::DegenerateState(
            "mu=1 cat state at alpha=0 has zero norm".into(),
        ));
    }
    let coh = coherent_state(C64::new(alpha, 0.0), cutoff)?;
    let residue = mu * distance;
    let modulus = 2 * distance;
    let amps: Vec<C64> = coh
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, a)| {
            if n % modulus == residue % modulus {
                *a
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    FockVector::from_amplitudes(amps, default_cutoff(alpha))
}

/// Logical qubit state c0|0⟩_K + c1|1⟩_K for the K-component code (D = K/2).
///
/// The coefficients are renormalized; the cat basis is exactly orthogonal, so
/// the result stays normalized.
pub fn logical_state(c0: C64, c1: C64, alpha: f64, components: usize, cutoff: usize) -> Result<FockVector> {
    if components == 0 || components % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "component count {components} must be even"
        )));
    }
    let w = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
    if w < 1e-150 {
        return Err(Error::InvalidParameter("zero logical coefficients".into()));
    }
    let (c0, c1) = (c0 / w, c1 / w);
    let d = components / 2;
    let mut amps = vec![C64::new(0.0, 0.0); cutoff];
    if c0.norm() > 0.0 {
        let zero = cat_state(&CatParams::new(alpha, d, 0)?, cutoff)?;
        for (dst, src) in amps.iter_mut().zip(zero.amplitudes()) {
            *dst += c0 * src;
        }
    }
    if c1.norm() > 0.0 {
        let one = cat_state(&CatParams::new(alpha, d, 1)?, cutoff)?;
        for (dst, src) in amps.iter_mut().zip(one.amplitudes()) {
            *dst += c1 * src;
        }
    }
    FockVector::from_amplitudes(amps, default_cutoff(alpha))
}

/// |+⟩ of the K-component code, i.e. (|0⟩_K + |1⟩_K)/√2.
pub fn cat_plus(alpha: f64, components: usize, cutoff: usize) -> Result<FockVector> {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    logical_state(C64::new(inv, 0.0), C64::new(inv, 0.0), alpha, components, cutoff)
}

/// |−⟩ of the K-component code, i.e. (|0⟩_K − |1⟩_K)/√2.
pub fn cat_minus(alpha: f64, components: usize, cutoff: usize) -> Result<FockVector> {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    logical_state(C64::new(inv, 0.0), C64::new(-inv, 0.0), alpha, components, cutoff)
}

/// Chirp phases ξ_m = (π/4)[N(2m/N − 1)² − 1] for m ∈ 0..N.
///
/// `e^{iξ_m}` is N-periodic in m, so the formula may be evaluated at any
/// integer when a component index wraps.
pub fn ys_phases(components: usize) -> Vec<f64> {
    (0..components).map(|m| ys_phase(m as i64, components)).collect()
}

pub fn ys_phase(m: i64, components: usize) -> f64 {
    let n = components as f64;
    let r = 2.0 * m as f64 / n - 1.0;
    (PI / 4.0) * (n * r * r - 1.0)
}

/// Yurke–Stoler state (1/√norm) Σ_m e^{iξ_m} |−α e^{2πi m/N}⟩.
pub fn ys_state(params: &YsParams, cutoff: usize) -> Result<FockVector> {
    let YsParams { alpha, components } = *params;
    let mut amps = vec![C64::new(0.0, 0.0); cutoff];
    for m in 0..components {
        let phi = 2.0 * PI * m as f64 / components as f64;
        let comp = coherent_state(-C64::from_polar(alpha, phi), cutoff)?;
        let phase = C64::from_polar(1.0, ys_phase(m as i64, components));
        for (dst, src) in amps.iter_mut().zip(comp.amplitudes()) {
            *dst += phase * src;
        }
    }
    FockVector::from_amplitudes(amps, default_cutoff(alpha))
}

/// Kerr evolution of |α⟩ under H = ħωn̂ + ħλn̂² for time t = π/(λN), with the
/// free-evolution frame fixed by scanning global rotations 2πj/(4N) against
/// the closed-form Yurke–Stoler state.
pub fn kerr_evolve_ys(alpha: f64, components: usize, cutoff: usize) -> Result<FockVector> {
    let coh = coherent_state(C64::new(alpha, 0.0), cutoff)?;
    let evolved = coh.apply_diagonal(&DiagonalPhase::kerr_at_ys_time(components));
    let reference = ys_state(&YsParams::new(alpha, components)?, cutoff)?;
    let mut best: Option<(f64, FockVector)> = None;
    for j in 0..(4 * components) {
        let theta = 2.0 * PI * j as f64 / (4 * components) as f64;
        let candidate = evolved.apply_diagonal(&DiagonalPhase::rotation(theta));
        let f = crate::fock::fidelity(&candidate, &reference)?;
        if best.as_ref().map_or(true, |(fb, _)| f > *fb) {
            best = Some((f, candidate));
        }
    }
    Ok(best.expect("frame scan is nonempty").1)
}

/// Displaced Yurke–Stoler state D(σ)|YS⟩, built from the displacement
/// composition law: D(σ)|β⟩ = e^{i Im(σ β*)} |β + σ⟩ per component.
pub fn displaced_ys(alpha: f64, components: usize, sigma: C64, cutoff: usize) -> Result<FockVector> {
    let mut amps = vec![C64::new(0.0, 0.0); cutoff];
    for m in 0..components {
        let phi = 2.0 * PI * m as f64 / components as f64;
        let beta = -C64::from_polar(alpha, phi);
        let comp = coherent_state(beta + sigma, cutoff)?;
        let phase =
            C64::from_polar(1.0, ys_phase(m as i64, components) + (sigma * beta.conj()).im);
        for (dst, src) in amps.iter_mut().zip(comp.amplitudes()) {
            *dst += phase * src;
        }
    }
    FockVector::from_amplitudes(amps, default_cutoff(alpha + sigma.norm()))
}

/// Total population on photon numbers n ≡ residue (mod modulus).
pub fn modular_subspace_probability(state: &FockVector, modulus: usize, residue: usize) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(n, _)| n % modulus == residue % modulus)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fidelity;

    #[test]
    fn normalization_matches_series_oracle() {
        // D=1: N_0 = (1+e^{−2α²})/2, N_1 = (1−e^{−2α²})/2
        let n0 = cat_normalization(&CatParams::new(2.0, 1, 0).unwrap()).unwrap();
        let n1 = cat_normalization(&CatParams::new(2.0, 1, 1).unwrap()).unwrap();
        assert!((n0 - 0.50016773131395126).abs() < 1e-15);
        assert!((n1 - 0.49983226868604874).abs() < 1e-15);
        let v = cat_normalization(&CatParams::new(0.0, 1, 0).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cat_params_rejected() {
        assert!(matches!(
            CatParams::new(0.0, 1, 1),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn cat_vacuum_limit() {
        let v = cat_state(&CatParams::new(0.0, 1, 0).unwrap(), 16).unwrap();
        let vac = FockVector::vacuum(16).unwrap();
        assert!((fidelity(&v, &vac).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_logical_states_orthogonal() {
        let cutoff = default_cutoff(2.0);
        let zero = cat_state(&CatParams::new(2.0, 1, 0).unwrap(), cutoff).unwrap();
        let one = cat_state(&CatParams::new(2.0, 1, 1).unwrap(), cutoff).unwrap();
        assert_eq!(crate::fock::inner(&zero, &one).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn cat_equals_coherent_component_sum() {
        // Σ_k e^{iπk·0}|2 e^{iπk/2}⟩ renormalized, D=2, μ=0
        let cutoff = default_cutoff(2.0);
        let cat = cat_state(&CatParams::new(2.0, 2, 0).unwrap(), cutoff).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); cutoff];
        for k in 0..4 {
            let comp =
                coherent_state(C64::from_polar(2.0, PI * k as f64 / 2.0), cutoff).unwrap();
            for (dst, src) in amps.iter_mut().zip(comp.amplitudes()) {
                *dst += src;
            }
        }
        let oracle = FockVector::from_amplitudes(amps, cutoff).unwrap();
        assert!((fidelity(&cat, &oracle).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_support_is_modular() {
        let cutoff = default_cutoff(3.0);
        for (d, mu) in [(1, 0), (1, 1), (2, 0), (2, 1), (3, 1)] {
            let v = cat_state(&CatParams::new(3.0, d, mu).unwrap(), cutoff).unwrap();
            let p = modular_subspace_probability(&v, 2 * d, mu * d);
            assert!((p - 1.0).abs() < 1e-12, "d={d} mu={mu} p={p}");
        }
    }

    #[test]
    fn logical_basis_element() {
        let cutoff = default_cutoff(3.0);
        let v = logical_state(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 3.0, 4, cutoff).unwrap();
        let target = cat_state(&CatParams::new(3.0, 2, 0).unwrap(), cutoff).unwrap();
        assert!((fidelity(&v, &target).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_of_four_is_two_component_zero() {
        // |+⟩_4 corresponds to |0⟩ of the 2-component code
        let cutoff = default_cutoff(3.0);
        let plus = cat_plus(3.0, 4, cutoff).unwrap();
        let two = cat_state(&CatParams::new(3.0, 1, 0).unwrap(), cutoff).unwrap();
        assert!((fidelity(&plus, &two).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logical_oddness_rejected() {
        let err = logical_state(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 3.0, 3, 40);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
        let err = logical_state(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 0.0, 2, 40);
        assert!(matches!(err, Err(Error::DegenerateState(_))));
    }

    #[test]
    fn ys_phase_values() {
        let p4 = ys_phases(4);
        let expect4 = [3.0 * PI / 4.0, 0.0, -PI / 4.0, 0.0];
        for (a, b) in p4.iter().zip(expect4) {
            assert!((a - b).abs() < 1e-15);
        }
        let p2 = ys_phases(2);
        assert!((p2[0] - p2[1] - PI / 2.0).abs() < 1e-15);
        let p3 = ys_phases(3);
        let expect3 = [PI / 2.0, -PI / 6.0, -PI / 6.0];
        for (a, b) in p3.iter().zip(expect3) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ys_single_component_is_negated_coherent() {
        let cutoff = default_cutoff(2.0);
        let v = ys_state(&YsParams::new(2.0, 1).unwrap(), cutoff).unwrap();
        let target = coherent_state(C64::new(-2.0, 0.0), cutoff).unwrap();
        assert!((fidelity(&v, &target).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ys_two_components_from_kerr_phase() {
        // e^{−iπn²/2}|3⟩ equals the 2-component YS state up to a frame rotation
        let cutoff = default_cutoff(3.0);
        let v = kerr_evolve_ys(3.0, 2, cutoff).unwrap();
        let target = ys_state(&YsParams::new(3.0, 2).unwrap(), cutoff).unwrap();
        assert!(fidelity(&v, &target).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn kerr_single_component_is_pi_rotation() {
        let cutoff = default_cutoff(2.0);
        let v = kerr_evolve_ys(2.0, 1, cutoff).unwrap();
        let target = ys_state(&YsParams::new(2.0, 1).unwrap(), cutoff).unwrap();
        assert!(fidelity(&v, &target).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn kerr_five_components_after_frame_scan() {
        let cutoff = default_cutoff(4.0);
        let v = kerr_evolve_ys(4.0, 5, cutoff).unwrap();
        let target = ys_state(&YsParams::new(4.0, 5).unwrap(), cutoff).unwrap();
        assert!(fidelity(&v, &target).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn ys_has_no_modular_structure() {
        let cutoff = default_cutoff(10.0);
        let v = ys_state(&YsParams::new(10.0, 4).unwrap(), cutoff).unwrap();
        for r in 0..4 {
            assert!(modular_subspace_probability(&v, 4, r) > 1e-3, "residue {r}");
        }
    }

    #[test]
    fn displaced_ys_identity_displacement() {
        let cutoff = default_cutoff(3.0);
        let a = displaced_ys(3.0, 2, C64::new(0.0, 0.0), cutoff).unwrap();
        let b = ys_state(&YsParams::new(3.0, 2).unwrap(), cutoff).unwrap();
        assert!((fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn displaced_ys_matches_displacement_operator() {
        let cutoff = default_cutoff(3.6);
        let sigma = C64::new(0.21, 0.13);
        let via_composition = displaced_ys(3.0, 3, sigma, cutoff).unwrap();
        let via_operator = ys_state(&YsParams::new(3.0, 3).unwrap(), cutoff)
            .unwrap()
            .displace(sigma)
            .unwrap();
        assert!((fidelity(&via_composition, &via_operator).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn modular_probabilities_sum_to_one() {
        let cutoff = default_cutoff(2.5);
        let v = ys_state(&YsParams::new(2.5, 3).unwrap(), cutoff).unwrap();
        let total: f64 = (0..5).map(|r| modular_subspace_probability(&v, 5, r)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_coherent_mass() {
        let v = coherent_state(C64::new(2.0, 0.0), 40).unwrap();
        let p = modular_subspace_probability(&v, 2, 0);
        // e^{−4} cosh 4 = (1+e^{−8})/2
        assert!((p - 0.50016773131395126).abs() < 1e-12);
    }
}
