//! State families and their closed-form z-axis evolutions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{toeplitz_matrix, FieldOrientation, SpectralDistribution};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, DensityMatrix, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    fn ket(self) -> [Complex64; 4] {
        let s = c(FRAC_1_SQRT_2, 0.0);
        match self {
            Self::PhiPlus => [s, ZERO, ZERO, s],
            Self::PhiMinus => [s, ZERO, ZERO, -s],
            Self::PsiPlus => [ZERO, s, s, ZERO],
            Self::PsiMinus => [ZERO, s, -s, ZERO],
        }
    }
}

pub fn bell_state(kind: BellKind) -> DensityMatrix {
    DensityMatrix::from_ket(&kind.ket()).expect("Bell kets are normalized")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// `(|x⟩ ± |x̄⟩)/√2`, canonicalized so that the leading bit of `x` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GhzSpec {
    n_qubits: usize,
    pattern: u32,
    sign: Sign,
}

impl GhzSpec {
    pub fn new(n_qubits: usize, pattern: u32, sign: Sign) -> Result<Self> {
        if !(2..=16).contains(&n_qubits) {
            return Err(Error::Unsupported(format!("GHZ state on {n_qubits} qubits")));
        }
        let full = (1u32 << n_qubits) - 1;
        if pattern & !full != 0 {
            return Err(Error::InvalidConfig(format!("pattern {pattern:#b} exceeds {n_qubits} qubits")));
        }
        // (|x̄⟩ ± |x⟩) = ±(|x⟩ ± |x̄⟩): the complement names the same state.
        let pattern = if pattern & (1 << (n_qubits - 1)) != 0 { full & !pattern } else { pattern };
        Ok(Self { n_qubits, pattern, sign })
    }

    /// Parses a bitstring such as `"0101"`.
    pub fn from_bits(bits: &str, sign: Sign) -> Result<Self> {
        let pattern = u32::from_str_radix(bits, 2)
            .map_err(|_| Error::InvalidConfig(format!("invalid GHZ pattern {bits:?}")))?;
        Self::new(bits.len(), pattern, sign)
    }

    /// The standard `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn standard(n_qubits: usize) -> Self {
        Self::new(n_qubits, 0, Sign::Plus).expect("valid register size")
    }

    /// `|GHZ₂⟩ = (|0001⟩ + |1110⟩)/√2`.
    pub fn ghz2() -> Self {
        Self::indexed(4, 2).expect("index in range")
    }

    /// `|GHZ₆⟩ = (|0101⟩ + |1010⟩)/√2`.
    pub fn ghz6() -> Self {
        Self::indexed(4, 6).expect("index in range")
    }

    /// 1-based enumeration of the `2^N` GHZ-type states: `+` states first by
    /// pattern value, then `−` states, so that `GHZ_{p+1} = (|p⟩ + |p̄⟩)/√2`.
    pub fn indexed(n_qubits: usize, index: usize) -> Result<Self> {
        let half = 1usize << (n_qubits - 1);
        if index == 0 || index > 2 * half {
            return Err(Error::InvalidConfig(format!("GHZ index {index} out of range")));
        }
        let k = index - 1;
        let sign = if k < half { Sign::Plus } else { Sign::Minus };
        Self::new(n_qubits, (k % half) as u32, sign)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn pattern(&self) -> u32 {
        self.pattern
    }

    pub fn complement(&self) -> u32 {
        ((1u32 << self.n_qubits) - 1) & !self.pattern
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Hamming-weight gap between the two branches; the z-axis channel
    /// damps the coherence by `φ(gap · t)`.
    pub fn weight_gap(&self) -> u32 {
        (self.n_qubits as u32 - self.pattern.count_ones()).abs_diff(self.pattern.count_ones())
    }

    /// Both branches carry the same weight, so the z-axis channel leaves the state fixed.
    pub fn is_decoherence_free(&self) -> bool {
        self.weight_gap() == 0
    }

    pub fn ket(&self) -> Vec<Complex64> {
        let mut v = vec![ZERO; 1 << self.n_qubits];
        v[self.pattern as usize] = c(FRAC_1_SQRT_2, 0.0);
        v[self.complement() as usize] = c(self.sign.value() * FRAC_1_SQRT_2, 0.0);
        v
    }
}

/// All `2^N` GHZ-type states in [`GhzSpec::indexed`] order.
pub fn ghz_enumeration(n_qubits: usize) -> Vec<GhzSpec> {
    (1..=(1usize << n_qubits))
        .map(|i| GhzSpec::indexed(n_qubits, i).expect("index in range"))
        .collect()
}

pub fn ghz_state(spec: &GhzSpec) -> DensityMatrix {
    DensityMatrix::from_ket(&spec.ket()).expect("GHZ kets are normalized")
}

/// `|W⟩ = (|001⟩ + |010⟩ + |100⟩)/√3`.
pub fn w_state(n_qubits: usize) -> Result<DensityMatrix> {
    if n_qubits != 3 {
        return Err(Error::Unsupported(format!("W state on {n_qubits} qubits")));
    }
    let a = c(1.0 / 3f64.sqrt(), 0.0);
    let mut ket = vec![ZERO; 8];
    for idx in [1, 2, 4] {
        ket[idx] = a;
    }
    DensityMatrix::from_ket(&ket)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilyParams {
    /// `a|Φ⁺⟩⟨Φ⁺| + (1−a) I₄/4`.
    RhoA { a: f64 },
    /// `b|Ψ±⟩⟨Ψ±| + (1−b) ρ_a`.
    RhoAb {
        a: f64,
        b: f64,
        #[serde(default = "default_bell_sign")]
        bell_sign: Sign,
    },
    /// `(1−η)|GHZ⟩⟨GHZ| + η|W⟩⟨W|` on three qubits.
    RhoEta { eta: f64 },
    /// `α|GHZ₂⟩⟨GHZ₂| + (1−α) I₁₆/16`.
    RhoAlpha { alpha: f64 },
    /// `β|GHZ₆⟩⟨GHZ₆| + (1−β) ρ_α`.
    RhoAlphaBeta { alpha: f64, beta: f64 },
}

fn default_bell_sign() -> Sign {
    Sign::Plus
}

impl FamilyParams {
    pub fn rho_ab(a: f64, b: f64) -> Self {
        Self::RhoAb {
            a,
            b,
            bell_sign: Sign::Plus,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Self::RhoA { .. } | Self::RhoAb { .. } => 2,
            Self::RhoEta { .. } => 3,
            Self::RhoAlpha { .. } | Self::RhoAlphaBeta { .. } => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RhoA { .. } => "rho_a",
            Self::RhoAb { .. } => "rho_ab",
            Self::RhoEta { .. } => "rho_eta",
            Self::RhoAlpha { .. } => "rho_alpha",
            Self::RhoAlphaBeta { .. } => "rho_alpha_beta",
        }
    }

    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Self::RhoA { a } => vec![("a", a)],
            Self::RhoAb { a, b, .. } => vec![("a", a), ("b", b)],
            Self::RhoEta { eta } => vec![("eta", eta)],
            Self::RhoAlpha { alpha } => vec![("alpha", alpha)],
            Self::RhoAlphaBeta { alpha, beta } => vec![("alpha", alpha), ("beta", beta)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.parameters() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParamOutOfRange { name, value });
            }
        }
        Ok(())
    }

    /// Builds a family from its name and a `name → value` map (CLI and JSON configs).
    pub fn from_name(family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("family {family} needs parameter {key}")))
        };
        let sign = match params.get("bell_sign").copied() {
            None => Sign::Plus,
            Some(s) if s >= 0.0 => Sign::Plus,
            Some(_) => Sign::Minus,
        };
        let p = match family {
            "rho_a" => Self::RhoA { a: get("a")? },
            "rho_ab" => Self::RhoAb {
                a: get("a")?,
                b: get("b")?,
                bell_sign: sign,
            },
            "rho_eta" => Self::RhoEta { eta: get("eta")? },
            "rho_alpha" => Self::RhoAlpha { alpha: get("alpha")? },
            "rho_alpha_beta" => Self::RhoAlphaBeta {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            other => return Err(Error::InvalidConfig(format!("unknown family {other:?}"))),
        };
        p.validate()?;
        Ok(p)
    }
}

/// A GHZ-type pure state whose coherence has been multiplied by `factor`.
fn dephased_ghz(spec: &GhzSpec, factor: Complex64) -> CMatrix {
    let dim = 1usize << spec.n_qubits();
    let (x, xb) = (spec.pattern() as usize, spec.complement() as usize);
    let coherence = c(0.5 * spec.sign.value(), 0.0);
    let mut m = CMatrix::zeros(dim, dim);
    m[(x, x)] = c(0.5, 0.0);
    m[(xb, xb)] = c(0.5, 0.0);
    // Branch x has weight w(x); (x, x̄) is damped by φ((w(x) − w(x̄)) t).
    m[(x, xb)] = coherence * factor;
    m[(xb, x)] = coherence * factor.conj();
    m
}

fn mixed(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim) / c(dim as f64, 0.0)
}

fn family_matrix(params: &FamilyParams, phi: &dyn Fn(f64) -> Result<Complex64>) -> Result<CMatrix> {
    params.validate()?;
    let r = |x: f64| c(x, 0.0);
    Ok(match *params {
        FamilyParams::RhoA { a } => {
            let phi_plus = dephased_ghz(&GhzSpec::standard(2), phi(-2.0)?);
            phi_plus * r(a) + mixed(4) * r(1.0 - a)
        }
        FamilyParams::RhoAb { a, b, bell_sign } => {
            let psi = dephased_ghz(&GhzSpec::new(2, 0b01, bell_sign)?, ONE);
            let rho_a = family_matrix(&FamilyParams::RhoA { a }, phi)?;
            psi * r(b) + rho_a * r(1.0 - b)
        }
        FamilyParams::RhoEta { eta } => {
            let ghz = dephased_ghz(&GhzSpec::standard(3), phi(-3.0)?);
            ghz * r(1.0 - eta) + w_state(3)?.into_matrix() * r(eta)
        }
        FamilyParams::RhoAlpha { alpha } => {
            let g2 = GhzSpec::ghz2();
            let gap = g2.pattern().count_ones() as f64 - g2.complement().count_ones() as f64;
            dephased_ghz(&g2, phi(gap)?) * r(alpha) + mixed(16) * r(1.0 - alpha)
        }
        FamilyParams::RhoAlphaBeta { alpha, beta } => {
            let g6 = dephased_ghz(&GhzSpec::ghz6(), ONE);
            let rho_alpha = family_matrix(&FamilyParams::RhoAlpha { alpha }, phi)?;
            g6 * r(beta) + rho_alpha * r(1.0 - beta)
        }
    })
}

/// The initial state of a family.
pub fn build_family(params: &FamilyParams) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix_unchecked(family_matrix(params, &|_| Ok(ONE))?)
}

/// Closed-form state at time `t` under the z-axis field with the standard Cauchy spectrum.
pub fn evolved_family(params: &FamilyParams, t: f64) -> Result<DensityMatrix> {
    evolved_family_with(params, t, &FieldOrientation::z_axis(), &SpectralDistribution::StandardCauchy)
}

/// Closed-form state at time `t` for a z-axis field with any spectrum.
pub fn evolved_family_with(
    params: &FamilyParams,
    t: f64,
    orientation: &FieldOrientation,
    spectrum: &SpectralDistribution,
) -> Result<DensityMatrix> {
    if !orientation.is_z_axis() {
        return Err(Error::NotZAxis);
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    toeplitz_matrix(spectrum, params.n_qubits(), t)?;
    let phi = |gap: f64| spectrum.characteristic_function(gap * t);
    DensityMatrix::from_matrix_unchecked(family_matrix(params, &phi)?)
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange { name, value })
    }
}

/// Eigenvalues of `ρ_{a,b}(t)^{T_A}` in the closed form order
/// `[1+a−(3+a)b, 1+a+b−ab, 1+b−a(1−b)(1−2γ²), 1+b−a(1−b)(1+2γ²)] / 4` with `γ = e^{−t}`.
pub fn closed_pt_spectrum_rho_ab(a: f64, b: f64, t: f64) -> Result<[f64; 4]> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    let g2 = (-2.0 * t).exp();
    Ok([
        (1.0 + a - (3.0 + a) * b) / 4.0,
        (1.0 + a + b - a * b) / 4.0,
        (1.0 + b - a * (1.0 - b) * (1.0 - 2.0 * g2)) / 4.0,
        (1.0 + b - a * (1.0 - b) * (1.0 + 2.0 * g2)) / 4.0,
    ])
}

/// Spectrum of `ρ_{α,β}(t)`: `(1−α)(1−β)/16` thirteen times, then
/// `(1−α+15β+αβ)/16` and `(1+7α∓8αe^{−2t})(1−β)/16`.
pub fn closed_spectrum_rho_alpha_beta(alpha: f64, beta: f64, t: f64) -> Result<[f64; 16]> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    let g2 = (-2.0 * t).exp();
    let mut out = [(1.0 - alpha) * (1.0 - beta) / 16.0; 16];
    out[13] = (1.0 - alpha + 15.0 * beta + alpha * beta) / 16.0;
    out[14] = (1.0 + 7.0 * alpha - 8.0 * alpha * g2) * (1.0 - beta) / 16.0;
    out[15] = (1.0 + 7.0 * alpha + 8.0 * alpha * g2) * (1.0 - beta) / 16.0;
    Ok(out)
}

/// JSON state configuration: a named family or an explicit mixture of kets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateConfig {
    Family {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, serde_json::Value>,
    },
    Mixture { mixture: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    /// Amplitudes as `[re, im]` pairs.
    pub ket: Vec<[f64; 2]>,
}

/// What a state configuration resolves to.
#[derive(Debug, Clone)]
pub enum ResolvedState {
    Family(FamilyParams),
    Explicit(DensityMatrix),
}

impl ResolvedState {
    pub fn initial(&self) -> Result<DensityMatrix> {
        match self {
            Self::Family(p) => build_family(p),
            Self::Explicit(rho) => Ok(rho.clone()),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Family(p) => p.n_qubits(),
            Self::Explicit(rho) => rho.n_qubits(),
        }
    }
}

impl StateConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("state JSON: {e}")))
    }

    pub fn resolve(&self) -> Result<ResolvedState> {
        match self {
            Self::Family { family, params } => resolve_named(family, params),
            Self::Mixture { mixture } => {
                if mixture.is_empty() {
                    return Err(Error::InvalidConfig("empty mixture".into()));
                }
                let total: f64 = mixture.iter().map(|m| m.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!("mixture weights sum to {total}")));
                }
                let states = mixture
                    .iter()
                    .map(|m| {
                        let ket: Vec<Complex64> = m.ket.iter().map(|&[re, im]| c(re, im)).collect();
                        DensityMatrix::from_ket(&ket)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let parts: Vec<(f64, &DensityMatrix)> =
                    mixture.iter().map(|m| m.weight).zip(states.iter()).collect();
                let rho = DensityMatrix::mixture(&parts)?;
                rho.validate()?;
                Ok(ResolvedState::Explicit(rho))
            }
        }
    }
}

fn resolve_named(family: &str, params: &BTreeMap<String, serde_json::Value>) -> Result<ResolvedState> {
    let text = |key: &str| params.get(key).and_then(|v| v.as_str().map(str::to_owned));
    let sign = |key: &str| match text(key).as_deref() {
        None | Some("+") | Some("plus") => Ok(Sign::Plus),
        Some("-") | Some("minus") => Ok(Sign::Minus),
        Some(other) => Err(Error::InvalidConfig(format!("invalid sign {other:?}"))),
    };
    match family {
        "ghz" => {
            let spec = if let Some(bits) = text("pattern") {
                GhzSpec::from_bits(&bits, sign("sign")?)?
            } else {
                let n = params
                    .get("n_qubits")
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| Error::InvalidConfig("ghz needs pattern or n_qubits".into()))?;
                GhzSpec::new(n as usize, 0, sign("sign")?)?
            };
            Ok(ResolvedState::Explicit(ghz_state(&spec)))
        }
        "w" => Ok(ResolvedState::Explicit(w_state(3)?)),
        "bell" => {
            let kind = match text("kind").as_deref() {
                Some("phi+") => BellKind::PhiPlus,
                Some("phi-") => BellKind::PhiMinus,
                Some("psi+") => BellKind::PsiPlus,
                Some("psi-") => BellKind::PsiMinus,
                other => return Err(Error::InvalidConfig(format!("invalid Bell kind {other:?}"))),
            };
            Ok(ResolvedState::Explicit(bell_state(kind)))
        }
        "maximally_mixed" => {
            let n = params
                .get("n_qubits")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::InvalidConfig("maximally_mixed needs n_qubits".into()))?;
            Ok(ResolvedState::Explicit(DensityMatrix::maximally_mixed(n as usize)))
        }
        _ => {
            let mut numeric = BTreeMap::new();
            for (k, v) in params {
                if k == "bell_sign" {
                    let s = match v.as_str() {
                        Some("-") | Some("minus") => -1.0,
                        _ => v.as_f64().unwrap_or(1.0),
                    };
                    numeric.insert(k.clone(), s);
                    continue;
                }
                let x = v
                    .as_f64()
                    .ok_or_else(|| Error::InvalidConfig(format!("parameter {k} must be a number")))?;
                numeric.insert(k.clone(), x);
            }
            Ok(ResolvedState::Family(FamilyParams::from_name(family, &numeric)?))
        }
    }
}
