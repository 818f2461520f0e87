//! Feasibility analysis and protocol synthesis.
//!
//! A request `|A⟩⟩ → |B⟩⟩` with success probability `p` is realized in two
//! stages. Stage 1 is a deterministic Kraus measurement by Alice (outcome sent
//! to Bob, who applies a unitary) taking `A` to an intermediate `Q`. Stage 2,
//! present only when `p < 1`, is a single pure contraction `N ⊗ V` taking `Q`
//! to `B` with probability `p`.

mod kraus;
mod reduction;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bipartite::{BipartiteState, SchmidtForm};
use crate::error::{Error, Result};
use crate::majorize::{self, tail_sums, Relation};
use crate::numkit::{diag_rect, ComplexMatrix};

pub use kraus::{
    deterministic_stage, final_contraction, kraus_operator, uhlmann_decompose, KrausOutcome, Stage1, Stage2,
    UhlmannTerm, BIRKHOFF_TOL,
};
pub use reduction::{
    reduce_bob, substochastic_balance_residual, substochastic_for_amps, substochastic_matrix, BobReduction,
    SubstochasticCheck,
};

/// Requested success probability: a fixed value or the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbabilityRequest {
    Max,
    Value(f64),
}

impl fmt::Display for ProbabilityRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityRequest::Max => f.write_str("max"),
            ProbabilityRequest::Value(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for ProbabilityRequest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(ProbabilityRequest::Max);
        }
        let p: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("probability must be a number or \"max\", got {s:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(ProbabilityRequest::Value(p))
    }
}

impl Serialize for ProbabilityRequest {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ProbabilityRequest::Max => s.serialize_str("max"),
            ProbabilityRequest::Value(p) => s.serialize_f64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for ProbabilityRequest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(ProbabilityRequest::Value(p)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub p_requested: ProbabilityRequest,
    /// The probability the verdicts below refer to (`p_max` for `max`).
    pub p: f64,
    pub p_max: f64,
    /// `AA† ≺ BB†`.
    pub deterministic_ok: bool,
    /// `rank(A) ≥ rank(B)`.
    pub rank_ok: bool,
    pub rank_a: usize,
    pub rank_b: usize,
    /// `AA† ≺^w p·BB†`, necessary and sufficient for LOCC at `p`.
    pub super_maj_ok_at_p: bool,
    /// `p·BB† ≺_w AA†`, necessary for a single pure contraction at `p`.
    pub pure_necessary_ok_at_p: bool,
    /// `p > 0` and the supermajorization holds.
    pub feasible: bool,
    pub schmidt_sq_a: Vec<f64>,
    pub schmidt_sq_b: Vec<f64>,
}

/// Largest achievable success probability from squared Schmidt spectra:
/// `min_k E_k(a)/E_k(b)` over tail sums, clamped to `[0, 1]`. Tails with
/// `E_k(b) = 0` impose nothing. Exactly one when `a ≺ b` holds within the
/// comparison tolerance.
pub fn max_probability_from_spectra(a_sq: &[f64], b_sq: &[f64]) -> f64 {
    if majorize::compare(a_sq, b_sq, Relation::Maj).unwrap_or(false) {
        return 1.0;
    }
    let d = a_sq.len().max(b_sq.len());
    let ea = tail_sums(&majorize::sorted_desc(a_sq, d));
    let eb = tail_sums(&majorize::sorted_desc(b_sq, d));
    ea.iter()
        .zip(&eb)
        .filter(|(_, &b)| b > 0.0)
        .map(|(&a, &b)| a / b)
        .fold(1.0f64, f64::min)
        .clamp(0.0, 1.0)
}

pub fn max_probability(a: &BipartiteState, b: &BipartiteState) -> f64 {
    max_probability_from_spectra(&a.schmidt().squared(), &b.schmidt().squared())
}

fn scaled(v: &[f64], p: f64) -> Vec<f64> {
    v.iter().map(|x| p * x).collect()
}

fn resolve(request: ProbabilityRequest, p_max: f64) -> Result<f64> {
    match request {
        ProbabilityRequest::Max => Ok(p_max),
        ProbabilityRequest::Value(p) if (0.0..=1.0).contains(&p) => Ok(p),
        ProbabilityRequest::Value(p) => Err(Error::invalid(format!("probability {p} outside [0, 1]"))),
    }
}

fn report_from_spectra(
    a_sq: Vec<f64>,
    b_sq: Vec<f64>,
    rank_a: usize,
    rank_b: usize,
    request: ProbabilityRequest,
) -> Result<FeasibilityReport> {
    let p_max = max_probability_from_spectra(&a_sq, &b_sq);
    let p = resolve(request, p_max)?;
    let super_ok = majorize::compare(&a_sq, &scaled(&b_sq, p), Relation::Super)?;
    Ok(FeasibilityReport {
        p_requested: request,
        p,
        p_max,
        deterministic_ok: majorize::compare(&a_sq, &b_sq, Relation::Maj)?,
        rank_ok: rank_a >= rank_b,
        rank_a,
        rank_b,
        super_maj_ok_at_p: super_ok,
        pure_necessary_ok_at_p: majorize::compare(&scaled(&b_sq, p), &a_sq, Relation::Sub)?,
        feasible: super_ok && p > 0.0,
        schmidt_sq_a: a_sq,
        schmidt_sq_b: b_sq,
    })
}

/// All majorization and rank verdicts for `A → B` at the requested
/// probability. Infeasibility is reported, not raised.
pub fn feasibility(a: &BipartiteState, b: &BipartiteState, request: ProbabilityRequest) -> Result<FeasibilityReport> {
    let sa = a.schmidt();
    let sb = b.schmidt();
    report_from_spectra(sa.squared(), sb.squared(), sa.rank(), sb.rank(), request)
}

/// Spectrum of the intermediate state: `v = (p·b₁ + 1 − p, p·b₂, …, p·b_d)`.
///
/// It satisfies `a ≺ v` and `v ≥ p·b` entrywise whenever `a ≺^w p·b`, so the
/// request splits into a deterministic `a → v` and a pure contraction `v → b`.
pub fn intermediate_vector(a: &[f64], b: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1]")));
    }
    let d = a.len().max(b.len());
    let b_sorted = majorize::sorted_desc(b, d);
    if !majorize::compare(a, &scaled(&b_sorted, p), Relation::Super)? {
        return Err(Error::Infeasible {
            reason: format!("p = {p} exceeds the maximal success probability"),
            p_max: Some(max_probability_from_spectra(a, b)),
        });
    }
    let mut v = scaled(&b_sorted, p);
    if let Some(first) = v.first_mut() {
        *first += 1.0 - p;
    }
    Ok(v)
}

/// A synthesized two-stage LOCC protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct LoccProtocol {
    pub dims: (usize, usize),
    pub stage1: Stage1,
    pub stage2: Option<Stage2>,
    /// Amplitudes of the state reached after stage 1.
    pub intermediate: ComplexMatrix,
    /// Overall success probability `Σ_λ q_λ · p`.
    pub p_total: f64,
    pub source_digest: String,
    pub target_digest: String,
}

impl LoccProtocol {
    pub fn outcome_count(&self) -> usize {
        self.stage1.outcomes.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.stage2.is_none()
    }

    pub fn stage2_probability(&self) -> f64 {
        self.stage2.as_ref().map_or(1.0, |s| s.p)
    }
}

/// Build the explicit protocol realizing `A → B` at the requested
/// probability.
///
/// The intermediate `Q` shares `B`'s Schmidt bases, so the stage-2 Bob
/// correction is the identity. When `p = 1` the intermediate is `B` itself
/// and stage 2 is omitted.
pub fn synthesize(a: &BipartiteState, b: &BipartiteState, request: ProbabilityRequest) -> Result<LoccProtocol> {
    if a.dims() != b.dims() {
        return Err(Error::dims(format!("source {:?} and target {:?}", a.dims(), b.dims())));
    }
    let sa = a.schmidt();
    let sb = b.schmidt();
    let report = report_from_spectra(sa.squared(), sb.squared(), sa.rank(), sb.rank(), request)?;
    if report.p <= 0.0 {
        return Err(Error::Infeasible {
            reason: "nothing to synthesize at zero success probability".into(),
            p_max: Some(report.p_max),
        });
    }
    if !report.super_maj_ok_at_p {
        return Err(Error::Infeasible {
            reason: format!(
                "p = {} exceeds the maximal success probability {}",
                report.p, report.p_max
            ),
            p_max: Some(report.p_max),
        });
    }
    // Requests within comparison tolerance above the optimum are served at it.
    let p = report.p.min(report.p_max);

    let (da, db) = a.dims();
    let (q_form, q_amp) = if p >= 1.0 {
        (sb.clone(), b.amp().clone())
    } else {
        let v = intermediate_vector(&report.schmidt_sq_a, &report.schmidt_sq_b, p)?;
        let roots: Vec<f64> = v.iter().map(|x| x.sqrt()).collect();
        let form = SchmidtForm {
            left_basis: sb.left_basis.clone(),
            coeffs: roots.clone(),
            right_basis: sb.right_basis.clone(),
        };
        let amp = &sb.left_basis * diag_rect(&roots, da, db) * &sb.right_basis;
        (form, amp)
    };

    let stage1 = kraus::deterministic_stage_from(&sa, &q_form, &q_amp)?;
    let stage2 = if p >= 1.0 {
        None
    } else {
        Some(kraus::final_contraction_from(&q_form, &sb, p)?)
    };
    let q_total: f64 = stage1.outcomes.iter().map(|o| o.q).sum();

    Ok(LoccProtocol {
        dims: (da, db),
        stage1,
        stage2,
        intermediate: q_amp,
        p_total: q_total * p,
        source_digest: a.digest(),
        target_digest: b.digest(),
    })
}
