//! Numerical verification of synthesized protocols and sampled runs.
//!
//! Sampling uses branch weights recomputed from the operators themselves,
//! never the nominal `q_λ`, so a simulation is an independent check on the
//! synthesis. Every trial draws from its own ChaCha stream keyed by
//! `(seed, trial index)`, which makes results independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipartite::{apply_local, BipartiteState};
use crate::error::{Error, Result};
use crate::majorize::{self, Relation};
use crate::numkit::{c, frobenius, identity, op_norm, svd, unitarity_residual, ComplexMatrix};
use crate::synth::{substochastic_for_amps, LoccProtocol};
use crate::SchmidtForm;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    /// `‖Σ M_λ†M_λ + M₀†M₀ − I‖_F`.
    pub completeness_residual: f64,
    /// `‖M_λ·A·U_λᵀ − √q_λ·Q‖_F` per outcome.
    pub per_outcome_residuals: Vec<f64>,
    /// `|Σ q_λ − 1|`.
    pub weight_sum_residual: f64,
    /// `‖N·Q·Vᵀ − √p·B‖_F`, or `‖Q − B‖_F` without a second stage.
    pub stage2_residual: f64,
    /// `‖N†N + N_fail†N_fail − I‖_F`.
    pub stage2_completeness_residual: f64,
    /// Largest `‖(N·M_λ)·A·(V·U_λ)ᵀ − √(q_λ·p)·B‖_F`.
    pub end_to_end_residual: f64,
    /// `|p_total − Σ q_λ·p|`.
    pub p_total_residual: f64,
    /// Largest `‖U†U − I‖_F` over all Bob unitaries.
    pub unitarity_residual: f64,
    /// How far any Kraus operator exceeds operator norm one.
    pub norm_bound_excess: f64,
    /// Balance residual of the stage-2 sub-stochastic matrix.
    pub substochastic_balance_residual: f64,
    /// How far its row and column sums exceed one.
    pub substochastic_excess: f64,
    /// `p·eigv(BB†) ≺_w eigv(QQ†)`.
    pub pure_necessary_ok: bool,
    pub tol: f64,
    pub passed: bool,
}

impl VerificationReport {
    pub fn max_residual(&self) -> f64 {
        let scalars = [
            self.completeness_residual,
            self.weight_sum_residual,
            self.stage2_residual,
            self.stage2_completeness_residual,
            self.end_to_end_residual,
            self.p_total_residual,
            self.unitarity_residual,
            self.norm_bound_excess,
            self.substochastic_balance_residual,
            self.substochastic_excess,
        ];
        scalars.iter().chain(&self.per_outcome_residuals).fold(0.0f64, |a, &b| {
            if b.is_nan() {
                f64::INFINITY
            } else {
                a.max(b)
            }
        })
    }
}

fn check_shape(what: &str, m: &ComplexMatrix, shape: (usize, usize)) -> Result<()> {
    if m.shape() == shape {
        Ok(())
    } else {
        Err(Error::dims(format!(
            "{what} is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            shape.0,
            shape.1
        )))
    }
}

fn check_protocol_shapes(protocol: &LoccProtocol) -> Result<()> {
    let (da, db) = protocol.dims;
    for (i, o) in protocol.stage1.outcomes.iter().enumerate() {
        check_shape(&format!("M[{i}]"), &o.m, (da, da))?;
        check_shape(&format!("U[{i}]"), &o.u, (db, db))?;
    }
    check_shape("M0", &protocol.stage1.m0, (da, da))?;
    check_shape("intermediate state", &protocol.intermediate, (da, db))?;
    if let Some(s2) = &protocol.stage2 {
        check_shape("N", &s2.n, (da, da))?;
        check_shape("V", &s2.v, (db, db))?;
        check_shape("N_fail", &s2.n_fail, (da, da))?;
    }
    Ok(())
}

/// Recompute every protocol identity against the source `a` and target `b`.
pub fn verify(protocol: &LoccProtocol, a: &BipartiteState, b: &BipartiteState, tol: f64) -> Result<VerificationReport> {
    if a.dims() != protocol.dims || b.dims() != protocol.dims {
        return Err(Error::dims(format!(
            "protocol is for {:?}, states are {:?} and {:?}",
            protocol.dims,
            a.dims(),
            b.dims()
        )));
    }
    check_protocol_shapes(protocol)?;
    let (da, db) = protocol.dims;
    let q = &protocol.intermediate;
    let stage1 = &protocol.stage1;

    let mut kraus_sum = stage1.m0.adjoint() * &stage1.m0;
    let mut per_outcome_residuals = Vec::with_capacity(stage1.outcomes.len());
    let mut unitarity = 0.0f64;
    let mut norm_excess = (op_norm(&stage1.m0) - 1.0).max(0.0);
    for o in &stage1.outcomes {
        kraus_sum += o.m.adjoint() * &o.m;
        let (out, _) = apply_local(a.amp(), &o.m, &o.u)?;
        per_outcome_residuals.push(frobenius(&(out - q * c(o.q.max(0.0).sqrt(), 0.0))));
        unitarity = unitarity.max(unitarity_residual(&o.u));
        norm_excess = norm_excess.max(op_norm(&o.m) - 1.0);
    }
    let completeness_residual = frobenius(&(kraus_sum - identity(da)));
    let q_sum: f64 = stage1.outcomes.iter().map(|o| o.q).sum();
    let weight_sum_residual = (q_sum - 1.0).abs();

    let (p, n, v) = match &protocol.stage2 {
        Some(s2) => (s2.p, s2.n.clone(), s2.v.clone()),
        None => (1.0, identity(da), identity(db)),
    };
    let p_total_residual = (protocol.p_total - q_sum * p).abs();

    let mut stage2_completeness_residual = 0.0;
    let mut substochastic_balance_residual = 0.0;
    let mut substochastic_excess = 0.0;
    let stage2_residual = match &protocol.stage2 {
        Some(s2) => {
            let (out, _) = apply_local(q, &s2.n, &s2.v)?;
            unitarity = unitarity.max(unitarity_residual(&s2.v));
            norm_excess = norm_excess.max(op_norm(&s2.n) - 1.0);
            let comp = s2.n.adjoint() * &s2.n + s2.n_fail.adjoint() * &s2.n_fail;
            stage2_completeness_residual = frobenius(&(comp - identity(da)));
            let sub = substochastic_for_amps(&s2.n, q, b.amp(), s2.p)?;
            substochastic_balance_residual = sub.balance_residual;
            substochastic_excess = (sub.max_row_sum.max(sub.max_col_sum) - 1.0).max(0.0);
            frobenius(&(out - b.amp() * c(s2.p.max(0.0).sqrt(), 0.0)))
        }
        None => frobenius(&(q - b.amp())),
    };

    let mut end_to_end_residual = 0.0f64;
    for o in &stage1.outcomes {
        let (out, _) = apply_local(a.amp(), &(&n * &o.m), &(&v * &o.u))?;
        let expected = b.amp() * c((o.q * p).max(0.0).sqrt(), 0.0);
        end_to_end_residual = end_to_end_residual.max(frobenius(&(out - expected)));
    }

    let q_form: SchmidtForm = svd(q)?.into();
    let b_sq: Vec<f64> = b.schmidt().squared().iter().map(|x| p * x).collect();
    let pure_necessary_ok = majorize::compare(&b_sq, &q_form.squared(), Relation::Sub)?;

    let mut report = VerificationReport {
        completeness_residual,
        per_outcome_residuals,
        weight_sum_residual,
        stage2_residual,
        stage2_completeness_residual,
        end_to_end_residual,
        p_total_residual,
        unitarity_residual: unitarity,
        norm_bound_excess: norm_excess.max(0.0),
        substochastic_balance_residual,
        substochastic_excess,
        pure_necessary_ok,
        tol,
        passed: false,
    };
    report.passed = report.pure_necessary_ok && report.max_residual() <= tol;
    Ok(report)
}

/// One sampled execution of a protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Sampled stage-1 outcome `λ`; `None` for the completion branch `M₀`.
    pub outcome: Option<usize>,
    /// The index Alice sends to Bob.
    pub classical_message: Option<usize>,
    /// The unitary Bob applied on receiving the message.
    pub bob_correction: Option<ComplexMatrix>,
    /// `None` when the protocol has no second stage.
    pub stage2_success: Option<bool>,
    /// Normalized state after the run; `None` only for a zero-weight branch.
    pub final_state: Option<BipartiteState>,
    /// Probability of the sampled path.
    pub run_weight: f64,
    /// Sum of all stage-1 branch weights (should be one).
    pub branch_weight_total: f64,
}

impl RunTrace {
    pub fn succeeded(&self) -> bool {
        self.outcome.is_some() && self.stage2_success != Some(false)
    }
}

fn normalized(amp: ComplexMatrix) -> Option<BipartiteState> {
    BipartiteState::normalized(amp).ok()
}

/// Sample one run: Alice measures, sends the outcome, Bob corrects; then the
/// optional pure contraction succeeds or fails.
pub fn run_once<R: Rng + ?Sized>(protocol: &LoccProtocol, a: &BipartiteState, rng: &mut R) -> RunTrace {
    let (_, db) = protocol.dims;
    let id_b = identity(db);
    let outcomes = &protocol.stage1.outcomes;
    let weights: Vec<f64> = outcomes
        .iter()
        .map(|o| frobenius(&(&o.m * a.amp())).powi(2))
        .chain(std::iter::once(frobenius(&(&protocol.stage1.m0 * a.amp())).powi(2)))
        .collect();
    let total: f64 = weights.iter().sum();

    let draw = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            chosen = i;
            break;
        }
    }
    let branch_prob = if total > 0.0 { weights[chosen] / total } else { 0.0 };

    if chosen == outcomes.len() {
        let (amp, _) = apply_local(a.amp(), &protocol.stage1.m0, &id_b).expect("shapes checked");
        return RunTrace {
            outcome: None,
            classical_message: None,
            bob_correction: None,
            stage2_success: protocol.stage2.as_ref().map(|_| false),
            final_state: normalized(amp),
            run_weight: branch_prob,
            branch_weight_total: total,
        };
    }

    let o = &outcomes[chosen];
    let (mid, _) = apply_local(a.amp(), &o.m, &o.u).expect("shapes checked");
    let Some(mid) = normalized(mid) else {
        return RunTrace {
            outcome: Some(chosen),
            classical_message: Some(chosen),
            bob_correction: Some(o.u.clone()),
            stage2_success: None,
            final_state: None,
            run_weight: 0.0,
            branch_weight_total: total,
        };
    };

    let (stage2_success, final_amp, stage_prob) = match &protocol.stage2 {
        None => (None, mid.into_amp(), 1.0),
        Some(s2) => {
            let (succ, w_succ) = apply_local(mid.amp(), &s2.n, &s2.v).expect("shapes checked");
            let w_succ = w_succ.clamp(0.0, 1.0);
            if rng.random::<f64>() < w_succ {
                (Some(true), succ, w_succ)
            } else {
                let (fail, _) = apply_local(mid.amp(), &s2.n_fail, &id_b).expect("shapes checked");
                (Some(false), fail, 1.0 - w_succ)
            }
        }
    };

    RunTrace {
        outcome: Some(chosen),
        classical_message: Some(chosen),
        bob_correction: Some(o.u.clone()),
        stage2_success,
        final_state: normalized(final_amp),
        run_weight: branch_prob * stage_prob,
        branch_weight_total: total,
    }
}

/// RNG for one trial; a pure function of `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    /// Empirical success fraction.
    pub p_hat: f64,
    /// Binomial standard error of `p_hat`.
    pub stderr: f64,
    /// Mean fidelity with the target over successful runs.
    pub mean_success_fidelity: Option<f64>,
}

/// Monte Carlo estimate of the success probability. Trials run in parallel;
/// per-trial results are gathered in index order before reduction, so the
/// output does not depend on the thread count.
pub fn estimate(
    protocol: &LoccProtocol,
    a: &BipartiteState,
    b: &BipartiteState,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if a.dims() != protocol.dims || b.dims() != protocol.dims {
        return Err(Error::dims("states do not match the protocol dimensions"));
    }
    check_protocol_shapes(protocol)?;

    let results: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trace = run_once(protocol, a, &mut trial_rng(seed, t));
            if trace.succeeded() {
                trace.final_state.as_ref().map(|s| s.fidelity(b).unwrap_or(0.0))
            } else {
                None
            }
        })
        .collect();

    let fidelities: Vec<f64> = results.into_iter().flatten().collect();
    let successes = fidelities.len() as u64;
    let p_hat = successes as f64 / trials as f64;
    let mean_success_fidelity = (successes > 0).then(|| fidelities.iter().sum::<f64>() / successes as f64);
    Ok(Estimate {
        trials,
        seed,
        successes,
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        mean_success_fidelity,
    })
}
