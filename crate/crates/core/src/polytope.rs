//! Local-polytope geometry: membership, the violated CHSH facet, the
//! one-PR-plus-eight-LD decomposition and the strength of non-locality.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::bell::{
    chsh_value, ld_box, ld_enumerate, no_signalling_check, pr_box, special_boxes, Behaviour, LdLabel, PrLabel,
};
use crate::error::{domain, Error, Result};
use crate::lp::{LpOutcome, LpProblem};

/// Margin above the local bound used to call a CHSH value violating.
pub const VIOLATION_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-9;

/// Affine functional `coefficients . v + offset`; nonnegative on every LD box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatingFunctional {
    pub coefficients: Vec<f64>,
    pub offset: f64,
}

impl SeparatingFunctional {
    pub fn evaluate(&self, b: &Behaviour) -> f64 {
        self.coefficients.iter().zip(b.probs()).map(|(c, p)| c * p).sum::<f64>() + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    /// Weights over [`ld_enumerate`] in its order.
    Local { weights: Vec<f64> },
    Nonlocal { witness: SeparatingFunctional },
}

impl Membership {
    pub fn is_local(&self) -> bool {
        matches!(self, Membership::Local { .. })
    }
}

/// Decides whether `b` is a convex combination of deterministic behaviours.
pub fn local_membership(b: &Behaviour) -> Result<Membership> {
    let sc = b.scenario();
    let lds = ld_enumerate(sc)?;
    let rows = sc.len() + 1;
    let cols = lds.len();
    let mut a = vec![0.0; rows * cols];
    for (k, ld) in lds.iter().enumerate() {
        for (i, p) in ld.probs().iter().enumerate() {
            a[i * cols + k] = *p;
        }
        a[sc.len() * cols + k] = 1.0;
    }
    let mut rhs = b.probs().to_vec();
    rhs.push(1.0);
    match LpProblem::new(a, rhs, cols)?.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(Membership::Local { weights: x }),
        LpOutcome::Infeasible { witness } => {
            let offset = witness[sc.len()];
            let coefficients = witness[..sc.len()].to_vec();
            Ok(Membership::Nonlocal { witness: SeparatingFunctional { coefficients, offset } })
        }
        LpOutcome::Unbounded => Err(Error::Numerical("feasibility problem reported unbounded".into())),
    }
}

/// The CHSH functional exceeding the local bound, if any.
pub fn violated_inequality(b: &Behaviour) -> Option<PrLabel> {
    if !b.scenario().is_chsh() {
        return None;
    }
    PrLabel::all()
        .map(|l| (l, chsh_value(b, l)))
        .filter(|(_, v)| *v > 2.0 + VIOLATION_TOL)
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(l, _)| l)
}

/// Weights of one PR box and up to eight LD boxes reproducing a behaviour.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackDecomposition {
    pub pr: Option<PrLabel>,
    pub lambda_pr: f64,
    pub ld_weights: Vec<(LdLabel, f64)>,
    pub entropy_bits: f64,
    pub reconstruction_error: f64,
}

impl AttackDecomposition {
    /// `(label, weight, behaviour)` triples; labels are `PR:abc` / `LD:abcd`.
    pub fn components(&self) -> Vec<(String, f64, Behaviour)> {
        let mut out = Vec::with_capacity(9);
        if let Some(l) = self.pr {
            out.push((format!("PR:{l}"), self.lambda_pr, pr_box(l)));
        }
        for (l, w) in &self.ld_weights {
            out.push((format!("LD:{l}"), *w, ld_box(*l)));
        }
        out
    }

    pub fn reconstruct(&self) -> Result<Behaviour> {
        let comps = self.components();
        let parts: Vec<(f64, &Behaviour)> = comps.iter().map(|(_, w, b)| (*w, b)).collect();
        Behaviour::mixture(&parts)
    }

    pub fn to_report(&self) -> DecompositionReport {
        DecompositionReport {
            pr: self.pr.map(|l| l.bits()),
            lambda_pr: self.lambda_pr,
            ld_weights: self.ld_weights.iter().map(|(l, w)| (l.to_string(), *w)).collect(),
            entropy_bits: self.entropy_bits,
            reconstruction_error: self.reconstruction_error,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub pr: Option<[u8; 3]>,
    pub lambda_pr: f64,
    pub ld_weights: BTreeMap<String, f64>,
    pub entropy_bits: f64,
    pub reconstruction_error: f64,
}

/// Barycentric coordinates of a CHSH violator in its non-local simplex.
///
/// Behaviours exactly on a facet (`B = 2`) are decomposed over the eight
/// saturating LD boxes with no PR weight.
pub fn decompose_nonlocal(b: &Behaviour) -> Result<AttackDecomposition> {
    b.scenario().require_chsh()?;
    let ns = no_signalling_check(b);
    if !ns.no_signalling {
        return Err(domain(format!("behaviour is signalling (violation {:e})", ns.max_violation)));
    }
    let (label, with_pr) = match violated_inequality(b) {
        Some(l) => (l, true),
        None => {
            let (l, v) = PrLabel::all()
                .map(|l| (l, chsh_value(b, l)))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("eight functionals");
            if v < 2.0 - VIOLATION_TOL {
                return Err(domain("behaviour is local; use local_membership for its LD weights"));
            }
            (l, false)
        }
    };
    let lds = label.saturating_lds();
    let mut vertices: Vec<Behaviour> = Vec::with_capacity(9);
    if with_pr {
        vertices.push(pr_box(label));
    }
    vertices.extend(lds.iter().map(|l| ld_box(*l)));

    let theta = barycentric(&vertices, b)?;
    let (lambda_pr, ld_part) = if with_pr { (theta[0], &theta[1..]) } else { (0.0, &theta[..]) };
    let ld_weights: Vec<(LdLabel, f64)> = lds.iter().copied().zip(ld_part.iter().copied()).collect();
    let mut dec = AttackDecomposition {
        pr: with_pr.then_some(label),
        lambda_pr,
        ld_weights,
        entropy_bits: lambda_pr,
        reconstruction_error: 0.0,
    };
    dec.reconstruction_error = reconstruction_error(&vertices, &theta, b);
    Ok(dec)
}

fn reconstruction_error(vertices: &[Behaviour], theta: &[f64], b: &Behaviour) -> f64 {
    (0..b.probs().len())
        .map(|i| {
            let v: f64 = vertices.iter().zip(theta).map(|(v, t)| t * v.probs()[i]).sum();
            (v - b.probs()[i]).abs()
        })
        .fold(0.0, f64::max)
}

fn barycentric(vertices: &[Behaviour], b: &Behaviour) -> Result<Vec<f64>> {
    let d = b.probs().len();
    let k = vertices.len();
    let m = DMatrix::from_fn(d + 1, k, |i, j| if i < d { vertices[j].probs()[i] } else { 1.0 });
    let mut rhs = DVector::from_column_slice(b.probs());
    rhs = rhs.push(1.0);
    let theta = m
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("barycentric solve failed: {e}")))?;
    let residual = (&m * &theta - &rhs).amax();
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("behaviour is not in the simplex (residual {residual:e})")));
    }
    if let Some(w) = theta.iter().find(|w| **w < -RESIDUAL_TOL) {
        return Err(Error::Numerical(format!("negative barycentric weight {w:e}")));
    }
    Ok(theta.iter().map(|w| w.max(0.0)).collect())
}

/// Half the settings-averaged L1 distance from `b` to the local polytope.
pub fn nonlocality_strength(b: &Behaviour) -> Result<f64> {
    let sc = b.scenario();
    let lds = ld_enumerate(sc)?;
    let d = sc.len();
    let nl = lds.len();
    // Columns: LD weights, positive slack, negative slack.
    let cols = nl + 2 * d;
    let rows = d + 1;
    let mut a = vec![0.0; rows * cols];
    for (k, ld) in lds.iter().enumerate() {
        for (i, p) in ld.probs().iter().enumerate() {
            a[i * cols + k] = *p;
        }
        a[d * cols + k] = 1.0;
    }
    for i in 0..d {
        a[i * cols + nl + i] = 1.0;
        a[i * cols + nl + d + i] = -1.0;
    }
    let mut rhs = b.probs().to_vec();
    rhs.push(1.0);
    let mut cost = vec![0.0; cols];
    cost[nl..].iter_mut().for_each(|c| *c = 1.0);
    match LpProblem::new(a, rhs, cols)?.with_objective(cost)?.solve()? {
        LpOutcome::Optimal { objective, .. } => Ok(0.5 * objective.max(0.0) / sc.settings_count() as f64),
        other => Err(Error::Numerical(format!("distance LP returned {other:?}"))),
    }
}

/// Verdict of one counterexample-suite case.
#[derive(Debug, Clone, Serialize)]
pub struct CaseVerdict {
    pub name: String,
    pub scenario: String,
    pub expected_local: bool,
    pub local: bool,
}

impl CaseVerdict {
    pub fn matches(&self) -> bool {
        self.expected_local == self.local
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub cases: Vec<CaseVerdict>,
    pub all_match: bool,
}

/// Equal mixtures of extremal no-signalling boxes: all 28 PR pairs in
/// `(2,2,2)` are local, while the `(2,2,3)`, sixteen `(2,3,2)` and `(3,2,2)`
/// mixtures are not.
pub fn counterexample_suite() -> Result<CounterexampleReport> {
    let mut inputs: Vec<(String, bool, Behaviour)> = Vec::new();
    let prs: Vec<PrLabel> = PrLabel::all().collect();
    for i in 0..prs.len() {
        for j in i + 1..prs.len() {
            let m = pr_box(prs[i]).mix(&pr_box(prs[j]), 0.5)?;
            inputs.push((format!("PR:{}+PR:{}", prs[i], prs[j]), true, m));
        }
    }
    let boxes = special_boxes();
    inputs.push(("nl-223 pair".into(), false, boxes.nl_box_223.mix(&boxes.nl_box_223_relabelled, 0.5)?));
    for (r, m) in boxes.nl_boxes_232.into_iter().enumerate() {
        inputs.push((format!("nl-232 resolution {r:04b}"), false, m));
    }
    inputs.push(("ghz-322 mixture".into(), false, boxes.ghz_mixture_322));

    let cases = inputs
        .par_iter()
        .map(|(name, expected_local, b)| {
            Ok(CaseVerdict {
                name: name.clone(),
                scenario: b.scenario().to_string(),
                expected_local: *expected_local,
                local: local_membership(b)?.is_local(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_match = cases.iter().all(CaseVerdict::matches);
    Ok(CounterexampleReport { cases, all_match })
}
