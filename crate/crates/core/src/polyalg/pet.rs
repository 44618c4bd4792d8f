//! The van der Corput induction engine: repeatedly pick a base polynomial,
//! apply the (q, h)-operation, and stop once every active polynomial is
//! constant in m. The step count t determines the Gowers norm order
//! d = t + 1 and the ambient group multiplier 2d + 1.
//!
//! Three structural claims are checked after every step rather than
//! assumed; a failure aborts the run with a serialized trace, since it
//! would contradict the supporting theory.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{
    family_type, pet_var_name, type_less, vdc_operation, w_rescale, Poly, PolyFamily, TypeVector,
};
use crate::error::{Error, Result};
use crate::sieve_measure::Params;

const MAX_STEPS: u32 = 10_000;
const MAX_FAMILY: usize = 20_000;
const MAX_TOTAL_TERMS: usize = 2_000_000;
const MAX_COEFF_BITS: u64 = 4_096;

/// Results of the three per-step structural checks.
///
/// c1: no two polynomials in active + retired differ by a constant (with
/// everything vanishing at the all-zero point this means pairwise
/// distinct). c2: no retired polynomial differs from an active
/// non-constant by something constant in m. c3: retired polynomials are
/// never constant in m.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimChecks {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

impl ClaimChecks {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

pub fn check_claims(family: &PolyFamily) -> ClaimChecks {
    let mut seen: HashSet<&Poly> = HashSet::new();
    let mut c1 = true;
    for p in family.active().iter().chain(family.retired().iter()) {
        if !p.vanishes_at_zero() || !seen.insert(p) {
            c1 = false;
            break;
        }
    }
    let active_parts: HashSet<Poly> = family
        .non_constants()
        .iter()
        .map(|p| p.part_involving(0))
        .collect();
    let c2 = family
        .retired()
        .iter()
        .all(|r| !active_parts.contains(&r.part_involving(0)));
    let c3 = family.retired().iter().all(|r| !r.is_constant_in(0));
    ClaimChecks { c1, c2, c3 }
}

/// First variable index safe to use as a fresh shift variable.
fn fresh_var(family: &PolyFamily) -> usize {
    family
        .active()
        .iter()
        .chain(family.retired().iter())
        .map(|p| p.num_vars())
        .max()
        .unwrap_or(0)
        .max(family.step_index() as usize + 1)
}

struct StepOutcome {
    q: Poly,
    new_var: usize,
    next: PolyFamily,
    before: TypeVector,
    after: TypeVector,
}

/// Finds the base for the next van der Corput step and applies it:
/// candidates are scanned by increasing degree in m (ties broken by the
/// canonical term-list order) and the first one whose step strictly
/// decreases the type, with the shift variable kept symbolic, wins.
/// Finding none would contradict the type-decrease lemma, so that aborts
/// as an internal error.
fn advance(family: &PolyFamily) -> Result<StepOutcome> {
    let before = family_type(family);
    if before.is_zero() {
        return Err(Error::InvalidArgument(
            "family already has type zero; no van der Corput step applies".into(),
        ));
    }
    let mut candidates: Vec<&Poly> = family.non_constants();
    candidates.sort_by(|a, b| a.degree_in(0).cmp(&b.degree_in(0)).then_with(|| a.cmp(b)));
    let fresh = fresh_var(family);
    for q in candidates {
        let next = vdc_operation(family, q, fresh)?;
        let after = family_type(&next);
        if type_less(&after, &before) {
            return Ok(StepOutcome {
                q: q.clone(),
                new_var: fresh,
                next,
                before,
                after,
            });
        }
    }
    let dump: Vec<String> = family.active().iter().map(|p| p.render_pet()).collect();
    Err(Error::Internal(format!(
        "no base polynomial decreases the type {:?} of the family [{}]",
        before.weights(),
        dump.join(", ")
    )))
}

/// The base polynomial the next van der Corput step will use.
pub fn choose_q(family: &PolyFamily) -> Result<Poly> {
    advance(family).map(|o| o.q)
}

#[derive(Debug, Clone, Serialize)]
pub struct PetStep {
    pub s: u32,
    pub q: String,
    pub new_var: String,
    pub active: Vec<String>,
    pub constants: Vec<String>,
    pub retired: Vec<String>,
    pub type_before: TypeVector,
    pub type_after: TypeVector,
    pub claims: ClaimChecks,
}

#[derive(Debug, Clone, Serialize)]
pub struct PetDiagnostics {
    /// Largest coefficient magnitude seen anywhere, in bits.
    pub max_coeff_bits: u64,
    /// Largest total degree seen (never exceeds the input degree).
    pub max_total_degree: u32,
    /// Largest active + retired family size along the run.
    pub peak_family_size: usize,
    /// Realized growth constant: largest coefficient magnitude along the
    /// run divided by the largest coefficient of the rescaled inputs.
    pub coeff_growth_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PetTrace {
    pub input: Vec<String>,
    #[serde(rename = "W")]
    pub w: u64,
    pub steps: Vec<PetStep>,
    /// Termination step: the first s with every active polynomial constant
    /// in m.
    pub t: u32,
    /// Gowers norm order t + 1.
    pub d: u32,
    /// The ambient cyclic group is Z over (2d+1) times the coarse scale.
    pub group_multiplier: u32,
    pub diagnostics: PetDiagnostics,
}

impl PetTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Runs the full induction for a parsed system P_1..P_k, starting from the
/// rescaled family {P_i(Wm)/W}.
pub fn pet_run(system: &[Poly], params: &Params) -> Result<PetTrace> {
    if system.is_empty() {
        return Err(Error::InvalidArgument("empty polynomial system".into()));
    }
    let mut seen: HashSet<&Poly> = HashSet::new();
    for p in system {
        if !p.is_univariate_in(0) {
            return Err(Error::InvalidArgument(format!(
                "input {} must be a polynomial in m only",
                p.render_pet()
            )));
        }
        if !p.vanishes_at_zero() {
            return Err(Error::InvalidArgument(format!(
                "input {} does not vanish at 0",
                p.render_pet()
            )));
        }
        if p.degree_in(0) > params.d0 {
            return Err(Error::InvalidArgument(format!(
                "input {} has degree {} in m, above the configured bound d0 = {}",
                p.render_pet(),
                p.degree_in(0),
                params.d0
            )));
        }
        if !seen.insert(p) {
            return Err(Error::InvalidArgument(format!(
                "duplicate input polynomial {}",
                p.render_pet()
            )));
        }
    }
    let rescaled: Vec<Poly> = system
        .iter()
        .map(|p| w_rescale(p, params.w_modulus))
        .collect::<Result<_>>()?;
    let base_coeff = {
        let m = rescaled
            .iter()
            .map(|p| p.max_coeff_abs())
            .max()
            .unwrap_or_else(BigInt::zero);
        if m.is_zero() {
            BigInt::one()
        } else {
            m
        }
    };

    let mut family = PolyFamily::new(rescaled)?;
    let mut steps: Vec<PetStep> = Vec::new();
    let mut peak = family.size();
    let mut max_bits = family.max_coeff_bits();
    let mut max_deg = family.max_total_degree();
    let mut max_coeff = family
        .active()
        .iter()
        .map(|p| p.max_coeff_abs())
        .max()
        .unwrap_or_else(BigInt::zero);

    loop {
        if family_type(&family).is_zero() {
            break;
        }
        if family.step_index() >= MAX_STEPS {
            return Err(Error::Resource(format!(
                "van der Corput induction exceeded {} steps",
                MAX_STEPS
            )));
        }
        let StepOutcome {
            q,
            new_var,
            next,
            before,
            after,
        } = advance(&family)?;
        let claims = check_claims(&next);
        let step = PetStep {
            s: next.step_index(),
            q: q.render_pet(),
            new_var: pet_var_name(new_var),
            active: next.active().iter().map(|p| p.render_pet()).collect(),
            constants: next.constants().iter().map(|p| p.render_pet()).collect(),
            retired: next.retired().iter().map(|p| p.render_pet()).collect(),
            type_before: before.clone(),
            type_after: after.clone(),
            claims: claims.clone(),
        };
        if !claims.all() || !type_less(&after, &before) {
            steps.push(step);
            let dump = serde_json::to_string(&steps).unwrap_or_default();
            return Err(Error::Internal(format!(
                "structural claim or type-decrease failure at step {}; trace: {}",
                steps.len(),
                dump
            )));
        }
        if next.size() > MAX_FAMILY {
            return Err(Error::Resource(format!(
                "family size {} exceeds the {} limit at step {}; \
                 van der Corput families double per step and systems mixing \
                 well-separated degrees grow beyond desk scale",
                next.size(),
                MAX_FAMILY,
                next.step_index()
            )));
        }
        if next.total_terms() > MAX_TOTAL_TERMS {
            return Err(Error::Resource(format!(
                "family holds {} terms, above the {} limit at step {}",
                next.total_terms(),
                MAX_TOTAL_TERMS,
                next.step_index()
            )));
        }
        if next.max_coeff_bits() > MAX_COEFF_BITS {
            return Err(Error::Resource(format!(
                "coefficients reached {} bits at step {}, above the {}-bit limit",
                next.max_coeff_bits(),
                next.step_index(),
                MAX_COEFF_BITS
            )));
        }
        if next.max_total_degree() > params.d0 {
            return Err(Error::Resource(format!(
                "total degree {} exceeds the configured bound d0 = {}",
                next.max_total_degree(),
                params.d0
            )));
        }
        peak = peak.max(next.size());
        max_bits = max_bits.max(next.max_coeff_bits());
        max_deg = max_deg.max(next.max_total_degree());
        let step_coeff = next
            .active()
            .iter()
            .chain(next.retired().iter())
            .map(|p| p.max_coeff_abs())
            .max()
            .unwrap_or_else(BigInt::zero);
        if step_coeff > max_coeff {
            max_coeff = step_coeff;
        }
        steps.push(step);
        family = next;
    }

    let t = family.step_index();
    let d = t + 1;
    let ratio = if max_coeff.is_zero() {
        1.0
    } else {
        BigRational::new(max_coeff, base_coeff)
            .to_f64()
            .unwrap_or(f64::INFINITY)
    };
    Ok(PetTrace {
        input: system.iter().map(|p| p.render_pet()).collect(),
        w: params.w_modulus,
        steps,
        t,
        d,
        group_multiplier: 2 * d + 1,
        diagnostics: PetDiagnostics {
            max_coeff_bits: max_bits,
            max_total_degree: max_deg,
            peak_family_size: peak,
            coeff_growth_ratio: ratio,
        },
    })
}
