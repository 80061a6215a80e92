//! Bundled evidence on whether the grazing set near the apex is a C¹ submanifold.
//!
//! Exact hypothesis checks (one tangential variable; symmetric obstacles lit from `(1, b̄)`;
//! `∇²G₂ₖ > 0` for polynomial obstacles lit from `(1, b̄)`) give `GS-HOLDS-SMOOTH`. Everything
//! else rests on a traced curve and a fitted exponent, and is labeled as numerical evidence.

use std::fmt;

use nalgebra::DVector;

use super::regularity::{estimate_regularity, RegularityEstimate, RegularityVerdict, DEFAULT_FIT_WINDOW};
use super::slice::{sign_changes_1d, slice_grazing_count};
use super::trace::{trace_grazing_curve, GrazingCurve, TraceOptions};
use super::{check_u1ww, classify_order, GrazingFunction, GrazingOrder, OrderClassification, U1wwVerdict};
use crate::diffgeo::{Obstacle, Surface};
use crate::phases::{xi_incoming, IncomingPhase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsVerdict {
    HoldsSmooth,
    HoldsC1Evidence,
    FailsCuspEvidence,
    Inconclusive,
}

impl GsVerdict {
    /// Whether the verdict rests on an exact hypothesis check rather than a fit.
    pub fn is_exact(self) -> bool {
        self == GsVerdict::HoldsSmooth
    }
}

impl fmt::Display for GsVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GsVerdict::HoldsSmooth => "GS-HOLDS-SMOOTH",
            GsVerdict::HoldsC1Evidence => "GS-HOLDS-C1-EVIDENCE",
            GsVerdict::FailsCuspEvidence => "GS-FAILS-CUSP-EVIDENCE",
            GsVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsOptions {
    /// Tracing window `|x̄| ≤ window`.
    pub window: f64,
    pub fit_window: (f64, f64),
    pub trace: TraceOptions,
    pub u1ww_samples: usize,
    /// Slice abscissae `x₂*`, as fractions of `|b̄|`.
    pub slice_fractions: Vec<f64>,
    pub slice_samples: usize,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions {
            window: 0.3,
            fit_window: DEFAULT_FIT_WINDOW,
            trace: TraceOptions::default(),
            u1ww_samples: 720,
            slice_fractions: vec![-0.1, -0.05, -0.02, -0.01],
            slice_samples: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsReport {
    pub order: Option<OrderClassification>,
    pub u1ww: Option<U1wwVerdict>,
    pub curve: Option<GrazingCurve>,
    pub regularity: Option<RegularityEstimate>,
    /// `(x₂*, counts)`; `None` when the slice could not be built.
    pub slices: Vec<(f64, Option<(usize, usize)>)>,
    /// Sign changes found by the one-variable scan.
    pub zeros_1d: Option<usize>,
    /// `H_pζ` at the apex when `ζ` is known in closed form.
    pub condition_b: Option<f64>,
    /// Smallest `sin` of the angle between the apex ray and the chords to the innermost vertices.
    pub chord_transversality: Option<f64>,
    /// Traced vertices where the ray is diffractive, out of those sampled.
    pub condition_c: Option<(usize, usize)>,
    pub verdict: GsVerdict,
    pub notes: Vec<String>,
}

impl GsReport {
    fn new() -> Self {
        GsReport {
            order: None,
            u1ww: None,
            curve: None,
            regularity: None,
            slices: vec![],
            zeros_1d: None,
            condition_b: None,
            chord_transversality: None,
            condition_c: None,
            verdict: GsVerdict::Inconclusive,
            notes: vec![],
        }
    }

    /// `key = value` lines, verdict last.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(o) = &self.order {
            push("order", o.order.to_string());
            if let GrazingOrder::Even { order, .. } | GrazingOrder::Odd(order) = o.order {
                push("leading_coefficient", format!("{}", o.taylor[order - 1]));
            }
            push(
                "direction",
                o.direction.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            );
        }
        if let Some(u) = &self.u1ww {
            push("u1ww", if u.passes { "PASS".into() } else { "FAIL".into() });
            push("u1ww_min_eigenvalue", format!("{}", u.min_eigenvalue));
        }
        if let Some(n) = self.zeros_1d {
            push("sign_changes", n.to_string());
        }
        if let Some(c) = &self.curve {
            push("vertices", c.vertex_count().to_string());
            push("max_residual", format!("{:e}", c.max_residual()));
        }
        if let Some(r) = &self.regularity {
            push("exponent", format!("{}", r.exponent));
            push("coefficient", format!("{}", r.coefficient));
            push("regularity", r.verdict.to_string());
        }
        for (x2, c) in &self.slices {
            let v = match c {
                Some((p, n)) => format!("{p} {n}"),
                None => "miss".into(),
            };
            push(&format!("slice[{x2}]"), v);
        }
        if let Some(b) = self.condition_b {
            push("condition_b", format!("{b}"));
        }
        if let Some(t) = self.chord_transversality {
            push("chord_transversality", format!("{t}"));
        }
        if let Some((d, n)) = self.condition_c {
            push("condition_c_sampled", format!("{d}/{n} diffractive"));
        }
        for note in &self.notes {
            push("note", note.clone());
        }
        push("evidence", if self.verdict.is_exact() { "hypothesis check".into() } else { "numerical".into() });
        push("verdict", self.verdict.to_string());
        out
    }
}

fn spherical_source(phase: &IncomingPhase) -> Option<DVector<f64>> {
    match phase {
        IncomingPhase::Spherical { source } if (source[0] - 1.0).abs() <= 1e-12 => {
            Some(source.rows(1, source.len() - 1).into_owned())
        }
        _ => None,
    }
}

/// Runs the order classifier, the exact hypothesis checks that apply, a traced curve with a
/// regularity fit, slice counts and the sampled conditions, and combines them into a verdict.
pub fn gs_assumption_report(obstacle: &Obstacle, phase: &IncomingPhase, opts: &GsOptions) -> GsReport {
    let mut rep = GsReport::new();
    let order = match classify_order(obstacle, phase) {
        Ok(o) => o,
        Err(e) => {
            rep.notes.push(format!("order classification failed: {e}"));
            return rep;
        }
    };
    let kind = order.order;
    rep.order = Some(order);
    let symmetric = matches!(obstacle.surface(), Surface::Symmetric(_));
    let source = spherical_source(phase);
    match kind {
        GrazingOrder::Even { diffractive: true, .. } => {}
        GrazingOrder::AtLeast(_) if symmetric && source.is_some() => {}
        GrazingOrder::Even { diffractive: false, .. } => {
            rep.notes.push("gliding apex: only diffractive points are covered".into());
            return rep;
        }
        GrazingOrder::Odd(_) => {
            rep.notes.push("inflection apex: only diffractive points are covered".into());
            return rep;
        }
        GrazingOrder::AtLeast(_) => {
            rep.notes.push("infinite-order contact outside the symmetric class".into());
            return rep;
        }
    }
    let gf = match GrazingFunction::for_phase(phase) {
        Ok(g) => g,
        Err(e) => {
            rep.notes.push(format!("{e}"));
            return rep;
        }
    };

    if obstacle.dim() == 1 {
        let half = 0.3_f64.min(0.99 * obstacle.radius());
        match sign_changes_1d(&gf, obstacle, half, 6001) {
            Ok(z) => {
                rep.zeros_1d = Some(z.len());
                if z.len() == 1 {
                    rep.verdict = GsVerdict::HoldsSmooth;
                    rep.notes.push("one tangential variable: the grazing set is the apex line".into());
                } else {
                    rep.notes.push(format!("expected one sign change near the apex, found {}", z.len()));
                }
            }
            Err(e) => rep.notes.push(format!("scan failed: {e}")),
        }
        return rep;
    }

    // Exact hypothesis checks.
    let mut exact = false;
    if let (true, Some(bbar)) = (symmetric, &source) {
        if let Surface::Symmetric(s) = obstacle.surface() {
            let lb = s.lambda() * bbar;
            rep.condition_b = Some(4.0 * lb.norm_squared() / bbar.norm());
        }
        rep.notes.push("closed-form zeta for the symmetric class".into());
        exact = true;
    }
    if let (Surface::Polynomial(p), Some(_)) = (obstacle.surface(), &source) {
        if obstacle.dim() == 2 {
            let g = p.polynomial().scale(-1.0).add(&crate::diffgeo::Polynomial::constant(2, 1.0));
            if let Some(m) = g.min_degree() {
                match check_u1ww(&g.homogeneous_part(m), opts.u1ww_samples) {
                    Ok(v) => {
                        exact |= v.passes;
                        rep.u1ww = Some(v);
                    }
                    Err(e) => rep.notes.push(format!("u1ww not applicable: {e}")),
                }
            }
        }
    }

    if obstacle.dim() != 2 {
        if exact {
            rep.verdict = GsVerdict::HoldsSmooth;
        } else {
            rep.notes.push("curve tracing needs two tangential variables".into());
        }
        return rep;
    }

    // Numerical evidence.
    let trace_gf = GrazingFunction::preferred(obstacle, phase).unwrap_or(gf);
    let mut fitted = None;
    match trace_grazing_curve(&trace_gf, obstacle, opts.window, &opts.trace) {
        Ok(curve) => {
            sample_conditions(&mut rep, obstacle, phase, &curve);
            match estimate_regularity(&curve, opts.fit_window) {
                Ok(r) => {
                    fitted = Some(r.verdict);
                    rep.regularity = Some(r);
                }
                Err(e) => rep.notes.push(format!("regularity fit failed: {e}")),
            }
            rep.curve = Some(curve);
        }
        Err(e) => rep.notes.push(format!("tracing failed: {e}")),
    }

    let mut branching = false;
    if let Some(bbar) = &source {
        for frac in &opts.slice_fractions {
            let x2 = frac * bbar.norm();
            match slice_grazing_count(obstacle, bbar, x2, opts.slice_samples) {
                Ok(c) => {
                    branching |= (c.positive, c.negative) != (1, 1);
                    rep.slices.push((x2, Some((c.positive, c.negative))));
                }
                Err(_) => rep.slices.push((x2, None)),
            }
        }
    }

    rep.verdict = if exact {
        GsVerdict::HoldsSmooth
    } else {
        match fitted {
            Some(RegularityVerdict::Cusp) => GsVerdict::FailsCuspEvidence,
            Some(RegularityVerdict::C1NotC2) | Some(RegularityVerdict::Smooth) => GsVerdict::HoldsC1Evidence,
            _ => GsVerdict::Inconclusive,
        }
    };
    if branching && matches!(rep.verdict, GsVerdict::HoldsC1Evidence) {
        rep.notes.push("slice counts other than one point per side suggest branching".into());
        rep.verdict = GsVerdict::Inconclusive;
    }
    if !exact {
        rep.notes.push("condition (c) is sampled on traced vertices only".into());
    }
    rep
}

/// Chord transversality at the apex and the diffractive sign `ξ̄ᵀ∇²F ξ̄ < 0` at traced vertices.
fn sample_conditions(rep: &mut GsReport, obstacle: &Obstacle, phase: &IncomingPhase, curve: &GrazingCurve) {
    let mut worst: Option<f64> = None;
    for b in &curve.branches {
        if let Some(x) = b.points.first() {
            let s = x.dot(&curve.across).abs() / x.norm();
            worst = Some(worst.map_or(s, |w: f64| w.min(s)));
        }
    }
    rep.chord_transversality = worst;
    let (mut good, mut total) = (0, 0);
    for x in curve.branches.iter().flat_map(|b| b.points.iter()) {
        let (Ok(xi), Ok(h)) = (xi_incoming(phase, obstacle, x), obstacle.hess(x)) else { continue };
        total += 1;
        if (&h * &xi.xibar).dot(&xi.xibar) < 0.0 {
            good += 1;
        }
    }
    rep.condition_c = Some((good, total));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgeo::{HProfile, Polynomial};
    use nalgebra::{dvector, DMatrix};

    fn one_minus(terms: &[(&[u32], f64)]) -> Obstacle {
        let g = Polynomial::new(2, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap();
        Obstacle::one_minus(&g, 1.0).unwrap()
    }

    fn source() -> IncomingPhase {
        IncomingPhase::spherical(dvector![1.0, -1.0, 0.0])
    }

    #[test]
    fn u1ww_path_holds_smooth() {
        let o = one_minus(&[(&[4, 0], 1.0), (&[2, 2], 1.0), (&[0, 4], 1.0)]);
        let r = gs_assumption_report(&o, &source(), &GsOptions::default());
        assert_eq!(r.verdict, GsVerdict::HoldsSmooth);
        assert!(r.u1ww.as_ref().unwrap().passes);
        assert!(r.slices.iter().all(|(_, c)| *c == Some((1, 1))));
    }

    #[test]
    fn cusp_fails() {
        let o = one_minus(&[(&[4, 0], 1.0), (&[0, 2], 1.0)]);
        let r = gs_assumption_report(&o, &source(), &GsOptions::default());
        assert_eq!(r.verdict, GsVerdict::FailsCuspEvidence);
        let kv = r.key_values();
        assert!(kv.contains(&("order".into(), "4 diffractive".into())));
        assert_eq!(kv.last().unwrap(), &("verdict".to_string(), "GS-FAILS-CUSP-EVIDENCE".to_string()));
    }

    #[test]
    fn quartic_sum_is_c1_evidence() {
        let o = one_minus(&[(&[4, 0], 1.0), (&[0, 4], 1.0)]);
        let r = gs_assumption_report(&o, &source(), &GsOptions::default());
        assert_eq!(r.verdict, GsVerdict::HoldsC1Evidence);
        assert!(!r.u1ww.unwrap().passes);
    }

    #[test]
    fn sphere_holds_smooth() {
        let o = Obstacle::symmetric(HProfile::Sphere { radius: 1.0 }, DMatrix::identity(2, 2), 0.5).unwrap();
        let r = gs_assumption_report(&o, &source(), &GsOptions::default());
        assert_eq!(r.verdict, GsVerdict::HoldsSmooth);
        assert_eq!(r.order.unwrap().order, GrazingOrder::Even { order: 2, diffractive: true });
        assert_eq!(r.regularity.unwrap().verdict, RegularityVerdict::Smooth);
        assert!((r.condition_b.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn flat_symmetric_obstacle_holds() {
        let o = Obstacle::symmetric(HProfile::ExpFlat, DMatrix::identity(2, 2), 0.5).unwrap();
        let r = gs_assumption_report(&o, &source(), &GsOptions::default());
        assert_eq!(r.order.as_ref().unwrap().order, GrazingOrder::AtLeast(16));
        assert_eq!(r.verdict, GsVerdict::HoldsSmooth);
    }

    #[test]
    fn odd_order_is_inconclusive() {
        let o = one_minus(&[(&[3, 0], 1.0), (&[0, 2], 1.0)]);
        let r = gs_assumption_report(&o, &source(), &GsOptions::default());
        assert_eq!(r.order.as_ref().unwrap().order, GrazingOrder::Odd(3));
        assert_eq!(r.verdict, GsVerdict::Inconclusive);
    }

    #[test]
    fn general_phase_is_inconclusive() {
        let o = one_minus(&[(&[2, 0], 1.0), (&[0, 2], 1.0)]);
        let phase = IncomingPhase::convex_distance(dvector![1.0, -2.0, 0.0], 1.0);
        let r = gs_assumption_report(&o, &phase, &GsOptions::default());
        assert_eq!(r.verdict, GsVerdict::Inconclusive);
    }

    #[test]
    fn one_variable_holds() {
        let g = Polynomial::new(1, vec![(vec![4], 1.0)]).unwrap();
        let o = Obstacle::one_minus(&g, 1.0).unwrap();
        let r = gs_assumption_report(&o, &IncomingPhase::spherical(dvector![1.0, -1.0]), &GsOptions::default());
        assert_eq!(r.zeros_1d, Some(1));
        assert_eq!(r.verdict, GsVerdict::HoldsSmooth);
    }
}
