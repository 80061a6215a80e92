//! CSV tables and hand-written SVG for traced curves.
//!
//! Floats in CSV use the shortest round-trip representation, so identical runs give identical
//! bytes. SVG coordinates are rounded to six significant digits.

use std::fmt::Write as _;

use glancing::grazing::{FlowoutRay, GrazingCurve};
use glancing::reflection::RfmVerdict;

/// One row per vertex: `branch,arc,x2,..,residual`.
pub fn curve_csv(curve: &GrazingCurve) -> String {
    let m = curve.along.len();
    let mut out = String::from("branch,arc");
    for i in 0..m {
        let _ = write!(out, ",x{}", i + 2);
    }
    out.push_str(",residual\n");
    for (id, b) in curve.branches.iter().enumerate() {
        for ((x, arc), r) in b.points.iter().zip(&b.arc).zip(&b.residuals) {
            let _ = write!(out, "{id},{arc}");
            for v in x.iter() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{r}");
        }
    }
    out
}

/// One row per sample: `vertex,s,x1,..,t`.
pub fn flowout_csv(rays: &[FlowoutRay], ambient: usize) -> String {
    let mut out = String::from("vertex,s");
    for i in 0..ambient {
        let _ = write!(out, ",x{}", i + 1);
    }
    out.push_str(",t\n");
    for (k, ray) in rays.iter().enumerate() {
        for (s, y) in ray.params.iter().zip(&ray.points) {
            let _ = write!(out, "{k},{s}");
            for v in y.iter() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// One row per boundary sample of the flow-map check.
pub fn rfm_csv(v: &RfmVerdict, tangential: usize) -> String {
    let mut out = String::from("s");
    for i in 0..tangential {
        let _ = write!(out, ",x{}", i + 2);
    }
    out.push_str(",t,mu,j_analytic,j_fd,bound,pass\n");
    for smp in &v.samples {
        let _ = write!(out, "{}", smp.s);
        for x in smp.xbar.iter() {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{}",
            smp.t, smp.mu, smp.j_analytic, smp.j_fd, smp.bound, smp.pass as u8
        );
    }
    out
}

/// `x` rounded to six significant digits, without trailing zeros.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 2] = ["#1f5fa8", "#b8402a"];

/// Plots the projection of the curve on the first two tangential coordinates over
/// `[-window, window]²`, with the flowout sheet's spatial projection underneath.
pub fn curve_svg(curve: &GrazingCurve, sheet: &[FlowoutRay], title: &str) -> String {
    let w = if curve.window > 0.0 { curve.window } else { 1.0 };
    let map = |u: f64, v: f64| -> (f64, f64) {
        (MARGIN + (u + w) / (2.0 * w) * SIZE, MARGIN + (w - v) / (2.0 * w) * SIZE)
    };
    let total = SIZE + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{t}" height="{t}" viewBox="0 0 {t} {t}">"#,
        t = sig6(total)
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{s}" height="{s}"/></clipPath></defs>"#,
        m = sig6(MARGIN),
        s = sig6(SIZE)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{m}" y="{m}" width="{s}" height="{s}" fill="none" stroke="#888"/>"##,
        m = sig6(MARGIN),
        s = sig6(SIZE)
    );
    let (x0, y0) = map(0.0, 0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb"/>"##,
        sig6(MARGIN),
        sig6(y0),
        sig6(MARGIN + SIZE),
        sig6(y0)
    );
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb"/>"##,
        sig6(x0),
        sig6(MARGIN),
        sig6(x0),
        sig6(MARGIN + SIZE)
    );
    let label = |out: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="{anchor}">{}</text>"#,
            sig6(x),
            sig6(y),
            escape(text)
        );
    };
    label(&mut out, MARGIN, MARGIN + SIZE + 16.0, "start", &format!("-{}", sig6(w)));
    label(&mut out, MARGIN + SIZE, MARGIN + SIZE + 16.0, "end", &sig6(w));
    label(&mut out, MARGIN + SIZE / 2.0, MARGIN + SIZE + 30.0, "middle", "x2");
    label(&mut out, MARGIN - 6.0, MARGIN + SIZE, "end", &format!("-{}", sig6(w)));
    label(&mut out, MARGIN - 6.0, MARGIN + 10.0, "end", &sig6(w));
    label(&mut out, MARGIN - 24.0, MARGIN + SIZE / 2.0, "middle", "x3");
    label(&mut out, MARGIN + SIZE / 2.0, MARGIN - 14.0, "middle", title);

    let second = |y: &nalgebra::DVector<f64>, i: usize| if y.len() > i { y[i] } else { 0.0 };
    if !sheet.is_empty() {
        let _ = writeln!(out, r##"<g clip-path="url(#plot)" stroke="#ccc" stroke-width="0.5" fill="none">"##);
        for ray in sheet {
            if let (Some(a), Some(b)) = (ray.points.first(), ray.points.last()) {
                let (ax, ay) = map(second(a, 1), second(a, 2));
                let (bx, by) = map(second(b, 1), second(b, 2));
                let _ = writeln!(
                    out,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                    sig6(ax),
                    sig6(ay),
                    sig6(bx),
                    sig6(by)
                );
            }
        }
        out.push_str("</g>\n");
    }
    for (k, b) in curve.branches.iter().enumerate() {
        if b.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = b
            .points
            .iter()
            .map(|x| {
                let (px, py) = map(x[0], second(x, 1));
                format!("{},{}", sig6(px), sig6(py))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline clip-path="url(#plot)" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            pts.join(" ")
        );
    }
    let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="2.5" fill="#000"/>"##, sig6(x0), sig6(y0));
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
