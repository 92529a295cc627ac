//! SVG drawing of 2-D spec sets: boxes as outlined rectangles, data as dots.

use std::fmt::Write as _;

use specforge::{Dataset, Label, OutputConstraint, SpecSet};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 24.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

/// Plot frame: data extremes widened by the finite spec edges, plus 5%.
fn frame(set: &SpecSet, data: &Dataset) -> [(f64, f64); 2] {
    let stats = data.stats();
    let mut out = [(stats.x_min[0], stats.x_max[0]), (stats.x_min[1], stats.x_max[1])];
    for spec in set.specs() {
        for (j, axis) in out.iter_mut().enumerate() {
            for v in [spec.input.lower()[j], spec.input.upper()[j]] {
                if v.is_finite() {
                    axis.0 = axis.0.min(v);
                    axis.1 = axis.1.max(v);
                }
            }
        }
    }
    for axis in &mut out {
        let pad = if axis.1 > axis.0 { 0.05 * (axis.1 - axis.0) } else { 0.5 };
        axis.0 -= pad;
        axis.1 += pad;
    }
    out
}

fn heat(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t) as u8;
    let b = (240.0 - 200.0 * t) as u8;
    format!("#{r:02x}50{b:02x}")
}

fn class_colour(c: usize) -> &'static str {
    PALETTE[c % PALETTE.len()]
}

/// Renders `set` over `data`. Infinite box sides are cut at the plot frame.
/// Classification points and boxes are coloured by class; regression points
/// by label value and regression boxes in grey.
pub fn render_svg(set: &SpecSet, data: &Dataset) -> specforge::Result<String> {
    if set.feature_dim() != 2 || data.n_features() != 2 {
        return Err(specforge::Error::Dimension {
            what: "render needs 2-D specs and data".into(),
            expected: 2,
            got: if set.feature_dim() != 2 { set.feature_dim() } else { data.n_features() },
        });
    }
    let [(x0, x1), (y0, y1)] = frame(set, data);
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x.clamp(x0, x1) - x0) / (x1 - x0) * inner;
    let py = |y: f64| MARGIN + (y1 - y.clamp(y0, y1)) / (y1 - y0) * inner;
    let stats = data.stats();
    let y_span = (stats.y_max - stats.y_min).max(f64::MIN_POSITIVE);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="black" stroke-width="1"/>"#
    );

    let _ = writeln!(svg, r#"<g id="specs" fill-opacity="0.08" stroke-width="1">"#);
    for spec in set.specs() {
        let (lo, hi) = (spec.input.lower(), spec.input.upper());
        let (left, right) = (px(lo[0]), px(hi[0]));
        let (top, bottom) = (py(hi[1]), py(lo[1]));
        let colour = match spec.output {
            OutputConstraint::ClassLabel(c) => class_colour(c),
            OutputConstraint::Interval { .. } => "#555555",
        };
        let _ = writeln!(
            svg,
            r#"<rect x="{left:.3}" y="{top:.3}" width="{:.3}" height="{:.3}" fill="{colour}" stroke="{colour}"><title>{}</title></rect>"#,
            right - left,
            bottom - top,
            escape(&spec.provenance)
        );
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="points">"#);
    for i in 0..data.len() {
        let row = data.row(i);
        let fill = match data.label(i) {
            Label::Class(c) => class_colour(c).to_string(),
            Label::Real(y) => heat((y - stats.y_min) / y_span),
        };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2" fill="{fill}"/>"#,
            px(row[0]),
            py(row[1])
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use specforge::dataset::Labels;
    use specforge::{Hyperrectangle, Specification, TaskKind};

    #[test]
    fn infinite_sides_stay_in_frame() {
        let data = Dataset::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]], Labels::Class(vec![0, 1])).unwrap();
        let mut set = SpecSet::new(TaskKind::Classification, 2, "t");
        set.push(Specification {
            input: Hyperrectangle::unbounded(2),
            output: OutputConstraint::ClassLabel(0),
            provenance: "all".into(),
        })
        .unwrap();
        let svg = render_svg(&set, &data).unwrap();
        assert!(svg.contains(r#"<rect x="24.000" y="24.000" width="592.000" height="592.000""#));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("inf") && !svg.contains("NaN"));
    }

    #[test]
    fn rejects_non_planar() {
        let data = Dataset::from_rows(vec![vec![0.0, 0.0, 1.0]], Labels::Class(vec![0])).unwrap();
        let set = SpecSet::new(TaskKind::Classification, 3, "t");
        assert!(render_svg(&set, &data).is_err());
    }
}
