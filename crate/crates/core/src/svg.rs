//! SVG drawing of a placement on the fundamental square `[0, 1]^2`.
//!
//! Every edge is drawn from its lift in the nine translates of the square
//! around the base point and clipped, so an edge crossing the seam shows up
//! as two or more segments.

use std::fmt::Write;

use crate::geometry::{face_signed_area, lifted_edge_vector, Placement, Vec2, AREA_EPS};
use crate::mesh::TorusTriangulation;

#[derive(Clone, Copy, Debug)]
pub struct SvgOptions {
    /// Side length of the square in pixels.
    pub size: u32,
    pub labels: bool,
    pub highlight_flipped: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { size: 800, labels: false, highlight_flipped: true }
    }
}

const MIN_SEGMENT: f64 = 1e-12;

/// Liang-Barsky clip of `a -> b` to the unit square.
fn clip_unit(a: Vec2, b: Vec2) -> Option<(Vec2, Vec2)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x), (d.x, 1.0 - a.x), (-d.y, a.y), (d.y, 1.0 - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 < t1).then(|| (a + d * t0, a + d * t1))
}

/// Clipped pieces of an edge's lift, one per translate that meets the
/// square. Pieces lying on the `x = 1` or `y = 1` sides are dropped since
/// their copies on the opposite side are kept.
pub fn edge_segments(mesh: &TorusTriangulation, p: &Placement, e: usize) -> Vec<(Vec2, Vec2)> {
    let (i, _) = mesh.edge(e);
    let xi = p.point(i);
    let base = Vec2::new(xi.x - xi.x.floor(), xi.y - xi.y.floor());
    let tip = base + lifted_edge_vector(mesh, p, e);
    let mut out = Vec::new();
    for dy in -1..=1 {
        for dx in -1..=1 {
            let off = Vec2::new(dx as f64, dy as f64);
            if let Some((a, b)) = clip_unit(base + off, tip + off) {
                let on_far_side = (a.x == 1.0 && b.x == 1.0) || (a.y == 1.0 && b.y == 1.0);
                if (b - a).norm() > MIN_SEGMENT && !on_far_side {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

fn fmt_point(size: f64, v: Vec2) -> (f64, f64) {
    (v.x * size, (1.0 - v.y) * size)
}

pub fn render_svg(mesh: &TorusTriangulation, p: &Placement, opts: &SvgOptions) -> String {
    let s = opts.size as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        opts.size
    );
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="domain"><rect x="0" y="0" width="{0}" height="{0}"/></clipPath></defs>"#,
        opts.size
    );
    let _ = writeln!(
        out,
        r##"<rect class="domain" x="0" y="0" width="{0}" height="{0}" fill="#ffffff" stroke="#888888"/>"##,
        opts.size
    );

    if opts.highlight_flipped {
        let _ = writeln!(out, r#"<g class="flipped" clip-path="url(#domain)">"#);
        for f in 0..mesh.face_count() {
            if face_signed_area(mesh, p, f) > AREA_EPS {
                continue;
            }
            let [a, _, _] = mesh.faces()[f];
            let [ab, _, ca] = mesh.face_edges(f);
            let xa = p.point(a);
            let base = Vec2::new(xa.x - xa.x.floor(), xa.y - xa.y.floor());
            let corners = [base, base + lifted_edge_vector(mesh, p, ab), base - lifted_edge_vector(mesh, p, ca)];
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let off = Vec2::new(dx as f64, dy as f64);
                    let pts: Vec<String> = corners
                        .iter()
                        .map(|&c| {
                            let (x, y) = fmt_point(s, c + off);
                            format!("{x:.3},{y:.3}")
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        r##"<polygon data-face="{f}" points="{}" fill="#ff000040" stroke="#d00000" stroke-width="2"/>"##,
                        pts.join(" ")
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, r##"<g class="edges" stroke="#1f3b73" stroke-width="1.5" stroke-linecap="round">"##);
    for e in mesh.undirected_edges() {
        let (i, j) = mesh.edge(e);
        for (a, b) in edge_segments(mesh, p, e) {
            let (x1, y1) = fmt_point(s, a);
            let (x2, y2) = fmt_point(s, b);
            let _ = writeln!(out, r#"<line data-edge="{i}-{j}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
        }
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r##"<g class="vertices" fill="#1f3b73">"##);
    for v in 0..p.len() {
        let x = p.point(v);
        let (cx, cy) = fmt_point(s, Vec2::new(x.x - x.x.floor(), x.y - x.y.floor()));
        let _ = writeln!(out, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="3"/>"#);
        if opts.labels {
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-size="12" font-family="sans-serif">{v}</text>"#,
                cx + 4.0,
                cy - 4.0
            );
        }
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::gen_grid;
    use std::collections::BTreeMap;

    fn edge_counts(svg: &str) -> BTreeMap<String, usize> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        let mut counts = BTreeMap::new();
        for n in doc.descendants().filter(|n| n.has_tag_name("line")) {
            *counts.entry(n.attribute("data-edge").unwrap().to_string()).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn clipping() {
        let (a, b) = clip_unit(Vec2::new(0.5, 0.5), Vec2::new(1.5, 0.5)).unwrap();
        assert_eq!((a, b), (Vec2::new(0.5, 0.5), Vec2::new(1.0, 0.5)));
        assert!(clip_unit(Vec2::new(1.2, 0.5), Vec2::new(1.5, 0.7)).is_none());
        let (a, b) = clip_unit(Vec2::new(-0.5, -0.5), Vec2::new(0.5, 0.5)).unwrap();
        assert_eq!((a, b), (Vec2::zeros(), Vec2::new(0.5, 0.5)));
    }

    #[test]
    fn seam_edges_split_in_two() {
        // shift off the seam so no vertex sits on the square's boundary
        let (mesh, grid) = gen_grid(3).unwrap();
        let p = grid.translated(Vec2::new(0.5 / 3.0, 0.5 / 3.0));
        let svg = render_svg(&mesh, &p, &SvgOptions::default());
        let counts = edge_counts(&svg);
        assert_eq!(counts.len(), 27);
        for e in mesh.undirected_edges() {
            let (i, j) = mesh.edge(e);
            // oracle: an edge wraps iff its lift leaves the square
            let tip = p.point(i) + lifted_edge_vector(&mesh, &p, e);
            let wraps = !(0.0..=1.0).contains(&tip.x) || !(0.0..=1.0).contains(&tip.y);
            assert_eq!(counts[&format!("{i}-{j}")], if wraps { 2 } else { 1 }, "edge {i}-{j}");
        }
        assert_eq!(counts.values().sum::<usize>(), 27 + 11);
    }

    #[test]
    fn segments_cover_edge_length() {
        let (mesh, grid) = gen_grid(4).unwrap();
        let p = crate::fixtures::perturb(&mesh, &grid, 0.05, 5).unwrap().translated(Vec2::new(0.3, 0.6));
        for e in mesh.undirected_edges() {
            let total: f64 = edge_segments(&mesh, &p, e).iter().map(|(a, b)| (b - a).norm()).sum();
            assert!((total - lifted_edge_vector(&mesh, &p, e).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn raw_grid_renders_each_edge_once() {
        let (mesh, p) = gen_grid(3).unwrap();
        let counts = edge_counts(&render_svg(&mesh, &p, &SvgOptions::default()));
        assert_eq!(counts.len(), 27);
        assert!(counts.values().all(|&c| c >= 1));
    }

    #[test]
    fn flipped_face_highlighted() {
        let (mesh, grid) = gen_grid(3).unwrap();
        let plain = render_svg(&mesh, &grid, &SvgOptions::default());
        assert!(!plain.contains("<polygon"));

        let mut coords = grid.coords().to_vec();
        coords[4] = Vec2::new(-0.05, -0.05);
        let bad = Placement::new(coords).unwrap();
        let svg = render_svg(&mesh, &bad, &SvgOptions { labels: true, ..Default::default() });
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let flipped: Vec<usize> = doc
            .descendants()
            .filter(|n| n.has_tag_name("polygon"))
            .map(|n| n.attribute("data-face").unwrap().parse().unwrap())
            .collect();
        let expected = crate::geometry::verify_embedding(&mesh, &bad).flipped_faces();
        assert!(!expected.is_empty());
        for f in &expected {
            assert!(flipped.contains(f));
        }
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("text")).count(), 9);
        assert_eq!(doc.root_element().attribute("width"), Some("800"));
    }
}
