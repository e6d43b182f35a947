//! SVG drawings of instances, matchings and blocking witnesses.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{Instance, Matching, Point};
use crate::stability::BlockingWitness;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Viewport side in pixels.
    pub size: f64,
    /// Margin as a fraction of `size`.
    pub margin: f64,
    pub agent_radius: f64,
    pub labels: bool,
    /// Labels closer than this (pixels) to an earlier label are dropped.
    pub label_gap: f64,
    pub title: Option<String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { size: 1200.0, margin: 0.05, agent_radius: 3.0, labels: true, label_gap: 12.0, title: None }
    }
}

struct Frame {
    min: Point,
    scale: f64,
    offset: Point,
    size: f64,
}

impl Frame {
    fn fit(points: &[Point], opts: &RenderOptions) -> Self {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if points.is_empty() {
            lo = Point::new(0.0, 0.0);
            hi = lo;
        }
        let inner = opts.size * (1.0 - 2.0 * opts.margin);
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let scale = if span > 0.0 { inner / span } else { 1.0 };
        let used = Point::new((hi.x - lo.x) * scale, (hi.y - lo.y) * scale);
        let offset = Point::new((opts.size - used.x) / 2.0, (opts.size - used.y) / 2.0);
        Self { min: lo, scale, offset, size: opts.size }
    }

    /// Screen coordinates with the y-axis flipped.
    fn map(&self, p: Point) -> Point {
        let x = self.offset.x + (p.x - self.min.x) * self.scale;
        let y = self.size - (self.offset.y + (p.y - self.min.y) * self.scale);
        Point::new(x, y)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Convex hull by monotone chain, counter-clockwise; degenerate inputs
/// return their distinct extreme points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| a.sub(o).cross(b.sub(o));
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn points_attr(pts: &[Point]) -> String {
    pts.iter().map(|p| format!("{:.2},{:.2}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

fn colour(k: usize) -> String {
    let hue = (k as f64 * 137.508) % 360.0;
    format!("hsl({hue:.1},65%,45%)")
}

/// Greedy label thinning: keeps an agent's label unless an earlier kept
/// label lies within `gap` pixels.
fn pick_labels(screen: &[Point], gap: f64) -> Vec<usize> {
    let cell = gap.max(1e-9);
    let key = |p: Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept = Vec::new();
    for (k, &p) in screen.iter().enumerate() {
        let (cx, cy) = key(p);
        let clash = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(cx + dx, cy + dy))
                    .is_some_and(|v| v.iter().any(|&j| screen[j].sub(p).norm() < gap))
            })
        });
        if !clash {
            grid.entry((cx, cy)).or_default().push(k);
            kept.push(k);
        }
    }
    kept
}

/// Renders the instance, optionally with coalition outlines and a
/// highlighted blocking coalition, as an SVG 1.1 document.
pub fn render_svg(inst: &Instance, matching: Option<&Matching>, witness: Option<&BlockingWitness>, opts: &RenderOptions) -> String {
    let pos: Vec<Point> = inst.agents().iter().map(|a| a.pos).collect();
    let frame = Frame::fit(&pos, opts);
    let screen: Vec<Point> = pos.iter().map(|&p| frame.map(p)).collect();
    let size = opts.size;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    if let Some(t) = &opts.title {
        let _ = writeln!(out, "  <title>{}</title>", escape(t));
    }
    let _ = writeln!(out, r#"  <rect width="{size}" height="{size}" fill="white"/>"#);

    if let Some(m) = matching {
        let _ = writeln!(out, r#"  <g id="coalitions" stroke-width="1.5" fill-opacity="0.12">"#);
        for (k, c) in m.coalitions().iter().enumerate() {
            let hull = convex_hull(&c.members().iter().map(|&a| screen[a]).collect::<Vec<_>>());
            let ids = escape(&c.ids(inst).join(", "));
            let col = colour(k);
            let _ = writeln!(
                out,
                r#"    <polygon class="coalition" points="{}" stroke="{col}" fill="{col}"><title>{ids}</title></polygon>"#,
                points_attr(&hull)
            );
        }
        let _ = writeln!(out, "  </g>");
    }

    if let Some(w) = witness {
        let hull = convex_hull(&w.coalition.members().iter().map(|&a| screen[a]).collect::<Vec<_>>());
        let ids = escape(&w.ids(inst).join(", "));
        let _ = writeln!(
            out,
            r#"  <polygon class="witness" points="{}" stroke="red" stroke-width="3" stroke-dasharray="6 3" fill="red" fill-opacity="0.2"><title>blocking: {ids}</title></polygon>"#,
            points_attr(&hull)
        );
    }

    let _ = writeln!(out, r#"  <g id="agents" fill="black">"#);
    let blocking: Vec<usize> = witness.map(|w| w.coalition.members().to_vec()).unwrap_or_default();
    for (k, a) in inst.agents().iter().enumerate() {
        let p = screen[k];
        let title = match &a.tag {
            Some(t) => format!("{} ({t})", a.id),
            None => a.id.clone(),
        };
        let fill = if blocking.contains(&k) { r#" fill="red""# } else { "" };
        let _ = writeln!(
            out,
            r#"    <circle class="agent" cx="{:.2}" cy="{:.2}" r="{}"{fill}><title>{}</title></circle>"#,
            p.x,
            p.y,
            opts.agent_radius,
            escape(&title)
        );
    }
    let _ = writeln!(out, "  </g>");

    if opts.labels {
        let _ = writeln!(out, r#"  <g id="labels" font-family="sans-serif" font-size="9" fill="dimgray">"#);
        for k in pick_labels(&screen, opts.label_gap) {
            let p = screen[k];
            let _ = writeln!(
                out,
                r#"    <text class="label" x="{:.2}" y="{:.2}">{}</text>"#,
                p.x + opts.agent_radius + 1.0,
                p.y - opts.agent_radius - 1.0,
                escape(inst.id(k))
            );
        }
        let _ = writeln!(out, "  </g>");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{build_star3, Pose, Star3Params};
    use crate::layout::OrthogonalLayout;
    use crate::reduction::{reduce, ReductionParams};
    use crate::stability::{find_blocking, SearchMode};
    use crate::x3c::X3CInstance;

    fn star3() -> Instance {
        let s = build_star3(Pose::default(), Star3Params::default(), true).unwrap();
        Instance::new(3, s.agents, None).unwrap()
    }

    fn count(doc: &roxmltree::Document, class: &str) -> usize {
        doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
    }

    #[test]
    fn agents_only() {
        let inst = star3();
        let svg = render_svg(&inst, None, None, &RenderOptions::default());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "agent"), 12);
        assert_eq!(count(&doc, "coalition"), 0);
    }

    #[test]
    fn star3_with_matching_and_witness() {
        let inst = star3();
        let m = Matching::from_ids(&inst, &[vec!["5", "10", "11"], vec!["1", "6", "8"], vec!["2", "3", "7"], vec!["0", "4", "9"]])
            .unwrap();
        let svg = render_svg(&inst, Some(&m), None, &RenderOptions::default());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "agent"), 12);
        assert_eq!(count(&doc, "coalition"), 4);

        let split = Matching::from_ids(&inst, &[vec!["5", "10", "1"], vec!["11", "6", "8"], vec!["2", "3", "7"], vec!["0", "4", "9"]])
            .unwrap();
        let w = find_blocking(&split, &inst, SearchMode::Pruned).unwrap();
        let svg = render_svg(&inst, Some(&split), Some(&w), &RenderOptions::default());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "witness"), 1);
    }

    #[test]
    fn viewport_fit_and_flip() {
        let inst = star3();
        let pos: Vec<Point> = inst.agents().iter().map(|a| a.pos).collect();
        let f = Frame::fit(&pos, &RenderOptions::default());
        let s: Vec<Point> = pos.iter().map(|&p| f.map(p)).collect();
        for p in &s {
            assert!(p.x >= 60.0 - 1e-9 && p.x <= 1140.0 + 1e-9 && p.y >= 60.0 - 1e-9 && p.y <= 1140.0 + 1e-9);
        }
        let hi = (0..pos.len()).max_by(|&a, &b| pos[a].y.total_cmp(&pos[b].y)).unwrap();
        assert!(s.iter().all(|p| p.y >= s[hi].y - 1e-9));
    }

    #[test]
    fn reduced_fixture_labels_do_not_collide() {
        let red = reduce(&X3CInstance::prism(), &OrthogonalLayout::prism_fixture(), ReductionParams::new(3)).unwrap();
        let svg = render_svg(&red.instance, None, None, &RenderOptions::default());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "agent"), red.instance.len());
        let labels: Vec<Point> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("label"))
            .map(|n| Point::new(n.attribute("x").unwrap().parse().unwrap(), n.attribute("y").unwrap().parse().unwrap()))
            .collect();
        assert!(!labels.is_empty());
        for (i, a) in labels.iter().enumerate() {
            for b in &labels[i + 1..] {
                assert!(a.sub(*b).norm() >= 2.0);
            }
        }
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0), Point::new(0.5, 0.5)];
        assert_eq!(convex_hull(&pts).len(), 4);
        assert_eq!(convex_hull(&[Point::new(1.0, 1.0); 3]).len(), 1);
    }
}
