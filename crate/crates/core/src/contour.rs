//! Level-set extraction: marching squares in 2D, linear-interpolated sign
//! changes in 1D.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::grid::{fmt_f64, GridFunction};

/// Ordered vertex list along one connected piece of a level set.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    /// Whether the last vertex connects back to the first.
    pub closed: bool,
}

impl Polyline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polygon length, including the closing segment when closed.
    pub fn length(&self) -> f64 {
        let mut total: f64 = self.points.windows(2).map(|w| dist(w[0], w[1])).sum();
        if self.closed && self.points.len() > 2 {
            total += dist(self.points[self.points.len() - 1], self.points[0]);
        }
        total
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Level set `{u = level}` of a grid function. In 1D each crossing is a
/// single-vertex component with `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundary {
    pub dim: usize,
    pub level: f64,
    pub components: Vec<Polyline>,
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.components.iter().flat_map(|c| c.points.iter().copied())
    }

    /// 1D crossing locations in increasing order.
    pub fn crossings(&self) -> Vec<f64> {
        self.vertices().map(|p| p[0]).collect()
    }

    /// Mean distance of all contour vertices from `center`, `None` if empty.
    pub fn mean_radius(&self, center: [f64; 2]) -> Option<f64> {
        let (sum, count) = self
            .vertices()
            .fold((0.0, 0usize), |(s, c), p| (s + dist(p, center), c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    /// Largest deviation of a vertex distance from `radius`.
    pub fn max_radius_deviation(&self, center: [f64; 2], radius: f64) -> Option<f64> {
        self.vertices()
            .map(|p| (dist(p, center) - radius).abs())
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.max(d))))
    }

    /// Distance from `p` to the nearest vertex.
    pub fn distance_to(&self, p: [f64; 2]) -> Option<f64> {
        self.vertices()
            .map(|q| dist(p, q))
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.min(d))))
    }

    /// CSV with header `component_id,x` (1D) or `component_id,x,y` (2D),
    /// vertices in contour order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.dim == 1 { "component_id,x\n" } else { "component_id,x,y\n" });
        for (id, c) in self.components.iter().enumerate() {
            for p in &c.points {
                if self.dim == 1 {
                    let _ = writeln!(out, "{id},{}", fmt_f64(p[0]));
                } else {
                    let _ = writeln!(out, "{id},{},{}", fmt_f64(p[0]), fmt_f64(p[1]));
                }
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// `√(#nodes · h² / π)` for a 0/1 mask in 2D; `#nodes · h / 2` in 1D.
pub fn area_radius(mask: &GridFunction) -> f64 {
    let spec = mask.spec();
    let count = mask.values().iter().filter(|&&v| v > 0.5).count() as f64;
    if spec.dim() == 1 {
        0.5 * count * spec.h()
    } else {
        (count * spec.cell_volume() / std::f64::consts::PI).sqrt()
    }
}

/// Extracts `{u = level}`. A node is inside when `u > level`.
pub fn contour(u: &GridFunction, level: f64) -> FreeBoundary {
    let components = if u.spec().dim() == 1 {
        crossings_1d(u, level)
    } else {
        marching_squares(u, level)
    };
    FreeBoundary {
        dim: u.spec().dim(),
        level,
        components,
    }
}

fn crossings_1d(u: &GridFunction, level: f64) -> Vec<Polyline> {
    let spec = u.spec();
    let vals = u.values();
    let mut out = Vec::new();
    for k in 0..spec.len() - 1 {
        let (a, b) = (vals[k] - level, vals[k + 1] - level);
        if (a > 0.0) != (b > 0.0) {
            let t = a / (a - b);
            let x = spec.coord(0, k) + t * spec.h();
            out.push(Polyline {
                points: vec![[x, 0.0]],
                closed: false,
            });
        }
    }
    out
}

/// Edge ids: `2k` joins node `k` to its +x neighbour, `2k + 1` to its +y
/// neighbour.
fn marching_squares(u: &GridFunction, level: f64) -> Vec<Polyline> {
    let spec = u.spec();
    let (nx, ny) = (spec.n(0), spec.n(1));
    let h = spec.h();
    let vals = u.values();
    let d = |k: usize| vals[k] - level;

    let mut points: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut crossing = |edge: usize| -> usize {
        points.entry(edge).or_insert_with(|| {
            let k = edge / 2;
            let other = if edge % 2 == 0 { k + ny } else { k + 1 };
            let (a, b) = (d(k), d(other));
            let t = a / (a - b);
            let p = spec.point(k);
            if edge % 2 == 0 {
                [p[0] + t * h, p[1]]
            } else {
                [p[0], p[1] + t * h]
            }
        });
        edge
    };

    let mut segments: Vec<[usize; 2]> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let k00 = i * ny + j;
            let k10 = k00 + ny;
            let k01 = k00 + 1;
            let k11 = k10 + 1;
            let inside = [d(k00) > 0.0, d(k10) > 0.0, d(k11) > 0.0, d(k01) > 0.0];
            // edges in corner order: bottom (00-10), right (10-11), top (01-11), left (00-01)
            let edges = [2 * k00, 2 * k10 + 1, 2 * k01, 2 * k00 + 1];
            let case = inside
                .iter()
                .enumerate()
                .fold(0u8, |acc, (bit, &b)| acc | ((b as u8) << bit));
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 | 10 => {
                    let centre = 0.25 * (d(k00) + d(k10) + d(k11) + d(k01));
                    // connect around the corners that share the centre's side
                    if (centre > 0.0) == (case == 5) {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segments.push([crossing(edges[a]), crossing(edges[b])]);
            }
        }
    }
    chain(&segments, &points)
}

fn chain(segments: &[[usize; 2]], points: &HashMap<usize, [f64; 2]>) -> Vec<Polyline> {
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            incident.entry(e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> Polyline {
        let mut ids = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let next = if segments[seg][0] == at { segments[seg][1] } else { segments[seg][0] };
            if next == start_edge {
                return Polyline {
                    points: ids.iter().map(|e| points[e]).collect(),
                    closed: true,
                };
            }
            ids.push(next);
            at = next;
            match incident[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => {
                    return Polyline {
                        points: ids.iter().map(|e| points[e]).collect(),
                        closed: false,
                    }
                }
            }
        }
    };

    // open chains start at an end touching a single segment
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        if let Some(&end) = segments[s].iter().find(|e| incident[e].len() == 1) {
            out.push(walk(s, end, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(s, segments[s][0], &mut used));
        }
    }
    out
}
