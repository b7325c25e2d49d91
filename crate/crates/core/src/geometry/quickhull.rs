//! Incremental quickhull for dimensions 3 and 4.

use std::collections::BTreeMap;

use super::linalg::{self, dot, hyperplane_normal};
use super::Facet;
use crate::error::{ReachError, Result};

struct Simplex {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Simplex {
    fn distance(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

fn oriented(points: &[Vec<f64>], verts: Vec<usize>, interior: &[f64]) -> Option<Simplex> {
    let pts: Vec<&[f64]> = verts.iter().map(|&i| points[i].as_slice()).collect();
    let mut normal = hyperplane_normal(&pts)?;
    let mut offset = dot(&normal, pts[0]);
    if dot(&normal, interior) - offset > 0.0 {
        normal.iter_mut().for_each(|x| *x = -*x);
        offset = -offset;
    }
    Some(Simplex {
        verts,
        normal,
        offset,
        outside: Vec::new(),
        alive: true,
    })
}

/// Returns sorted vertex indices, merged facets, and the volume.
pub fn hull(points: &[Vec<f64>], simplex: &[usize], eps: f64) -> Result<(Vec<usize>, Vec<Facet>, f64)> {
    let dim = points[simplex[0]].len();
    let interior: Vec<f64> = (0..dim)
        .map(|k| simplex.iter().map(|&i| points[i][k]).sum::<f64>() / simplex.len() as f64)
        .collect();

    let mut facets: Vec<Simplex> = Vec::new();
    for skip in 0..simplex.len() {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != skip)
            .map(|(_, &i)| i)
            .collect();
        let f = oriented(points, verts, &interior)
            .ok_or_else(|| ReachError::Numeric("degenerate initial simplex".into()))?;
        facets.push(f);
    }

    let assign = |facets: &mut [Simplex], range: std::ops::Range<usize>, candidates: &[usize]| {
        for &p in candidates {
            for f in &mut facets[range.clone()] {
                if f.alive && f.distance(&points[p]) > eps {
                    f.outside.push(p);
                    break;
                }
            }
        }
    };
    let rest: Vec<usize> = (0..points.len()).filter(|i| !simplex.contains(i)).collect();
    let n0 = facets.len();
    assign(&mut facets, 0..n0, &rest);

    let max_rounds = 4 * points.len() + 16;
    for _ in 0..max_rounds {
        let Some(fi) = facets.iter().position(|f| f.alive && !f.outside.is_empty()) else {
            break;
        };
        let apex = {
            let f = &facets[fi];
            let mut best = f.outside[0];
            let mut best_d = f.distance(&points[best]);
            for &p in &f.outside[1..] {
                let d = f.distance(&points[p]);
                if d > best_d || (d == best_d && p < best) {
                    best = p;
                    best_d = d;
                }
            }
            best
        };

        let visible: Vec<usize> = (0..facets.len())
            .filter(|&i| facets[i].alive && facets[i].distance(&points[apex]) > eps)
            .collect();

        // ridges seen exactly once among visible facets form the horizon
        let mut ridges: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for &i in &visible {
            let verts = &facets[i].verts;
            for skip in 0..verts.len() {
                let mut ridge: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &i in &visible {
            facets[i].alive = false;
            orphans.extend(facets[i].outside.drain(..).filter(|&p| p != apex));
        }
        orphans.sort_unstable();
        orphans.dedup();

        let start = facets.len();
        for (ridge, count) in ridges {
            if count != 1 {
                continue;
            }
            let mut verts = ridge;
            verts.push(apex);
            if let Some(f) = oriented(points, verts, &interior) {
                facets.push(f);
            }
        }
        let end = facets.len();
        assign(&mut facets, start..end, &orphans);
    }

    let alive: Vec<&Simplex> = facets.iter().filter(|f| f.alive).collect();
    if alive.iter().any(|f| !f.outside.is_empty()) {
        return Err(ReachError::Numeric("quickhull did not terminate".into()));
    }

    let mut candidates: Vec<usize> = alive.iter().flat_map(|f| f.verts.iter().copied()).collect();
    candidates.sort_unstable();
    candidates.dedup();

    let centre: Vec<f64> = (0..dim)
        .map(|k| candidates.iter().map(|&i| points[i][k]).sum::<f64>() / candidates.len() as f64)
        .collect();
    let fact: f64 = (1..=dim).map(|k| k as f64).product();
    let volume: f64 = alive
        .iter()
        .map(|f| {
            let rows: Vec<Vec<f64>> = f.verts.iter().map(|&i| linalg::sub(&points[i], &centre)).collect();
            linalg::small_det(&rows).abs()
        })
        .sum::<f64>()
        / fact;

    // merge coplanar simplices into one halfspace each
    let mut merged: Vec<(Facet, Vec<usize>)> = Vec::new();
    for f in &alive {
        let slot = merged.iter_mut().find(|(g, _)| {
            dot(&g.normal, &f.normal) > 0.0
                && f.verts.iter().all(|&v| g.signed_distance(&points[v]).abs() <= eps)
        });
        match slot {
            Some((g, verts)) => {
                verts.extend(f.verts.iter().copied());
                for &v in &f.verts {
                    g.offset = g.offset.max(dot(&g.normal, &points[v]));
                }
            }
            None => {
                let offset = f.verts.iter().map(|&v| dot(&f.normal, &points[v])).fold(f.offset, f64::max);
                merged.push((
                    Facet {
                        normal: f.normal.clone(),
                        offset,
                    },
                    f.verts.clone(),
                ));
            }
        }
    }

    // a vertex is extreme iff its incident halfspaces have full-rank normals
    let vertices: Vec<usize> = candidates
        .into_iter()
        .filter(|&v| {
            let incident: Vec<&[f64]> = merged
                .iter()
                .filter(|(_, verts)| verts.contains(&v))
                .map(|(g, _)| g.normal.as_slice())
                .collect();
            linalg::rank(&incident, 1e-6) == dim
        })
        .collect();

    Ok((vertices, merged.into_iter().map(|(f, _)| f).collect(), volume))
}
