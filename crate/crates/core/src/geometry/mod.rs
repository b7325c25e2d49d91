//! Convex hulls, halfspace membership and volumes for point clouds in
//! dimensions 2 to 4.
//!
//! Planar hulls use Andrew's monotone chain; 3-D and 4-D hulls use an
//! incremental quickhull. Inputs that do not span their ambient dimension
//! are hulled inside their affine span and reported as degenerate with zero
//! volume and no facets.

mod hull2d;
mod linalg;
mod quickhull;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{ReachError, Result};

/// Supporting halfspace `normal · x <= offset` with a unit outward normal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.normal, x) - self.offset
    }
}

/// Convex polytope given by its vertices and facet halfspaces.
#[derive(Clone, Debug, Serialize)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    pub volume: f64,
    #[serde(skip)]
    pub vertex_indices: Vec<usize>,
    #[serde(skip)]
    pub degenerate: bool,
}

impl Polytope {
    /// Largest facet violation `max_f (n_f · x - b_f)`; non-positive inside.
    pub fn excess(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        Ok(self
            .facets
            .iter()
            .map(|f| f.signed_distance(x))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if self.degenerate {
            return Err(ReachError::DegenerateGeometry(
                "membership needs a full-dimensional polytope".into(),
            ));
        }
        if x.len() != self.dim {
            return Err(ReachError::Dimension(format!(
                "query point has {} coordinates, polytope dimension is {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polytope serializes")
    }
}

/// Convex hull of `points` in dimension `dim` (2, 3 or 4).
///
/// Vertices are a subset of the input; results depend only on the input
/// order. Tolerances scale with the bounding-box diagonal.
pub fn convex_hull(points: &[Vec<f64>], dim: usize) -> Result<Polytope> {
    if !(2..=4).contains(&dim) {
        return Err(ReachError::Unsupported(format!(
            "convex hulls are implemented for dimensions 2 to 4, got {dim}"
        )));
    }
    if points.is_empty() {
        return Err(ReachError::Domain("convex hull of an empty point set".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(ReachError::Dimension(format!(
            "point with {} coordinates in a {dim}-dimensional hull",
            p.len()
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ReachError::Domain("hull input has non-finite coordinates".into()));
    }

    let eps = 1e-10 * linalg::bbox_diagonal(points).max(f64::MIN_POSITIVE);
    let all: Vec<usize> = (0..points.len()).collect();
    let span = linalg::affine_span(points, &all, eps);

    if span.basis.len() < dim {
        let vertex_indices = degenerate_vertices(points, &span, eps);
        return Ok(Polytope {
            dim,
            vertices: vertex_indices.iter().map(|&i| points[i].clone()).collect(),
            facets: Vec::new(),
            volume: 0.0,
            vertex_indices,
            degenerate: true,
        });
    }

    let (vertex_indices, facets, volume) = match dim {
        2 => hull2d::hull(points, eps),
        _ => quickhull::hull(points, &span.simplex, eps)?,
    };
    Ok(Polytope {
        dim,
        vertices: vertex_indices.iter().map(|&i| points[i].clone()).collect(),
        facets,
        volume,
        vertex_indices,
        degenerate: false,
    })
}

/// Hull of nalgebra vectors, all of dimension `dim`.
pub fn convex_hull_of(points: &[DVector<f64>], dim: usize) -> Result<Polytope> {
    let pts: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().collect()).collect();
    convex_hull(&pts, dim)
}

/// Extreme points of a set that lies in a proper affine subspace.
fn degenerate_vertices(points: &[Vec<f64>], span: &linalg::AffineSpan, eps: f64) -> Vec<usize> {
    let k = span.basis.len();
    if k == 0 {
        return vec![span.simplex[0]];
    }
    let local: Vec<Vec<f64>> = points.iter().map(|p| span.coordinates(p)).collect();
    let mut idx = match k {
        1 => {
            let mut lo = 0;
            let mut hi = 0;
            for (i, p) in local.iter().enumerate() {
                if p[0] < local[lo][0] {
                    lo = i;
                }
                if p[0] > local[hi][0] {
                    hi = i;
                }
            }
            vec![lo, hi]
        }
        2 => hull2d::hull(&local, eps).0,
        _ => {
            let all: Vec<usize> = (0..local.len()).collect();
            let sub = linalg::affine_span(&local, &all, eps);
            match quickhull::hull(&local, &sub.simplex, eps) {
                Ok((v, _, _)) => v,
                Err(_) => sub.simplex.clone(),
            }
        }
    };
    if k != 2 {
        idx.sort_unstable();
    }
    idx.dedup();
    idx
}

/// Area for `dim = 2`, volume otherwise; zero for degenerate polytopes.
pub fn volume(poly: &Polytope) -> f64 {
    poly.volume
}

/// True when every facet inequality holds within `tol`.
pub fn contains(poly: &Polytope, x: &[f64], tol: f64) -> Result<bool> {
    Ok(poly.excess(x)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]
    }

    fn cube_corners() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for i in 0..8u32 {
            pts.push((0..3).map(|b| ((i >> b) & 1) as f64).collect());
        }
        pts
    }

    fn det(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
    }

    #[test]
    fn square_with_center() {
        let mut pts = square();
        pts.push(vec![0.5, 0.5]);
        let hull = convex_hull(&pts, 2).unwrap();
        assert_eq!(hull.vertices.len(), 4);
        assert!(!hull.vertex_indices.contains(&4));
        assert!((hull.volume - 1.0).abs() <= 1e-12);
        assert!(contains(&hull, &[0.5, 0.5], 0.0).unwrap());
        assert!(!contains(&hull, &[2.0, 0.0], 1e-9).unwrap());
        assert_eq!(hull.facets.len(), 4);
    }

    #[test]
    fn cube_volume_and_facets() {
        let mut pts = cube_corners();
        pts.push(vec![0.5, 0.5, 0.5]);
        pts.push(vec![0.5, 0.5, 1.0]); // face centre is not a vertex
        let hull = convex_hull(&pts, 3).unwrap();
        assert!((hull.volume - 1.0).abs() <= 1e-10);
        assert_eq!(hull.vertices.len(), 8);
        assert_eq!(hull.facets.len(), 6);
    }

    #[test]
    fn simplices_in_three_and_four_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [3usize, 4] {
            for _ in 0..20 {
                let pts: Vec<Vec<f64>> = (0..=dim)
                    .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let hull = convex_hull(&pts, dim).unwrap();
                let edges: Vec<Vec<f64>> = pts[1..]
                    .iter()
                    .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
                    .collect();
                let fact: f64 = (1..=dim).map(|k| k as f64).product();
                let want = det(&edges).abs() / fact;
                assert!((hull.volume - want).abs() <= 1e-10, "dim {dim}");
                assert_eq!(hull.vertices.len(), dim + 1);
                assert_eq!(hull.facets.len(), dim + 1);
            }
        }
    }

    #[test]
    fn disk_points_are_all_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let r: f64 = rng.random::<f64>().sqrt();
                let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                vec![r * th.cos(), r * th.sin()]
            })
            .collect();
        let hull = convex_hull(&pts, 2).unwrap();
        for p in &pts {
            assert!(contains(&hull, p, 1e-12).unwrap());
        }
    }

    #[test]
    fn random_clouds_contain_their_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [3usize, 4] {
            let pts: Vec<Vec<f64>> = (0..400)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let hull = convex_hull(&pts, dim).unwrap();
            for p in &pts {
                assert!(contains(&hull, p, 1e-9).unwrap());
            }
            for v in &hull.vertices {
                for f in &hull.facets {
                    assert!(f.signed_distance(v) <= 1e-9);
                }
            }
            assert!(hull.volume > 0.0 && hull.volume < 2f64.powi(dim as i32));
        }
    }

    #[test]
    fn collinear_points_form_a_degenerate_segment() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]];
        let hull = convex_hull(&pts, 2).unwrap();
        assert!(hull.degenerate);
        assert_eq!(hull.vertex_indices, vec![1, 3]);
        assert_eq!(hull.volume, 0.0);
        assert!(matches!(contains(&hull, &[0.0, 0.0], 1e-9), Err(ReachError::DegenerateGeometry(_))));
    }

    #[test]
    fn planar_points_in_space_are_degenerate() {
        let pts = vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![0.5, 0.5, 1.0],
        ];
        let hull = convex_hull(&pts, 3).unwrap();
        assert!(hull.degenerate);
        assert_eq!(hull.volume, 0.0);
        let mut v = hull.vertex_indices.clone();
        v.sort_unstable();
        assert_eq!(v, vec![0, 1, 2, 3]);
        let single = convex_hull(&[vec![1.0, 2.0]], 2).unwrap();
        assert_eq!(single.vertex_indices, vec![0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(convex_hull(&[vec![0.0]], 1), Err(ReachError::Unsupported(_))));
        assert!(matches!(convex_hull(&[vec![0.0; 5]], 5), Err(ReachError::Unsupported(_))));
        assert!(matches!(convex_hull(&[], 2), Err(ReachError::Domain(_))));
        assert!(matches!(convex_hull(&[vec![0.0, 1.0, 2.0]], 2), Err(ReachError::Dimension(_))));
    }

    #[test]
    fn json_has_the_export_fields() {
        let hull = convex_hull(&square(), 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&hull.to_json()).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&String> = obj.keys().collect();
        keys.sort();
        assert_eq!(keys, ["dim", "facets", "vertices", "volume"]);
        assert!(v["facets"][0]["normal"].is_array());
        assert!(v["facets"][0]["offset"].is_number());
    }
}
