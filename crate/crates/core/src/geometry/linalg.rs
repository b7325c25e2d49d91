//! Small dense helpers for the hull code.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn bbox_diagonal(points: &[Vec<f64>]) -> f64 {
    let dim = points[0].len();
    (0..dim)
        .map(|k| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[k]), hi.max(p[k]))
            });
            (hi - lo) * (hi - lo)
        })
        .sum::<f64>()
        .sqrt()
}

/// Orthonormal basis of the affine span around `origin`, plus the indices
/// of the affinely independent points that generated it.
pub struct AffineSpan {
    pub origin: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub simplex: Vec<usize>,
}

impl AffineSpan {
    pub fn coordinates(&self, p: &[f64]) -> Vec<f64> {
        let d = sub(p, &self.origin);
        self.basis.iter().map(|e| dot(e, &d)).collect()
    }
}

/// Greedy maximum-distance construction of an affinely independent set,
/// starting from the lexicographically smallest point.
pub fn affine_span(points: &[Vec<f64>], idx: &[usize], eps: f64) -> AffineSpan {
    let dim = points[idx[0]].len();
    let first = *idx
        .iter()
        .min_by(|&&i, &&j| {
            points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        })
        .unwrap();
    let origin = points[first].clone();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut simplex = vec![first];
    while basis.len() < dim {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for &i in idx {
            let mut r = sub(&points[i], &origin);
            for e in &basis {
                let c = dot(e, &r);
                r.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
            }
            let d = norm(&r);
            if best.as_ref().is_none_or(|b| d > b.1) {
                best = Some((i, d, r));
            }
        }
        match best {
            Some((i, d, r)) if d > eps => {
                // re-orthogonalize once for stability
                let mut r = r;
                for e in &basis {
                    let c = dot(e, &r);
                    r.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
                }
                let len = norm(&r);
                basis.push(r.into_iter().map(|x| x / len).collect());
                simplex.push(i);
            }
            _ => break,
        }
    }
    AffineSpan {
        origin,
        basis,
        simplex,
    }
}

/// Unit normal of the hyperplane through `dim` points in `R^dim` (dim <= 4),
/// from the cofactor expansion of the edge matrix. `None` if degenerate.
pub fn hyperplane_normal(pts: &[&[f64]]) -> Option<Vec<f64>> {
    let dim = pts[0].len();
    let edges: Vec<Vec<f64>> = pts[1..].iter().map(|p| sub(p, pts[0])).collect();
    let mut normal = vec![0.0; dim];
    for (j, slot) in normal.iter_mut().enumerate() {
        let minor: Vec<Vec<f64>> = edges
            .iter()
            .map(|e| e.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * small_det(&minor);
    }
    let len = norm(&normal);
    if len > 0.0 && len.is_finite() {
        Some(normal.into_iter().map(|x| x / len).collect())
    } else {
        None
    }
}

pub fn small_det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        n => nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant(),
    }
}

/// Numerical rank of a set of vectors by Gram-Schmidt with tolerance `tol`.
pub fn rank(vectors: &[&[f64]], tol: f64) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.to_vec();
        for e in &basis {
            let c = dot(e, &r);
            r.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
        }
        let len = norm(&r);
        if len > tol {
            basis.push(r.into_iter().map(|x| x / len).collect());
        }
    }
    basis.len()
}
