use super::linalg;
use super::Facet;

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone chain. Returns counter-clockwise vertex indices starting at the
/// lexicographically smallest point, one facet per edge, and the area.
pub fn hull(points: &[Vec<f64>], eps: f64) -> (Vec<usize>, Vec<Facet>, f64) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i][0]
            .total_cmp(&points[j][0])
            .then(points[i][1].total_cmp(&points[j][1]))
            .then(i.cmp(&j))
    });
    order.dedup_by(|j, i| points[*i] == points[*j]);
    if order.len() < 3 {
        return (order, Vec::new(), 0.0);
    }

    // pop while the turn is not strictly left by more than eps in distance
    let turns_left = |o: usize, a: usize, b: usize| {
        let base = linalg::norm(&linalg::sub(&points[b], &points[o]));
        cross(&points[o], &points[a], &points[b]) > eps * base
    };
    let mut chain: Vec<usize> = Vec::with_capacity(2 * order.len());
    for &i in &order {
        while chain.len() >= 2 && !turns_left(chain[chain.len() - 2], chain[chain.len() - 1], i) {
            chain.pop();
        }
        chain.push(i);
    }
    let lower_len = chain.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while chain.len() >= lower_len && !turns_left(chain[chain.len() - 2], chain[chain.len() - 1], i) {
            chain.pop();
        }
        chain.push(i);
    }
    chain.pop();

    let k = chain.len();
    let mut facets = Vec::with_capacity(k);
    let mut twice_area = 0.0;
    for e in 0..k {
        let p = &points[chain[e]];
        let q = &points[chain[(e + 1) % k]];
        twice_area += p[0] * q[1] - q[0] * p[1];
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let len = (dx * dx + dy * dy).sqrt();
        let normal = vec![dy / len, -dx / len];
        let offset = linalg::dot(&normal, p).max(linalg::dot(&normal, q));
        facets.push(Facet { normal, offset });
    }
    (chain, facets, 0.5 * twice_area.abs())
}
