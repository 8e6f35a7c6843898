//! Reference implementations that share no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// `x, y, w, h, theta(deg)`.
pub type Box2 = [f64; 5];
/// `x, y, z, w, h, l, theta(deg)`.
pub type Box3 = [f64; 7];

pub fn cov2(b: &Box2) -> [[f64; 2]; 2] {
    let (s, c) = b[4].to_radians().sin_cos();
    let (a, d) = (b[2] * b[2] / 4.0, b[3] * b[3] / 4.0);
    [[a * c * c + d * s * s, (a - d) * s * c], [(a - d) * s * c, a * s * s + d * c * c]]
}

pub fn cov3(b: &Box3) -> [[f64; 3]; 3] {
    let (s, c) = b[6].to_radians().sin_cos();
    let (a, d, e) = (b[3] * b[3] / 4.0, b[4] * b[4] / 4.0, b[5] * b[5] / 4.0);
    [
        [a * c * c + d * s * s, (a - d) * s * c, 0.0],
        [(a - d) * s * c, a * s * s + d * c * c, 0.0],
        [0.0, 0.0, e],
    ]
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Uses det(Σ₁(Σ₁+Σ₂)⁻¹Σ₂) = |Σ₁||Σ₂|/|Σ₁+Σ₂|, so no inverse is formed.
pub fn kfiou2(a: &Box2, b: &Box2) -> f64 {
    let (s1, s2) = (cov2(a), cov2(b));
    let mut sum = s1;
    for i in 0..2 {
        for j in 0..2 {
            sum[i][j] += s2[i][j];
        }
    }
    let v = |d: f64| 4.0 * d.sqrt();
    let (v1, v2, vi) = (v(det2(&s1)), v(det2(&s2)), v(det2(&s1) * det2(&s2) / det2(&sum)));
    vi / (v1 + v2 - vi)
}

pub fn kfiou3(a: &Box3, b: &Box3) -> f64 {
    let (s1, s2) = (cov3(a), cov3(b));
    let mut sum = s1;
    for i in 0..3 {
        for j in 0..3 {
            sum[i][j] += s2[i][j];
        }
    }
    let v = |d: f64| 8.0 * d.sqrt();
    let (v1, v2, vi) = (v(det3(&s1)), v(det3(&s2)), v(det3(&s1) * det3(&s2) / det3(&sum)));
    vi / (v1 + v2 - vi)
}

fn corners(b: &Box2) -> Vec<(f64, f64)> {
    let (s, c) = b[4].to_radians().sin_cos();
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|(u, v)| {
            let (dx, dy) = (u * b[2] / 2.0, v * b[3] / 2.0);
            (b[0] + c * dx - s * dy, b[1] + s * dx + c * dy)
        })
        .collect()
}

fn shoelace(p: &[(f64, f64)]) -> f64 {
    let n = p.len();
    (0..n).map(|i| p[i].0 * p[(i + 1) % n].1 - p[(i + 1) % n].0 * p[i].1).sum::<f64>().abs() / 2.0
}

/// Sutherland-Hodgman clipping of one box by the other's four half-planes.
pub fn polygon_iou(a: &Box2, b: &Box2) -> f64 {
    let mut poly = corners(a);
    let clip = corners(b);
    for i in 0..4 {
        let (p, q) = (clip[i], clip[(i + 1) % 4]);
        let side = |r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
        let mut out = Vec::new();
        for j in 0..poly.len() {
            let (cur, nxt) = (poly[j], poly[(j + 1) % poly.len()]);
            let (sc, sn) = (side(cur), side(nxt));
            if sc >= 0.0 {
                out.push(cur);
            }
            if (sc >= 0.0) != (sn >= 0.0) {
                let t = sc / (sc - sn);
                out.push((cur.0 + t * (nxt.0 - cur.0), cur.1 + t * (nxt.1 - cur.1)));
            }
        }
        poly = out;
        if poly.is_empty() {
            return 0.0;
        }
    }
    let inter = shoelace(&poly);
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Population variance of `a - b`.
pub fn gap_variance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - y - mean).powi(2)).sum::<f64>() / n
}

pub fn random_box2(r: &mut ChaCha8Rng, center: f64, lo: f64, hi: f64) -> Box2 {
    [
        uniform(r, -center, center),
        uniform(r, -center, center),
        uniform(r, lo, hi),
        uniform(r, lo, hi),
        uniform(r, -90.0, 90.0),
    ]
}

pub fn random_box3(r: &mut ChaCha8Rng, center: f64, lo: f64, hi: f64) -> Box3 {
    [
        uniform(r, -center, center),
        uniform(r, -center, center),
        uniform(r, -center, center),
        uniform(r, lo, hi),
        uniform(r, lo, hi),
        uniform(r, lo, hi),
        uniform(r, -90.0, 90.0),
    ]
}
