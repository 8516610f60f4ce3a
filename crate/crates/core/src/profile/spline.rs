use crate::error::{Error, Result};

/// C¹ piecewise-quadratic lift of node values `b_0 .. b_{n-1}` with spacing
/// `h`.
///
/// Piece `k` is centered at node `k` and written `x + y·(s - kh) + z·(s - kh)²`.
/// Interior pieces cover `[h(k - ½), h(k + ½)]`; the two boundary pieces
/// cover the half intervals at either end and are linear. At every midpoint
/// `h(i + ½)` the spline equals `(b_i + b_{i+1})/2` with slope
/// `(b_{i+1} - b_i)/h`, and at the ends it equals `b_0` and `b_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSpline {
    h: f64,
    pieces: Vec<[f64; 3]>,
}

impl QuadraticSpline {
    pub fn new(b: &[f64], h: f64) -> Result<Self> {
        let n = b.len();
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Precondition(format!("step must be positive, got {h}")));
        }
        let mut pieces = Vec::with_capacity(n);
        pieces.push([b[0], (b[1] - b[0]) / h, 0.0]);
        for k in 1..n - 1 {
            let (prev, mid, next) = (b[k - 1], b[k], b[k + 1]);
            pieces.push([
                (6.0 * mid + prev + next) / 8.0,
                (next - prev) / (2.0 * h),
                (next + prev - 2.0 * mid) / (2.0 * h * h),
            ]);
        }
        pieces.push([b[n - 1], (b[n - 1] - b[n - 2]) / h, 0.0]);
        Ok(Self { h, pieces })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Number of nodes (and pieces).
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// End of the domain, `(n - 1)·h`.
    pub fn end(&self) -> f64 {
        (self.pieces.len() - 1) as f64 * self.h
    }

    /// `(x, y, z)` of piece `k`.
    pub fn coefficients(&self, k: usize) -> [f64; 3] {
        self.pieces[k]
    }

    /// Index of the piece containing `s`; midpoints belong to the right piece.
    pub fn piece(&self, s: f64) -> usize {
        let k = (s / self.h + 0.5).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.pieces.len() - 1)
        }
    }

    /// Breakpoints `[lo, hi]` of piece `k`.
    pub fn piece_bounds(&self, k: usize) -> (f64, f64) {
        let n = self.pieces.len();
        let lo = if k == 0 { 0.0 } else { (k as f64 - 0.5) * self.h };
        let hi = if k + 1 == n { self.end() } else { (k as f64 + 0.5) * self.h };
        (lo, hi)
    }

    #[inline]
    pub fn eval_piece(&self, k: usize, s: f64) -> f64 {
        let [x, y, z] = self.pieces[k];
        let u = s - k as f64 * self.h;
        x + u * (y + u * z)
    }

    #[inline]
    pub fn derivative_piece(&self, k: usize, s: f64) -> f64 {
        let [_, y, z] = self.pieces[k];
        y + 2.0 * z * (s - k as f64 * self.h)
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.eval_piece(self.piece(s), s)
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        self.derivative_piece(self.piece(s), s)
    }

    /// Smallest value over the whole domain (vertices of interior pieces
    /// included).
    pub fn minimum(&self) -> f64 {
        let mut min = f64::INFINITY;
        for k in 0..self.pieces.len() {
            let (lo, hi) = self.piece_bounds(k);
            min = min.min(self.eval_piece(k, lo)).min(self.eval_piece(k, hi));
            let [_, y, z] = self.pieces[k];
            if z > 0.0 {
                let vertex = k as f64 * self.h - y / (2.0 * z);
                if vertex > lo && vertex < hi {
                    min = min.min(self.eval_piece(k, vertex));
                }
            }
        }
        min
    }
}

/// `2h·Σ 1/(√b_i + √b_{i+1})`: the traversal time of a profile whose
/// squared speed is `b` at the nodes, with constant path acceleration on
/// each edge. `+inf` when two neighbouring nodes are both at rest.
pub fn travel_time(b: &[f64], h: f64) -> Result<f64> {
    if let Some((index, &value)) = b.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeSpeed { index, value });
    }
    let mut total = 0.0;
    for w in b.windows(2) {
        let denom = w[0].sqrt() + w[1].sqrt();
        if denom == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += 1.0 / denom;
    }
    Ok(2.0 * h * total)
}
