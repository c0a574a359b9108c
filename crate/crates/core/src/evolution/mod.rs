//! Method-of-lines machinery shared by both evolution engines: staggered
//! grid, sixth-order finite differences with even reflection at the origin,
//! eighth-difference dissipation and a seven-stage sixth-order Runge–Kutta
//! step.

pub mod phys;
pub mod ss;

use serde::Serialize;

use crate::real::Real;

/// Finite-difference weights for derivatives 0..=`order` at `x0` from values
/// at `nodes` (Fornberg's recursion). Row k holds the weights of the k-th
/// derivative.
pub fn fornberg<R: Real>(x0: &R, nodes: &[R], order: usize) -> Vec<Vec<R>> {
    let n = nodes.len();
    let ctx = x0.ctx();
    let zero = R::zero(&ctx);
    let mut c = vec![vec![zero.clone(); n]; order + 1];
    c[0][0] = R::one(&ctx);
    let mut c1 = R::one(&ctx);
    let mut c4 = nodes[0].clone() - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = R::one(&ctx);
        let c5 = c4.clone();
        c4 = nodes[i].clone() - x0;
        for j in 0..i {
            let c3 = nodes[i].clone() - &nodes[j];
            c2 *= &c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1.clone()
                        * (c[k - 1][i - 1].clone().mul_int(k as i64) - c5.clone() * &c[k][i - 1])
                        / &c2;
                }
                c[0][i] = -(c1.clone() * &c5 * &c[0][i - 1]) / &c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4.clone() * &c[k][j] - c[k - 1][j].clone().mul_int(k as i64)) / &c3;
            }
            c[0][j] = c4.clone() * &c[0][j] / &c3;
        }
        c1 = c2;
    }
    c
}

/// Staggered grid y_j = (j + 1/2)·dy, j = 0..n.
#[derive(Debug, Clone, Serialize)]
pub struct Grid<R: Real> {
    pub n: usize,
    #[serde(with = "crate::real::decimal")]
    pub dy: R,
    #[serde(skip)]
    pub nodes: Vec<R>,
}

impl<R: Real> Grid<R> {
    pub fn new(n: usize, dy: R) -> Self {
        let nodes = (0..n)
            .map(|j| dy.clone().mul_int(2 * j as i64 + 1).div_int(2))
            .collect();
        Grid { n, dy, nodes }
    }

    pub fn y_max(&self) -> R {
        self.dy.clone().mul_int(self.n as i64)
    }

    /// Value at y = 0 of the even interpolant through the first three nodes
    /// and their mirror images.
    pub fn origin_value(&self, f: &[R]) -> R {
        (f[0].clone().mul_int(150) - f[1].clone().mul_int(25) + f[2].clone().mul_int(3)).div_int(128)
    }
}

/// How a stencil treats the outer end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// Sixth-order one-sided stencils at the last three nodes, no
    /// dissipation at the last four.
    OneSided,
    /// Values beyond the grid taken as zero, centered stencils everywhere.
    ZeroGhost,
}

/// Sparse linear functional on a field: Σ w_k f[idx_k]. Mirror-image
/// values left of the origin are folded onto the nodes they copy.
#[derive(Debug, Clone)]
pub struct Row<R> {
    pub idx: Vec<usize>,
    pub w: Vec<R>,
}

impl<R: Real> Row<R> {
    fn from_offsets(j: isize, first: isize, weights: &[R], n: usize, scale: &R) -> Self {
        let mut idx: Vec<usize> = Vec::new();
        let mut w: Vec<R> = Vec::new();
        for (k, wk) in weights.iter().enumerate() {
            let mut i = j + first + k as isize;
            if i < 0 {
                i = -i - 1;
            }
            if i as usize >= n {
                continue;
            }
            let v = wk.clone() * scale;
            match idx.iter().position(|&x| x == i as usize) {
                Some(p) => w[p] += v,
                None => {
                    idx.push(i as usize);
                    w.push(v);
                }
            }
        }
        Row { idx, w }
    }

    pub fn empty() -> Self {
        Row {
            idx: Vec::new(),
            w: Vec::new(),
        }
    }

    #[inline]
    pub fn apply(&self, f: &[R]) -> R {
        let mut acc = f[0].int(0);
        for (i, w) in self.idx.iter().zip(&self.w) {
            acc += w.clone() * &f[*i];
        }
        acc
    }

    /// Σ cᵢ·rowᵢ.
    pub fn combine(terms: &[(R, &Row<R>)]) -> Self {
        let mut out = Row::empty();
        for (c, row) in terms {
            for (i, w) in row.idx.iter().zip(&row.w) {
                let v = c.clone() * w;
                match out.idx.iter().position(|x| x == i) {
                    Some(p) => out.w[p] += v,
                    None => {
                        out.idx.push(*i);
                        out.w.push(v);
                    }
                }
            }
        }
        out
    }

    /// The row of the identity at node j.
    pub fn unit(j: usize, one: R) -> Self {
        Row {
            idx: vec![j],
            w: vec![one],
        }
    }
}

/// First and second derivative and dissipation rows for every node of an
/// even field.
#[derive(Debug, Clone)]
pub struct Operators<R> {
    pub d1: Vec<Row<R>>,
    pub d2: Vec<Row<R>>,
    /// ε·δ⁸/dy
    pub diss: Vec<Row<R>>,
}

impl<R: Real> Operators<R> {
    pub fn new(n: usize, dy: &R, outer: OuterBoundary, eps: &R) -> Self {
        let ctx = dy.ctx();
        let int = |k: i64| R::from_int(k, &ctx);
        let centered: Vec<R> = (-3..=3).map(int).collect();
        let w = fornberg(&int(0), &centered, 2);
        let inv_dy = R::one(&ctx) / dy;
        let inv_dy2 = inv_dy.square();
        let eps_dy = eps.clone() * &inv_dy;
        let kreiss: Vec<R> = [1, -8, 28, -56, 70, -56, 28, -8, 1].iter().map(|&k| int(k)).collect();
        let nodes7: Vec<R> = (-6..=0).map(int).collect();
        let nodes8: Vec<R> = (-7..=0).map(int).collect();
        let mut ops = Operators {
            d1: Vec::with_capacity(n),
            d2: Vec::with_capacity(n),
            diss: Vec::with_capacity(n),
        };
        for j in 0..n {
            let ji = j as isize;
            if j + 3 < n || outer == OuterBoundary::ZeroGhost {
                ops.d1.push(Row::from_offsets(ji, -3, &w[1], n, &inv_dy));
                ops.d2.push(Row::from_offsets(ji, -3, &w[2], n, &inv_dy2));
            } else {
                // last node at offset 0, this one at −(n−1−j)
                let at = int(j as i64 - n as i64 + 1);
                let w1 = fornberg(&at, &nodes7, 1).swap_remove(1);
                let w2 = fornberg(&at, &nodes8, 2).swap_remove(2);
                let last = n as isize - 1;
                ops.d1.push(Row::from_offsets(last, -6, &w1, n, &inv_dy));
                ops.d2.push(Row::from_offsets(last, -7, &w2, n, &inv_dy2));
            }
            if eps.is_zero() || (j + 4 >= n && outer == OuterBoundary::OneSided) {
                ops.diss.push(Row::empty());
            } else {
                ops.diss.push(Row::from_offsets(ji, -4, &kreiss, n, &eps_dy));
            }
        }
        ops
    }
}

/// Seven-stage sixth-order explicit Runge–Kutta tableau (Butcher).
#[derive(Debug, Clone)]
pub struct Rk6<R> {
    pub c: Vec<R>,
    pub a: Vec<Vec<R>>,
    pub b: Vec<R>,
}

impl<R: Real> Rk6<R> {
    pub fn new(ctx: &R::Ctx) -> Self {
        let q = |p: i64, q: i64| R::ratio(p, q, ctx);
        Rk6 {
            c: vec![q(0, 1), q(1, 3), q(2, 3), q(1, 3), q(1, 2), q(1, 2), q(1, 1)],
            a: vec![
                vec![],
                vec![q(1, 3)],
                vec![q(0, 1), q(2, 3)],
                vec![q(1, 12), q(1, 3), q(-1, 12)],
                vec![q(-1, 16), q(9, 8), q(-3, 16), q(-3, 8)],
                vec![q(0, 1), q(9, 8), q(-3, 8), q(-3, 4), q(1, 2)],
                vec![q(9, 44), q(-9, 11), q(63, 44), q(18, 11), q(0, 1), q(-16, 11)],
            ],
            b: vec![
                q(11, 120),
                q(0, 1),
                q(27, 40),
                q(27, 40),
                q(-4, 15),
                q(-4, 15),
                q(11, 120),
            ],
        }
    }

    /// One step of y′ = f(s, y). `f` writes the derivative into its output
    /// slice.
    pub fn step<E, F>(&self, s: &R, y: &[R], ds: &R, mut f: F) -> Result<Vec<R>, E>
    where
        F: FnMut(&R, &[R], &mut [R]) -> Result<(), E>,
    {
        let m = y.len();
        let zero = ds.int(0);
        let mut k: Vec<Vec<R>> = Vec::with_capacity(7);
        let mut stage = y.to_vec();
        for i in 0..7 {
            if i > 0 {
                for (idx, out) in stage.iter_mut().enumerate() {
                    let mut acc = zero.clone();
                    for (j, aij) in self.a[i].iter().enumerate() {
                        if !aij.is_zero() {
                            acc += aij.clone() * &k[j][idx];
                        }
                    }
                    *out = y[idx].clone() + acc * ds;
                }
            }
            let mut ki = vec![zero.clone(); m];
            let si = s.clone() + self.c[i].clone() * ds;
            f(&si, &stage, &mut ki)?;
            k.push(ki);
        }
        let mut out = y.to_vec();
        for (idx, o) in out.iter_mut().enumerate() {
            let mut acc = zero.clone();
            for (j, bj) in self.b.iter().enumerate() {
                if !bj.is_zero() {
                    acc += bj.clone() * &k[j][idx];
                }
            }
            *o += acc * ds;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_centered_weights() {
        let nodes: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        let w = fornberg(&0.0, &nodes, 2);
        let d1 = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d2 = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
        for k in 0..7 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn origin_interpolation_is_exact_for_even_quartics() {
        let g = Grid::new(10, 0.1f64);
        let f: Vec<f64> = g.nodes.iter().map(|y| 2.0 - y * y + 3.0 * y.powi(4)).collect();
        assert!((g.origin_value(&f) - 2.0).abs() < 1e-14);
    }

    fn sixth_order_error(outer: OuterBoundary) -> Vec<f64> {
        // derivatives of exp(−y²) including the reflected origin nodes
        [32usize, 64, 128]
            .iter()
            .map(|&n| {
                let dy = 6.0 / n as f64;
                let g = Grid::new(n, dy);
                let f: Vec<f64> = g.nodes.iter().map(|y| (-y * y).exp()).collect();
                let ops = Operators::new(n, &dy, outer, &0.0);
                let mut err: f64 = 0.0;
                for (j, y) in g.nodes.iter().enumerate() {
                    let (a, b) = (ops.d1[j].apply(&f), ops.d2[j].apply(&f));
                    let e = (-y * y).exp();
                    err = err.max((a + 2.0 * y * e).abs()).max((b - (4.0 * y * y - 2.0) * e).abs());
                }
                err
            })
            .collect()
    }

    #[test]
    fn stencils_converge_at_sixth_order() {
        for outer in [OuterBoundary::OneSided, OuterBoundary::ZeroGhost] {
            let e = sixth_order_error(outer);
            assert!(e[0] / e[1] > 40.0 && e[1] / e[2] > 48.0, "{outer:?} {e:?}");
        }
    }

    #[test]
    fn mirror_ghosts_fold_onto_nodes() {
        let ops = Operators::new(10, &1.0f64, OuterBoundary::OneSided, &0.0);
        // the first derivative of an even field is odd: a constant gives 0
        assert!(ops.d1[0].apply(&[1.0; 10]).abs() < 1e-15);
        assert!(ops.d1[0].idx.len() <= 4);
    }

    #[test]
    fn rk6_is_sixth_order() {
        let rk = Rk6::new(&());
        // y' = −y·cos(s), y(0) = 1, exact y = exp(−sin s)
        let err = |n: usize| {
            let ds = 2.0 / n as f64;
            let mut y = vec![1.0];
            for i in 0..n {
                let s = i as f64 * ds;
                y = rk
                    .step(&s, &y, &ds, |s, y, out| -> Result<(), ()> {
                        out[0] = -y[0] * s.cos();
                        Ok(())
                    })
                    .unwrap();
            }
            (y[0] - (-(2f64).sin()).exp()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((48.0..80.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn dissipation_annihilates_low_degree_polynomials() {
        let ops = Operators::new(30, &0.1f64, OuterBoundary::OneSided, &1.0);
        let f: Vec<f64> = (0..30).map(|j| ((j as f64 + 0.5) * 0.1).powi(6)).collect();
        for j in 0..30 {
            assert!(ops.diss[j].apply(&f).abs() < 1e-9);
        }
    }
}
