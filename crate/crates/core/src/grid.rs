//! Uniform grid on [0, 1] and the discrete calculus shared by the flux formulas.
//!
//! Fields live on the `n` nodes `x_i = i h`, `h = 1/(n-1)`. Fluxes live on the
//! `n + 1` cell faces of the node-centred control volumes: the two physical
//! boundaries `x = 0`, `x = 1` and the `n - 1` half-nodes `x_{i+1/2}`. The
//! boundary control volumes have width `h/2`, so the cell widths are exactly
//! the trapezoid weights and a flux-form update conserves `sum_i w_i u_i`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Smallest grid accepted; the four-point face stencils need four nodes.
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(invalid(format!("grid needs at least {MIN_NODES} nodes, got {n}")));
        }
        let h = 1.0 / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        nodes[n - 1] = 1.0;
        Ok(Self { n, h, nodes })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Face positions: `[0, x_{1/2}, ..., x_{n-3/2}, 1]`.
    pub fn faces(&self) -> Vec<f64> {
        let mut faces = Vec::with_capacity(self.n + 1);
        faces.push(0.0);
        faces.extend((0..self.n - 1).map(|i| (i as f64 + 0.5) * self.h));
        faces.push(1.0);
        faces
    }

    /// Trapezoid weights, equal to the control-volume widths.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] = 0.5 * self.h;
        w[self.n - 1] = 0.5 * self.h;
        w
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let interior: f64 = values[1..self.n - 1].iter().sum();
        self.h * (interior + 0.5 * (values[0] + values[self.n - 1]))
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n {
            return Err(invalid(format!("{what} has length {len}, grid has {} nodes", self.n)));
        }
        Ok(())
    }
}

/// Centred differences at the `n - 1` interior half-nodes.
pub fn gradient(field: &[f64], grid: &Grid1D) -> Vec<f64> {
    let h = grid.spacing();
    field.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// Flux-form divergence from the `n + 1` face values to the `n` nodes.
pub fn divergence(flux: &[f64], grid: &Grid1D) -> Vec<f64> {
    debug_assert_eq!(flux.len(), grid.len() + 1);
    flux.windows(2)
        .zip(grid.weights())
        .map(|(f, w)| (f[1] - f[0]) / w)
        .collect()
}

/// Reconstruction used to obtain field values and gradients on faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// Arithmetic means and two-point differences; one-sided second-order
    /// gradients on the boundary faces.
    Second,
    /// Four-point Lagrange reconstruction, centred in the interior and
    /// one-sided next to the boundaries.
    #[default]
    Fourth,
}

impl Stencil {
    /// Upper bound of `h^2 |lambda|` for the discrete Laplacian built from
    /// this reconstruction and the flux-form divergence.
    pub fn laplacian_radius(self) -> f64 {
        match self {
            Stencil::Second => 4.0,
            // |D4| = (27 + 1)/12 at the Nyquist mode, times |D2| = 2.
            Stencil::Fourth => 14.0 / 3.0,
        }
    }
}

/// Field values and gradients on the `n + 1` faces.
#[derive(Debug, Clone)]
pub struct FaceField {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

/// Value and derivative weights of the cubic through nodes 0..3 at `xi`
/// (in units of h).
fn lagrange4(xi: f64) -> ([f64; 4], [f64; 4]) {
    let mut value = [0.0; 4];
    let mut deriv = [0.0; 4];
    for j in 0..4 {
        let denom: f64 = (0..4).filter(|&m| m != j).map(|m| j as f64 - m as f64).product();
        value[j] = (0..4).filter(|&m| m != j).map(|m| xi - m as f64).product::<f64>() / denom;
        deriv[j] = (0..4)
            .filter(|&p| p != j)
            .map(|p| {
                (0..4)
                    .filter(|&m| m != j && m != p)
                    .map(|m| xi - m as f64)
                    .product::<f64>()
            })
            .sum::<f64>()
            / denom;
    }
    (value, deriv)
}

pub fn reconstruct(field: &[f64], grid: &Grid1D, stencil: Stencil) -> FaceField {
    let n = grid.len();
    let h = grid.spacing();
    let mut value = Vec::with_capacity(n + 1);
    let mut grad = Vec::with_capacity(n + 1);
    match stencil {
        Stencil::Second => {
            value.push(field[0]);
            grad.push((-3.0 * field[0] + 4.0 * field[1] - field[2]) / (2.0 * h));
            for w in field.windows(2) {
                value.push(0.5 * (w[0] + w[1]));
                grad.push((w[1] - w[0]) / h);
            }
            value.push(field[n - 1]);
            grad.push((3.0 * field[n - 1] - 4.0 * field[n - 2] + field[n - 3]) / (2.0 * h));
        }
        Stencil::Fourth => {
            let apply = |start: usize, xi: f64| {
                let (wv, wd) = lagrange4(xi);
                let s = &field[start..start + 4];
                let v: f64 = wv.iter().zip(s).map(|(w, f)| w * f).sum();
                let d: f64 = wd.iter().zip(s).map(|(w, f)| w * f).sum();
                (v, d / h)
            };
            let (_, d0) = apply(0, 0.0);
            value.push(field[0]);
            grad.push(d0);
            for i in 0..n - 1 {
                let start = i.saturating_sub(1).min(n - 4);
                let (v, d) = apply(start, i as f64 + 0.5 - start as f64);
                value.push(v);
                grad.push(d);
            }
            let (_, d1) = apply(n - 4, 3.0);
            value.push(field[n - 1]);
            grad.push(d1);
        }
    }
    FaceField { value, grad }
}

/// Coefficients (ascending powers) of the Lagrange basis polynomials on the
/// integer points `0..m`.
fn lagrange_basis(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|j| {
            let mut poly = vec![1.0];
            for k in (0..m).filter(|&k| k != j) {
                let scale = 1.0 / (j as f64 - k as f64);
                let mut next = vec![0.0; poly.len() + 1];
                for (p, c) in poly.iter().enumerate() {
                    next[p + 1] += c * scale;
                    next[p] -= c * k as f64 * scale;
                }
                poly = next;
            }
            poly
        })
        .collect()
}

fn poly_derivative_at(poly: &[f64], order: usize, x: f64) -> f64 {
    poly.iter()
        .enumerate()
        .skip(order)
        .map(|(p, c)| {
            let falling: f64 = (0..order).map(|q| (p - q) as f64).product();
            c * falling * x.powi((p - order) as i32)
        })
        .sum()
}

fn poly_integral(poly: &[f64], a: f64, b: f64) -> f64 {
    poly.iter()
        .enumerate()
        .map(|(p, c)| c * (b.powi(p as i32 + 1) - a.powi(p as i32 + 1)) / (p as f64 + 1.0))
        .sum()
}

/// Derivative of the given order at every node from the five-point
/// interpolant (centred inside, shifted next to the ends).
fn node_derivative_of_order(field: &[f64], grid: &Grid1D, order: usize) -> Vec<f64> {
    let n = field.len();
    let m = n.min(5);
    let basis = lagrange_basis(m);
    let h = grid.spacing();
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(m / 2).min(n - m);
            let xi = (i - start) as f64;
            let d: f64 = basis
                .iter()
                .zip(&field[start..start + m])
                .map(|(b, f)| poly_derivative_at(b, order, xi) * f)
                .sum();
            d / h.powi(order as i32)
        })
        .collect()
}

/// First derivative at the nodes, fourth order.
pub fn node_derivative(field: &[f64], grid: &Grid1D) -> Vec<f64> {
    node_derivative_of_order(field, grid, 1)
}

/// Second derivative at the nodes: fourth order inside, third order at the
/// two nodes next to each end.
pub fn node_second_derivative(field: &[f64], grid: &Grid1D) -> Vec<f64> {
    node_derivative_of_order(field, grid, 2)
}

/// Cumulative integral with value 0 at x = 0, integrating the local cubic
/// interpolant over each cell (fourth order).
pub fn cumulative_integral(values: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = values.len();
    let basis = lagrange_basis(4);
    let h = grid.spacing();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..n - 1 {
        let start = i.saturating_sub(1).min(n - 4);
        let a = (i - start) as f64;
        acc += h * basis
            .iter()
            .zip(&values[start..start + 4])
            .map(|(b, f)| poly_integral(b, a, a + 1.0) * f)
            .sum::<f64>();
        out.push(acc);
    }
    out
}

/// Value and derivative at an arbitrary `x` of the local cubic interpolant of
/// nodal samples. Exact for cubic polynomials.
pub fn interpolate(values: &[f64], grid: &Grid1D, x: f64) -> (f64, f64) {
    let n = grid.len();
    let h = grid.spacing();
    let x = x.clamp(0.0, 1.0);
    let cell = ((x / h).floor() as usize).min(n - 2);
    let start = cell.saturating_sub(1).min(n - 4);
    let xi = x / h - start as f64;
    let (wv, wd) = lagrange4(xi);
    let s = &values[start..start + 4];
    let v = wv.iter().zip(s).map(|(w, f)| w * f).sum();
    let d: f64 = wd.iter().zip(s).map(|(w, f)| w * f).sum();
    (v, d / h)
}
