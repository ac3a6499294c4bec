//! First-order finite-difference operators on the unit grid.
//!
//! Documentation uses 1-based indices `1..=N` so the endpoint rules read as
//! usual; the code uses 0-based indices, i.e. pixel `k` in the docs is index
//! `k - 1` here.
//!
//! * forward difference, Neumann: `(δ+ u)_k = u_{k+1} - u_k` for `k < N`, and
//!   `0` at `k = N`;
//! * backward difference, homogeneous Dirichlet: `(δ- v)_k = v_k - v_{k-1}`
//!   for `1 < k < N`, `v_1` at `k = 1`, `-v_{N-1}` at `k = N`.
//!
//! `δ+` and `-δ-` are transposes of each other under the discrete L2 pairing,
//! so every operator here is stored as a list of [`Term`]s and its adjoint is
//! produced by transposing each term. No adjoint is written out by hand.
//!
//! The operators are
//!
//! | operator | stencil |
//! |---|---|
//! | [`grad`] | `(δx+ u, δy+ u)` |
//! | [`div`] | `δx- w1 + δy- w2` |
//! | [`curl`] | `δx+ w2 - δy+ w1` |
//! | [`shear1`] | `δy- w2 - δx- w1` |
//! | [`shear2`] | `δy+ w1 + δx+ w2` |
//!
//! With this choice `curl∘grad`, `div∘curl*`, `sh1∘sh2*` and `sh2∘sh1*`
//! vanish identically (see [`check_conservation`]).

mod conservation;
mod linear;

pub use conservation::{check_conservation, ConservationReport};
pub use linear::{adjoint_of, adjointness_gap, power_iteration, Adjoint, LinearMap};

use crate::field::{Field, ScalarField, Shape, SymField, VectorField};

/// Grid direction: `X` runs along the row index `i`, `Y` along the column
/// index `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// One-sided difference together with its boundary rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryScheme {
    /// Forward difference, extended by zero at the last index.
    ForwardNeumann,
    /// Backward difference with homogeneous Dirichlet endpoints.
    BackwardDirichlet,
}

impl BoundaryScheme {
    /// The scheme `S'` with `δ_S* = -δ_S'`.
    pub fn transpose(self) -> Self {
        match self {
            Self::ForwardNeumann => Self::BackwardDirichlet,
            Self::BackwardDirichlet => Self::ForwardNeumann,
        }
    }

    /// Difference of channel `c` of `f` at `(i, j)` along `axis`.
    pub fn diff<const C: usize>(self, f: &Field<C>, c: usize, axis: Axis, i: usize, j: usize) -> f64 {
        let (k, n) = match axis {
            Axis::X => (i, f.height()),
            Axis::Y => (j, f.width()),
        };
        let at = |k: usize| match axis {
            Axis::X => f[(k, j)][c],
            Axis::Y => f[(i, k)][c],
        };
        match self {
            Self::ForwardNeumann => {
                if k + 1 < n {
                    at(k + 1) - at(k)
                } else {
                    0.0
                }
            }
            Self::BackwardDirichlet => {
                if k == 0 {
                    at(0)
                } else if k + 1 == n {
                    -at(k - 1)
                } else {
                    at(k) - at(k - 1)
                }
            }
        }
    }
}

/// Which discretisation of the mixed derivatives to use in the symmetrised
/// gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscretizationVariant {
    /// Mixed derivatives by forward differences; compatible with the
    /// forward curl and shear2 stencils.
    ConservationPreserving,
    /// The classic TGV scheme: every first derivative of `w` backward.
    BrediesReference,
}

/// `out[output] += coef · δ(scheme, axis) in[input]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub output: usize,
    pub input: usize,
    pub coef: f64,
    pub scheme: BoundaryScheme,
    pub axis: Axis,
}

const fn term(output: usize, input: usize, coef: f64, scheme: BoundaryScheme, axis: Axis) -> Term {
    Term {
        output,
        input,
        coef,
        scheme,
        axis,
    }
}

use Axis::{X, Y};
use BoundaryScheme::{BackwardDirichlet as B, ForwardNeumann as F};

/// A linear difference operator from `I`-channel to `O`-channel fields.
///
/// `weights` is the metric on the output channels: the adjoint is taken
/// with respect to `Σ weights[c]·a_c·b_c`. All natural operators use unit
/// weights; the symmetric-tensor operators weight `e12` by 2 so the pairing
/// is the Frobenius one.
#[derive(Debug, Clone, Copy)]
pub struct Stencil<const I: usize, const O: usize> {
    pub name: &'static str,
    pub terms: &'static [Term],
    pub weights: [f64; O],
}

impl<const I: usize, const O: usize> Stencil<I, O> {
    pub fn apply(&self, x: &Field<I>) -> Field<O> {
        let mut out = Field::zeros(x.shape());
        self.apply_into(x, 1.0, &mut out);
        out
    }

    /// `out += scale · A x`.
    pub fn apply_into(&self, x: &Field<I>, scale: f64, out: &mut Field<O>) {
        self.apply_into_channels(x, scale, out, 0);
    }

    /// `out[offset..offset + O] += scale · A x` for a wider output field.
    pub fn apply_into_channels<const D: usize>(&self, x: &Field<I>, scale: f64, out: &mut Field<D>, offset: usize) {
        assert!(offset + O <= D, "channel offset out of range");
        for t in self.terms {
            accumulate(x, t.input, out, offset + t.output, scale * t.coef, t.scheme, t.axis);
        }
    }

    pub fn apply_adjoint(&self, y: &Field<O>) -> Field<I> {
        let mut out = Field::zeros(y.shape());
        self.apply_adjoint_into(y, 1.0, &mut out);
        out
    }

    /// `out += scale · A* y`, using `δ_S* = -δ_{S'}` term by term.
    pub fn apply_adjoint_into(&self, y: &Field<O>, scale: f64, out: &mut Field<I>) {
        self.apply_adjoint_from_channels(y, 0, scale, out);
    }

    /// Adjoint applied to channels `offset..offset + O` of a wider field.
    pub fn apply_adjoint_from_channels<const D: usize>(&self, y: &Field<D>, offset: usize, scale: f64, out: &mut Field<I>) {
        assert!(offset + O <= D, "channel offset out of range");
        for t in self.terms {
            let c = -scale * t.coef * self.weights[t.output];
            accumulate(y, offset + t.output, out, t.input, c, t.scheme.transpose(), t.axis);
        }
    }
}

/// `dst[cd] += coef · δ(scheme, axis) src[cs]`, written out per row for speed.
fn accumulate<const S: usize, const D: usize>(
    src: &Field<S>,
    cs: usize,
    dst: &mut Field<D>,
    cd: usize,
    coef: f64,
    scheme: BoundaryScheme,
    axis: Axis,
) {
    assert_eq!(src.shape(), dst.shape(), "field shape mismatch");
    let Shape { height, width } = src.shape();
    let s = src.pixels();
    let d = dst.pixels_mut();
    let at = |i: usize, j: usize| s[i * width + j][cs];
    match (scheme, axis) {
        (F, X) => {
            for i in 0..height - 1 {
                for j in 0..width {
                    d[i * width + j][cd] += coef * (at(i + 1, j) - at(i, j));
                }
            }
        }
        (F, Y) => {
            for i in 0..height {
                for j in 0..width - 1 {
                    d[i * width + j][cd] += coef * (at(i, j + 1) - at(i, j));
                }
            }
        }
        (B, X) => {
            for j in 0..width {
                d[j][cd] += coef * at(0, j);
                d[(height - 1) * width + j][cd] -= coef * at(height - 2, j);
            }
            for i in 1..height - 1 {
                for j in 0..width {
                    d[i * width + j][cd] += coef * (at(i, j) - at(i - 1, j));
                }
            }
        }
        (B, Y) => {
            for i in 0..height {
                let row = i * width;
                d[row][cd] += coef * at(i, 0);
                d[row + width - 1][cd] -= coef * at(i, width - 2);
                for j in 1..width - 1 {
                    d[row + j][cd] += coef * (at(i, j) - at(i, j - 1));
                }
            }
        }
    }
}

pub const GRAD: Stencil<1, 2> = Stencil {
    name: "grad",
    terms: &[term(0, 0, 1.0, F, X), term(1, 0, 1.0, F, Y)],
    weights: [1.0; 2],
};

pub const DIV: Stencil<2, 1> = Stencil {
    name: "div",
    terms: &[term(0, 0, 1.0, B, X), term(0, 1, 1.0, B, Y)],
    weights: [1.0],
};

pub const CURL: Stencil<2, 1> = Stencil {
    name: "curl",
    terms: &[term(0, 1, 1.0, F, X), term(0, 0, -1.0, F, Y)],
    weights: [1.0],
};

pub const SHEAR1: Stencil<2, 1> = Stencil {
    name: "shear1",
    terms: &[term(0, 1, 1.0, B, Y), term(0, 0, -1.0, B, X)],
    weights: [1.0],
};

pub const SHEAR2: Stencil<2, 1> = Stencil {
    name: "shear2",
    terms: &[term(0, 0, 1.0, F, Y), term(0, 1, 1.0, F, X)],
    weights: [1.0],
};

/// Curl with backward differences: breaks `curl∘grad = 0`.
pub(crate) const BACKWARD_CURL: Stencil<2, 1> = Stencil {
    name: "curl (backward)",
    terms: &[term(0, 1, 1.0, B, X), term(0, 0, -1.0, B, Y)],
    weights: [1.0],
};

/// Second shear component with backward differences.
pub(crate) const BACKWARD_SHEAR2: Stencil<2, 1> = Stencil {
    name: "shear2 (backward)",
    terms: &[term(0, 0, 1.0, B, Y), term(0, 1, 1.0, B, X)],
    weights: [1.0],
};

pub const SYM_GRAD_CONSERVATIVE: Stencil<2, 3> = Stencil {
    name: "sym_grad (conservation preserving)",
    terms: &[
        term(0, 0, 1.0, B, X),
        term(1, 0, 0.5, F, Y),
        term(1, 1, 0.5, F, X),
        term(2, 1, 1.0, B, Y),
    ],
    weights: [1.0, 2.0, 1.0],
};

pub const SYM_GRAD_BREDIES: Stencil<2, 3> = Stencil {
    name: "sym_grad (Bredies)",
    terms: &[
        term(0, 0, 1.0, B, X),
        term(1, 0, 0.5, B, Y),
        term(1, 1, 0.5, B, X),
        term(2, 1, 1.0, B, Y),
    ],
    weights: [1.0, 2.0, 1.0],
};

impl DiscretizationVariant {
    pub fn sym_grad_stencil(self) -> &'static Stencil<2, 3> {
        match self {
            Self::ConservationPreserving => &SYM_GRAD_CONSERVATIVE,
            Self::BrediesReference => &SYM_GRAD_BREDIES,
        }
    }
}

pub fn grad(u: &ScalarField) -> VectorField {
    GRAD.apply(u)
}

pub fn div(w: &VectorField) -> ScalarField {
    DIV.apply(w)
}

pub fn curl(w: &VectorField) -> ScalarField {
    CURL.apply(w)
}

pub fn shear1(w: &VectorField) -> ScalarField {
    SHEAR1.apply(w)
}

pub fn shear2(w: &VectorField) -> ScalarField {
    SHEAR2.apply(w)
}

/// Equal to `-div(p)`.
pub fn grad_adjoint(p: &VectorField) -> ScalarField {
    GRAD.apply_adjoint(p)
}

/// Equal to `-grad(u)`.
pub fn div_adjoint(u: &ScalarField) -> VectorField {
    DIV.apply_adjoint(u)
}

/// `(δy- ψ, -δx- ψ)`.
pub fn curl_adjoint(psi: &ScalarField) -> VectorField {
    CURL.apply_adjoint(psi)
}

/// `(δx+ ψ, -δy+ ψ)`.
pub fn shear1_adjoint(psi: &ScalarField) -> VectorField {
    SHEAR1.apply_adjoint(psi)
}

/// `(-δy- ψ, -δx- ψ)`.
pub fn shear2_adjoint(psi: &ScalarField) -> VectorField {
    SHEAR2.apply_adjoint(psi)
}

/// Symmetrised derivative as channels `(e11, e12, e22)`.
pub fn sym_grad(w: &VectorField, variant: DiscretizationVariant) -> SymField {
    variant.sym_grad_stencil().apply(w)
}

/// Adjoint of [`sym_grad`] under the Frobenius pairing
/// `g11·h11 + 2·g12·h12 + g22·h22`.
pub fn sym_grad_adjoint(g: &SymField, variant: DiscretizationVariant) -> VectorField {
    variant.sym_grad_stencil().apply_adjoint(g)
}

/// Frobenius inner product of two symmetric-tensor fields.
pub fn frobenius_inner(a: &SymField, b: &SymField) -> f64 {
    assert_eq!(a.shape(), b.shape(), "field shape mismatch");
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(p, q)| p[0] * q[0] + 2.0 * p[1] * q[1] + p[2] * q[2])
        .sum()
}

/// Pointwise Frobenius magnitude `sqrt(e11² + 2·e12² + e22²)`.
pub fn frobenius_magnitude(g: &SymField) -> ScalarField {
    ScalarField::from_pixels(
        g.shape(),
        g.pixels()
            .iter()
            .map(|p| [(p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]).sqrt()])
            .collect(),
    )
    .expect("same shape")
}
