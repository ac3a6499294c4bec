use crate::field::{Field, Space};

use super::Stencil;

/// A linear map between inner-product spaces with a known transpose.
pub trait LinearMap {
    type Domain: Space;
    type Codomain: Space;

    fn apply(&self, x: &Self::Domain) -> Self::Codomain;
    fn apply_adjoint(&self, y: &Self::Codomain) -> Self::Domain;

    /// Pairing on the codomain used to define the adjoint.
    fn codomain_dot(&self, a: &Self::Codomain, b: &Self::Codomain) -> f64 {
        a.dot(b)
    }

    fn domain_dot(&self, a: &Self::Domain, b: &Self::Domain) -> f64 {
        a.dot(b)
    }
}

impl<const I: usize, const O: usize> LinearMap for Stencil<I, O> {
    type Domain = Field<I>;
    type Codomain = Field<O>;

    fn apply(&self, x: &Field<I>) -> Field<O> {
        Stencil::apply(self, x)
    }

    fn apply_adjoint(&self, y: &Field<O>) -> Field<I> {
        Stencil::apply_adjoint(self, y)
    }

    fn codomain_dot(&self, a: &Field<O>, b: &Field<O>) -> f64 {
        a.pixels()
            .iter()
            .zip(b.pixels())
            .map(|(p, q)| (0..O).map(|c| self.weights[c] * p[c] * q[c]).sum::<f64>())
            .sum()
    }
}

impl<A: LinearMap + ?Sized> LinearMap for &A {
    type Domain = A::Domain;
    type Codomain = A::Codomain;

    fn apply(&self, x: &A::Domain) -> A::Codomain {
        (**self).apply(x)
    }

    fn apply_adjoint(&self, y: &A::Codomain) -> A::Domain {
        (**self).apply_adjoint(y)
    }

    fn codomain_dot(&self, a: &A::Codomain, b: &A::Codomain) -> f64 {
        (**self).codomain_dot(a, b)
    }

    fn domain_dot(&self, a: &A::Domain, b: &A::Domain) -> f64 {
        (**self).domain_dot(a, b)
    }
}

/// The transpose of a linear map, itself a linear map.
#[derive(Debug, Clone, Copy)]
pub struct Adjoint<A>(pub A);

impl<A> Adjoint<A> {
    pub fn into_inner(self) -> A {
        self.0
    }
}

impl<A: LinearMap> LinearMap for Adjoint<A> {
    type Domain = A::Codomain;
    type Codomain = A::Domain;

    fn apply(&self, y: &A::Codomain) -> A::Domain {
        self.0.apply_adjoint(y)
    }

    fn apply_adjoint(&self, x: &A::Domain) -> A::Codomain {
        self.0.apply(x)
    }

    fn codomain_dot(&self, a: &A::Domain, b: &A::Domain) -> f64 {
        self.0.domain_dot(a, b)
    }

    fn domain_dot(&self, a: &A::Codomain, b: &A::Codomain) -> f64 {
        self.0.codomain_dot(a, b)
    }
}

pub fn adjoint_of<A: LinearMap>(op: A) -> Adjoint<A> {
    Adjoint(op)
}

/// `|⟨Ax, y⟩ - ⟨x, A*y⟩| / (‖x‖·‖y‖)`, with norms from the respective pairings.
pub fn adjointness_gap<A: LinearMap>(op: &A, x: &A::Domain, y: &A::Codomain) -> f64 {
    let lhs = op.codomain_dot(&op.apply(x), y);
    let rhs = op.domain_dot(x, &op.apply_adjoint(y));
    let scale = op.domain_dot(x, x).sqrt() * op.codomain_dot(y, y).sqrt();
    if scale == 0.0 {
        return (lhs - rhs).abs();
    }
    (lhs - rhs).abs() / scale
}

/// Power iteration on `A*A` starting from `x0`; returns the estimate of the
/// largest singular value after `iterations` steps.
///
/// The Rayleigh quotient `‖A x_k‖ / ‖x_k‖` is nondecreasing in `k`.
pub fn power_iteration<A: LinearMap>(op: &A, x0: &A::Domain, iterations: usize) -> f64 {
    let mut x = x0.clone();
    let n = op.domain_dot(&x, &x).sqrt();
    if n == 0.0 {
        return 0.0;
    }
    x.scale(1.0 / n);
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let ax = op.apply(&x);
        estimate = op.codomain_dot(&ax, &ax).sqrt();
        let mut next = op.apply_adjoint(&ax);
        let m = op.domain_dot(&next, &next).sqrt();
        if m == 0.0 {
            return 0.0;
        }
        next.scale(1.0 / m);
        x = next;
    }
    estimate
}
