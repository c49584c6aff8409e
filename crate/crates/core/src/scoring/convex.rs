use std::fmt;
use std::sync::Arc;

type Hook = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VecHook = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradHook = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Monotonicity declared for a [`ConvexSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    None,
    Increasing,
    StrictlyIncreasing,
    StrictlyDecreasing,
}

#[derive(Clone)]
enum Kind {
    Square,
    NegExp,
    Exp,
    BoundedQuad(f64),
    Identity,
    LogCosh,
    Custom { name: String, f: Hook, df: Hook },
}

/// A convex (or, for `Identity`, merely increasing) real function together
/// with its derivative and the shape flags the scoring theorems need.
#[derive(Clone)]
pub struct ConvexSpec {
    kind: Kind,
    strictly_convex: bool,
    monotone: Monotone,
}

impl ConvexSpec {
    /// `x^2`.
    pub fn square() -> Self {
        ConvexSpec { kind: Kind::Square, strictly_convex: true, monotone: Monotone::None }
    }

    /// `exp(-x)`.
    pub fn neg_exp() -> Self {
        ConvexSpec { kind: Kind::NegExp, strictly_convex: true, monotone: Monotone::StrictlyDecreasing }
    }

    /// `exp(x)`.
    pub fn exp() -> Self {
        ConvexSpec { kind: Kind::Exp, strictly_convex: true, monotone: Monotone::StrictlyIncreasing }
    }

    /// `c x^2 / (1 + |x|)`; its derivative lies in `(-c, c)`.
    pub fn bounded_quad(c: f64) -> Self {
        ConvexSpec { kind: Kind::BoundedQuad(c), strictly_convex: c > 0.0, monotone: Monotone::None }
    }

    /// `x`, convex but not strictly, strictly increasing.
    pub fn identity() -> Self {
        ConvexSpec { kind: Kind::Identity, strictly_convex: false, monotone: Monotone::StrictlyIncreasing }
    }

    /// `log cosh x`.
    pub fn log_cosh() -> Self {
        ConvexSpec { kind: Kind::LogCosh, strictly_convex: true, monotone: Monotone::None }
    }

    /// User-supplied function with its derivative. The flags are trusted.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        strictly_convex: bool,
        monotone: Monotone,
    ) -> Self {
        ConvexSpec {
            kind: Kind::Custom { name: name.into(), f: Arc::new(f), df: Arc::new(df) },
            strictly_convex,
            monotone,
        }
    }

    /// Parses a built-in name: `square`, `negexp`, `exp`, `identity`,
    /// `logcosh`, `boundedquad` (uses `c`).
    pub fn by_name(name: &str, c: f64) -> Option<Self> {
        Some(match name {
            "square" => Self::square(),
            "negexp" => Self::neg_exp(),
            "exp" => Self::exp(),
            "identity" => Self::identity(),
            "logcosh" => Self::log_cosh(),
            "boundedquad" => Self::bounded_quad(c),
            _ => return None,
        })
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Square => "square".into(),
            Kind::NegExp => "negexp".into(),
            Kind::Exp => "exp".into(),
            Kind::BoundedQuad(_) => "boundedquad".into(),
            Kind::Identity => "identity".into(),
            Kind::LogCosh => "logcosh".into(),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    /// Constant of `boundedquad`, if this is one.
    pub fn param(&self) -> Option<f64> {
        match self.kind {
            Kind::BoundedQuad(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, Kind::Custom { .. })
    }

    pub fn strictly_convex(&self) -> bool {
        self.strictly_convex
    }

    pub fn monotone(&self) -> Monotone {
        self.monotone
    }

    pub fn is_increasing(&self) -> bool {
        matches!(self.monotone, Monotone::Increasing | Monotone::StrictlyIncreasing)
    }

    pub fn strictly_increasing(&self) -> bool {
        self.monotone == Monotone::StrictlyIncreasing
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Square => x * x,
            Kind::NegExp => (-x).exp(),
            Kind::Exp => x.exp(),
            Kind::BoundedQuad(c) => c * x * x / (1.0 + x.abs()),
            Kind::Identity => x,
            Kind::LogCosh => {
                let a = x.abs();
                a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
            }
            Kind::Custom { f, .. } => f(x),
        }
    }

    #[inline]
    pub fn df(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Square => 2.0 * x,
            Kind::NegExp => -(-x).exp(),
            Kind::Exp => x.exp(),
            Kind::BoundedQuad(c) => {
                let d = 1.0 + x.abs();
                c * x * (1.0 + d) / (d * d)
            }
            Kind::Identity => 1.0,
            Kind::LogCosh => x.tanh(),
            Kind::Custom { df, .. } => df(x),
        }
    }
}

impl fmt::Debug for ConvexSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConvexSpec({})", self.name())
    }
}

/// Convex function on `R^n` with gradient.
#[derive(Clone)]
pub enum VecConvex {
    /// `sum_i f_i(x_i)`.
    Separable(Vec<ConvexSpec>),
    Custom { name: String, dim: usize, f: VecHook, grad: GradHook, strictly_convex: bool },
}

impl VecConvex {
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        strictly_convex: bool,
    ) -> Self {
        VecConvex::Custom { name: name.into(), dim, f: Arc::new(f), grad: Arc::new(grad), strictly_convex }
    }

    pub fn dim(&self) -> usize {
        match self {
            VecConvex::Separable(v) => v.len(),
            VecConvex::Custom { dim, .. } => *dim,
        }
    }

    pub fn strictly_convex(&self) -> bool {
        match self {
            VecConvex::Separable(v) => v.iter().all(|c| c.strictly_convex()),
            VecConvex::Custom { strictly_convex, .. } => *strictly_convex,
        }
    }

    pub fn name(&self) -> String {
        match self {
            VecConvex::Separable(v) => v.iter().map(|c| c.name()).collect::<Vec<_>>().join("+"),
            VecConvex::Custom { name, .. } => name.clone(),
        }
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        match self {
            VecConvex::Separable(v) => v.iter().zip(x).map(|(c, &xi)| c.f(xi)).sum(),
            VecConvex::Custom { f, .. } => f(x),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            VecConvex::Separable(v) => v.iter().zip(x).map(|(c, &xi)| c.df(xi)).collect(),
            VecConvex::Custom { grad, .. } => grad(x),
        }
    }
}

impl fmt::Debug for VecConvex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VecConvex({})", self.name())
    }
}
