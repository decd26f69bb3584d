use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    DomainInvalid(String),
    #[error("boundary curvature {kappa} <= 0 at theta = {theta}")]
    NonPositiveCurvature { theta: f64, kappa: f64 },
    #[error("phase minimum is not unique: theta = {first} and {second} differ in value by {gap:e}")]
    NonUniqueMinimizer { first: f64, second: f64, gap: f64 },
    #[error("degenerate frame: {0}")]
    DegenerateFrame(&'static str),
    #[error("t = 0 needs an explicit Y")]
    TimeZero,
    #[error("condition estimate {0:e} exceeds 1e12")]
    IllConditioned(f64),
    #[error("imaginary part {im:e} too large against real part {re:e}")]
    RealityViolated { re: f64, im: f64 },
    #[error("D^(N) vanished numerically")]
    SingularDn,
    #[error("epsilon {0} outside (0, 1/4)")]
    BadEpsilon(f64),
    #[error("step h = {h} too large: h * p0 = {} > 0.1", h * p0)]
    StepTooLarge { h: f64, p0: f64 },
    #[error("field axes differ")]
    AxisMismatch,
    #[error("bad argument: {0}")]
    BadArgument(&'static str),
}
