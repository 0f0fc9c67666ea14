use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A first-order inclusion probability is not strictly inside `(0, 1)`.
    InvalidProbability { unit: usize, value: f64 },
    /// The probabilities do not add up to an integer sample size.
    NonIntegerSampleSize { total: f64 },
    EmptyPopulation,
    /// Sample size and population size are incompatible.
    InvalidSizes { population: usize, sample: usize },
    /// The population size is not an integer multiple of the sample size.
    NonMultiple { population: usize, sample: usize },
    /// A mixing parameter lies outside `[0, 1]`.
    InvalidRho(f64),
    EmptyCluster { cluster: usize },
    /// A zero-probability cluster came out of the first stage.
    PhantomSelected { cluster: usize },
    /// A closed form would divide by a vanishing entry mass.
    DivisionByZeroGuard { unit: usize },
    /// A Markov state that cannot occur at the requested step.
    InfeasibleState { step: usize, cluster: usize },
    InvalidStep { step: usize },
    /// The design is too large to enumerate exactly.
    TooLarge { estimate: f64, limit: f64 },
    /// `q(s) > 0` for a sample where `r(s) = 0`.
    SupportViolation,
    /// The study variable has zero variance under simple random sampling.
    ConstantVariable,
    DimensionMismatch { expected: usize, found: usize },
    SameUnit(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidProbability { unit, value } => {
                write!(f, "inclusion probability of unit {} is {}, expected a value in (0, 1)", unit + 1, value)
            }
            Error::NonIntegerSampleSize { total } => {
                write!(f, "inclusion probabilities sum to {total}, which is not an integer sample size")
            }
            Error::EmptyPopulation => f.write_str("population is empty"),
            Error::InvalidSizes { population, sample } => {
                write!(f, "cannot draw {sample} units from a population of {population}")
            }
            Error::NonMultiple { population, sample } => {
                write!(f, "population size {population} is not a multiple of sample size {sample}")
            }
            Error::InvalidRho(rho) => write!(f, "rho = {rho} is outside [0, 1]"),
            Error::EmptyCluster { cluster } => write!(f, "cluster u{} is empty", cluster + 1),
            Error::PhantomSelected { cluster } => {
                write!(f, "phantom cluster u{} was selected", cluster + 1)
            }
            Error::DivisionByZeroGuard { unit } => {
                write!(f, "unit {} has a vanishing exit mass", unit + 1)
            }
            Error::InfeasibleState { step, cluster } => {
                write!(f, "cluster u{} cannot be drawn at step {}", cluster + 1, step)
            }
            Error::InvalidStep { step } => write!(f, "step {step} is out of range"),
            Error::TooLarge { estimate, limit } => {
                write!(f, "enumeration needs about {estimate:.3e} branches, limit is {limit:.0e}")
            }
            Error::SupportViolation => {
                f.write_str("first design puts mass on a sample outside the support of the second")
            }
            Error::ConstantVariable => f.write_str("study variable is constant"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "expected length {expected}, found {found}")
            }
            Error::SameUnit(k) => write!(f, "unit {} paired with itself", k + 1),
        }
    }
}

impl core::error::Error for Error {}
