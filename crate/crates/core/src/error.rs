use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    InvalidModel(&'static str),
    InvalidRequest(&'static str),
    InvalidHardware(&'static str),
    StepOutOfRange {
        step: u64,
        gen_tokens: u64,
    },
    /// Not even the smallest tile set fits the local buffer.
    InfeasibleTiling {
        capacity: u64,
        m: u64,
        k: u64,
        n: u64,
    },
    /// Matmul too large for the cycle-accurate simulator.
    SimulationGuard {
        macs: u64,
    },
    ZeroTraffic,
    EmptyAxis,
    MissingPoint {
        s: u64,
        f: u64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(why) => write!(f, "invalid model: {why}"),
            Error::InvalidRequest(why) => write!(f, "invalid request: {why}"),
            Error::InvalidHardware(why) => write!(f, "invalid hardware: {why}"),
            Error::StepOutOfRange { step, gen_tokens } => {
                write!(f, "decode step {step} out of range (gen_tokens = {gen_tokens})")
            }
            Error::InfeasibleTiling { capacity, m, k, n } => {
                write!(f, "no tiling of ({m}, {k}, {n}) fits a {capacity}-byte local buffer")
            }
            Error::SimulationGuard { macs } => {
                write!(f, "{macs} MACs exceeds the simulator guard")
            }
            Error::ZeroTraffic => write!(f, "roofline needs non-zero DRAM traffic"),
            Error::EmptyAxis => write!(f, "empty sweep axis"),
            Error::MissingPoint { s, f: hz } => {
                write!(f, "missing design point S={s} f={hz}")
            }
        }
    }
}

impl core::error::Error for Error {}
