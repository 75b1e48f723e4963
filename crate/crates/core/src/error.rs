use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("point lies on the polar axis")]
    PolarAxis,
    #[error("meridian geodesic, Clairaut constant vanishes")]
    PolarGeodesic,
    #[error("geodesic passes its vertex latitude")]
    VertexExceeded,
    #[error("nearly antipodal points are not supported")]
    AntipodalUnsupported,
    #[error("point coincides with the cone apex")]
    ApexSingularity,
    #[error("longitude outside the projection zone")]
    OutOfZone,
    #[error("degenerate spherical triangle")]
    DegenerateTriangle,
    #[error("rank deficient design matrix")]
    RankDeficient,
    #[error("insufficient points: {0}")]
    InsufficientPoints(usize),
    #[error("no nonsingular point triple for the rotation system")]
    SingularRotationSystem,
    #[error("control points have zero spread")]
    ZeroSpread,
    #[error("singular normal matrix")]
    SingularNormal,
    #[error("coincident points")]
    CoincidentPoints,
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("line search found no descent")]
    NoDescent,
    #[error("maximum iterations reached")]
    MaxIterations,
    #[error("indefinite Hessian")]
    IndefiniteHessian,
    #[error("singular Hessian")]
    SingularHessian,
    #[error("singular satellite geometry")]
    SingularGeometry,
    #[error("parse error: {0}")]
    Parse(String),
}

impl GeoError {
    /// Short variant name, used by the CLI on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            GeoError::Domain(_) => "DomainError",
            GeoError::NonConvergence(_) => "NonConvergence",
            GeoError::PolarAxis => "PolarAxis",
            GeoError::PolarGeodesic => "PolarGeodesic",
            GeoError::VertexExceeded => "VertexExceeded",
            GeoError::AntipodalUnsupported => "AntipodalUnsupported",
            GeoError::ApexSingularity => "ApexSingularity",
            GeoError::OutOfZone => "OutOfZone",
            GeoError::DegenerateTriangle => "DegenerateTriangle",
            GeoError::RankDeficient => "RankDeficient",
            GeoError::InsufficientPoints(_) => "InsufficientPoints",
            GeoError::SingularRotationSystem => "SingularRotationSystem",
            GeoError::ZeroSpread => "ZeroSpread",
            GeoError::SingularNormal => "SingularNormal",
            GeoError::CoincidentPoints => "CoincidentPoints",
            GeoError::SingularJacobian => "SingularJacobian",
            GeoError::NoDescent => "NoDescent",
            GeoError::MaxIterations => "MaxIterations",
            GeoError::IndefiniteHessian => "IndefiniteHessian",
            GeoError::SingularHessian => "SingularHessian",
            GeoError::SingularGeometry => "SingularGeometry",
            GeoError::Parse(_) => "ParseError",
        }
    }

    /// Input errors are the caller's fault; everything else is numerical.
    pub fn is_input_error(&self) -> bool {
        matches!(self, GeoError::Parse(_) | GeoError::Domain(_) | GeoError::OutOfZone)
    }
}
