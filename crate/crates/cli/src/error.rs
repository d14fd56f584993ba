use std::fmt;
use std::process::ExitCode;

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Usage = 2,
    Data = 3,
    Model = 4,
    Internal = 5,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// An error tagged with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(status: Status, error: impl Into<anyhow::Error>) -> Self {
        Failure { status, error: error.into() }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Failure::new(Status::Usage, anyhow::anyhow!("{message}"))
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Failure::new(Status::Data, anyhow::anyhow!("{message}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Attach an exit status and context to a fallible call.
pub trait Tag<T> {
    fn tag(self, status: Status, context: impl FnOnce() -> String) -> Outcome<T>;

    fn data(self, context: impl FnOnce() -> String) -> Outcome<T>
    where
        Self: Sized,
    {
        self.tag(Status::Data, context)
    }

    fn internal(self, context: impl FnOnce() -> String) -> Outcome<T>
    where
        Self: Sized,
    {
        self.tag(Status::Internal, context)
    }
}

impl<T, E> Tag<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn tag(self, status: Status, context: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure::new(status, anyhow::Error::new(e).context(context())))
    }
}

/// Status for errors raised while fitting or applying models: invalid
/// hyperparameters are usage errors, unusable training data is a data error.
pub fn model_status(e: &lexiscreen::models::ModelError) -> Status {
    use lexiscreen::models::ModelError as M;
    match e {
        M::InvalidParams(_) => Status::Usage,
        M::SingleClass(_) | M::TooFewRows(_) | M::NonFinite { .. } | M::InvalidTarget { .. } | M::UnknownId(_) => Status::Data,
        _ => Status::Model,
    }
}

pub fn eval_status(e: &lexiscreen::eval::EvalError) -> Status {
    use lexiscreen::eval::EvalError as E;
    match e {
        E::InvalidArgument(_) => Status::Usage,
        E::Model(m) => model_status(m),
        E::Fold { source, .. } => eval_status(source),
        _ => Status::Data,
    }
}
