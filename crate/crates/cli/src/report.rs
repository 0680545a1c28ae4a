use calgeom::{Calibration, Error, OrientedPlane};
use serde::Serialize;
use serde_json::{json, Map, Value};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    CheckFailed = 1,
    Usage = 2,
    Unknown = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Usage, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::Parse { .. }
            | Error::UnknownCalibration(_)
            | Error::InvalidParameter(_)
            | Error::Json(_)
            | Error::DimensionMismatch { .. }
            | Error::DegreeMismatch { .. }
            | Error::InvalidIndex { .. }
            | Error::NotOrthonormal(_) => Exit::Usage,
            Error::BudgetExhausted(_) => Exit::Unknown,
            _ => Exit::CheckFailed,
        };
        CliError { exit, message: e.to_string() }
    }
}

#[derive(Serialize)]
pub struct CalibrationInfo {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub comass: f64,
}

impl From<&Calibration> for CalibrationInfo {
    fn from(c: &Calibration) -> Self {
        CalibrationInfo { name: c.spec().to_string(), n: c.dim(), p: c.degree(), comass: c.comass_estimate() }
    }
}

/// One result row: `{input, value, witness?, certified, method}` plus extras.
pub struct Row {
    fields: Map<String, Value>,
}

impl Row {
    pub fn new(input: impl Serialize, value: impl Serialize, certified: bool, method: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("input".into(), json!(input));
        fields.insert("value".into(), json!(value));
        fields.insert("certified".into(), json!(certified));
        fields.insert("method".into(), json!(method));
        Row { fields }
    }

    pub fn witness(mut self, plane: Option<&OrientedPlane>) -> Self {
        if let Some(p) = plane {
            self.fields.insert("witness".into(), json!(p.to_file()));
        }
        self
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.fields.insert(key.into(), json!(value));
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.fields)
    }
}

#[derive(Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Serialize)]
pub struct Report {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationInfo>,
    pub results: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
    pub seed: u64,
    pub version: &'static str,
    pub timing: Timing,
}

/// Output of a subcommand before the envelope is added.
pub struct Outcome {
    pub calibration: Option<CalibrationInfo>,
    pub rows: Vec<Row>,
    pub exit: Exit,
}

impl Outcome {
    pub fn new(cal: Option<&Calibration>) -> Self {
        Outcome { calibration: cal.map(CalibrationInfo::from), rows: Vec::new(), exit: Exit::Ok }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Raises the exit code; failures dominate unknowns.
    pub fn flag(&mut self, exit: Exit) {
        self.exit = match (self.exit, exit) {
            (Exit::CheckFailed, _) | (_, Exit::CheckFailed) => Exit::CheckFailed,
            (a, b) => a.max(b),
        };
    }
}
