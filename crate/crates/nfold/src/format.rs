//! JSON file formats. Every integer that can grow with the input is a
//! decimal string; bounds may also be `"inf"` or `"-inf"`.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use nfold_core::tables::{
    Certificate, HugeTableInstance, InfeasibilityCertificate, MarginCertificate, MarginViolation, ProofMethod,
    TableType, Transcript,
};
use nfold_core::{Bimatrix, BrickType, CompactPresentation, ExtInt, HugeNFoldInstance, Int, IntMatrix, IntVec};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An integer written as a decimal string; numbers are accepted on input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dec(pub Int);

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

struct DecVisitor;

impl Visitor<'_> for DecVisitor {
    type Value = Dec;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer or a decimal string")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
        Ok(Dec(Int::from(v)))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
        Ok(Dec(Int::from(v)))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
        v.trim().parse().map(Dec).map_err(|_| E::custom(format!("not a decimal integer: {v:?}")))
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Dec, D::Error> {
        d.deserialize_any(DecVisitor)
    }
}

/// A bound: decimal string, `"inf"` or `"-inf"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtDec(pub ExtInt);

impl Serialize for ExtDec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            ExtInt::NegInf => s.serialize_str("-inf"),
            ExtInt::PosInf => s.serialize_str("inf"),
            ExtInt::Finite(v) => s.serialize_str(&v.to_string()),
        }
    }
}

struct ExtVisitor;

impl Visitor<'_> for ExtVisitor {
    type Value = ExtDec;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer, a decimal string, \"inf\" or \"-inf\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtDec, E> {
        Ok(ExtDec(ExtInt::Finite(Int::from(v))))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtDec, E> {
        Ok(ExtDec(ExtInt::Finite(Int::from(v))))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtDec, E> {
        match v.trim() {
            "inf" | "+inf" => Ok(ExtDec(ExtInt::PosInf)),
            "-inf" => Ok(ExtDec(ExtInt::NegInf)),
            t => t.parse().map(|x| ExtDec(ExtInt::Finite(x))).map_err(|_| E::custom(format!("not a bound: {v:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtDec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<ExtDec, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}

fn decs(v: &[Int]) -> Vec<Dec> {
    v.iter().cloned().map(Dec).collect()
}

fn ints(v: &[Dec]) -> IntVec {
    v.iter().map(|d| d.0.clone()).collect()
}

fn rows_of(m: &IntMatrix) -> Vec<Vec<Dec>> {
    (0..m.rows()).map(|i| decs(m.row(i))).collect()
}

fn matrix(rows: &[Vec<Dec>], cols: usize, what: &str) -> anyhow::Result<IntMatrix> {
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        bail!("{what}: row {i} has {} entries, expected {cols}", rows[i].len());
    }
    let rows: Vec<IntVec> = rows.iter().map(|r| ints(r)).collect();
    Ok(IntMatrix::from_rows(&rows, cols)?)
}

// ------------------------------------------------------------ instances

/// Instance file; parse with [`parse_instance`] or [`read_instance`] so that
/// errors keep their field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceFile {
    Table(TableFile),
    Nfold(NFoldFile),
}

#[derive(Deserialize)]
struct KindOnly {
    kind: String,
}

pub fn parse_instance(text: &str) -> anyhow::Result<InstanceFile> {
    match parse_json::<KindOnly>(text)?.kind.as_str() {
        "table" => Ok(InstanceFile::Table(parse_json(text)?)),
        "nfold" => Ok(InstanceFile::Nfold(parse_json(text)?)),
        k => bail!("unknown instance kind {k:?} (expected \"table\" or \"nfold\")"),
    }
}

pub fn read_instance(path: &Path) -> anyhow::Result<InstanceFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    /// Accepted on input; written by the [`InstanceFile`] tag.
    #[serde(default, skip_serializing)]
    pub kind: Option<String>,
    pub l: usize,
    pub m: usize,
    pub line_sums: Vec<Vec<Dec>>,
    pub types: Vec<TableTypeFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableTypeFile {
    pub rows: Vec<Dec>,
    pub cols: Vec<Dec>,
    pub count: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NFoldFile {
    /// Accepted on input; written by the [`InstanceFile`] tag.
    #[serde(default, skip_serializing)]
    pub kind: Option<String>,
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<Dec>>,
    #[serde(rename = "A2")]
    pub a2: Vec<Vec<Dec>>,
    pub b0: Vec<Dec>,
    pub types: Vec<BrickTypeFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrickTypeFile {
    pub w: Vec<Dec>,
    pub l: Vec<ExtDec>,
    pub u: Vec<ExtDec>,
    pub b: Vec<Dec>,
    pub count: Dec,
}

impl TableFile {
    pub fn from_instance(t: &HugeTableInstance) -> Self {
        TableFile {
            kind: None,
            l: t.l,
            m: t.m,
            line_sums: rows_of(&t.g),
            types: t
                .types
                .iter()
                .map(|k| TableTypeFile { rows: decs(&k.f), cols: decs(&k.e), count: Dec(k.count.clone()) })
                .collect(),
        }
    }

    pub fn to_instance(&self) -> anyhow::Result<HugeTableInstance> {
        if self.line_sums.len() != self.l {
            bail!("line_sums: {} rows, expected l = {}", self.line_sums.len(), self.l);
        }
        let g = matrix(&self.line_sums, self.m, "line_sums")?;
        let types = self
            .types
            .iter()
            .map(|k| TableType { f: ints(&k.rows), e: ints(&k.cols), count: k.count.0.clone() })
            .collect();
        Ok(HugeTableInstance::new(self.l, self.m, g, types)?)
    }
}

impl NFoldFile {
    pub fn from_instance(inst: &HugeNFoldInstance) -> Self {
        let a = inst.bimatrix();
        NFoldFile {
            kind: None,
            a1: rows_of(a.a1()),
            a2: rows_of(a.a2()),
            b0: decs(inst.b0()),
            types: inst
                .types()
                .iter()
                .map(|t| BrickTypeFile {
                    w: decs(&t.w),
                    l: t.l.iter().cloned().map(ExtDec).collect(),
                    u: t.u.iter().cloned().map(ExtDec).collect(),
                    b: decs(&t.b),
                    count: Dec(t.count.clone()),
                })
                .collect(),
        }
    }

    /// The brick width comes from the cost vectors, so matrices with no
    /// rows are allowed.
    pub fn to_instance(&self) -> anyhow::Result<HugeNFoldInstance> {
        let d = self.types.first().map(|t| t.w.len()).ok_or_else(|| anyhow!("types: at least one type is required"))?;
        let a = Bimatrix::new(matrix(&self.a1, d, "A1")?, matrix(&self.a2, d, "A2")?)?;
        let types = self
            .types
            .iter()
            .map(|t| BrickType {
                w: ints(&t.w),
                l: t.l.iter().map(|x| x.0.clone()).collect(),
                u: t.u.iter().map(|x| x.0.clone()).collect(),
                b: ints(&t.b),
                count: t.count.0.clone(),
            })
            .collect();
        Ok(HugeNFoldInstance::new(a, types, ints(&self.b0))?)
    }
}

/// A parsed instance of either kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Table(HugeTableInstance),
    NFold(HugeNFoldInstance),
}

impl InstanceFile {
    pub fn to_instance(&self) -> anyhow::Result<Instance> {
        Ok(match self {
            InstanceFile::Table(t) => Instance::Table(t.to_instance()?),
            InstanceFile::Nfold(n) => Instance::NFold(n.to_instance()?),
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        match inst {
            Instance::Table(t) => InstanceFile::Table(TableFile::from_instance(t)),
            Instance::NFold(n) => InstanceFile::Nfold(NFoldFile::from_instance(n)),
        }
    }
}

// --------------------------------------------------------- presentations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationFile {
    pub types: Vec<SupportFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportFile {
    pub support: Vec<EntryFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryFile {
    pub brick: Vec<Dec>,
    pub mult: Dec,
}

impl PresentationFile {
    pub fn from_cp(cp: &CompactPresentation) -> Self {
        PresentationFile {
            types: cp
                .types
                .iter()
                .map(|sup| SupportFile {
                    support: sup.iter().map(|(z, c)| EntryFile { brick: decs(z), mult: Dec(c.clone()) }).collect(),
                })
                .collect(),
        }
    }

    /// Kept raw: malformed entries are reported by the checker, not here.
    pub fn to_cp(&self) -> CompactPresentation {
        CompactPresentation {
            types: self
                .types
                .iter()
                .map(|s| s.support.iter().map(|e| (ints(&e.brick), e.mult.0.clone())).collect())
                .collect(),
        }
    }
}

// ---------------------------------------------------------- certificates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateFile {
    Slack {
        aux: NFoldFile,
        presentation: PresentationFile,
        slack: Dec,
        transcript: TranscriptFile,
    },
    Margins {
        table: TableFile,
        violation: ViolationFile,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptFile {
    pub method: MethodFile,
    pub final_maps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodFile {
    CompleteTemplates,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationFile {
    Negative { what: String },
    TypeBalance { r#type: usize, row_total: Dec, col_total: Dec },
    GlobalBalance { layer_total: Dec, line_total: Dec },
}

impl CertificateFile {
    pub fn from_certificate(c: &Certificate) -> Self {
        match c {
            Certificate::Slack(s) => CertificateFile::Slack {
                aux: NFoldFile::from_instance(&s.aux),
                presentation: PresentationFile::from_cp(&s.cp),
                slack: Dec(s.slack.clone()),
                transcript: TranscriptFile {
                    method: match s.transcript.method {
                        ProofMethod::CompleteTemplates => MethodFile::CompleteTemplates,
                        ProofMethod::Exhaustive => MethodFile::Exhaustive,
                    },
                    final_maps: s.transcript.final_maps,
                },
            },
            Certificate::Margins(m) => CertificateFile::Margins {
                table: TableFile::from_instance(&m.table),
                violation: match &m.violation {
                    MarginViolation::Negative { what } => ViolationFile::Negative { what: what.clone() },
                    MarginViolation::TypeBalance { k, row_total, col_total } => ViolationFile::TypeBalance {
                        r#type: *k,
                        row_total: Dec(row_total.clone()),
                        col_total: Dec(col_total.clone()),
                    },
                    MarginViolation::GlobalBalance { layer_total, line_total } => ViolationFile::GlobalBalance {
                        layer_total: Dec(layer_total.clone()),
                        line_total: Dec(line_total.clone()),
                    },
                },
            },
        }
    }

    pub fn to_certificate(&self) -> anyhow::Result<Certificate> {
        Ok(match self {
            CertificateFile::Slack { aux, presentation, slack, transcript } => {
                Certificate::Slack(InfeasibilityCertificate {
                    aux: aux.to_instance().context("certificate aux")?,
                    cp: presentation.to_cp(),
                    slack: slack.0.clone(),
                    transcript: Transcript {
                        method: match transcript.method {
                            MethodFile::CompleteTemplates => ProofMethod::CompleteTemplates,
                            MethodFile::Exhaustive => ProofMethod::Exhaustive,
                        },
                        final_maps: transcript.final_maps,
                    },
                })
            }
            CertificateFile::Margins { table, violation } => Certificate::Margins(MarginCertificate {
                table: table.to_instance().context("certificate table")?,
                violation: match violation {
                    ViolationFile::Negative { what } => MarginViolation::Negative { what: what.clone() },
                    ViolationFile::TypeBalance { r#type, row_total, col_total } => MarginViolation::TypeBalance {
                        k: *r#type,
                        row_total: row_total.0.clone(),
                        col_total: col_total.0.clone(),
                    },
                    ViolationFile::GlobalBalance { layer_total, line_total } => MarginViolation::GlobalBalance {
                        layer_total: layer_total.0.clone(),
                        line_total: line_total.0.clone(),
                    },
                },
            }),
        })
    }
}

// -------------------------------------------------------------- verdicts

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Feasible,
    Optimal,
    Infeasible,
}

/// Solver run details. Wall time is only recorded on request so that
/// output files stay byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    pub rounds: u64,
    pub maps_evaluated: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// Solution or certificate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictFile {
    pub verdict: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Dec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presentation: Option<PresentationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateFile>,
    pub metadata: Metadata,
}

/// Anything carrying a presentation: a verdict file, a reduce output, or a
/// bare presentation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SolutionInput {
    Bare(PresentationFile),
    Wrapped { presentation: PresentationFile },
}

impl SolutionInput {
    pub fn cp(&self) -> CompactPresentation {
        match self {
            SolutionInput::Bare(p) | SolutionInput::Wrapped { presentation: p } => p.to_cp(),
        }
    }
}

/// `{"matrix": rows, "cols": n}` or a bare, nonempty row array.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MatrixFile {
    Rows(Vec<Vec<Dec>>),
    Object { matrix: Vec<Vec<Dec>>, cols: Option<usize> },
}

impl MatrixFile {
    pub fn to_matrix(&self) -> anyhow::Result<IntMatrix> {
        let (rows, cols) = match self {
            MatrixFile::Rows(r) => (r, None),
            MatrixFile::Object { matrix, cols } => (matrix, *cols),
        };
        let cols = match (cols, rows.first()) {
            (Some(c), _) => c,
            (None, Some(r)) => r.len(),
            (None, None) => bail!("matrix: no rows; give \"cols\" explicitly"),
        };
        matrix(rows, cols, "matrix")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BimatrixFile {
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<Dec>>,
    #[serde(rename = "A2")]
    pub a2: Vec<Vec<Dec>>,
    pub d: Option<usize>,
}

impl BimatrixFile {
    pub fn to_bimatrix(&self) -> anyhow::Result<Bimatrix> {
        let d = self
            .d
            .or_else(|| self.a1.first().or(self.a2.first()).map(Vec::len))
            .ok_or_else(|| anyhow!("bimatrix: both blocks empty; give \"d\" explicitly"))?;
        Ok(Bimatrix::new(matrix(&self.a1, d, "A1")?, matrix(&self.a2, d, "A2")?)?)
    }
}

pub fn vec_json(v: &[Int]) -> Vec<Dec> {
    decs(v)
}

pub fn rows_json(m: &IntMatrix) -> Vec<Vec<Dec>> {
    rows_of(m)
}

/// Parse a JSON file, reporting the failing field path and position.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_json(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> anyhow::Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column())
    })
}

/// Pretty JSON with a trailing newline; arrays of scalars stay on one line.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("serializable");
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    out
}

fn is_scalar(v: &serde_json::Value) -> bool {
    !matches!(v, serde_json::Value::Array(_) | serde_json::Value::Object(_))
}

fn write_value(v: &serde_json::Value, indent: usize, out: &mut String) {
    use serde_json::Value;
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', 2 * n));
    match v {
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&x.to_string());
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}
