//! On-disk formats: CSV tables, grid-function rows, basis dumps,
//! coefficient tables and model directories.

use std::fs;
use std::path::{Path, PathBuf};

use omnistat_core::codes::{CodeKind, CodeMatrix};
use omnistat_core::cvxbasis::{ApproxCertificate, Basis};
use omnistat_core::dist::{level_sets, Table};
use omnistat_core::gridfn::GridFunction;
use omnistat_core::omni::OmniModel;
use omnistat_core::stats::{ActionSpace, StatisticsFamily, UniformApproximation};
use serde::{Deserialize, Serialize};

use crate::config::ActionConfig;
use crate::families::FamilySpec;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes a CSV file with a header row.
pub fn write_csv<I, R, S>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV file with a header row, returning the header and the rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| csv_error(path, e))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

pub fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::format(path, format!("not a number: {s:?}")))
}

pub fn parse_usize(path: &Path, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::format(path, format!("not an index: {s:?}")))
}

/// `m,v0,..,v_{m-1}`.
pub fn gridfn_to_row(f: &GridFunction) -> Vec<String> {
    std::iter::once(f.m().to_string()).chain(f.values().iter().map(|v| v.to_string())).collect()
}

pub fn gridfn_from_row(path: &Path, row: &[String]) -> Result<GridFunction> {
    let (m, values) = row.split_first().ok_or_else(|| Error::format(path, "empty grid-function row"))?;
    let m = parse_usize(path, m)?;
    let values = values.iter().map(|v| parse_f64(path, v)).collect::<Result<Vec<_>>>()?;
    if values.len() != m {
        return Err(Error::format(path, format!("row declares m = {m} but has {} values", values.len())));
    }
    Ok(GridFunction::new(values)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisDoc {
    format_version: u32,
    m: usize,
    mu: f64,
    t: Option<usize>,
    seed: u64,
    level: Vec<LevelDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelDoc {
    h: u32,
    n: usize,
    k: usize,
    mu: f64,
    seed: u64,
    kind: String,
    /// Row-major `+`/`-` string.
    signs: String,
}

fn kind_name(kind: CodeKind) -> &'static str {
    match kind {
        CodeKind::Random => "random",
        CodeKind::Hadamard => "hadamard",
        CodeKind::Explicit => "explicit",
    }
}

fn parse_kind(path: &Path, s: &str) -> Result<CodeKind> {
    match s {
        "random" => Ok(CodeKind::Random),
        "hadamard" => Ok(CodeKind::Hadamard),
        "explicit" => Ok(CodeKind::Explicit),
        _ => Err(Error::format(path, format!("unknown code kind {s:?}"))),
    }
}

/// `basis.toml` (parameters and code signs) and `elements.csv`
/// (`name,m,v0,..`).
pub fn write_basis(dir: &Path, basis: &Basis) -> Result<()> {
    create_dir(dir)?;
    let doc = BasisDoc {
        format_version: FORMAT_VERSION,
        m: basis.m(),
        mu: basis.mu(),
        t: basis.t(),
        seed: basis.seed(),
        level: basis
            .levels()
            .iter()
            .map(|l| LevelDoc {
                h: l.h,
                n: l.code.n(),
                k: l.code.k(),
                mu: l.code.mu(),
                seed: l.code.seed(),
                kind: kind_name(l.code.kind()).into(),
                signs: l.code.signs().iter().map(|&neg| if neg { '-' } else { '+' }).collect(),
            })
            .collect(),
    };
    let text = toml::to_string(&doc).map_err(|e| Error::format(dir, e.to_string()))?;
    write_text(&dir.join("basis.toml"), &text)?;
    let mut header = vec!["name".to_string(), "m".to_string()];
    header.extend((0..basis.m()).map(|y| format!("v{y}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &dir.join("elements.csv"),
        &header,
        (0..basis.len()).map(|e| std::iter::once(basis.name(e)).chain(gridfn_to_row(&basis.element(e))).collect::<Vec<_>>()),
    )
}

/// Rebuilds a basis from `basis.toml`; every code matrix is re-certified.
pub fn read_basis(dir: &Path) -> Result<Basis> {
    let path = dir.join("basis.toml");
    let doc: BasisDoc = toml::from_str(&read_text(&path)?).map_err(|e| Error::format(&path, e.to_string()))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::format(&path, format!("format_version {} is not supported", doc.format_version)));
    }
    let mut codes = Vec::with_capacity(doc.level.len());
    for l in &doc.level {
        let signs: Vec<bool> = l
            .signs
            .chars()
            .map(|c| match c {
                '+' => Ok(false),
                '-' => Ok(true),
                _ => Err(Error::format(&path, format!("bad sign character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        codes.push(CodeMatrix::restore(l.n, l.k, l.mu, l.seed, parse_kind(&path, &l.kind)?, &signs)?);
    }
    Ok(Basis::from_parts(doc.m, doc.mu, doc.t, doc.seed, codes)?)
}

pub const CERTIFICATE_HEADER: [&str; 3] = ["target", "sup_error", "lambda"];

pub fn write_certificates(path: &Path, certs: &[ApproxCertificate]) -> Result<()> {
    write_csv(path, &CERTIFICATE_HEADER, certs.iter().map(|c| [c.target.clone(), c.sup_error.to_string(), c.lambda.to_string()]))
}

/// `(target, sup_error, lambda)` rows.
pub fn read_certificates(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let (header, rows) = read_csv(path)?;
    if header != CERTIFICATE_HEADER {
        return Err(Error::format(path, format!("unexpected header {header:?}")));
    }
    rows.iter()
        .map(|r| match r.as_slice() {
            [t, e, l] => Ok((t.clone(), parse_f64(path, e)?, parse_f64(path, l)?)),
            _ => Err(Error::format(path, "certificate rows need three fields")),
        })
        .collect()
}

/// The versioned text form of a uniform approximation over a finite action
/// space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientTable {
    pub format_version: u32,
    pub family: String,
    pub d: usize,
    pub loss: String,
    pub lambda: f64,
    pub lambda_tail: f64,
    pub delta: f64,
    pub scale: f64,
    pub action: Vec<ActionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRow {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
}

impl CoefficientTable {
    pub fn from_approximation(ua: &UniformApproximation) -> Result<Self> {
        let action = ua
            .actions
            .iter()
            .enumerate()
            .map(|(a, t)| Ok(ActionRow { t: t.to_vec(), r: ua.r(a)?.to_vec() }))
            .collect::<Result<_>>()?;
        Ok(CoefficientTable {
            format_version: FORMAT_VERSION,
            family: ua.family.clone(),
            d: ua.d,
            loss: ua.loss_id.clone(),
            lambda: ua.lambda,
            lambda_tail: ua.lambda_tail,
            delta: ua.delta,
            scale: ua.scale,
            action,
        })
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("coefficient tables serialize")
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let t: CoefficientTable = toml::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        if t.format_version != FORMAT_VERSION {
            return Err(Error::format(path, format!("format_version {} is not supported", t.format_version)));
        }
        Ok(t)
    }

    /// Rebuilds the approximation; `family` must be the one it was written for.
    pub fn to_approximation(&self, family: &dyn StatisticsFamily) -> Result<UniformApproximation> {
        if family.name() != self.family || family.d() != self.d {
            return Err(omnistat_core::Error::FamilyMismatch(format!("table is for {}, got {}", self.family, family.name())).into());
        }
        let actions = ActionSpace::new(self.action.iter().map(|a| a.t.clone()).collect())?;
        let rows = self.action.iter().map(|a| a.r.clone()).collect();
        Ok(UniformApproximation::from_table(family, self.loss.clone(), actions, rows, self.delta, self.scale)?)
    }
}

/// `model.toml` of a model directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub format_version: u32,
    pub family: FamilySpec,
    pub family_name: String,
    pub d: usize,
    pub n: usize,
    pub actions: ActionConfig,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_bin: f64,
    pub loops: usize,
    pub wl_calls: usize,
}

/// A model on disk: descriptor, per-point predictions and the level-set
/// bin table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDir {
    pub doc: ModelDoc,
    pub q: Table,
}

pub fn write_model(dir: &Path, model: &OmniModel, family: &FamilySpec, actions: &ActionConfig) -> Result<()> {
    create_dir(dir)?;
    let doc = ModelDoc {
        format_version: FORMAT_VERSION,
        family: family.clone(),
        family_name: model.family.clone(),
        d: model.d,
        n: model.q.rows(),
        actions: actions.clone(),
        epsilon: model.config.epsilon,
        alpha: model.config.alpha,
        beta: model.config.beta,
        delta_bin: model.config.delta_bin,
        loops: model.loops(),
        wl_calls: model.wl_calls(),
    };
    write_text(&dir.join("model.toml"), &toml::to_string(&doc).map_err(|e| Error::format(dir, e.to_string()))?)?;
    let mut header = vec!["x".to_string()];
    header.extend((1..=model.d).map(|i| format!("q{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &dir.join("predictions.csv"),
        &header,
        (0..model.q.rows()).map(|x| std::iter::once(x.to_string()).chain(model.q.row(x).iter().map(|v| v.to_string())).collect::<Vec<_>>()),
    )?;
    write_csv(
        &dir.join("bins.csv"),
        &["bin", "count", "prediction"],
        level_sets(&model.q).values().enumerate().map(|(j, members)| {
            let v = model.q.row(members[0]);
            [j.to_string(), members.len().to_string(), join(v)]
        }),
    )?;
    write_log(&dir.join("training_log.csv"), model)
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_log(path: &Path, model: &OmniModel) -> Result<()> {
    write_csv(
        path,
        &["loop", "updates", "wl_calls", "est_ece", "recalibrated", "potential_start", "potential_after_ma", "potential_end", "exact_ece_discretized"],
        model.log.iter().map(|l| {
            [
                l.index.to_string(),
                l.updates().to_string(),
                l.wl_calls().to_string(),
                l.est_ece.to_string(),
                l.recalibrated.to_string(),
                opt(l.potential_start),
                opt(l.potential_after_ma),
                opt(l.potential_end),
                opt(l.exact_ece_discretized),
            ]
        }),
    )
}

pub fn read_model(dir: &Path) -> Result<ModelDir> {
    let path = dir.join("model.toml");
    let doc: ModelDoc = toml::from_str(&read_text(&path)?).map_err(|e| Error::format(&path, e.to_string()))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::format(&path, format!("format_version {} is not supported", doc.format_version)));
    }
    let path: PathBuf = dir.join("predictions.csv");
    let (header, rows) = read_csv(&path)?;
    if header.len() != doc.d + 1 || rows.len() != doc.n {
        return Err(Error::format(&path, format!("expected {} rows of {} columns", doc.n, doc.d + 1)));
    }
    let mut q = Table::zeros(doc.n, doc.d);
    for (x, row) in rows.iter().enumerate() {
        if row.len() != doc.d + 1 || parse_usize(&path, &row[0])? != x {
            return Err(Error::format(&path, format!("bad row {x}")));
        }
        for i in 0..doc.d {
            q.set(x, i, parse_f64(&path, &row[i + 1])?);
        }
    }
    Ok(ModelDir { doc, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use omnistat_core::cvxbasis::build_cvx_basis;
    use omnistat_core::losses::lp_monomial_family;
    use omnistat_core::stats::MomentFamily;

    #[test]
    fn gridfn_row_round_trips() {
        let f = GridFunction::new(vec![0.0, 1.5, -2.25, 1e-17]).unwrap();
        let row = gridfn_to_row(&f);
        assert_eq!(row[0], "4");
        assert_eq!(gridfn_from_row(Path::new("x"), &row).unwrap(), f);
        assert!(gridfn_from_row(Path::new("x"), &row[..3]).is_err());
    }

    #[test]
    fn basis_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let basis = build_cvx_basis(1.0 / 64.0, 0).unwrap();
        write_basis(dir.path(), &basis).unwrap();
        assert_eq!(read_basis(dir.path()).unwrap(), basis);
    }

    #[test]
    fn coefficient_table_round_trips() {
        let actions = ActionSpace::scalar_grid(0.0, 1.0, 5).unwrap();
        let ua = lp_monomial_family(4, &actions).unwrap();
        let table = CoefficientTable::from_approximation(&ua).unwrap();
        let text = table.to_text();
        let back = CoefficientTable::from_text(Path::new("x"), &text).unwrap();
        assert_eq!(back.to_approximation(&MomentFamily::new(4)).unwrap(), ua);
        assert!(back.to_approximation(&MomentFamily::new(3)).is_err());
    }
}
