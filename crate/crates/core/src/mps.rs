//! Free-format MPS reader/writer and conversion to standard form.
//!
//! Supported sections: `NAME`, `OBJSENSE`, `ROWS`, `COLUMNS`, `RHS`,
//! `BOUNDS`, `ENDATA`. `RANGES`, integer markers and bound types outside
//! `LO UP FX FR MI PL` are rejected. Lines starting with `*` are comments.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::lp::LpInstance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpsError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("model error: {0}")]
    Model(String),
}

fn parse_err(line: usize, reason: impl Into<String>) -> MpsError {
    MpsError::Parse {
        line,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    /// Objective (free) row.
    N,
    /// `≤`
    L,
    /// `≥`
    G,
    /// `=`
    E,
}

impl RowSense {
    fn code(self) -> &'static str {
        match self {
            RowSense::N => "N",
            RowSense::L => "L",
            RowSense::G => "G",
            RowSense::E => "E",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjSense {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsColumn {
    pub name: String,
    /// `(row name, coefficient)` in file order.
    pub entries: Vec<(String, f64)>,
}

/// Parsed MPS model. Bounds hold only non-default entries (default `[0, ∞)`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MpsModel {
    pub name: String,
    pub sense: ObjSense,
    pub rows: Vec<(String, RowSense)>,
    pub columns: Vec<MpsColumn>,
    pub rhs: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, (f64, f64)>,
}

impl MpsModel {
    pub fn objective_row(&self) -> Option<&str> {
        self.rows
            .iter()
            .find(|(_, s)| *s == RowSense::N)
            .map(|(n, _)| n.as_str())
    }

    pub fn bounds_of(&self, col: &str) -> (f64, f64) {
        self.bounds
            .get(col)
            .copied()
            .unwrap_or((0.0, f64::INFINITY))
    }

    /// Objective value of the original model at `values` (one per column,
    /// in column order), including any objective constant.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        let obj = self.objective_row().unwrap_or_default();
        let mut total = -self.rhs.get(obj).copied().unwrap_or(0.0);
        for (col, &v) in self.columns.iter().zip(values) {
            for (r, a) in &col.entries {
                if r == obj {
                    total += a * v;
                }
            }
        }
        total
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    ObjSense,
}

pub fn parse_mps(text: &str) -> Result<MpsModel, MpsError> {
    let mut model = MpsModel::default();
    let mut section = Section::None;
    let mut row_index: HashMap<String, RowSense> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut seen_name = false;
    let mut n_objectives = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let is_header = !raw.starts_with(char::is_whitespace);
        if is_header {
            let keyword = fields[0].to_ascii_uppercase();
            match keyword.as_str() {
                "NAME" => {
                    model.name = fields[1..].join(" ");
                    seen_name = true;
                    section = Section::None;
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "BOUNDS" => section = Section::Bounds,
                "OBJSENSE" => {
                    section = Section::ObjSense;
                    if let Some(s) = fields.get(1) {
                        model.sense = parse_sense(s, line_no)?;
                        section = Section::None;
                    }
                }
                "RANGES" => return Err(parse_err(line_no, "RANGES section is not supported")),
                "ENDATA" => {
                    if !seen_name {
                        return Err(parse_err(line_no, "missing NAME section"));
                    }
                    if n_objectives != 1 {
                        return Err(parse_err(
                            line_no,
                            format!("expected exactly one N row, found {n_objectives}"),
                        ));
                    }
                    normalize_bounds(&mut model);
                    return Ok(model);
                }
                other => return Err(parse_err(line_no, format!("unknown section '{other}'"))),
            }
            continue;
        }

        match section {
            Section::None => {
                return Err(parse_err(line_no, "data line outside of a section"));
            }
            Section::ObjSense => {
                model.sense = parse_sense(fields[0], line_no)?;
                section = Section::None;
            }
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(field_count(line_no, "ROWS", 2, fields.len()));
                }
                let sense = match fields[0].to_ascii_uppercase().as_str() {
                    "N" => RowSense::N,
                    "L" => RowSense::L,
                    "G" => RowSense::G,
                    "E" => RowSense::E,
                    s => return Err(parse_err(line_no, format!("unknown row sense '{s}'"))),
                };
                let name = fields[1].to_string();
                if row_index.contains_key(&name) {
                    return Err(parse_err(line_no, format!("duplicate row '{name}'")));
                }
                if sense == RowSense::N {
                    n_objectives += 1;
                    if n_objectives > 1 {
                        return Err(parse_err(line_no, format!("second objective row '{name}'")));
                    }
                }
                row_index.insert(name.clone(), sense);
                model.rows.push((name, sense));
            }
            Section::Columns => {
                if fields.iter().any(|f| f.eq_ignore_ascii_case("'MARKER'")) {
                    return Err(parse_err(line_no, "integer markers are not supported"));
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(field_count(line_no, "COLUMNS", 3, fields.len()));
                }
                let col = fields[0];
                let ci = *col_index.entry(col.to_string()).or_insert_with(|| {
                    model.columns.push(MpsColumn {
                        name: col.to_string(),
                        entries: Vec::new(),
                    });
                    model.columns.len() - 1
                });
                for pair in fields[1..].chunks(2) {
                    let row = pair[0];
                    if !row_index.contains_key(row) {
                        return Err(parse_err(
                            line_no,
                            format!("coefficient for undeclared row '{row}'"),
                        ));
                    }
                    let v = parse_num(pair[1], line_no)?;
                    model.columns[ci].entries.push((row.to_string(), v));
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(field_count(line_no, "RHS", 3, fields.len()));
                }
                for pair in fields[1..].chunks(2) {
                    let row = pair[0];
                    if !row_index.contains_key(row) {
                        return Err(parse_err(
                            line_no,
                            format!("RHS for undeclared row '{row}'"),
                        ));
                    }
                    let v = parse_num(pair[1], line_no)?;
                    model.rhs.insert(row.to_string(), v);
                }
            }
            Section::Bounds => {
                let kind = fields[0].to_ascii_uppercase();
                let needs_value = matches!(kind.as_str(), "LO" | "UP" | "FX");
                let expected = if needs_value { 4 } else { 3 };
                if !matches!(kind.as_str(), "LO" | "UP" | "FX" | "FR" | "MI" | "PL") {
                    return Err(parse_err(
                        line_no,
                        format!("unsupported bound type '{kind}'"),
                    ));
                }
                if fields.len() != expected {
                    return Err(field_count(line_no, "BOUNDS", expected, fields.len()));
                }
                let col = fields[2];
                if !col_index.contains_key(col) {
                    return Err(parse_err(
                        line_no,
                        format!("bound for undeclared column '{col}'"),
                    ));
                }
                let entry = model
                    .bounds
                    .entry(col.to_string())
                    .or_insert((0.0, f64::INFINITY));
                match kind.as_str() {
                    "LO" => entry.0 = parse_num(fields[3], line_no)?,
                    "UP" => entry.1 = parse_num(fields[3], line_no)?,
                    "FX" => {
                        let v = parse_num(fields[3], line_no)?;
                        *entry = (v, v);
                    }
                    "FR" => *entry = (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => entry.0 = f64::NEG_INFINITY,
                    "PL" => entry.1 = f64::INFINITY,
                    _ => unreachable!(),
                }
            }
        }
    }
    Err(parse_err(last_line.max(1), "missing ENDATA"))
}

fn field_count(line: usize, section: &str, expected: usize, got: usize) -> MpsError {
    parse_err(
        line,
        format!(
            "{section} entry has {got} fields, expected {expected} (only free-format MPS is supported)"
        ),
    )
}

fn parse_num(s: &str, line: usize) -> Result<f64, MpsError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("invalid number '{s}'"))),
    }
}

fn parse_sense(s: &str, line: usize) -> Result<ObjSense, MpsError> {
    match s.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" => Ok(ObjSense::Minimize),
        "MAX" | "MAXIMIZE" => Ok(ObjSense::Maximize),
        other => Err(parse_err(
            line,
            format!("unknown objective sense '{other}'"),
        )),
    }
}

fn normalize_bounds(model: &mut MpsModel) {
    model.bounds.retain(|_, b| *b != (0.0, f64::INFINITY));
}

/// Free-format MPS text for a model; [`parse_mps`] reads it back unchanged.
pub fn write_mps(model: &MpsModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", model.name);
    if model.sense == ObjSense::Maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    out.push_str("ROWS\n");
    for (name, sense) in &model.rows {
        let _ = writeln!(out, " {} {}", sense.code(), name);
    }
    out.push_str("COLUMNS\n");
    for col in &model.columns {
        for (row, v) in &col.entries {
            let _ = writeln!(out, "    {} {} {}", col.name, row, v);
        }
    }
    out.push_str("RHS\n");
    for (row, v) in &model.rhs {
        let _ = writeln!(out, "    RHS {row} {v}");
    }
    if !model.bounds.is_empty() {
        out.push_str("BOUNDS\n");
        for (col, &(lo, up)) in &model.bounds {
            if lo == up {
                let _ = writeln!(out, " FX BND {col} {lo}");
                continue;
            }
            if lo == f64::NEG_INFINITY && up == f64::INFINITY {
                let _ = writeln!(out, " FR BND {col}");
                continue;
            }
            if lo == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND {col}");
            } else if lo != 0.0 {
                let _ = writeln!(out, " LO BND {col} {lo}");
            }
            if up.is_finite() {
                let _ = writeln!(out, " UP BND {col} {up}");
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// MPS model with one `E` row per constraint of `inst` and default bounds.
pub fn model_from_instance(inst: &LpInstance) -> MpsModel {
    let mut rows = vec![("OBJ".to_string(), RowSense::N)];
    rows.extend((0..inst.m()).map(|i| (format!("R{}", i + 1), RowSense::E)));
    let columns = (0..inst.n())
        .map(|j| {
            let mut entries = Vec::new();
            if inst.c()[j] != 0.0 {
                entries.push(("OBJ".to_string(), inst.c()[j]));
            }
            for i in 0..inst.m() {
                let v = inst.a()[(i, j)];
                if v != 0.0 {
                    entries.push((format!("R{}", i + 1), v));
                }
            }
            MpsColumn {
                name: format!("X{}", j + 1),
                entries,
            }
        })
        .collect();
    let rhs = inst
        .b()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (format!("R{}", i + 1), *v))
        .collect();
    MpsModel {
        name: inst.name().to_string(),
        sense: ObjSense::Minimize,
        rows,
        columns,
        rhs,
        bounds: BTreeMap::new(),
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarMapping {
    /// `x = offset + x_col`
    Shifted { col: usize, offset: f64 },
    /// `x = offset − x_col`
    Mirrored { col: usize, offset: f64 },
    /// `x = x_pos − x_neg`
    Split { pos: usize, neg: usize },
    /// `x = value`
    Fixed(f64),
}

/// Original-variable recovery plus objective bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableMap {
    pub names: Vec<String>,
    pub mappings: Vec<VarMapping>,
    /// Original objective = `sign · (cᵀx_std + offset)`.
    pub objective_sign: f64,
    pub objective_offset: f64,
}

impl VariableMap {
    /// Original variable values, in model column order.
    pub fn map_back(&self, x_std: &[f64]) -> Vec<f64> {
        self.mappings
            .iter()
            .map(|m| match *m {
                VarMapping::Shifted { col, offset } => offset + x_std[col],
                VarMapping::Mirrored { col, offset } => offset - x_std[col],
                VarMapping::Split { pos, neg } => x_std[pos] - x_std[neg],
                VarMapping::Fixed(v) => v,
            })
            .collect()
    }

    /// Original objective from a standard-form objective value.
    pub fn original_objective(&self, std_objective: f64) -> f64 {
        self.objective_sign * (std_objective + self.objective_offset)
    }
}

/// Converts to `min cᵀx, Ax = b, x ≥ 0`.
///
/// `L`/`G` rows gain a slack/surplus column; finite lower bounds are shifted
/// to zero; upper-only variables are mirrored; free variables are split;
/// fixed variables become constants; finite two-sided bounds add a row.
/// Maximization flips the sign of `c`. The rank is recorded but not required.
pub fn mps_to_standard_form(model: &MpsModel) -> Result<(LpInstance, VariableMap), MpsError> {
    let obj_row = model
        .objective_row()
        .ok_or_else(|| MpsError::Model("no objective row".into()))?
        .to_string();
    let cons: Vec<(&str, RowSense)> = model
        .rows
        .iter()
        .filter(|(_, s)| *s != RowSense::N)
        .map(|(n, s)| (n.as_str(), *s))
        .collect();
    let row_pos: HashMap<&str, usize> =
        cons.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
    let sign = match model.sense {
        ObjSense::Minimize => 1.0,
        ObjSense::Maximize => -1.0,
    };

    // Column-major build: each standard column is (row entries, cost).
    let mut std_cols: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut rhs: Vec<f64> = cons
        .iter()
        .map(|(n, _)| model.rhs.get(*n).copied().unwrap_or(0.0))
        .collect();
    let mut offset = -model.rhs.get(&obj_row).copied().unwrap_or(0.0);
    let mut mappings = Vec::new();
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // (std column, upper width)

    for col in &model.columns {
        let (lo, up) = model.bounds_of(&col.name);
        if lo > up {
            return Err(MpsError::Model(format!(
                "column '{}' has lower bound {lo} > upper bound {up}",
                col.name
            )));
        }
        let mut cost = 0.0;
        let mut a_entries = Vec::new();
        for (r, v) in &col.entries {
            if *r == obj_row {
                cost += v;
            } else {
                a_entries.push((row_pos[r.as_str()], *v));
            }
        }
        let c = sign * cost;
        let shift = |value: f64, rhs: &mut [f64], offset: &mut f64| {
            for &(i, a) in &a_entries {
                rhs[i] -= a * value;
            }
            *offset += c * value;
        };
        let mapping = if lo == up {
            shift(lo, &mut rhs, &mut offset);
            VarMapping::Fixed(lo)
        } else if lo.is_finite() {
            shift(lo, &mut rhs, &mut offset);
            let idx = std_cols.len();
            std_cols.push((a_entries.clone(), c));
            if up.is_finite() {
                extra_rows.push((idx, up - lo));
            }
            VarMapping::Shifted {
                col: idx,
                offset: lo,
            }
        } else if up.is_finite() {
            shift(up, &mut rhs, &mut offset);
            let idx = std_cols.len();
            std_cols.push((a_entries.iter().map(|&(i, a)| (i, -a)).collect(), -c));
            VarMapping::Mirrored {
                col: idx,
                offset: up,
            }
        } else {
            let pos = std_cols.len();
            std_cols.push((a_entries.clone(), c));
            std_cols.push((a_entries.iter().map(|&(i, a)| (i, -a)).collect(), -c));
            VarMapping::Split { pos, neg: pos + 1 }
        };
        mappings.push(mapping);
    }

    for (i, (_, sense)) in cons.iter().enumerate() {
        match sense {
            RowSense::L => std_cols.push((vec![(i, 1.0)], 0.0)),
            RowSense::G => std_cols.push((vec![(i, -1.0)], 0.0)),
            RowSense::E | RowSense::N => {}
        }
    }
    let m0 = cons.len();
    for (k, &(col, width)) in extra_rows.iter().enumerate() {
        let row = m0 + k;
        std_cols[col].0.push((row, 1.0));
        std_cols.push((vec![(row, 1.0)], 0.0));
        rhs.push(width);
    }

    let m = rhs.len();
    let n = std_cols.len();
    let mut a = Matrix::zeros(m, n);
    let mut c = vec![0.0; n];
    for (j, (entries, cost)) in std_cols.iter().enumerate() {
        for &(i, v) in entries {
            a[(i, j)] += v;
        }
        c[j] = *cost;
    }
    let inst = LpInstance::new_unchecked(model.name.clone(), a, rhs, c)
        .map_err(|e| MpsError::Model(e.to_string()))?;
    let map = VariableMap {
        names: model.columns.iter().map(|c| c.name.clone()).collect(),
        mappings,
        objective_sign: sign,
        objective_offset: offset,
    };
    Ok((inst, map))
}
