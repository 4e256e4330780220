//! Purchase transaction data model, CSV ingestion, cleaning and profiling.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns every dataset must carry. `amount` is the only numeric column;
/// everything else is categorical.
pub const MANDATORY_COLUMNS: [&str; 11] = [
    "order_id",
    "item_id",
    "group_category",
    "material_category",
    "item_description",
    "vendor_code",
    "requester_id",
    "buyer_id",
    "approver_id",
    "org_code",
    "amount",
];

/// Extra categorical columns of the default 17-column layout.
pub const DEFAULT_EXTRA_COLUMNS: [&str; 6] = [
    "plant_code",
    "cost_center",
    "payment_terms",
    "purchase_group",
    "order_type",
    "delivery_site",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Where a column's values live inside a [`TransactionRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColumnRef {
    OrderId,
    ItemId,
    GroupCategory,
    MaterialCategory,
    ItemDescription,
    VendorCode,
    RequesterId,
    BuyerId,
    ApproverId,
    OrgCode,
    Amount,
    Extra(usize),
}

/// Ordered column layout of a dataset.
///
/// A schema always contains the eleven mandatory columns; any further
/// columns are carried as additional categoricals. `amount` is the only
/// numeric column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct Schema {
    columns: Vec<Column>,
    refs: Vec<ColumnRef>,
    amount_index: usize,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    columns: Vec<Column>,
}

impl TryFrom<SchemaRepr> for Schema {
    type Error = Error;
    fn try_from(repr: SchemaRepr) -> Result<Self> {
        Schema::new(repr.columns)
    }
}

impl From<Schema> for SchemaRepr {
    fn from(s: Schema) -> Self {
        SchemaRepr { columns: s.columns }
    }
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate column {:?}",
                    c.name
                )));
            }
        }
        for name in MANDATORY_COLUMNS {
            if !columns.iter().any(|c| c.name == name) {
                return Err(Error::InvalidConfig(format!(
                    "schema is missing mandatory column {name:?}"
                )));
            }
        }
        let mut refs = Vec::with_capacity(columns.len());
        let mut amount_index = 0;
        let mut extra = 0;
        for (i, c) in columns.iter().enumerate() {
            let r = match c.name.as_str() {
                "order_id" => ColumnRef::OrderId,
                "item_id" => ColumnRef::ItemId,
                "group_category" => ColumnRef::GroupCategory,
                "material_category" => ColumnRef::MaterialCategory,
                "item_description" => ColumnRef::ItemDescription,
                "vendor_code" => ColumnRef::VendorCode,
                "requester_id" => ColumnRef::RequesterId,
                "buyer_id" => ColumnRef::BuyerId,
                "approver_id" => ColumnRef::ApproverId,
                "org_code" => ColumnRef::OrgCode,
                "amount" => {
                    amount_index = i;
                    ColumnRef::Amount
                }
                _ => {
                    let r = ColumnRef::Extra(extra);
                    extra += 1;
                    r
                }
            };
            let expected_kind = if r == ColumnRef::Amount {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            };
            if c.kind != expected_kind {
                return Err(Error::InvalidConfig(format!(
                    "column {:?} must be {:?}",
                    c.name, expected_kind
                )));
            }
            refs.push(r);
        }
        Ok(Schema {
            columns,
            refs,
            amount_index,
        })
    }

    /// The standard 17-column layout used by the synthetic generator.
    pub fn standard() -> Self {
        let mut columns: Vec<Column> = MANDATORY_COLUMNS
            .iter()
            .map(|&name| Column {
                name: name.to_string(),
                kind: if name == "amount" {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                },
            })
            .collect();
        columns.extend(DEFAULT_EXTRA_COLUMNS.iter().map(|&name| Column {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
        }));
        Schema::new(columns).expect("standard schema is valid")
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::FileAccess {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn amount_index(&self) -> usize {
        self.amount_index
    }

    pub fn extra_len(&self) -> usize {
        self.refs
            .iter()
            .filter(|r| matches!(r, ColumnRef::Extra(_)))
            .count()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub(crate) fn column_ref(&self, index: usize) -> ColumnRef {
        self.refs[index]
    }

    /// Indices of all categorical columns, in schema order.
    pub fn categorical_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].kind == ColumnKind::Categorical)
            .collect()
    }
}

impl Default for Schema {
    fn default() -> Self {
        Schema::standard()
    }
}

/// One purchase order line item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    /// Position of the record within its dataset; contiguous after `clean`.
    pub row_id: usize,
    pub order_id: String,
    pub item_id: String,
    pub group_category: String,
    pub material_category: String,
    pub item_description: String,
    pub vendor_code: String,
    pub requester_id: String,
    pub buyer_id: String,
    pub approver_id: String,
    pub org_code: String,
    /// `None` marks a declared-missing source value.
    pub amount: Option<f64>,
    /// Values for schema columns beyond the mandatory set, in schema order.
    pub extra: Vec<String>,
}

impl TransactionRecord {
    pub(crate) fn field(&self, r: ColumnRef) -> &str {
        match r {
            ColumnRef::OrderId => &self.order_id,
            ColumnRef::ItemId => &self.item_id,
            ColumnRef::GroupCategory => &self.group_category,
            ColumnRef::MaterialCategory => &self.material_category,
            ColumnRef::ItemDescription => &self.item_description,
            ColumnRef::VendorCode => &self.vendor_code,
            ColumnRef::RequesterId => &self.requester_id,
            ColumnRef::BuyerId => &self.buyer_id,
            ColumnRef::ApproverId => &self.approver_id,
            ColumnRef::OrgCode => &self.org_code,
            ColumnRef::Extra(i) => &self.extra[i],
            ColumnRef::Amount => panic!("amount is not a categorical field"),
        }
    }
}

/// Tokens that mark a missing value in source files (case-insensitive).
pub fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("null")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub records: Vec<TransactionRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Categorical cell content; `col` must not be the amount column.
    pub fn categorical_cell(&self, row: usize, col: usize) -> &str {
        self.records[row].field(self.schema.column_ref(col))
    }

    /// Keeps the rows whose positions are listed (in the given order) and
    /// renumbers `row_id` from zero.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let records = rows
            .iter()
            .enumerate()
            .map(|(new_id, &r)| {
                let mut rec = self.records[r].clone();
                rec.row_id = new_id;
                rec
            })
            .collect();
        Dataset {
            schema: self.schema.clone(),
            records,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(self.schema.names())?;
        let mut cells: Vec<String> = Vec::with_capacity(self.schema.len());
        for rec in &self.records {
            cells.clear();
            for i in 0..self.schema.len() {
                match self.schema.column_ref(i) {
                    ColumnRef::Amount => cells.push(match rec.amount {
                        Some(a) => format_amount(a),
                        None => String::new(),
                    }),
                    r => cells.push(rec.field(r).to_string()),
                }
            }
            wtr.write_record(&cells)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::FileAccess {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Round-trippable amount formatting: shortest string that parses back to
/// the same f64.
pub(crate) fn format_amount(a: f64) -> String {
    let mut buf = ryu_style(a);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_style(a: f64) -> String {
    // `{}` on f64 already prints the shortest round-trippable form.
    format!("{a}")
}

/// Reads transactions from CSV. The header must match the schema exactly
/// (names and order). Amounts must parse as finite numbers unless they are
/// declared missing ("", "NA", "null").
pub fn load_transactions<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let found: Vec<String> = headers.iter().map(str::to_string).collect();
    let expected: Vec<String> = schema.names().iter().map(|s| s.to_string()).collect();
    if found != expected {
        return Err(Error::HeaderMismatch { expected, found });
    }

    let mut records = Vec::new();
    for (row_id, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut tr = TransactionRecord {
            row_id,
            order_id: String::new(),
            item_id: String::new(),
            group_category: String::new(),
            material_category: String::new(),
            item_description: String::new(),
            vendor_code: String::new(),
            requester_id: String::new(),
            buyer_id: String::new(),
            approver_id: String::new(),
            org_code: String::new(),
            amount: None,
            extra: vec![String::new(); schema.extra_len()],
        };
        for (i, cell) in rec.iter().enumerate() {
            match schema.column_ref(i) {
                ColumnRef::Amount => {
                    if is_missing_token(cell) {
                        tr.amount = None;
                    } else {
                        let parsed: f64 = cell.trim().parse().map_err(|_| Error::AmountParse {
                            row: row_id,
                            value: cell.to_string(),
                        })?;
                        if !parsed.is_finite() {
                            return Err(Error::AmountParse {
                                row: row_id,
                                value: cell.to_string(),
                            });
                        }
                        tr.amount = Some(parsed);
                    }
                }
                ColumnRef::OrderId => tr.order_id = cell.to_string(),
                ColumnRef::ItemId => tr.item_id = cell.to_string(),
                ColumnRef::GroupCategory => tr.group_category = cell.to_string(),
                ColumnRef::MaterialCategory => tr.material_category = cell.to_string(),
                ColumnRef::ItemDescription => tr.item_description = cell.to_string(),
                ColumnRef::VendorCode => tr.vendor_code = cell.to_string(),
                ColumnRef::RequesterId => tr.requester_id = cell.to_string(),
                ColumnRef::BuyerId => tr.buyer_id = cell.to_string(),
                ColumnRef::ApproverId => tr.approver_id = cell.to_string(),
                ColumnRef::OrgCode => tr.org_code = cell.to_string(),
                ColumnRef::Extra(e) => tr.extra[e] = cell.to_string(),
            }
        }
        records.push(tr);
    }
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

pub fn load_transactions_file(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::FileAccess {
        path: path.to_path_buf(),
        source,
    })?;
    load_transactions(std::io::BufReader::new(file), schema)
}

/// Drops every record with at least one missing value (missing amount or a
/// missing token in any categorical cell), renumbers `row_id` from zero and
/// reports how many records were removed.
pub fn clean(dataset: &Dataset) -> Result<(Dataset, usize)> {
    let schema = &dataset.schema;
    let cat_cols: Vec<usize> = schema.categorical_indices();
    let mut kept = Vec::new();
    for rec in &dataset.records {
        let complete = rec.amount.is_some()
            && cat_cols
                .iter()
                .all(|&c| !is_missing_token(rec.field(schema.column_ref(c))));
        if complete {
            let mut r = rec.clone();
            r.row_id = kept.len();
            kept.push(r);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyDataset(
            "no complete records remain after cleaning".to_string(),
        ));
    }
    let removed = dataset.records.len() - kept.len();
    Ok((
        Dataset {
            schema: schema.clone(),
            records: kept,
        },
        removed,
    ))
}

/// Per-entity usage statistics: the size of the set of `metric` values seen
/// per distinct `entity` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityStat {
    pub entity: String,
    pub metric: String,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub n_records: usize,
    /// Distinct value count per column, in schema order.
    pub distinct_counts: Vec<(String, usize)>,
    pub entity_stats: Vec<EntityStat>,
    pub total_amount: f64,
}

const PROFILE_ENTITIES: [&str; 3] = ["requester_id", "buyer_id", "approver_id"];
const PROFILE_METRICS: [&str; 3] = ["order_id", "item_id", "vendor_code"];

/// Summarises a dataset: record count, per-column distinct counts,
/// per-entity usage spreads and the total purchase amount.
pub fn profile(dataset: &Dataset) -> Result<ProfileReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot profile zero records".into()));
    }
    let schema = &dataset.schema;
    let mut distinct_counts = Vec::with_capacity(schema.len());
    for (i, col) in schema.columns().iter().enumerate() {
        let n = match schema.column_ref(i) {
            ColumnRef::Amount => dataset
                .records
                .iter()
                .filter_map(|r| r.amount)
                .map(f64::to_bits)
                .collect::<BTreeSet<_>>()
                .len(),
            r => dataset
                .records
                .iter()
                .map(|rec| rec.field(r))
                .collect::<BTreeSet<_>>()
                .len(),
        };
        distinct_counts.push((col.name.clone(), n));
    }

    let mut entity_stats = Vec::new();
    for entity in PROFILE_ENTITIES {
        let e_ref = schema.column_ref(schema.column_index(entity)?);
        for metric in PROFILE_METRICS {
            let m_ref = schema.column_ref(schema.column_index(metric)?);
            let mut per_entity: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for rec in &dataset.records {
                per_entity
                    .entry(rec.field(e_ref))
                    .or_default()
                    .insert(rec.field(m_ref));
            }
            let sizes: Vec<usize> = per_entity.values().map(BTreeSet::len).collect();
            let min = *sizes.iter().min().expect("non-empty dataset");
            let max = *sizes.iter().max().expect("non-empty dataset");
            let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
            entity_stats.push(EntityStat {
                entity: entity.to_string(),
                metric: metric.to_string(),
                min,
                max,
                mean,
            });
        }
    }

    let total_amount = dataset
        .records
        .iter()
        .map(|r| r.amount.unwrap_or(0.0))
        .sum();

    Ok(ProfileReport {
        n_records: dataset.len(),
        distinct_counts,
        entity_stats,
        total_amount,
    })
}

impl ProfileReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn distinct(&self, column: &str) -> usize {
        self.distinct_counts
            .iter()
            .find(|(name, _)| name == column)
            .map(|&(_, n)| n)
            .unwrap_or(0)
    }

    /// Two-column `figure,value` table mirroring the usual descriptive
    /// summary of a purchase dataset.
    pub fn to_table_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["figure", "value"])?;
        let rows: Vec<(String, String)> = vec![
            ("#Records".into(), self.n_records.to_string()),
            (
                "#Purchase Orders".into(),
                self.distinct("order_id").to_string(),
            ),
            ("#Items".into(), self.distinct("item_id").to_string()),
            (
                "#Group Categories".into(),
                self.distinct("group_category").to_string(),
            ),
            (
                "#Material Categories".into(),
                self.distinct("material_category").to_string(),
            ),
            (
                "#Unique Item Descriptions".into(),
                self.distinct("item_description").to_string(),
            ),
            ("#Vendors".into(), self.distinct("vendor_code").to_string()),
            (
                "#Requesters".into(),
                self.distinct("requester_id").to_string(),
            ),
            ("#Buyers".into(), self.distinct("buyer_id").to_string()),
            (
                "#Approvers".into(),
                self.distinct("approver_id").to_string(),
            ),
        ];
        for (figure, value) in rows {
            wtr.write_record([figure, value])?;
        }
        for stat in &self.entity_stats {
            wtr.write_record([
                format!("Min/Mean/Max #{} per {}", stat.metric, stat.entity),
                format!("{}/{}/{}", stat.min, stat.mean, stat.max),
            ])?;
        }
        wtr.write_record(["Total Purchase Amount", &format!("{}", self.total_amount)])?;
        let bytes = wtr.into_inner().expect("in-memory writer");
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_csv() -> String {
        let header = Schema::standard().names().join(",");
        let mut s = format!("{header}\n");
        s.push_str("O1,I1,G1,M1,D1,V1,R1,B1,A1,ORG1,100.5,P1,C1,NET30,PG1,STANDARD,DS1\n");
        s.push_str("O1,I2,G1,M2,D2,V2,R1,B1,A1,ORG1,42,P1,C1,NET30,PG1,STANDARD,DS1\n");
        s.push_str("O2,I3,G2,M1,D3,V1,R2,B2,A2,ORG2,7.25,P2,C2,NET60,PG2,SERVICE,DS2\n");
        s
    }

    #[test]
    fn loads_matching_header() {
        let d = load_transactions(small_csv().as_bytes(), &Schema::standard()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.records[0].amount, Some(100.5));
        assert_eq!(d.records[1].order_id, "O1");
        assert_eq!(d.records[2].extra[0], "P2");
        assert_eq!(d.records[2].row_id, 2);
    }

    #[test]
    fn rejects_header_mismatch() {
        let bad = small_csv().replacen("order_id", "order", 1);
        let err = load_transactions(bad.as_bytes(), &Schema::standard()).unwrap_err();
        assert!(matches!(err, Error::HeaderMismatch { .. }));
    }

    #[test]
    fn rejects_unparseable_amount() {
        let bad = small_csv().replacen("100.5", "ten", 1);
        let err = load_transactions(bad.as_bytes(), &Schema::standard()).unwrap_err();
        match err {
            Error::AmountParse { row, value } => {
                assert_eq!(row, 0);
                assert_eq!(value, "ten");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_amount() {
        let bad = small_csv().replacen("100.5", "inf", 1);
        assert!(load_transactions(bad.as_bytes(), &Schema::standard()).is_err());
    }

    #[test]
    fn missing_tokens_become_none() {
        for token in ["", "NA", "na", "null", "NULL"] {
            let csv = small_csv().replacen("100.5", token, 1);
            let d = load_transactions(csv.as_bytes(), &Schema::standard()).unwrap();
            assert_eq!(d.records[0].amount, None, "token {token:?}");
        }
    }

    #[test]
    fn clean_drops_incomplete_and_renumbers() {
        let csv = small_csv()
            .replacen("100.5", "", 1)
            .replacen("V2", "null", 1);
        let d = load_transactions(csv.as_bytes(), &Schema::standard()).unwrap();
        let (cleaned, removed) = clean(&d).unwrap();
        assert_eq!(removed, 2);
        assert_eq!(cleaned.len(), 1);
        assert_eq!(cleaned.records[0].row_id, 0);
        assert_eq!(cleaned.records[0].order_id, "O2");
    }

    #[test]
    fn clean_is_idempotent() {
        let csv = small_csv().replacen("100.5", "", 1);
        let d = load_transactions(csv.as_bytes(), &Schema::standard()).unwrap();
        let (once, _) = clean(&d).unwrap();
        let (twice, removed) = clean(&once).unwrap();
        assert_eq!(removed, 0);
        assert_eq!(once, twice);
    }

    #[test]
    fn clean_rejects_fully_missing() {
        let csv = small_csv()
            .replacen("100.5", "", 1)
            .replacen(",42,", ",,", 1)
            .replacen("7.25", "NA", 1);
        let d = load_transactions(csv.as_bytes(), &Schema::standard()).unwrap();
        assert!(matches!(clean(&d), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn csv_round_trip() {
        let d = load_transactions(small_csv().as_bytes(), &Schema::standard()).unwrap();
        let text = d.to_csv_string().unwrap();
        let d2 = load_transactions(text.as_bytes(), &Schema::standard()).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn round_trip_preserves_missing_amount() {
        let csv = small_csv().replacen("100.5", "NA", 1);
        let d = load_transactions(csv.as_bytes(), &Schema::standard()).unwrap();
        let d2 =
            load_transactions(d.to_csv_string().unwrap().as_bytes(), &Schema::standard()).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn profile_counts_distincts_and_entities() {
        let d = load_transactions(small_csv().as_bytes(), &Schema::standard()).unwrap();
        let p = profile(&d).unwrap();
        assert_eq!(p.n_records, 3);
        assert_eq!(p.distinct("order_id"), 2);
        assert_eq!(p.distinct("item_id"), 3);
        assert_eq!(p.distinct("vendor_code"), 2);
        assert!((p.total_amount - 149.75).abs() < 1e-12);
        let s = p
            .entity_stats
            .iter()
            .find(|s| s.entity == "requester_id" && s.metric == "vendor_code")
            .unwrap();
        // R1 uses {V1, V2}, R2 uses {V1}.
        assert_eq!(s.min, 1);
        assert_eq!(s.max, 2);
        assert!((s.mean - 1.5).abs() < 1e-12);
    }

    #[test]
    fn profile_rejects_empty() {
        let d = Dataset {
            schema: Schema::standard(),
            records: vec![],
        };
        assert!(profile(&d).is_err());
    }

    #[test]
    fn profile_table_has_figures() {
        let d = load_transactions(small_csv().as_bytes(), &Schema::standard()).unwrap();
        let table = profile(&d).unwrap().to_table_csv().unwrap();
        assert!(table.starts_with("figure,value\n"));
        assert!(table.contains("#Records,3\n"));
        assert!(table.contains("Min/Mean/Max #vendor_code per requester_id,1/1.5/2\n"));
    }

    #[test]
    fn schema_requires_mandatory_columns() {
        let cols = vec![Column {
            name: "amount".into(),
            kind: ColumnKind::Numeric,
        }];
        assert!(Schema::new(cols).is_err());
    }

    #[test]
    fn schema_rejects_non_numeric_amount() {
        let mut cols: Vec<Column> = Schema::standard().columns().to_vec();
        cols.iter_mut().find(|c| c.name == "amount").unwrap().kind = ColumnKind::Categorical;
        assert!(Schema::new(cols).is_err());
    }

    #[test]
    fn schema_json_round_trip() {
        let s = Schema::standard();
        let json = serde_json::to_string(&s).unwrap();
        let back: Schema = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
