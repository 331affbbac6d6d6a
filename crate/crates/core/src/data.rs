//! Price datasets: CSV ingestion, validation and the bundled product fixtures.
//!
//! Prices are held as integer cents. The bundled fixtures are synthetic; only
//! their per-source listing counts (and the printer's minimum of 297.00) are
//! taken from the observed market survey. See `data/README.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Environment variable that redirects [`builtin_dataset`] to a directory of
/// `<product>.csv` files.
pub const DATA_DIR_ENV: &str = "DISCLOSE_DATA_DIR";

/// CSV header shared by every price file.
pub const CSV_HEADER: [&str; 3] = ["product_id", "source", "price"];

/// A currency amount in integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cents(pub i64);

impl Cents {
    pub fn from_units(value: f64) -> Self {
        Cents((value * 100.0).round() as i64)
    }

    pub fn to_units<T: Scalar>(self) -> T {
        T::lit(self.0 as f64 / 100.0)
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl FromStr for Cents {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("invalid price {s:?}"))?;
        if !v.is_finite() {
            return Err(format!("invalid price {s:?}"));
        }
        Ok(Cents::from_units(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceEntry {
    pub source: String,
    pub price: Cents,
}

/// A product's seller prices with their source labels.
///
/// Non-empty and strictly positive by construction. Order is preserved from the
/// input; disclosure works on entry indices so duplicate prices are fine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceList {
    product_id: String,
    entries: Vec<PriceEntry>,
}

impl PriceList {
    pub fn new(product_id: impl Into<String>, entries: Vec<PriceEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::validation("empty dataset"));
        }
        if let Some((i, e)) = entries.iter().enumerate().find(|(_, e)| e.price.0 <= 0) {
            return Err(Error::validation(format!(
                "entry {i}: non-positive price {}",
                e.price
            )));
        }
        Ok(PriceList {
            product_id: product_id.into(),
            entries,
        })
    }

    /// Builds a list from raw prices (in currency units), all tagged with `source`.
    pub fn from_prices<T: Scalar>(
        product_id: impl Into<String>,
        source: &str,
        prices: &[T],
    ) -> Result<Self> {
        let entries = prices
            .iter()
            .map(|p| PriceEntry {
                source: source.to_string(),
                price: Cents::from_units(p.as_f64()),
            })
            .collect();
        Self::new(product_id, entries)
    }

    pub fn product_id(&self) -> &str {
        &self.product_id
    }

    pub fn entries(&self) -> &[PriceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn price(&self, index: usize) -> Cents {
        self.entries[index].price
    }

    pub fn prices(&self) -> impl Iterator<Item = Cents> + '_ {
        self.entries.iter().map(|e| e.price)
    }

    /// Prices in currency units.
    pub fn values<T: Scalar>(&self) -> Vec<T> {
        self.prices().map(Cents::to_units).collect()
    }

    pub fn min_price(&self) -> Cents {
        self.prices().min().expect("non-empty")
    }

    /// Index of the designated minimum: the lowest index among entries tied at
    /// the minimum price.
    pub fn min_index(&self) -> usize {
        let min = self.min_price();
        self.entries
            .iter()
            .position(|e| e.price == min)
            .expect("non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.prices().map(|c| c.0 as f64 / 100.0).sum::<f64>() / self.len() as f64
    }

    /// Listing counts per source label.
    pub fn source_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.source.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Entries from one source, in input order.
    pub fn filter_source(&self, source: &str) -> Result<PriceList> {
        let entries: Vec<_> = self
            .entries
            .iter()
            .filter(|e| e.source.eq_ignore_ascii_case(source))
            .cloned()
            .collect();
        if entries.is_empty() {
            return Err(Error::NotFound(format!(
                "source {source:?} in product {:?}",
                self.product_id
            )));
        }
        PriceList::new(self.product_id.clone(), entries)
    }

    /// The source label with the most listings; ties go to the label that
    /// appears first in the file.
    pub fn largest_source(&self) -> &str {
        let counts = self.source_counts();
        let mut best: Option<(&str, usize)> = None;
        for e in &self.entries {
            let c = counts[&e.source];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((&e.source, c));
            }
        }
        best.expect("non-empty").0
    }

    /// The sub-list at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<PriceList> {
        let entries = indices.iter().map(|&i| self.entries[i].clone()).collect();
        PriceList::new(self.product_id.clone(), entries)
    }

    /// Multiset union, `self` first.
    pub fn concat(&self, other: &PriceList) -> PriceList {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        PriceList {
            product_id: self.product_id.clone(),
            entries,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for e in &self.entries {
            w.write_record([
                self.product_id.as_str(),
                e.source.as_str(),
                &e.price.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceFormat {
    #[default]
    Csv,
}

/// Loads and validates a price file.
pub fn load_prices(path: impl AsRef<Path>, format: PriceFormat) -> Result<PriceList> {
    let file = std::fs::File::open(path.as_ref())?;
    match format {
        PriceFormat::Csv => read_csv(file),
    }
}

/// Parses `product_id,source,price` rows. Row numbers in errors are file line
/// numbers (the header is line 1).
pub fn read_csv<R: Read>(reader: R) -> Result<PriceList> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 3 || headers.iter().zip(CSV_HEADER).any(|(h, e)| h != e) {
        if headers.is_empty() {
            return Err(Error::validation("empty dataset"));
        }
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header {:?}, found {:?}", CSV_HEADER.join(","), headers),
        });
    }

    let mut product_id: Option<String> = None;
    let mut entries = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(Error::Parse {
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let price: Cents = record[2]
            .parse()
            .map_err(|message| Error::Parse { row, message })?;
        if price.0 <= 0 {
            return Err(Error::validation(format!(
                "row {row}: non-positive price {}",
                &record[2]
            )));
        }
        match &product_id {
            None => product_id = Some(record[0].to_string()),
            Some(p) if p != &record[0] => {
                return Err(Error::validation(format!(
                    "row {row}: product id {:?} differs from {p:?}",
                    &record[0]
                )))
            }
            _ => {}
        }
        entries.push(PriceEntry {
            source: record[1].to_string(),
            price,
        });
    }
    let Some(product_id) = product_id else {
        return Err(Error::validation("empty dataset"));
    };
    PriceList::new(product_id, entries)
}

/// CSA labels, in survey column order.
pub const SOURCES: [&str; 5] = ["PriceGrabber", "Nextag", "Bizrate", "Amazon", "Shopper"];

/// Seller counts per CSA for the ten surveyed products, in [`SOURCES`] order.
pub const SELLER_COUNTS: [(&str, [usize; 5]); 10] = [
    ("printer", [24, 13, 23, 28, 15]),
    ("tv", [13, 10, 6, 10, 15]),
    ("mouse", [33, 20, 36, 25, 19]),
    ("software", [21, 18, 20, 23, 21]),
    ("router", [28, 12, 18, 24, 19]),
    ("monitor", [25, 11, 30, 18, 17]),
    ("external", [15, 13, 18, 18, 15]),
    ("router2", [27, 23, 34, 31, 16]),
    ("camera", [16, 9, 17, 19, 12]),
    ("tv2", [10, 16, 9, 11, 13]),
];

/// The four bundled products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Product {
    Printer,
    Mouse,
    Monitor,
    Camera,
}

impl Product {
    pub const ALL: [Product; 4] = [
        Product::Printer,
        Product::Mouse,
        Product::Monitor,
        Product::Camera,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Product::Printer => "printer",
            Product::Mouse => "mouse",
            Product::Monitor => "monitor",
            Product::Camera => "camera",
        }
    }

    fn bundled_csv(self) -> &'static str {
        match self {
            Product::Printer => include_str!("../data/printer.csv"),
            Product::Mouse => include_str!("../data/mouse.csv"),
            Product::Monitor => include_str!("../data/monitor.csv"),
            Product::Camera => include_str!("../data/camera.csv"),
        }
    }

    /// Minimum price of the bundled fixture. Only the printer's is an observed
    /// value; the others are synthetic choices.
    pub fn stated_minimum(self) -> Cents {
        match self {
            Product::Printer => Cents(29700),
            Product::Mouse => Cents(4299),
            Product::Monitor => Cents(16900),
            Product::Camera => Cents(13900),
        }
    }

    pub fn manifest(self) -> DatasetManifest {
        let counts = SELLER_COUNTS
            .iter()
            .find(|(name, _)| *name == self.name())
            .map(|(_, c)| c)
            .expect("every bundled product has a survey row");
        DatasetManifest {
            product_id: self.name().to_string(),
            per_source_counts: SOURCES
                .iter()
                .zip(counts)
                .map(|(s, &c)| (s.to_string(), c))
                .collect(),
            stated_minimum: Some(self.stated_minimum()),
        }
    }
}

impl FromStr for Product {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Product::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::NotFound(format!("builtin product {s:?}")))
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Expected shape of a bundled dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub product_id: String,
    pub per_source_counts: BTreeMap<String, usize>,
    pub stated_minimum: Option<Cents>,
}

impl DatasetManifest {
    pub fn average(&self) -> f64 {
        let total: usize = self.per_source_counts.values().sum();
        total as f64 / self.per_source_counts.len() as f64
    }

    /// Checks a list against the manifest's counts and stated minimum.
    pub fn verify(&self, prices: &PriceList) -> Result<()> {
        let counts = prices.source_counts();
        if counts != self.per_source_counts {
            return Err(Error::validation(format!(
                "{}: source counts {counts:?} differ from manifest {:?}",
                self.product_id, self.per_source_counts
            )));
        }
        if let Some(min) = self.stated_minimum {
            if prices.min_price() != min {
                return Err(Error::validation(format!(
                    "{}: minimum {} differs from stated {min}",
                    self.product_id,
                    prices.min_price()
                )));
            }
        }
        Ok(())
    }
}

/// Loads a bundled product, or `$DISCLOSE_DATA_DIR/<product>.csv` when the
/// variable is set.
pub fn builtin_dataset(product: Product) -> Result<PriceList> {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => load_prices(
            Path::new(&dir).join(format!("{}.csv", product.name())),
            PriceFormat::Csv,
        ),
        None => read_csv(product.bundled_csv().as_bytes()),
    }
}

/// [`builtin_dataset`] by name.
pub fn builtin_dataset_named(name: &str) -> Result<PriceList> {
    builtin_dataset(name.parse()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<PriceList> {
        read_csv(s.as_bytes())
    }

    #[test]
    fn parses_two_rows() {
        let list = parse("product_id,source,price\nprinter,pg,297.00\nprinter,pg,310.50\n").unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list.min_price(), Cents(29700));
        assert_eq!(list.price(1), Cents(31050));
    }

    #[test]
    fn empty_file_is_rejected() {
        let err = parse("").unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
        let err = parse("product_id,source,price\n").unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn negative_price_names_row() {
        let err = parse("product_id,source,price\nx,a,1.00\nx,a,-5\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let err = parse("product_id,source,price\nx,a,1.00\nx,a,abc\n").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other}"),
        }
        let err = parse("product_id,source,price\nx,a\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn cents_render_two_decimals() {
        assert_eq!(Cents(29700).to_string(), "297.00");
        assert_eq!(Cents(5).to_string(), "0.05");
        assert_eq!("310.5".parse::<Cents>().unwrap(), Cents(31050));
    }

    #[test]
    fn min_index_prefers_lowest_index() {
        let list = parse("product_id,source,price\nx,a,5\nx,a,3\nx,b,3\n").unwrap();
        assert_eq!(list.min_index(), 1);
    }

    #[test]
    fn printer_matches_survey_counts() {
        let list = read_csv(Product::Printer.bundled_csv().as_bytes()).unwrap();
        let counts = list.source_counts();
        assert_eq!(counts["PriceGrabber"], 24);
        assert_eq!(counts["Nextag"], 13);
        assert_eq!(counts["Bizrate"], 23);
        assert_eq!(counts["Amazon"], 28);
        assert_eq!(counts["Shopper"], 15);
        assert_eq!(list.min_price(), Cents(29700));
        assert!((Product::Printer.manifest().average() - 20.6).abs() < 1e-12);
        assert_eq!(list.largest_source(), "Amazon");
    }

    #[test]
    fn mouse_matches_survey_counts() {
        let list = read_csv(Product::Mouse.bundled_csv().as_bytes()).unwrap();
        let counts: Vec<usize> = SOURCES.iter().map(|s| list.source_counts()[*s]).collect();
        assert_eq!(counts, vec![33, 20, 36, 25, 19]);
        assert!((Product::Mouse.manifest().average() - 26.6).abs() < 1e-12);
    }

    #[test]
    fn every_bundled_fixture_satisfies_its_manifest() {
        for p in Product::ALL {
            let list = read_csv(p.bundled_csv().as_bytes()).unwrap();
            p.manifest().verify(&list).unwrap();
            let pg = list.filter_source("PriceGrabber").unwrap();
            assert_eq!(pg.min_price(), p.stated_minimum(), "{p}");
        }
    }

    #[test]
    fn unknown_product_is_not_found() {
        assert!(matches!("tv".parse::<Product>(), Err(Error::NotFound(_))));
    }
}
