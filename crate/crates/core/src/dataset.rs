//! Examples with real-valued attributes and a binary class label, plus the
//! CSV dataset format (`a0,...,a{m-1},label`).

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub attributes: Vec<f64>,
    pub label: u8,
}

impl Example {
    pub fn new(attributes: Vec<f64>, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::SchemaMismatch(format!("label {label} is not 0 or 1")));
        }
        Ok(Example { attributes, label })
    }

    pub fn is_positive(&self) -> bool {
        self.label == 1
    }
}

/// A set of examples sharing one attribute count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    arity: usize,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(arity: usize) -> Self {
        Dataset {
            arity,
            examples: Vec::new(),
        }
    }

    pub fn from_examples(arity: usize, examples: Vec<Example>) -> Result<Self> {
        let mut ds = Dataset::with_capacity(arity, examples.len());
        for e in examples {
            ds.push(e)?;
        }
        Ok(ds)
    }

    pub fn with_capacity(arity: usize, capacity: usize) -> Self {
        Dataset {
            arity,
            examples: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, example: Example) -> Result<()> {
        if example.attributes.len() != self.arity {
            return Err(Error::SchemaMismatch(format!(
                "example has {} attributes, schema declares {}",
                example.attributes.len(),
                self.arity
            )));
        }
        if example.label > 1 {
            return Err(Error::SchemaMismatch(format!(
                "label {} is not 0 or 1",
                example.label
            )));
        }
        self.examples.push(example);
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.is_positive()).count()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse("line 1", e.to_string()))?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        let Some((&last, attrs)) = cols.split_last() else {
            return Err(Error::parse("line 1", "empty header"));
        };
        if last != "label" {
            return Err(Error::parse(
                "line 1",
                format!("last column must be `label`, found `{last}`"),
            ));
        }
        for (i, name) in attrs.iter().enumerate() {
            if *name != format!("a{i}") {
                return Err(Error::parse(
                    "line 1",
                    format!("column {i} must be `a{i}`, found `{name}`"),
                ));
            }
        }
        let arity = attrs.len();
        let mut ds = Dataset::new(arity);
        for (row, record) in rdr.records().enumerate() {
            let line = format!("line {}", row + 2);
            let record = record.map_err(|e| Error::parse(line.clone(), e.to_string()))?;
            if record.len() != arity + 1 {
                return Err(Error::parse(
                    line,
                    format!("expected {} fields, found {}", arity + 1, record.len()),
                ));
            }
            let mut attributes = Vec::with_capacity(arity);
            for (i, field) in record.iter().take(arity).enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::parse(line.clone(), format!("a{i}: `{field}` is not a real number"))
                })?;
                if !v.is_finite() {
                    return Err(Error::parse(line.clone(), format!("a{i}: non-finite value")));
                }
                attributes.push(v);
            }
            let label = match &record[arity] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::parse(
                        line,
                        format!("label must be 0 or 1, found `{other}`"),
                    ))
                }
            };
            ds.examples.push(Example { attributes, label });
        }
        Ok(ds)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.arity).map(|i| format!("a{i}")).collect();
        header.push("label".into());
        wtr.write_record(&header).map_err(csv_io)?;
        let mut row = Vec::with_capacity(self.arity + 1);
        for e in &self.examples {
            row.clear();
            row.extend(e.attributes.iter().map(|v| v.to_string()));
            row.push(e.label.to_string());
            wtr.write_record(&row).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}
