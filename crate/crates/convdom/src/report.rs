//! Run artifacts: line-delimited JSON records, a profile CSV and a plain
//! text summary. Output depends only on the configuration and seed.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::RunResult;

pub const RECORDS_FILE: &str = "report.jsonl";
pub const PROFILE_FILE: &str = "profile.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub window: usize,
    pub label: String,
    pub d: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub records: Vec<Value>,
    pub profile: Vec<ProfileRow>,
    pub summary: Vec<String>,
}

impl Report {
    /// Appends a record; `fields` must serialize to a JSON object.
    pub fn record(&mut self, kind: &str, fields: impl Serialize) {
        let mut v = serde_json::to_value(fields).expect("record fields serialize");
        if let Value::Object(map) = &mut v {
            map.insert("record".into(), Value::String(kind.into()));
        }
        self.records.push(v);
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    pub fn find(&self, kind: &str) -> impl Iterator<Item = &Value> + '_ {
        let kind = kind.to_string();
        self.records.iter().filter(move |r| r["record"] == Value::String(kind.clone()))
    }

    pub fn records_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("json value"));
            s.push('\n');
        }
        s
    }

    pub fn profile_text(&self) -> RunResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.profile.is_empty() {
            w.write_record(["window", "label", "d"]).map_err(std::io::Error::from)?;
        }
        for row in &self.profile {
            w.serialize(row).map_err(std::io::Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_text(&self) -> String {
        let mut s = self.summary.join("\n");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> RunResult<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(RECORDS_FILE), self.records_text())?;
        fs::write(dir.join(SUMMARY_FILE), self.summary_text())?;
        if !self.profile.is_empty() {
            fs::write(dir.join(PROFILE_FILE), self.profile_text()?)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn records_are_tagged_and_sorted() {
        let mut r = Report::default();
        r.record("window", json!({"radius": 4, "aggregate": 2.0}));
        assert_eq!(r.records_text(), "{\"aggregate\":2.0,\"radius\":4,\"record\":\"window\"}\n");
        assert_eq!(r.find("window").count(), 1);
    }

    #[test]
    fn profile_csv() {
        let mut r = Report::default();
        assert_eq!(r.profile_text().unwrap(), "window,label,d\n");
        r.profile.push(ProfileRow { window: 8, label: "-1".into(), d: 0.25 });
        assert_eq!(r.profile_text().unwrap(), "window,label,d\n8,-1,0.25\n");
    }
}
