//! Report items and their text and JSON renderings.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Numbers {
    pub beta1: i64,
    pub beta2: i64,
    pub chi: i64,
}

impl From<(i64, i64, i64)> for Numbers {
    fn from((beta1, beta2, chi): (i64, i64, i64)) -> Self {
        Numbers { beta1, beta2, chi }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Item {
    pub name: String,
    pub kind: String,
    pub pass: bool,
    pub details: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numbers: Option<Numbers>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_digest: Option<String>,
}

impl Item {
    pub fn new(name: impl Into<String>, kind: &str, pass: bool, details: impl Into<String>) -> Self {
        Item {
            name: name.into(),
            kind: kind.to_string(),
            pass,
            details: details.into(),
            numbers: None,
            certificate_digest: None,
        }
    }

    pub fn with_numbers(mut self, n: (i64, i64, i64)) -> Self {
        self.numbers = Some(n.into());
        self
    }

    pub fn with_digest(mut self, d: Option<String>) -> Self {
        self.certificate_digest = d;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub pass: bool,
    pub items: Vec<Item>,
}

impl Report {
    pub fn new(command: &str, items: Vec<Item>) -> Self {
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            pass: items.iter().all(|i| i.pass),
            items,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let status = if item.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {} [{}] {}", item.name, item.kind, item.details));
            if let Some(n) = item.numbers {
                out.push_str(&format!(" (beta1 {}, beta2 {}, chi {})", n.beta1, n.beta2, n.chi));
            }
            if let Some(d) = &item.certificate_digest {
                out.push_str(&format!(" cert {}", &d[..16.min(d.len())]));
            }
            out.push('\n');
        }
        let failed = self.items.iter().filter(|i| !i.pass).count();
        out.push_str(&format!(
            "{}: {} items, {} failed\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.items.len(),
            failed
        ));
        out
    }
}
